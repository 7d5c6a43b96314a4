//! Periodic grid calculus: transforms, differential operators, Riesz
//! transforms, dealiasing and norms.
//!
//! Derivatives are exact Fourier multipliers; nonlinear pointwise products
//! are formed on the collocation grid. The Nyquist mode is annihilated by
//! every differential multiplier.

mod fft;
mod field;
mod grid;
pub mod norms;
mod ops;

pub use field::{Field, Rank, Spectrum};
pub use grid::{TorusGrid, MAX_POINTS, TWO_THIRDS};
pub use norms::{norm, Space};
pub use ops::{
    check_resolved, dealias, dealias_spectrum, div, div_spectrum, from_coefficients, grad,
    grad_spectrum, gradient_projector, laplacian, laplacian_spectrum, partials, require_zero_mean,
    riesz, sym_grad, sym_grad_spectrum, tail_fraction, RESOLUTION_TOL, ZERO_MEAN_TOL,
};
pub(crate) use ops::{ensure_zero_mean, project_spectrum};
