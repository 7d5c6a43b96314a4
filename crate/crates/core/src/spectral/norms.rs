//! Lebesgue and Sobolev norms on the torus.
//!
//! `L^q` norms use the rectangle rule on collocation values (spectrally
//! accurate for smooth periodic fields); `H^s` norms are evaluated from
//! Fourier coefficients. Pointwise magnitudes are Euclidean over components.

use serde::{Deserialize, Serialize};

use super::field::{Field, Spectrum};
use super::ops;
use crate::exec;

/// Function space selector for [`norm`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Space {
    /// `L^q`, `q ∈ [1, ∞]`.
    Lq(f64),
    /// `‖u‖_{L^q} + ‖∇u‖_{L^q}`.
    W1q(f64),
    /// `‖u‖_{L^q} + ‖∇u‖_{L^q} + ‖∇²u‖_{L^q}`.
    W2q(f64),
    /// `(‖u‖² + ‖∇u‖²)^{1/2}`.
    H1,
    /// `(‖u‖² + ‖∇u‖² + ‖∇²u‖²)^{1/2}`.
    H2,
    /// `‖(1 + |k|²)^{-1/2} û‖_{L²}`.
    Hminus1,
}

/// `L^q` norm of pointwise magnitudes given as raw samples.
pub fn lq_of_magnitudes(mags: &[f64], cell_volume: f64, q: f64) -> f64 {
    if q.is_infinite() {
        return exec::max(mags.len(), |i| mags[i]).max(0.0);
    }
    if q == 2.0 {
        return (cell_volume * exec::sum(mags.len(), |i| mags[i] * mags[i])).sqrt();
    }
    (cell_volume * exec::sum(mags.len(), |i| mags[i].powf(q))).powf(1.0 / q)
}

/// `L^q` norm of a field.
pub fn lq(u: &Field, q: f64) -> f64 {
    lq_of_magnitudes(&u.magnitude(), u.grid().cell_volume(), q)
}

/// `L^q` norm of the pointwise magnitude of a list of fields taken together
/// (e.g. all partial derivatives of a tensor).
pub fn lq_joint(parts: &[Field], q: f64) -> f64 {
    let Some(first) = parts.first() else {
        return 0.0;
    };
    let mags = exec::map_indexed(first.len(), |i| {
        parts
            .iter()
            .flat_map(|p| p.components().iter())
            .map(|c| c[i] * c[i])
            .sum::<f64>()
            .sqrt()
    });
    lq_of_magnitudes(&mags, first.grid().cell_volume(), q)
}

/// Sum over modes of `weight(|k|²) |c_k|²`, times the torus volume.
fn weighted_energy(s: &Spectrum, weight: impl Fn(f64) -> f64 + Sync + Send) -> f64 {
    let g = *s.grid();
    let vol = g.volume();
    vol * s
        .components()
        .iter()
        .map(|c| {
            exec::sum(c.len(), |idx| {
                let k = g.wavevector(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                weight(k2) * c[idx].norm_sqr()
            })
        })
        .sum::<f64>()
}

/// `‖u‖_{L²}` from Fourier coefficients (Parseval).
pub fn l2_spectral(u: &Field) -> f64 {
    weighted_energy(&u.spectrum(), |_| 1.0).sqrt()
}

/// `‖∇u‖_{L²}`.
pub fn grad_l2(u: &Field) -> f64 {
    weighted_energy(&u.spectrum(), |k2| k2).sqrt()
}

pub fn norm(u: &Field, space: Space) -> f64 {
    match space {
        Space::Lq(q) => lq(u, q),
        Space::W1q(q) => lq(u, q) + lq_joint(&ops::partials(u), q),
        Space::W2q(q) => {
            let first = ops::partials(u);
            let second: Vec<Field> = first.iter().flat_map(ops::partials).collect();
            lq(u, q) + lq_joint(&first, q) + lq_joint(&second, q)
        }
        Space::H1 => weighted_energy(&u.spectrum(), |k2| 1.0 + k2).sqrt(),
        Space::H2 => weighted_energy(&u.spectrum(), |k2| 1.0 + k2 + k2 * k2).sqrt(),
        Space::Hminus1 => weighted_energy(&u.spectrum(), |k2| 1.0 / (1.0 + k2)).sqrt(),
    }
}
