// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod constitutive;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod io;
pub mod lame;
pub mod monitors;
pub mod quadrature;
pub mod random;
pub mod scheme;
pub mod spectral;

pub use error::{Error, Result};
