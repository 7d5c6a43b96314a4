use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of collocation points a grid may hold.
pub const MAX_POINTS: usize = 1 << 24;

/// Default 2/3-rule cutoff.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Uniform collocation grid on the periodic cube `[0, 2π)^d`.
///
/// Points are stored row-major with axis 0 slowest:
/// `idx = ((i0 * n) + i1) * n + i2` for `d = 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    dealias_fraction: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_dealias(d, n, TWO_THIRDS)
    }

    pub fn with_dealias(d: usize, n: usize, dealias_fraction: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "modes per axis must be even and >= 4, got {n}"
            )));
        }
        let total = n.checked_pow(d as u32).unwrap_or(usize::MAX);
        if total > MAX_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{n}^{d} points exceed the memory budget of {MAX_POINTS}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction {dealias_fraction} not in (0, 1]"
            )));
        }
        Ok(Self {
            d,
            n,
            dealias_fraction,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of collocation points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight of one collocation point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// `(2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }

    /// Per-axis integer indices of a flat index; unused axes are 0.
    #[inline]
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.d).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, m: [usize; 3]) -> usize {
        (0..self.d).fold(0, |acc, a| acc * self.n + m[a])
    }

    /// Physical coordinates of a point; unused axes are 0.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        [m[0] as f64 * h, m[1] as f64 * h, m[2] as f64 * h]
    }

    /// Signed wavenumber of transform index `j` along one axis, in `(-n/2, n/2]`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    #[inline]
    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Wavenumber used by differential multipliers: the Nyquist mode is
    /// annihilated so that derivatives of real fields stay real.
    #[inline]
    pub fn deriv_wavenumber(&self, j: usize) -> f64 {
        if self.is_nyquist(j) {
            0.0
        } else {
            self.wavenumber(j) as f64
        }
    }

    /// Differential wavevector of a flat spectral index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut k = [0.0; 3];
        for a in 0..self.d {
            k[a] = self.deriv_wavenumber(m[a]);
        }
        k
    }

    /// Integer wavevector of a flat spectral index (Nyquist reported as `+n/2`).
    pub fn integer_wavevector(&self, idx: usize) -> [i64; 3] {
        let m = self.multi_index(idx);
        let mut k = [0i64; 3];
        for a in 0..self.d {
            k[a] = self.wavenumber(m[a]);
        }
        k
    }

    /// Flat index of the mode `-k`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        let mut c = [0usize; 3];
        for a in 0..self.d {
            c[a] = (self.n - m[a]) % self.n;
        }
        self.flat_index(c)
    }

    /// Largest wavenumber magnitude kept by [`dealias`](super::dealias).
    pub fn cutoff(&self) -> f64 {
        self.dealias_fraction * (self.n / 2) as f64
    }

    /// Whether a spectral index lies inside the dealiased band.
    #[inline]
    pub fn in_band(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        let cut = self.cutoff();
        (0..self.d).all(|a| !self.is_nyquist(m[a]) && (self.wavenumber(m[a]).abs() as f64) <= cut)
    }

    /// Largest retained integer wavenumber per axis.
    pub fn band_limit(&self) -> usize {
        let mut k = self.cutoff().floor() as usize;
        if k >= self.n / 2 {
            k = self.n / 2 - 1;
        }
        k
    }
}
