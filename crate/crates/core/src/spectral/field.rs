use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::exec;

/// Tensor rank of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
    Matrix,
}

impl Rank {
    /// Number of stored components in dimension `d`.
    pub fn components(self, d: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => d,
            Rank::Matrix => d * d,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Matrix => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Rank::Scalar),
            1 => Some(Rank::Vector),
            2 => Some(Rank::Matrix),
            _ => None,
        }
    }

    pub fn raised(self) -> Option<Rank> {
        match self {
            Rank::Scalar => Some(Rank::Vector),
            Rank::Vector => Some(Rank::Matrix),
            Rank::Matrix => None,
        }
    }

    pub fn lowered(self) -> Option<Rank> {
        match self {
            Rank::Scalar => None,
            Rank::Vector => Some(Rank::Scalar),
            Rank::Matrix => Some(Rank::Vector),
        }
    }
}

/// Real field sampled on a [`TorusGrid`].
///
/// Matrix components are stored row-major: entry `(i, j)` is component
/// `i * d + j`. For a gradient, row `i` holds the derivatives of `u_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    rank: Rank,
    comps: Vec<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: TorusGrid, rank: Rank) -> Self {
        let comps = vec![vec![0.0; grid.len()]; rank.components(grid.d())];
        Self { grid, rank, comps }
    }

    pub fn constant_scalar(grid: TorusGrid, value: f64) -> Self {
        Self {
            grid,
            rank: Rank::Scalar,
            comps: vec![vec![value; grid.len()]],
        }
    }

    pub fn from_components(grid: TorusGrid, rank: Rank, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != rank.components(grid.d()) {
            return Err(Error::ShapeMismatch(format!(
                "{:?} field in d={} needs {} components, got {}",
                rank,
                grid.d(),
                rank.components(grid.d()),
                comps.len()
            )));
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch(format!(
                "component has {} samples, grid has {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, rank, comps })
    }

    pub fn scalar(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        Self::from_components(grid, Rank::Scalar, vec![values])
    }

    /// Samples a scalar function of position.
    pub fn scalar_from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let values = exec::map_indexed(grid.len(), |i| f(grid.coords(i)));
        Self {
            grid,
            rank: Rank::Scalar,
            comps: vec![values],
        }
    }

    /// Samples a vector function of position; only the first `d` entries are used.
    pub fn vector_from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let samples = exec::map_indexed(grid.len(), |i| f(grid.coords(i)));
        let comps = (0..grid.d())
            .map(|c| samples.iter().map(|v| v[c]).collect())
            .collect();
        Self {
            grid,
            rank: Rank::Vector,
            comps,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn d(&self) -> usize {
        self.grid.d()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    /// Matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        debug_assert_eq!(self.rank, Rank::Matrix);
        &self.comps[i * self.d() + j]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Scalar values (first component).
    pub fn values(&self) -> &[f64] {
        &self.comps[0]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.comps[0]
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.grid == other.grid && self.rank == other.rank
    }

    fn check_shape(&self, other: &Field) {
        assert!(
            self.same_shape(other),
            "field shape mismatch: {:?}/{:?} vs {:?}/{:?}",
            self.rank,
            self.grid,
            other.rank,
            other.grid
        );
    }

    /// Componentwise map producing a field of the same shape.
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let comps = self
            .comps
            .iter()
            .map(|c| exec::map_indexed(c.len(), |i| f(c[i])))
            .collect();
        Field {
            grid: self.grid,
            rank: self.rank,
            comps,
        }
    }

    /// Componentwise combination of two fields of the same shape.
    pub fn zip_map<F>(&self, other: &Field, f: F) -> Field
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.check_shape(other);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| exec::map_indexed(a.len(), |i| f(a[i], b[i])))
            .collect();
        Field {
            grid: self.grid,
            rank: self.rank,
            comps,
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        self.check_shape(other);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            exec::for_each_mut(a, |i, v| *v += alpha * b[i]);
        }
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    /// Multiplies every component pointwise by a scalar field.
    pub fn mul_scalar_field(&self, s: &Field) -> Field {
        assert_eq!(s.rank, Rank::Scalar);
        assert_eq!(s.grid, self.grid);
        let w = s.values();
        let comps = self
            .comps
            .iter()
            .map(|c| exec::map_indexed(c.len(), |i| c[i] * w[i]))
            .collect();
        Field {
            grid: self.grid,
            rank: self.rank,
            comps,
        }
    }

    /// Grid mean of each component.
    pub fn means(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.comps
            .iter()
            .map(|c| exec::sum(c.len(), |i| c[i]) / n)
            .collect()
    }

    /// Integral over the torus of each component (trapezoidal rule).
    pub fn integrals(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        self.comps
            .iter()
            .map(|c| w * exec::sum(c.len(), |i| c[i]))
            .collect()
    }

    /// Largest absolute component mean.
    pub fn max_abs_mean(&self) -> f64 {
        self.means().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Removes the mean of every component; returns the removed means.
    pub fn remove_mean(&mut self) -> Vec<f64> {
        let means = self.means();
        for (c, m) in self.comps.iter_mut().zip(&means) {
            exec::for_each_mut(c, |_, v| *v -= m);
        }
        means
    }

    /// Pointwise Euclidean (Frobenius) magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        let comps = &self.comps;
        exec::map_indexed(self.len(), |i| {
            comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()
        })
    }

    /// `∫ a · b` with the pointwise Euclidean product.
    pub fn inner(&self, other: &Field) -> f64 {
        self.check_shape(other);
        let w = self.grid.cell_volume();
        let (a, b) = (&self.comps, &other.comps);
        w * exec::sum(self.len(), |i| {
            a.iter().zip(b).map(|(x, y)| x[i] * y[i]).sum::<f64>()
        })
    }

    pub fn max_abs(&self) -> f64 {
        let comps = &self.comps;
        exec::max(self.len(), |i| {
            comps.iter().map(|c| c[i].abs()).fold(0.0, f64::max)
        })
        .max(0.0)
    }

    pub fn min_value(&self) -> f64 {
        let comps = &self.comps;
        exec::min(self.len(), |i| {
            comps.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min)
        })
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn spectrum(&self) -> Spectrum {
        let grid = self.grid;
        let comps = exec::map_items(&self.comps, |c| fft::forward(&grid, c));
        Spectrum {
            grid,
            rank: self.rank,
            comps,
        }
    }

    /// Translates by whole grid cells along each axis: `out(x) = self(x - shift·h)`.
    pub fn grid_shift(&self, shift: [usize; 3]) -> Field {
        let g = self.grid;
        let n = g.n();
        let comps = self
            .comps
            .iter()
            .map(|c| {
                exec::map_indexed(g.len(), |idx| {
                    let m = g.multi_index(idx);
                    let mut src = [0usize; 3];
                    for a in 0..g.d() {
                        src[a] = (m[a] + n - shift[a] % n) % n;
                    }
                    c[g.flat_index(src)]
                })
            })
            .collect();
        Field {
            grid: g,
            rank: self.rank,
            comps,
        }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}

/// Normalized Fourier coefficients of a [`Field`], one array per component.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    rank: Rank,
    comps: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn zeros(grid: TorusGrid, rank: Rank) -> Self {
        Self {
            grid,
            rank,
            comps: vec![vec![Complex64::default(); grid.len()]; rank.components(grid.d())],
        }
    }

    pub fn from_components(grid: TorusGrid, rank: Rank, comps: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(comps.len(), rank.components(grid.d()));
        Self { grid, rank, comps }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn comp(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub fn to_field(&self) -> Field {
        let grid = self.grid;
        let comps = exec::map_items(&self.comps, |c| fft::inverse(&grid, c));
        Field {
            grid,
            rank: self.rank,
            comps,
        }
    }

    /// Spectrum of `∂_axis` of every component.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        let g = self.grid;
        let comps = self
            .comps
            .iter()
            .map(|c| {
                exec::map_indexed(c.len(), |idx| {
                    let k = g.wavevector(idx)[axis];
                    c[idx] * Complex64::new(0.0, k)
                })
            })
            .collect();
        Spectrum {
            grid: g,
            rank: self.rank,
            comps,
        }
    }

    /// `Σ_k |c_k|²` over all components.
    pub fn energy(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| exec::sum(c.len(), |i| c[i].norm_sqr()))
            .sum()
    }

    /// Energy carried by modes outside the dealiased band.
    pub fn tail_energy(&self) -> f64 {
        let g = self.grid;
        self.comps
            .iter()
            .map(|c| {
                exec::sum(
                    c.len(),
                    |i| if g.in_band(i) { 0.0 } else { c[i].norm_sqr() },
                )
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        let g = TorusGrid::new(2, 4).unwrap();
        assert!(Field::from_components(g, Rank::Vector, vec![vec![0.0; 16]]).is_err());
        assert!(
            Field::from_components(g, Rank::Vector, vec![vec![0.0; 16], vec![0.0; 15]]).is_err()
        );
        let f = Field::from_components(g, Rank::Matrix, vec![vec![1.0; 16]; 4]).unwrap();
        assert_eq!(f.n_components(), 4);
    }

    #[test]
    fn arithmetic_and_means() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = Field::scalar_from_fn(g, |x| x[0].sin() + 2.0);
        let b = &a - &Field::constant_scalar(g, 2.0);
        assert!(b.max_abs_mean() < 1e-15);
        let mut c = a.clone();
        assert!((c.remove_mean()[0] - 2.0).abs() < 1e-14);
        assert!(c.max_abs_mean() < 1e-15);
        let i = a.integrals()[0];
        assert!((i - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn shift_translates() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = Field::scalar_from_fn(g, |x| x[0].sin());
        let s = a.grid_shift([1, 0, 0]);
        let h = g.spacing();
        let expect = Field::scalar_from_fn(g, |x| (x[0] - h).sin());
        assert!((&s - &expect).max_abs() < 1e-14);
    }
}
