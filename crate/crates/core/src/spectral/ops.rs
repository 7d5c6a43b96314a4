//! Fourier-multiplier differential operators on the torus.

use num_complex::Complex64;

use super::field::{Field, Rank, Spectrum};
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::exec;

/// Relative mean tolerance for inputs that must be zero-mean.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Default bound on the out-of-band energy fraction accepted by
/// [`check_resolved`].
pub const RESOLUTION_TOL: f64 = 1e-8;

pub(crate) fn ensure_zero_mean(u: &Field) -> Result<()> {
    let mean = u.max_abs_mean();
    let scale = u.max_abs().max(1.0);
    if mean > ZERO_MEAN_TOL * scale {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(())
}

/// Spectral gradient: for each component `c` and axis `j`, output component
/// `c * d + j` holds `∂_j u_c`.
pub fn grad_spectrum(s: &Spectrum) -> Result<Spectrum> {
    let g = *s.grid();
    let d = g.d();
    let rank = s
        .rank()
        .raised()
        .ok_or_else(|| Error::ShapeMismatch("gradient of a matrix field".into()))?;
    let mut comps = Vec::with_capacity(s.components().len() * d);
    for c in s.components() {
        for j in 0..d {
            comps.push(exec::map_indexed(c.len(), |idx| {
                c[idx] * Complex64::new(0.0, g.wavevector(idx)[j])
            }));
        }
    }
    Ok(Spectrum::from_components(g, rank, comps))
}

/// Gradient, raising the rank by one (scalar → vector, vector → matrix).
pub fn grad(u: &Field) -> Result<Field> {
    Ok(grad_spectrum(&u.spectrum())?.to_field())
}

/// `∂_j u` for every axis, each with the rank of `u`.
pub fn partials(u: &Field) -> Vec<Field> {
    let s = u.spectrum();
    (0..u.d()).map(|j| s.derivative(j).to_field()).collect()
}

/// Spectral divergence; rows of a matrix are contracted with `∇`.
pub fn div_spectrum(s: &Spectrum) -> Result<Spectrum> {
    let g = *s.grid();
    let d = g.d();
    let rank = s
        .rank()
        .lowered()
        .ok_or_else(|| Error::ShapeMismatch("divergence of a scalar field".into()))?;
    let rows = rank.components(d);
    let comps = (0..rows)
        .map(|r| {
            exec::map_indexed(g.len(), |idx| {
                let k = g.wavevector(idx);
                let mut acc = Complex64::default();
                for j in 0..d {
                    acc += s.comp(r * d + j)[idx] * Complex64::new(0.0, k[j]);
                }
                acc
            })
        })
        .collect();
    Ok(Spectrum::from_components(g, rank, comps))
}

pub fn div(u: &Field) -> Result<Field> {
    Ok(div_spectrum(&u.spectrum())?.to_field())
}

/// Spectrum of `D(u) = ½(∇u + ∇uᵀ)`.
pub fn sym_grad_spectrum(s: &Spectrum) -> Result<Spectrum> {
    if s.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch("sym_grad needs a vector field".into()));
    }
    let g = *s.grid();
    let d = g.d();
    let mut comps = vec![Vec::new(); d * d];
    for i in 0..d {
        for j in i..d {
            let (ui, uj) = (s.comp(i), s.comp(j));
            let e = exec::map_indexed(g.len(), |idx| {
                let k = g.wavevector(idx);
                Complex64::new(0.0, 0.5) * (ui[idx] * k[j] + uj[idx] * k[i])
            });
            if i != j {
                comps[j * d + i] = e.clone();
            }
            comps[i * d + j] = e;
        }
    }
    Ok(Spectrum::from_components(g, Rank::Matrix, comps))
}

/// Symmetric gradient `D(u)`; symmetric with trace `div u`.
pub fn sym_grad(u: &Field) -> Result<Field> {
    Ok(sym_grad_spectrum(&u.spectrum())?.to_field())
}

pub fn laplacian_spectrum(s: &Spectrum) -> Spectrum {
    let g = *s.grid();
    let comps = s
        .components()
        .iter()
        .map(|c| {
            exec::map_indexed(c.len(), |idx| {
                let k = g.wavevector(idx);
                c[idx] * -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
            })
        })
        .collect();
    Spectrum::from_components(g, s.rank(), comps)
}

pub fn laplacian(u: &Field) -> Field {
    laplacian_spectrum(&u.spectrum()).to_field()
}

/// Riesz transform `R_j = ∂_j (−Δ)^{−1/2}` of a zero-mean scalar field.
///
/// The multiplier is `i k_j / |k|`; the mean mode and modes whose
/// differential wavevector vanishes (pure Nyquist) map to zero.
pub fn riesz(axis: usize, u: &Field) -> Result<Field> {
    if u.rank() != Rank::Scalar {
        return Err(Error::ShapeMismatch("riesz acts on scalar fields".into()));
    }
    if axis >= u.d() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} >= d = {}",
            u.d()
        )));
    }
    ensure_zero_mean(u)?;
    let g = *u.grid();
    let s = u.spectrum();
    let c = s.comp(0);
    let out = exec::map_indexed(g.len(), |idx| {
        let k = g.wavevector(idx);
        let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if norm == 0.0 {
            Complex64::default()
        } else {
            c[idx] * Complex64::new(0.0, k[axis] / norm)
        }
    });
    Ok(Spectrum::from_components(g, Rank::Scalar, vec![out]).to_field())
}

/// Orthogonal projection onto gradients, `∇∇ᵀΔ⁻¹`, with symbol `k kᵀ/|k|²`.
///
/// In terms of [`riesz`] this is `−(R_i R_j)_{ij}`, since `Σ_j R_j² = −I`.
pub fn gradient_projector(v: &Field) -> Result<Field> {
    if v.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "projector acts on vector fields".into(),
        ));
    }
    ensure_zero_mean(v)?;
    let s = v.spectrum();
    Ok(project_spectrum(&s, true).to_field())
}

/// Modewise split into the part parallel to `k` (`parallel = true`) or its
/// orthogonal complement.
pub(crate) fn project_spectrum(s: &Spectrum, parallel: bool) -> Spectrum {
    let g = *s.grid();
    let d = g.d();
    let kdot: Vec<Complex64> = exec::map_indexed(g.len(), |idx| {
        let k = g.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return Complex64::default();
        }
        let mut acc = Complex64::default();
        for j in 0..d {
            acc += s.comp(j)[idx] * k[j];
        }
        acc / k2
    });
    let comps = (0..d)
        .map(|i| {
            exec::map_indexed(g.len(), |idx| {
                let par = kdot[idx] * g.wavevector(idx)[i];
                if parallel {
                    par
                } else {
                    s.comp(i)[idx] - par
                }
            })
        })
        .collect();
    Spectrum::from_components(g, Rank::Vector, comps)
}

/// Zeroes a spectrum outside the dealiased band, in place.
pub fn dealias_spectrum(s: &mut Spectrum) {
    let g = *s.grid();
    let ncomp = s.components().len();
    for c in 0..ncomp {
        exec::for_each_mut(s.comp_mut(c), |idx, v| {
            if !g.in_band(idx) {
                *v = Complex64::default();
            }
        });
    }
}

/// 2/3-rule (or configured fraction) truncation. Idempotent; preserves the mean.
pub fn dealias(u: &Field) -> Field {
    let mut s = u.spectrum();
    dealias_spectrum(&mut s);
    s.to_field()
}

/// Fraction of spectral energy outside the dealiased band (0 for a zero field).
pub fn tail_fraction(u: &Field) -> f64 {
    let s = u.spectrum();
    let e = s.energy();
    if e == 0.0 {
        0.0
    } else {
        s.tail_energy() / e
    }
}

/// Fails when more than `tol` of the energy lies outside the dealiased band.
pub fn check_resolved(u: &Field, tol: f64) -> Result<()> {
    let tail = tail_fraction(u);
    if tail > tol {
        Err(Error::ResolutionInsufficient {
            tail_fraction: tail,
        })
    } else {
        Ok(())
    }
}

/// Zero-mean check exposed for callers that want an error rather than a panic.
pub fn require_zero_mean(u: &Field) -> Result<()> {
    ensure_zero_mean(u)
}

/// Builds a field from a function of the integer wavevector giving each
/// coefficient; callers must supply a Hermitian-symmetric assignment.
pub fn from_coefficients<F>(grid: TorusGrid, rank: Rank, f: F) -> Field
where
    F: Fn(usize, [i64; 3]) -> Complex64 + Sync + Send,
{
    let comps = (0..rank.components(grid.d()))
        .map(|c| exec::map_indexed(grid.len(), |idx| f(c, grid.integer_wavevector(idx))))
        .collect();
    Spectrum::from_components(grid, rank, comps).to_field()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, RandomSpec};

    fn g3(n: usize) -> TorusGrid {
        TorusGrid::new(3, n).unwrap()
    }

    #[test]
    fn div_of_sine() {
        let g = g3(8);
        let u = Field::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let du = div(&u).unwrap();
        let expect = Field::scalar_from_fn(g, |x| x[0].cos());
        assert!((&du - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn sym_grad_shear() {
        let g = g3(8);
        let u = Field::vector_from_fn(g, |x| [0.0, x[0].sin(), 0.0]);
        let d = sym_grad(&u).unwrap();
        let half_cos = Field::scalar_from_fn(g, |x| 0.5 * x[0].cos());
        for i in 0..3 {
            for j in 0..3 {
                let e = Field::scalar(g, d.entry(i, j).to_vec()).unwrap();
                let diff = if (i, j) == (0, 1) || (i, j) == (1, 0) {
                    (&e - &half_cos).max_abs()
                } else {
                    e.max_abs()
                };
                assert!(diff < 1e-13, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn laplacian_of_sine() {
        let g = g3(8);
        let u = Field::scalar_from_fn(g, |x| x[0].sin());
        assert!((&laplacian(&u) + &u).max_abs() < 1e-13);
    }

    #[test]
    fn trace_of_sym_grad_is_div() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = random_field(g, Rank::Vector, &RandomSpec::band(4), 3, 0);
        let d = sym_grad(&u).unwrap();
        let dv = div(&u).unwrap();
        let tr: Vec<f64> = (0..g.len())
            .map(|i| d.entry(0, 0)[i] + d.entry(1, 1)[i])
            .collect();
        let tr = Field::scalar(g, tr).unwrap();
        assert!((&tr - &dv).max_abs() < 1e-12);
    }

    #[test]
    fn riesz_1d_sine() {
        let g = TorusGrid::new(1, 16).unwrap();
        let u = Field::scalar_from_fn(g, |x| x[0].sin());
        let r = riesz(0, &u).unwrap();
        let expect = Field::scalar_from_fn(g, |x| x[0].cos());
        assert!((&r - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn riesz_rejects_mean() {
        let g = TorusGrid::new(1, 8).unwrap();
        let u = Field::constant_scalar(g, 1.0);
        assert!(matches!(riesz(0, &u), Err(Error::NonZeroMean { .. })));
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity() {
        let g = g3(8);
        let u = random_field(g, Rank::Scalar, &RandomSpec::band(2), 5, 0);
        let mut acc = Field::zeros(g, Rank::Scalar);
        for j in 0..3 {
            acc.axpy(1.0, &riesz(j, &riesz(j, &u).unwrap()).unwrap());
        }
        assert!((&acc + &u).max_abs() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent_and_matches_riesz() {
        let g = g3(8);
        let v = random_field(g, Rank::Vector, &RandomSpec::band(2), 9, 0);
        let p = gradient_projector(&v).unwrap();
        let pp = gradient_projector(&p).unwrap();
        assert!((&pp - &p).max_abs() < 1e-12);
        // (Pv)_i = −Σ_j R_i R_j v_j
        for i in 0..3 {
            let mut acc = vec![0.0; g.len()];
            for j in 0..3 {
                let vj = Field::scalar(g, v.comp(j).to_vec()).unwrap();
                let r = riesz(i, &riesz(j, &vj).unwrap()).unwrap();
                for (a, b) in acc.iter_mut().zip(r.values()) {
                    *a -= b;
                }
            }
            let diff = acc
                .iter()
                .zip(p.comp(i))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn div_grad_is_laplacian() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = random_field(g, Rank::Scalar, &RandomSpec::band(6), 1, 0);
        let a = div(&grad(&u).unwrap()).unwrap();
        let b = laplacian(&u);
        assert!((&a - &b).max_abs() < 1e-11);
    }

    #[test]
    fn dealias_idempotent_and_identity_in_band() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Field::scalar_from_fn(g, |x| (x[0].sin() * 3.0).exp() + x[1].cos());
        let a = dealias(&u);
        let b = dealias(&a);
        assert!((&a - &b).max_abs() < 1e-13);
        assert!((a.means()[0] - u.means()[0]).abs() < 1e-13);
        let v = random_field(g, Rank::Scalar, &RandomSpec::band(g.band_limit()), 2, 0);
        assert!((&dealias(&v) - &v).max_abs() < 1e-13);
        assert!(tail_fraction(&v) < 1e-28);
        assert!(check_resolved(&u, 1e-12).is_err());
    }
}
