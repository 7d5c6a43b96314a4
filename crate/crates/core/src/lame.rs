//! Exact Fourier inversion of the Lamé operator `div D u + λ̄ ∇div u` and the
//! Riesz-transform constants bounding its inverse in `L^p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::random::{random_field, RandomSpec};
use crate::spectral::{
    ensure_zero_mean, norms, partials, project_spectrum, Field, Rank, Spectrum, TorusGrid,
};

/// The constant `λ̄ > −1/2` of the reference Lamé operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameParameter {
    lambda_bar: f64,
}

impl LameParameter {
    pub fn new(lambda_bar: f64) -> Result<Self> {
        if !(lambda_bar > -0.5) || !lambda_bar.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_bar = {lambda_bar} must be a finite number > -1/2"
            )));
        }
        Ok(Self { lambda_bar })
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    /// `(1 + 2λ̄) / (2 + 2λ̄)`.
    pub fn theta(&self) -> f64 {
        (1.0 + 2.0 * self.lambda_bar) / (2.0 + 2.0 * self.lambda_bar)
    }
}

fn k2(g: &TorusGrid, idx: usize) -> f64 {
    let k = g.wavevector(idx);
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// Applies `div D u + λ̄ ∇div u` spectrally.
pub fn apply_lame(param: LameParameter, u: &Field) -> Result<Field> {
    if u.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "Lamé operator acts on vector fields".into(),
        ));
    }
    let g = *u.grid();
    let s = u.spectrum();
    let par = project_spectrum(&s, true);
    let lb = param.lambda_bar;
    let comps = (0..g.d())
        .map(|i| {
            let (c, p) = (s.comp(i), par.comp(i));
            exec::map_indexed(g.len(), |idx| {
                let kk = k2(&g, idx);
                -0.5 * kk * (c[idx] - p[idx]) - (1.0 + lb) * kk * p[idx]
            })
        })
        .collect();
    Ok(Spectrum::from_components(g, Rank::Vector, comps).to_field())
}

/// Solves `div D u + λ̄ ∇div u = f` for zero-mean `f`.
///
/// Modewise `û⊥ = −2 f̂⊥/|k|²` and `û∥ = −f̂∥/((1+λ̄)|k|²)`, where `∥` is the
/// component along `k`. The solution has zero mean; modes whose
/// differential wavevector vanishes (mean, pure Nyquist) are set to zero.
pub fn solve_lame(param: LameParameter, f: &Field) -> Result<Field> {
    if f.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "solve_lame needs a vector right side".into(),
        ));
    }
    ensure_zero_mean(f)?;
    Ok(solve_lame_spectrum(param, &f.spectrum()).to_field())
}

pub(crate) fn solve_lame_spectrum(param: LameParameter, s: &Spectrum) -> Spectrum {
    let g = *s.grid();
    let par = project_spectrum(s, true);
    let cpar = 1.0 / (1.0 + param.lambda_bar);
    let comps = (0..g.d())
        .map(|i| {
            let (c, p) = (s.comp(i), par.comp(i));
            exec::map_indexed(g.len(), |idx| {
                let kk = k2(&g, idx);
                if kk == 0.0 {
                    Complex64::default()
                } else {
                    (-2.0 * (c[idx] - p[idx]) - cpar * p[idx]) / kk
                }
            })
        })
        .collect();
    Spectrum::from_components(g, Rank::Vector, comps)
}

/// Printed upper bounds on the inverse Lamé operator in `L^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszConstants {
    pub p: f64,
    pub d: usize,
    pub lambda_bar: f64,
    /// Bound used for `‖(R_i R_j)_{ij}‖`.
    pub norm_projector: f64,
    /// Bound used for each `‖R_k R_l‖`.
    pub norm_rr: f64,
    /// Bound on `‖∇²u‖_{L^p} / ‖f‖_{L^p}`.
    pub c1: f64,
    /// Bound on `‖∇div u‖_{L^p} / ‖f‖_{L^p}`.
    pub c2: f64,
    /// Bound on `(‖∇Du‖ + ‖∇div u‖) / ‖f‖`.
    pub c_total: f64,
}

/// Riesz-transform constants for `p ≥ 2`.
///
/// With `θ = (1+2λ̄)/(2+2λ̄)`, `P = ‖(R_iR_j)‖` and `R = ‖R_kR_l‖`:
/// `C1 = 2 d² R (1 + θP)`, `C2 = 2(P + θP)` and
/// `C_total = d² R (1 + θP) + P (1 + θ)`. For `p = 2`, `P = R = 1`; for
/// `p > 2`, `P = d(p−1)` and `R = p−1`.
pub fn riesz_constants(p: f64, d: usize, param: LameParameter) -> Result<RieszConstants> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "dimension d = {d} must be 1, 2 or 3"
        )));
    }
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Riesz constants are only available for p in [2, inf), got p = {p}"
        )));
    }
    let dd = d as f64;
    let (norm_projector, norm_rr) = if p == 2.0 {
        (1.0, 1.0)
    } else {
        (dd * (p - 1.0), p - 1.0)
    };
    let th = param.theta();
    Ok(RieszConstants {
        p,
        d,
        lambda_bar: param.lambda_bar,
        norm_projector,
        norm_rr,
        c1: 2.0 * dd * dd * norm_rr * (1.0 + th * norm_projector),
        c2: 2.0 * (norm_projector + th * norm_projector),
        c_total: dd * dd * norm_rr * (1.0 + th * norm_projector) + norm_projector * (1.0 + th),
    })
}

/// `‖∇²u‖_{L^p}`: the `L^p` norm of the pointwise magnitude of all second
/// partial derivatives.
pub fn hessian_lp(u: &Field, p: f64) -> f64 {
    let second: Vec<Field> = partials(u).iter().flat_map(partials).collect();
    norms::lq_joint(&second, p)
}

/// Per-trial ratios `‖∇²u‖_{L^p} / ‖f‖_{L^p}` for random zero-mean
/// band-limited `f` on `T^d` with `n` points per axis. Trials run in parallel
/// with independent random streams.
pub fn operator_norm_ratios(
    param: LameParameter,
    p: f64,
    d: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let g = TorusGrid::new(d, n)?;
    let spec = RandomSpec::band(g.band_limit());
    let ids: Vec<u64> = (0..trials as u64).collect();
    exec::map_items(&ids, |&t| {
        let f = random_field(g, Rank::Vector, &spec, seed, t);
        let u = solve_lame(param, &f)?;
        Ok(hessian_lp(&u, p) / norms::lq(&f, p))
    })
    .into_iter()
    .collect()
}

/// Largest of [`operator_norm_ratios`]; an empirical lower bound for the
/// true operator norm, to be compared with [`RieszConstants::c1`].
pub fn measured_operator_norm(
    param: LameParameter,
    p: f64,
    d: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    Ok(operator_norm_ratios(param, p, d, n, trials, seed)?
        .into_iter()
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(v: f64) -> LameParameter {
        LameParameter::new(v).unwrap()
    }

    #[test]
    fn parameter_bounds() {
        assert!(LameParameter::new(-0.5).is_err());
        assert!(LameParameter::new(f64::NAN).is_err());
        assert!(LameParameter::new(-0.49).is_ok());
    }

    #[test]
    fn one_dimensional_sine() {
        let g = TorusGrid::new(1, 16).unwrap();
        let f = Field::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let u = solve_lame(lp(0.0), &f).unwrap();
        assert!((&u + &f).max_abs() < 1e-14);
    }

    #[test]
    fn pure_gradient_mode() {
        let g = TorusGrid::new(3, 8).unwrap();
        let f = Field::vector_from_fn(g, |x| [x[0].cos(), 0.0, 0.0]);
        let u = solve_lame(lp(1.0), &f).unwrap();
        let expect = Field::vector_from_fn(g, |x| [-x[0].cos() / 2.0, 0.0, 0.0]);
        assert!((&u - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn residual_and_zero() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_field(g, Rank::Vector, &RandomSpec::band(5), 3, 0);
        let u = solve_lame(lp(0.7), &f).unwrap();
        let r = &apply_lame(lp(0.7), &u).unwrap() - &f;
        assert!(norms::lq(&r, 2.0) < 1e-12 * norms::lq(&f, 2.0));
        let z = solve_lame(lp(0.7), &Field::zeros(g, Rank::Vector)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn rejects_mean() {
        let g = TorusGrid::new(1, 8).unwrap();
        let f = Field::vector_from_fn(g, |_| [1.0, 0.0, 0.0]);
        assert!(matches!(
            solve_lame(lp(0.0), &f),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn printed_constants() {
        let c = riesz_constants(2.0, 3, lp(0.0)).unwrap();
        assert_eq!(c.c_total, 15.0);
        // independent evaluation of the p > 2 branch at p = 3, d = 3, λ̄ = 0
        let c = riesz_constants(3.0, 3, lp(0.0)).unwrap();
        let direct = 9.0 * 2.0 * (1.0 + 0.5 * 3.0 * 2.0) + 3.0 * 2.0 * (1.0 + 0.5);
        assert_eq!(c.c_total, direct);
        assert_eq!(direct, 81.0);
        assert!(riesz_constants(1.5, 3, lp(0.0)).is_err());
        let big = riesz_constants(2.0, 2, lp(1e12)).unwrap();
        assert!((big.c_total - 10.0).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_ratio_is_exact() {
        for lb in [0.0, 1.5] {
            let r = operator_norm_ratios(lp(lb), 2.0, 1, 32, 4, 1).unwrap();
            for v in r {
                assert!((v - 1.0 / (1.0 + lb)).abs() < 1e-12);
            }
        }
    }
}
