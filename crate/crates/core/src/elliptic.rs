//! Damped fixed-point solver for `−div S u = f` on the torus, built on the
//! exact Lamé inverse, plus the regularity estimates it is checked against.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constitutive::{ConstitutiveLaw, Rheology, StressKernel};
use crate::error::{Error, Result};
use crate::exec;
use crate::lame::{hessian_lp, riesz_constants, solve_lame, solve_lame_spectrum, LameParameter};
use crate::spectral::{dealias_spectrum, norms, Field, Rank, Spectrum};

/// Iteration controls for [`solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticOptions {
    /// Relative residual target `‖div S u + f‖ ≤ tol ‖f‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 400,
        }
    }
}

/// Smallest accepted damping factor.
pub const MIN_DAMPING: f64 = 1.0 / 16.0;

/// One inequality evaluated on a solution. `satisfied` is `None` when the
/// check is informative only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticSolveReport {
    #[serde(skip)]
    pub u: Option<Field>,
    pub iterations: usize,
    /// `‖div S u + f‖_{L²}`.
    pub residual_l2: f64,
    pub f_l2: f64,
    pub converged: bool,
    pub lambda_bar: f64,
    /// Residual after each accepted iterate, starting with the initial one.
    pub residual_history: Vec<f64>,
    /// `‖∇²(u_{m+1} − u_m)‖_{L²}` for each accepted step.
    pub step_norms: Vec<f64>,
    pub final_damping: f64,
    pub estimate_checks: Vec<EstimateCheck>,
}

impl EllipticSolveReport {
    pub fn solution(&self) -> &Field {
        self.u.as_ref().expect("report carries its solution")
    }

    pub fn relative_residual(&self) -> f64 {
        if self.f_l2 == 0.0 {
            self.residual_l2
        } else {
            self.residual_l2 / self.f_l2
        }
    }

    /// Ratios of consecutive step norms.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.step_norms
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// `λ̄ = λ(0) / (2μ(0))`, clipped into `(−1/2, ∞)`.
pub fn default_lambda_bar<R: Rheology>(law: &R) -> f64 {
    (law.lambda(0.0) / (2.0 * law.mu(0.0))).max(-0.5 + 1e-6)
}

/// Residual `r = div S u + f` (dealiased) and the Lamé correction
/// `−r / (2μ)`, dealiased with its mean removed.
///
/// With `RHS(u) = −f/(2μ) − ((λ+λ′ div u)/(2μ) − λ̄) ∇div u
/// − (2μ′/μ) Σ_i ⟨∂_i Du, Du⟩ (Du)_i` one has `L u − RHS(u) = r/(2μ)`
/// pointwise, so `L⁻¹ RHS(u) = u + L⁻¹(−r/(2μ))`. Dividing the projected
/// residual keeps the iteration consistent: since `1/(2μ) > 0`, the
/// correction vanishes only when `r` does.
fn evaluate<R: Rheology>(law: &R, u: &Field, f: &Field) -> Result<(f64, Spectrum)> {
    let k = StressKernel::new(u)?;
    let g = *u.grid();
    let d = g.d();
    let (s, r) = (k.s.values(), k.divu.values());
    let mu = exec::map_indexed(g.len(), |p| law.mu(s[p]));
    let mup = exec::map_indexed(g.len(), |p| law.mu_prime(s[p]));
    let lam = exec::map_indexed(g.len(), |p| {
        law.lambda(r[p]) + law.lambda_prime(r[p]) * r[p]
    });

    let mut res_c = Vec::with_capacity(d);
    for j in 0..d {
        let (dd, q, gd) = (k.div_du.comp(j), k.q.comp(j), k.grad_div.comp(j));
        res_c.push(exec::map_indexed(g.len(), |p| {
            2.0 * mu[p] * dd[p] + 4.0 * mup[p] * q[p] + lam[p] * gd[p]
        }));
    }
    let mut res = Field::from_components(g, Rank::Vector, res_c)?.spectrum();
    dealias_spectrum(&mut res);
    let residual = &res.to_field() + f;
    let corr_c = (0..d)
        .map(|j| {
            let rj = residual.comp(j);
            exec::map_indexed(g.len(), |p| -rj[p] / (2.0 * mu[p]))
        })
        .collect();
    let mut corr = Field::from_components(g, Rank::Vector, corr_c)?.spectrum();
    dealias_spectrum(&mut corr);
    for c in 0..d {
        corr.comp_mut(c)[0] = Default::default();
    }
    Ok((norms::lq(&residual, 2.0), corr))
}

pub(crate) fn solve_rheology<R: Rheology>(
    law: &R,
    param: LameParameter,
    f: &Field,
    opts: &EllipticOptions,
) -> Result<EllipticSolveReport> {
    if f.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "elliptic right side must be a vector field".into(),
        ));
    }
    crate::spectral::require_zero_mean(f)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "elliptic tol must be > 0 and max_iter >= 1".into(),
        ));
    }
    let lb = param.lambda_bar();
    let f_l2 = norms::lq(f, 2.0);
    let target = opts.tol * f_l2;

    let mu0 = law.mu(0.0);
    let mut u = solve_lame(param, &f.scaled(-1.0 / (2.0 * mu0)))?;
    let (mut res, mut corr) = evaluate(law, &u, f)?;
    let mut history = vec![res];
    let mut steps = Vec::new();
    let mut iterations = 1;
    let mut theta: f64 = 1.0;
    let mut converged = res <= target;
    let mut target_field = &u + &solve_lame_spectrum(param, &corr).to_field();

    while !converged && iterations < opts.max_iter {
        let mut cand = u.scaled(1.0 - theta);
        cand.axpy(theta, &target_field);
        let (res_c, corr_c) = evaluate(law, &cand, f)?;
        iterations += 1;
        if !res_c.is_finite() || (res_c > res && theta > MIN_DAMPING) {
            theta = (theta / 2.0).max(MIN_DAMPING);
            continue;
        }
        steps.push(hessian_lp(&(&cand - &u), 2.0));
        u = cand;
        res = res_c;
        corr = corr_c;
        history.push(res);
        converged = res <= target;
        if !converged {
            target_field = &u + &solve_lame_spectrum(param, &corr).to_field();
        }
    }

    let report = EllipticSolveReport {
        u: Some(u),
        iterations,
        residual_l2: res,
        f_l2,
        converged,
        lambda_bar: lb,
        residual_history: history,
        step_norms: steps,
        final_damping: theta,
        estimate_checks: Vec::new(),
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::EllipticNonConvergence {
            iterations,
            residual: report.relative_residual(),
            history: report.residual_history,
        })
    }
}

/// Solves `−div S u = f` for zero-mean `f` by the damped iteration
/// `u_{m+1} = (1−θ) u_m + θ L⁻¹ RHS(u_m)`, starting from
/// `u_0 = L⁻¹(−f / (2μ(0)))` with `L = div D + λ̄ ∇div`.
///
/// The damping `θ` starts at 1 and halves (down to [`MIN_DAMPING`]) whenever
/// a step would increase the residual; such steps are rejected but counted.
pub fn solve(
    law: &ConstitutiveLaw,
    param: LameParameter,
    f: &Field,
    opts: &EllipticOptions,
) -> Result<EllipticSolveReport> {
    law.constants()?;
    solve_rheology(law, param, f, opts)
}

/// The three smallness quantities under which the fixed-point map contracts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessCertificate {
    /// Growth exponent in `1/μ(s) ≤ c s^{α/2}`; always 0 here.
    pub alpha: f64,
    /// `sup 1/μ` on the scanned range.
    pub c: f64,
    /// `C_{p,λ̄} sup |λ̄ − (λ(r) + λ′(r) r) / (2μ(s))|` over `r² ≤ d s`.
    pub kappa: f64,
    /// `C_{p,λ̄} sup |2μ′(s) s| / μ(s)`.
    pub delta_contraction: f64,
    pub c_total: f64,
    pub lambda_bar: f64,
    pub field_bound: f64,
    pub certified: bool,
}

/// Evaluates the smallness conditions for `|Du| ≤ field_bound` on `T^d`.
///
/// With `α = 0` the first condition only asks for `μ` bounded below on the
/// range; `c` is the resulting constant.
pub fn certify_smallness(
    law: &ConstitutiveLaw,
    param: LameParameter,
    p: f64,
    d: usize,
    field_bound: f64,
) -> Result<SmallnessCertificate> {
    if !(field_bound >= 0.0) || !field_bound.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "field_bound = {field_bound} must be finite and >= 0"
        )));
    }
    let consts = riesz_constants(p, d, param)?;
    let ct = consts.c_total;
    let lb = param.lambda_bar();
    const NS: usize = 801;
    const NR: usize = 401;
    let s_max = field_bound * field_bound;
    let s_at = |i: usize| s_max * i as f64 / (NS - 1) as f64;
    let mut c: f64 = 0.0;
    let mut delta: f64 = 0.0;
    for i in 0..NS {
        let s = s_at(i);
        let mu = law.mu(s);
        c = c.max(if mu > 0.0 { 1.0 / mu } else { f64::INFINITY });
        delta = delta.max((2.0 * law.mu_prime(s) * s).abs() / mu);
    }
    let kappa_rows = exec::map_indexed(NS, |i| {
        let s = s_at(i);
        let rb = (d as f64 * s).sqrt();
        let two_mu = 2.0 * law.mu(s);
        (0..NR)
            .map(|j| {
                let r = -rb + 2.0 * rb * j as f64 / (NR - 1) as f64;
                (lb - (law.lambda(r) + law.lambda_prime(r) * r) / two_mu).abs()
            })
            .fold(0.0, f64::max)
    });
    let kappa = ct * kappa_rows.into_iter().fold(0.0, f64::max);
    let delta = ct * delta;
    Ok(SmallnessCertificate {
        alpha: 0.0,
        c,
        kappa,
        delta_contraction: delta,
        c_total: ct,
        lambda_bar: lb,
        field_bound,
        certified: c.is_finite() && kappa <= 1.0 && delta < 1.0,
    })
}

/// Outcome of the one-dimensional `W^{2,p}` check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OneDimEstimate {
    /// `∫|u_xx|^p ≤ (ε²_μ)^{1−p} ∫|f|^p`.
    pub printed: EstimateCheck,
    /// `∫|u_xx|^p ≤ (ε²_μ)^{−p} ∫|f|^p`, the bound that follows from
    /// `|u_xx| ≤ |f| / ε²_μ` pointwise.
    pub pointwise: EstimateCheck,
    pub report: EllipticSolveReport,
}

/// Flux `φ(v) = μ(v²) v` of the one-dimensional equation.
fn flux(law: &ConstitutiveLaw, v: f64) -> f64 {
    law.mu(v * v) * v
}

/// Solves `φ(v) = y` for strictly increasing `φ` with `|φ(v)| ≥ m |v|`:
/// Newton steps kept inside a shrinking bracket, bisection otherwise.
fn invert_flux(law: &ConstitutiveLaw, y: f64, m: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = if y > 0.0 { (0.0, y / m) } else { (y / m, 0.0) };
    let mut v = y / law.mu(0.0);
    if !(v > lo && v < hi) {
        v = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let r = flux(law, v) - y;
        if r == 0.0 {
            return v;
        }
        if r > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let s = v * v;
        let dphi = law.mu(s) + 2.0 * s * law.mu_prime(s);
        let newton = v - r / dphi;
        v = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    v
}

/// Zero-mean antiderivative of a scalar field on `T¹`.
fn antiderivative(f: &Field) -> Field {
    let g = *f.grid();
    let mut fs = f.spectrum();
    for (idx, c) in fs.comp_mut(0).iter_mut().enumerate() {
        let k = g.wavevector(idx)[0];
        *c = if k == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            *c / Complex64::new(0.0, k)
        };
    }
    fs.to_field()
}

/// Solves `−(μ(u_x²) u_x)_x = f` on `T¹` through its first integral
/// `φ(u_x) = c − F`, where `F` is the zero-mean antiderivative of `f`.
///
/// `u_x` is recovered pointwise and `c` is fixed by `∫ u_x = 0` (bisection;
/// the mean of `u_x` increases with `c`). Returns the report (with `u`) and
/// `u_xx = −f / φ′(u_x)` at the nodes.
fn solve_first_integral(
    law: &ConstitutiveLaw,
    f: &Field,
    opts: &EllipticOptions,
) -> Result<(EllipticSolveReport, Vec<f64>)> {
    crate::spectral::require_zero_mean(f)?;
    let eps = law.constants()?;
    let g = *f.grid();
    let big_f = antiderivative(f);
    let fv = big_f.values();
    let velocity =
        |c: f64| exec::map_indexed(g.len(), |p| invert_flux(law, c - fv[p], eps.eps_mu_1));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mut lo, mut hi) = (
        big_f.min_value(),
        fv.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut iterations = 0;
    while iterations < opts.max_iter
        && hi - lo > 2.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    {
        let mid = 0.5 * (lo + hi);
        if mean(&velocity(mid)) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let mut v = velocity(0.5 * (lo + hi));
    let vbar = mean(&v);
    v.iter_mut().for_each(|x| *x -= vbar);

    let flux_field = Field::scalar(g, v.iter().map(|&x| flux(law, x)).collect())?;
    let residual = &crate::spectral::partials(&flux_field)[0] + f;
    let residual_l2 = norms::lq(&residual, 2.0);
    let f_l2 = norms::lq(f, 2.0);
    let uxx: Vec<f64> = v
        .iter()
        .zip(f.values())
        .map(|(&x, &fp)| {
            let s = x * x;
            -fp / (law.mu(s) + 2.0 * s * law.mu_prime(s))
        })
        .collect();
    let u = antiderivative(&Field::scalar(g, v)?);
    let u = Field::from_components(g, Rank::Vector, vec![u.values().to_vec()])?;
    let converged = residual_l2 <= opts.tol * f_l2 || f_l2 == 0.0;
    let report = EllipticSolveReport {
        u: Some(u),
        iterations,
        residual_l2,
        f_l2,
        converged,
        lambda_bar: 0.0,
        residual_history: vec![residual_l2],
        step_norms: Vec::new(),
        final_damping: 1.0,
        estimate_checks: Vec::new(),
    };
    if !converged {
        return Err(Error::EllipticNonConvergence {
            iterations,
            residual: report.relative_residual(),
            history: report.residual_history,
        });
    }
    Ok((report, uxx))
}

/// Solves `−(μ(u_x²) u_x)_x = f` on `T¹` and evaluates the `W^{2,p}` bounds
/// with `ε²_μ` taken from the certified law.
///
/// The equation is integrated once and inverted pointwise, so `u_xx` is
/// exact at the nodes even where a spectral representation of `u` would be
/// under-resolved.
pub fn verify_1d_estimate(
    law: &ConstitutiveLaw,
    f: &Field,
    p: f64,
    opts: &EllipticOptions,
) -> Result<OneDimEstimate> {
    if f.d() != 1 || f.rank() != Rank::Scalar {
        return Err(Error::ShapeMismatch(
            "the 1D estimate needs a scalar field on T^1".into(),
        ));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    let eps2 = law.constants()?.eps_mu_2;
    let (report, uxx) = solve_first_integral(law, f, opts)?;
    let cell = f.grid().cell_volume();
    let lhs = cell * exec::sum(uxx.len(), |i| uxx[i].abs().powf(p));
    let fp = cell * exec::sum(f.len(), |i| f.values()[i].abs().powf(p));
    let check = |name: &str, rhs: f64| EstimateCheck {
        name: name.into(),
        lhs,
        rhs,
        satisfied: Some(lhs <= rhs * (1.0 + 1e-8)),
    };
    Ok(OneDimEstimate {
        printed: check("w2p_1d_printed", eps2.powf(1.0 - p) * fp),
        pointwise: check("w2p_1d_pointwise", eps2.powf(-p) * fp),
        report,
    })
}

/// `(ε_μ/2)‖∇Du‖² + ε²_λ‖∇div u‖² ≤ ‖f‖² / (2ε_μ)` on a converged solve.
///
/// When `ε²_λ < 0` the check is informative only (`satisfied = None`).
pub fn verify_h2_estimate(
    law: &ConstitutiveLaw,
    f: &Field,
    report: &EllipticSolveReport,
) -> Result<EstimateCheck> {
    if !report.converged {
        return Err(Error::EllipticNonConvergence {
            iterations: report.iterations,
            residual: report.relative_residual(),
            history: report.residual_history.clone(),
        });
    }
    let eps = law.constants()?;
    let u = report.solution();
    let du = crate::spectral::sym_grad(u)?;
    let divu = crate::spectral::div(u)?;
    let grad_du = norms::grad_l2(&du);
    let grad_div = norms::grad_l2(&divu);
    let lhs = 0.5 * eps.eps_mu * grad_du * grad_du + eps.eps_lambda_2 * grad_div * grad_div;
    let f2 = norms::lq(f, 2.0).powi(2);
    let rhs = f2 / (2.0 * eps.eps_mu);
    let satisfied = if eps.eps_lambda_2 >= 0.0 {
        Some(lhs <= rhs * (1.0 + 1e-8))
    } else {
        None
    };
    Ok(EstimateCheck {
        name: "h2_energy".into(),
        lhs,
        rhs,
        satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::div_stress;
    use crate::random::{random_field, RandomSpec};
    use crate::spectral::TorusGrid;

    fn sin_x1(g: TorusGrid) -> Field {
        Field::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0])
    }

    #[test]
    fn zero_forcing() {
        let g = TorusGrid::new(2, 16).unwrap();
        let law = ConstitutiveLaw::power_law(1.0, 0.3, 1.0, 0.0);
        let r = solve(
            &law,
            LameParameter::new(0.0).unwrap(),
            &Field::zeros(g, Rank::Vector),
            &EllipticOptions::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.solution().max_abs(), 0.0);
    }

    #[test]
    fn linear_case_is_one_lame_solve() {
        let g = TorusGrid::new(3, 8).unwrap();
        let law = ConstitutiveLaw::newtonian(0.5, 0.0);
        let ustar = sin_x1(g);
        let f = div_stress(&law, &ustar).unwrap().scaled(-1.0);
        let r = solve(
            &law,
            LameParameter::new(0.0).unwrap(),
            &f,
            &EllipticOptions::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.solution() - &ustar).max_abs() < 1e-14);
    }

    #[test]
    fn weak_power_law_manufactured() {
        let g = TorusGrid::new(3, 16).unwrap();
        let law = ConstitutiveLaw::power_law(1.0, 0.05, 1.0, 0.0);
        let ustar = sin_x1(g);
        let f = div_stress(&law, &ustar).unwrap().scaled(-1.0);
        let r = solve(
            &law,
            LameParameter::new(0.0).unwrap(),
            &f,
            &EllipticOptions::default(),
        )
        .unwrap();
        let err = norms::lq(&(r.solution() - &ustar), 2.0) / norms::lq(&ustar, 2.0);
        assert!(err < 1e-8, "err {err}");
        assert!(r.solution().max_abs_mean() < 1e-14);
    }

    #[test]
    fn smallness_examples() {
        let p0 = LameParameter::new(0.0).unwrap();
        let newt = ConstitutiveLaw::newtonian(1.0, 0.0);
        let c = certify_smallness(&newt, p0, 2.0, 3, 1.0).unwrap();
        assert!(c.certified && c.delta_contraction == 0.0 && c.kappa == 0.0);
        let weak = ConstitutiveLaw::power_law(1.0, 0.01, 1.0, 0.0);
        let c = certify_smallness(&weak, p0, 2.0, 3, 1.0).unwrap();
        assert!((c.delta_contraction - 15.0 * 0.02 / 1.01).abs() < 1e-12);
        assert!(c.certified);
        let strong = ConstitutiveLaw::power_law(1.0, 1.0, 1.0, 0.0);
        let c = certify_smallness(&strong, p0, 2.0, 3, 1.0).unwrap();
        assert!((c.delta_contraction - 15.0).abs() < 1e-12);
        assert!(!c.certified);
    }

    #[test]
    fn first_integral_agrees_with_fixed_point() {
        // the full 1D operator is −(2μ u_x)_x, so 2f there matches f here
        let g = TorusGrid::new(1, 512).unwrap();
        let law = ConstitutiveLaw::p_delta(0.1, 4.0, 0.0);
        let f = random_field(g, Rank::Scalar, &RandomSpec::band(3).with_rms(0.05), 7, 0);
        let e = verify_1d_estimate(&law, &f, 2.0, &EllipticOptions::default()).unwrap();
        let f2 = Field::from_components(
            g,
            Rank::Vector,
            vec![f.values().iter().map(|x| 2.0 * x).collect()],
        )
        .unwrap();
        let r = solve(
            &law,
            LameParameter::new(0.0).unwrap(),
            &f2,
            &EllipticOptions::default(),
        )
        .unwrap();
        let diff = (e.report.solution() - r.solution()).max_abs();
        assert!(diff < 1e-9 * r.solution().max_abs(), "difference {diff}");
    }

    #[test]
    fn one_dimensional_linear_equality() {
        let g = TorusGrid::new(1, 64).unwrap();
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        let f = Field::scalar_from_fn(g, |x| x[0].sin());
        let e = verify_1d_estimate(&law, &f, 2.0, &EllipticOptions::default()).unwrap();
        let u = e.report.solution();
        assert!(
            (u.comp(0)
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
                < 1e-12
        );
        assert!((e.printed.lhs - std::f64::consts::PI).abs() < 1e-10);
        assert!((e.printed.lhs - e.printed.rhs).abs() < 1e-8 * e.printed.rhs);
    }

    #[test]
    fn h2_on_newtonian_random() {
        let g = TorusGrid::new(2, 16).unwrap();
        let law = ConstitutiveLaw::newtonian(1.0, 0.2);
        let f = random_field(g, Rank::Vector, &RandomSpec::band(4), 8, 0);
        let p = LameParameter::new(default_lambda_bar(&law)).unwrap();
        let r = solve(&law, p, &f, &EllipticOptions::default()).unwrap();
        let c = verify_h2_estimate(&law, &f, &r).unwrap();
        assert_eq!(c.satisfied, Some(true));
    }
}
