use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{courant, Forcing, StepConfig, Trajectory};
use crate::constitutive::{
    div_stress_unchecked, BulkLaw, ConstitutiveLaw, PressureLaw, ViscosityLaw,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::spectral::{
    dealias, dealias_spectrum, grad, partials, project_spectrum, Field, Rank, Spectrum,
};

/// Explicit convection is extrapolated, so its Courant number is held
/// below one.
const EXPLICIT_LIMIT: f64 = 1.0;

/// Per-step diagnostics of the implicit momentum solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentumStats {
    pub pcg_iterations: Vec<usize>,
    /// True relative residual `‖b − A u‖ / ‖b‖` of each step.
    pub residuals: Vec<f64>,
}

impl MomentumStats {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Reference viscosities `(μ(0), λ(0))` of the implicit part.
fn reference(law: &ConstitutiveLaw) -> Result<(f64, f64)> {
    let (mu0, l0) = (law.mu(0.0), law.lambda(0.0));
    if !(mu0 > 0.0) || !(2.0 * mu0 + l0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "implicit viscous part needs mu(0) > 0 and 2 mu(0) + lambda(0) > 0, got {mu0}, {l0}"
        )));
    }
    Ok((mu0, l0))
}

fn is_linear(law: &ConstitutiveLaw) -> bool {
    matches!(law.mu, ViscosityLaw::Newtonian { .. })
        && matches!(law.lambda, BulkLaw { l2, .. } if l2 == 0.0)
}

/// Applies `a(k)` to the transverse and `b(k)` to the longitudinal part of
/// each Fourier mode, with `k2 = |k|²`.
fn modewise<A, B>(v: &Field, a: A, b: B) -> Field
where
    A: Fn(f64) -> f64 + Sync,
    B: Fn(f64) -> f64 + Sync,
{
    let g = *v.grid();
    let s = v.spectrum();
    let par = project_spectrum(&s, true);
    let comps = (0..g.d())
        .map(|i| {
            let (c, p) = (s.comp(i), par.comp(i));
            exec::map_indexed(g.len(), |idx| {
                let k = g.wavevector(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                (c[idx] - p[idx]) * a(k2) + p[idx] * b(k2)
            })
        })
        .collect::<Vec<Vec<Complex64>>>();
    Spectrum::from_components(g, Rank::Vector, comps).to_field()
}

/// `L₀ v = μ₀(Δv + ∇div v) + λ₀ ∇div v` with `μ₀ = μ(0)`, `λ₀ = λ(0)`,
/// applied spectrally without dealiasing. Equals `div S v` for a linear law.
pub fn linear_viscous(law: &ConstitutiveLaw, v: &Field) -> Result<Field> {
    if v.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "viscous operator acts on vector fields".into(),
        ));
    }
    let (mu0, l0) = (law.mu(0.0), law.lambda(0.0));
    Ok(modewise(v, |k2| -mu0 * k2, |k2| -(2.0 * mu0 + l0) * k2))
}

/// `(c ρ − L₀)` and its constant-coefficient preconditioner.
struct ImplicitOperator<'a> {
    rho: &'a Field,
    c: f64,
    c_mean: f64,
    mu0: f64,
    l0: f64,
}

impl ImplicitOperator<'_> {
    fn apply(&self, v: &Field) -> Field {
        let (mu0, l0) = (self.mu0, self.l0);
        let mut out = modewise(v, |k2| mu0 * k2, |k2| (2.0 * mu0 + l0) * k2);
        out.axpy(self.c, &v.mul_scalar_field(self.rho));
        out
    }

    fn precondition(&self, r: &Field) -> Field {
        let (mu0, l0, c) = (self.mu0, self.l0, self.c_mean);
        modewise(
            r,
            |k2| 1.0 / (c + mu0 * k2),
            |k2| 1.0 / (c + (2.0 * mu0 + l0) * k2),
        )
    }

    /// Preconditioned conjugate gradients from `x`; returns the solution,
    /// the iteration count and the true relative residual.
    fn solve(
        &self,
        b: &Field,
        mut x: Field,
        tol: f64,
        max_iter: usize,
    ) -> (Field, usize, f64, bool) {
        let bnorm = b.inner(b).sqrt();
        if bnorm == 0.0 {
            return (Field::zeros(*b.grid(), Rank::Vector), 0, 0.0, true);
        }
        let mut r = b - &self.apply(&x);
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = r.inner(&z);
        let mut it = 0;
        while r.inner(&r).sqrt() > tol * bnorm && it < max_iter {
            let ap = self.apply(&p);
            let pap = p.inner(&ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            z = self.precondition(&r);
            let rz_new = r.inner(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            p = &z + &(&p * beta);
            it += 1;
        }
        let true_res = (b - &self.apply(&x)).inner(&(b - &self.apply(&x))).sqrt() / bnorm;
        let ok = r.inner(&r).sqrt() <= tol * bnorm;
        (x, it, true_res, ok)
    }
}

/// Explicit part `div S u − L₀ u − ρ (w·∇)u` at one time level, dealiased.
fn explicit_terms(
    law: &ConstitutiveLaw,
    linear: bool,
    rho: &Field,
    w: &Field,
    u: &Field,
) -> Result<Field> {
    let g = *u.grid();
    let d = g.d();
    let du: Vec<Field> = partials(u);
    let r = rho.values();
    let comps = (0..d)
        .map(|i| {
            exec::map_indexed(g.len(), |p| {
                let conv: f64 = (0..d).map(|j| w.comp(j)[p] * du[j].comp(i)[p]).sum();
                -r[p] * conv
            })
        })
        .collect();
    let mut out = dealias(&Field::from_components(g, Rank::Vector, comps)?);
    if !linear {
        let nl = &div_stress_unchecked(law, u)? - &linear_viscous(law, u)?;
        out = &out + &nl;
    }
    Ok(out)
}

/// `ρ f − ∇p(ρ)` with `p(ρ)` dealiased before differentiation.
fn source_terms(pressure: &PressureLaw, rho: &Field, f: &Field) -> Result<Field> {
    let mut out = f.mul_scalar_field(rho);
    if !pressure.is_constant() {
        let p = rho.map(|x| pressure.p(x));
        let mut s = p.spectrum();
        dealias_spectrum(&mut s);
        out = &out - &grad(&s.to_field())?;
    }
    Ok(out)
}

/// Solves `ρ ∂_t u + ρ (w·∇)u − div S u + ∇p(ρ) = ρ f` on the time grid of
/// `rho` from `u0`, given the density and the convecting velocity histories.
///
/// Second-order semi-implicit BDF: the reference viscous operator `L₀` and
/// the mass term `ρ^{n+1} u^{n+1}` are implicit, convection and the
/// nonlinear stress remainder are extrapolated. The first step is backward
/// Euler made second order by Richardson extrapolation. Each implicit
/// system is symmetric positive definite and is solved by conjugate
/// gradients preconditioned with the exact inverse of `ρ̄ a₀/dt − L₀`. The mass term is applied pointwise, so at vacuum points
/// the update enforces the quasi-static balance `div S u = ∇p`.
pub fn momentum_stage(
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    rho: &Trajectory,
    w: &Trajectory,
    u0: &Field,
    forcing: &Forcing,
    cfg: &StepConfig,
) -> Result<(Trajectory, MomentumStats)> {
    match momentum_run(law, pressure, rho, w, u0, forcing, cfg)? {
        (tr, stats, None) => Ok((tr, stats)),
        (_, _, Some(e)) => Err(e),
    }
}

/// Like [`momentum_stage`], but a failing step ends the run and is
/// returned alongside the healthy prefix.
pub(crate) fn momentum_run(
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    rho: &Trajectory,
    w: &Trajectory,
    u0: &Field,
    forcing: &Forcing,
    cfg: &StepConfig,
) -> Result<(Trajectory, MomentumStats, Option<Error>)> {
    let steps = cfg.steps()?;
    for (name, tr) in [("density", rho), ("velocity", w)] {
        if tr.steps() < steps || (tr.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
            return Err(Error::ShapeMismatch(format!(
                "{name} history covers {} steps of {}, need {} of {}",
                tr.steps(),
                tr.dt(),
                steps,
                cfg.dt
            )));
        }
    }
    if u0.rank() != Rank::Vector || u0.grid() != rho.grid() || u0.grid() != w.grid() {
        return Err(Error::ShapeMismatch(
            "u0, density and velocity must share one grid".into(),
        ));
    }
    let (mu0, l0) = reference(law)?;
    let linear = is_linear(law);
    let g = *u0.grid();
    let dt = cfg.dt;

    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.clone());
    let mut stats = MomentumStats::default();
    let mut x_prev: Option<Field> = None;
    for n in 0..steps {
        let t1 = (n + 1) as f64 * dt;
        let c = courant(w.at(n), dt);
        if !(c <= cfg.cfl_safety * EXPLICIT_LIMIT) {
            let e = Error::Cfl {
                time: n as f64 * dt,
                courant: c,
                limit: cfg.cfl_safety * EXPLICIT_LIMIT,
            };
            return Ok((Trajectory::new(dt, out)?, stats, Some(e)));
        }
        let rho1 = rho.at(n + 1).map(|x| x.max(0.0));
        let un = &out[n];
        let xn = explicit_terms(law, linear, rho.at(n), w.at(n), un)?;
        let solve = |a0: f64,
                     history: &Field,
                     extrap: &Field,
                     rho1: &Field,
                     t1: f64,
                     h: f64,
                     guess: Field| {
            let mut b = extrap + &source_terms(pressure, rho1, &forcing.eval(t1, g))?;
            b.axpy(-1.0 / h, &history.mul_scalar_field(rho1));
            let op = ImplicitOperator {
                rho: rho1,
                c: a0 / h,
                c_mean: a0 * rho1.means()[0].max(f64::MIN_POSITIVE) / h,
                mu0,
                l0,
            };
            let (u1, it, res, ok) = op.solve(&b, guess, cfg.pcg_tol, cfg.pcg_max_iter);
            if !ok || !u1.is_finite() {
                return Ok(Err(Error::ImplicitSolve {
                    time: t1,
                    reason: format!("conjugate gradients stopped after {it} iterations at relative residual {res:e}"),
                }));
            }
            Ok::<_, Error>(Ok((u1, it, res)))
        };
        let step = match &x_prev {
            Some(xp) => {
                let um = &out[n - 1];
                let hist = &(un * -2.0) + &(um * 0.5);
                solve(
                    1.5,
                    &hist,
                    &(&(&xn * 2.0) - xp),
                    &rho1,
                    t1,
                    dt,
                    &(un * 2.0) - um,
                )?
            }
            None => {
                // Backward Euler over dt and over two half steps, combined by
                // Richardson extrapolation into a second-order start.
                let h = 0.5 * dt;
                let rho_h = rho.sample(h).map(|x| x.max(0.0));
                let neg = un * -1.0;
                let full = solve(1.0, &neg, &xn, &rho1, t1, dt, un.clone())?;
                let half = solve(1.0, &neg, &xn, &rho_h, h, h, un.clone())?;
                match (full, half) {
                    (Ok((uf, i1, r1)), Ok((uh, i2, r2))) => {
                        let xh = explicit_terms(law, linear, &rho_h, &w.sample(h), &uh)?;
                        match solve(1.0, &(&uh * -1.0), &xh, &rho1, t1, h, uh.clone())? {
                            Ok((uhh, i3, r3)) => {
                                Ok((&(&uhh * 2.0) - &uf, i1 + i2 + i3, r1.max(r2).max(r3)))
                            }
                            Err(e) => Err(e),
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => Err(e),
                }
            }
        };
        let (u1, it, res) = match step {
            Ok(v) => v,
            Err(e) => return Ok((Trajectory::new(dt, out)?, stats, Some(e))),
        };
        stats.pcg_iterations.push(it);
        stats.residuals.push(res);
        out.push(u1);
        x_prev = Some(xn);
    }
    Ok((Trajectory::new(dt, out)?, stats, None))
}

/// `div S u` as discretized by [`momentum_stage`]: `L₀ u` without
/// dealiasing plus the dealiased nonlinear remainder.
pub fn viscous_force(law: &ConstitutiveLaw, u: &Field) -> Result<Field> {
    if is_linear(law) {
        linear_viscous(law, u)
    } else {
        div_stress_unchecked(law, u)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::spectral::{norms, TorusGrid};

    fn newtonian() -> ConstitutiveLaw {
        ConstitutiveLaw::newtonian(1.0, 0.0)
    }

    /// Error at `t = 1` for `u* = e^{-t} g(x)` on `T¹` with unit density,
    /// convected by itself, `μ = 1`, `λ = 0`.
    fn manufactured_error(n: usize, dt: f64, g_of: fn(f64) -> [f64; 3]) -> f64 {
        let g = TorusGrid::new(1, n).unwrap();
        let steps = (1.0 / dt).round() as usize;
        let exact = |t: f64| Field::vector_from_fn(g, |x| [(-t).exp() * g_of(x[0])[0], 0.0, 0.0]);
        let w = Trajectory::new(dt, (0..=steps).map(|i| exact(i as f64 * dt)).collect()).unwrap();
        let rho = Trajectory::constant(Field::constant_scalar(g, 1.0), dt, steps);
        // f = u_t + u u_x − 2 u_xx
        let forcing = Forcing::Custom(Arc::new(move |t| {
            let e = (-t).exp();
            Field::vector_from_fn(g, |x| {
                let [v, v1, v2] = g_of(x[0]);
                [-e * v + e * e * v * v1 - 2.0 * e * v2, 0.0, 0.0]
            })
        }));
        let cfg = StepConfig::new(dt, 1.0);
        let (u, stats) = momentum_stage(
            &newtonian(),
            &PressureLaw::Constant { p0: 1.0 },
            &rho,
            &w,
            &exact(0.0),
            &forcing,
            &cfg,
        )
        .unwrap();
        assert!(stats.max_residual() < 1e-11);
        norms::lq(&(u.last() - &exact(1.0)), 2.0)
    }

    fn sine(x: f64) -> [f64; 3] {
        [x.sin(), x.cos(), -x.sin()]
    }

    #[test]
    fn second_order_in_time() {
        let e: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| manufactured_error(16, dt, sine))
            .collect();
        for k in 0..2 {
            let ratio = e[k] / e[k + 1];
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}, errors {e:?}");
        }
    }

    #[test]
    fn rest_state_is_preserved() {
        let g = TorusGrid::new(2, 16).unwrap();
        let rho = Trajectory::constant(Field::constant_scalar(g, 0.7), 0.01, 5);
        let zero = Field::zeros(g, Rank::Vector);
        let w = Trajectory::constant(zero.clone(), 0.01, 5);
        let (u, _) = momentum_stage(
            &ConstitutiveLaw::power_law(1.0, 0.5, 1.0, 0.2),
            &PressureLaw::Polytropic { a: 1.0, gamma: 1.4 },
            &rho,
            &w,
            &zero,
            &Forcing::Zero,
            &StepConfig::new(0.01, 0.05),
        )
        .unwrap();
        assert_eq!(u.last().max_abs(), 0.0);
    }

    #[test]
    fn vacuum_points_satisfy_quasi_static_balance() {
        let g = TorusGrid::new(1, 32).unwrap();
        let rho0 = Field::scalar_from_fn(g, |x| x[0].sin().max(0.0).powi(4));
        let rho = Trajectory::constant(rho0.clone(), 0.01, 1);
        let zero = Field::zeros(g, Rank::Vector);
        let w = Trajectory::constant(zero.clone(), 0.01, 1);
        let law = ConstitutiveLaw::newtonian(1.0, 0.5);
        let (u, stats) = momentum_stage(
            &law,
            &PressureLaw::Linear { a: 1.0 },
            &rho,
            &w,
            &zero,
            &Forcing::Zero,
            &StepConfig::new(0.01, 0.01),
        )
        .unwrap();
        assert!(stats.max_residual() < 1e-11);
        let grad_p = grad(&dealias(&rho0)).unwrap();
        let r = &linear_viscous(&law, u.last()).unwrap() - &grad_p;
        let scale = grad_p.max_abs();
        let mut worst: f64 = 0.0;
        for (p, &d) in rho0.values().iter().enumerate() {
            if d == 0.0 {
                worst = worst.max(r.comp(0)[p].abs());
            }
        }
        assert!(worst < 1e-9 * scale, "worst {worst}, scale {scale}");
    }

    #[test]
    fn linear_viscous_matches_stress() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Field::vector_from_fn(g, |x| [x[1].sin(), (x[0] + x[1]).cos(), 0.0]);
        let law = ConstitutiveLaw::newtonian(0.8, 0.3);
        let a = linear_viscous(&law, &u).unwrap();
        let b = crate::constitutive::div_stress(&law, &u).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
    }
}
