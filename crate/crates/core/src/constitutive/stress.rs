use super::{ConstitutiveLaw, EllipticityConstants, Rheology};
use crate::error::{Error, Result};
use crate::exec;
use crate::quadrature;
use crate::spectral::{
    check_resolved, dealias_spectrum, div_spectrum, grad_spectrum, sym_grad_spectrum, Field, Rank,
    Spectrum, RESOLUTION_TOL,
};

/// Pointwise stress `2μ(|A|²) A + λ(r) r I` for a symmetric `d×d` matrix `A`
/// stored row-major and a trace value `r`.
pub fn stress<R: Rheology>(law: &R, du: &[f64], divu: f64) -> Vec<f64> {
    let d = (du.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, du.len(), "stress expects a square matrix");
    let s: f64 = du.iter().map(|a| a * a).sum();
    let two_mu = 2.0 * law.mu(s);
    let lr = law.lambda(divu) * divu;
    let mut out: Vec<f64> = du.iter().map(|a| two_mu * a).collect();
    for i in 0..d {
        out[i * d + i] += lr;
    }
    out
}

/// Derived quantities of a velocity field shared by every stress evaluation.
pub(crate) struct StressKernel {
    /// `div u`.
    pub divu: Field,
    /// `|Du|²`.
    pub s: Field,
    /// `div D(u)`, vector.
    pub div_du: Field,
    /// `∇ div u`, vector.
    pub grad_div: Field,
    /// `Σ_i ⟨∂_i Du, Du⟩ (Du)_i`, vector.
    pub q: Field,
}

impl StressKernel {
    pub fn new(u: &Field) -> Result<Self> {
        if u.rank() != Rank::Vector {
            return Err(Error::ShapeMismatch("stress needs a vector field".into()));
        }
        let g = *u.grid();
        let d = g.d();
        let us = u.spectrum();
        let dus = sym_grad_spectrum(&us)?;
        let du = dus.to_field();
        let divu_s = div_spectrum(&us)?;
        let divu = divu_s.to_field();
        let grad_div = grad_spectrum(&divu_s)?.to_field();
        let div_du = div_spectrum(&dus)?.to_field();
        let s = Field::scalar(g, du.magnitude().into_iter().map(|m| m * m).collect())?;

        // c_i = ⟨∂_i Du, Du⟩, then q_j = Σ_i c_i D_ij
        let mut c = Vec::with_capacity(d);
        for i in 0..d {
            let di = dus.derivative(i).to_field();
            let dd = &du;
            c.push(exec::map_indexed(g.len(), |p| {
                (0..d * d)
                    .map(|ab| di.comp(ab)[p] * dd.comp(ab)[p])
                    .sum::<f64>()
            }));
        }
        let q_comps = (0..d)
            .map(|j| {
                exec::map_indexed(g.len(), |p| {
                    (0..d).map(|i| c[i][p] * du.entry(i, j)[p]).sum::<f64>()
                })
            })
            .collect();
        let q = Field::from_components(g, Rank::Vector, q_comps)?;
        Ok(Self {
            divu,
            s,
            div_du,
            grad_div,
            q,
        })
    }
}

/// `div S u` by the chain rule, without the resolution check.
pub(crate) fn div_stress_unchecked<R: Rheology>(law: &R, u: &Field) -> Result<Field> {
    let k = StressKernel::new(u)?;
    let g = *u.grid();
    let (s, r) = (k.s.values(), k.divu.values());
    let a = exec::map_indexed(g.len(), |p| 2.0 * law.mu(s[p]));
    let b = exec::map_indexed(g.len(), |p| 4.0 * law.mu_prime(s[p]));
    let c = exec::map_indexed(g.len(), |p| {
        law.lambda(r[p]) + law.lambda_prime(r[p]) * r[p]
    });
    let comps = (0..g.d())
        .map(|j| {
            let (dd, q, gd) = (k.div_du.comp(j), k.q.comp(j), k.grad_div.comp(j));
            exec::map_indexed(g.len(), |p| a[p] * dd[p] + b[p] * q[p] + c[p] * gd[p])
        })
        .collect();
    let raw = Field::from_components(g, Rank::Vector, comps)?;
    let mut spec = raw.spectrum();
    dealias_spectrum(&mut spec);
    Ok(spec.to_field())
}

/// `div S u` in chain-rule form
/// `2μ div Du + 4μ′ Σ_i ⟨∂_i Du, Du⟩ (Du)_i + (λ + λ′ div u) ∇div u`,
/// dealiased. Fails when `u` carries energy outside the dealiased band.
pub fn div_stress(law: &ConstitutiveLaw, u: &Field) -> Result<Field> {
    check_resolved(u, RESOLUTION_TOL)?;
    div_stress_unchecked(law, u)
}

/// Pointwise `S u` as a matrix field.
pub fn stress_field<R: Rheology>(law: &R, u: &Field) -> Result<Field> {
    let us = u.spectrum();
    let du = sym_grad_spectrum(&us)?.to_field();
    let divu = div_spectrum(&us)?.to_field();
    let g = *u.grid();
    let d = g.d();
    let pts = exec::map_indexed(g.len(), |p| {
        let a: Vec<f64> = (0..d * d).map(|c| du.comp(c)[p]).collect();
        stress(law, &a, divu.values()[p])
    });
    let comps = (0..d * d)
        .map(|c| pts.iter().map(|s| s[c]).collect())
        .collect();
    Field::from_components(g, Rank::Matrix, comps)
}

/// `div S u` by spectral divergence of the pointwise stress, dealiased.
/// Independent of the chain-rule path; used as a cross-check.
pub fn div_stress_direct(law: &ConstitutiveLaw, u: &Field) -> Result<Field> {
    let sf = stress_field(law, u)?;
    let mut spec = div_spectrum(&sf.spectrum())?;
    dealias_spectrum(&mut spec);
    Ok(spec.to_field())
}

/// `∫ S u : ∇v`.
pub fn stress_power(law: &ConstitutiveLaw, u: &Field, v: &Field) -> Result<f64> {
    let sf = stress_field(law, u)?;
    let gv = grad_spectrum(&v.spectrum())?.to_field();
    Ok(sf.inner(&gv))
}

/// `∫ M(|Du|²) + Λ(div u)` with `M(s) = ∫_0^s μ` and `Λ(r) = ∫_0^r λ(σ) σ dσ`,
/// whose time derivative along a path `u(t)` is `∫ S u : ∇u_t`.
///
/// Both antiderivatives are evaluated pointwise by adaptive quadrature.
pub fn dissipation_potential(law: &ConstitutiveLaw, u: &Field) -> Result<f64> {
    let us = u.spectrum();
    let du = sym_grad_spectrum(&us)?.to_field();
    let divu = div_spectrum(&us)?.to_field();
    let s = du.magnitude();
    let r = divu.values();
    let vals: Vec<Result<f64>> = exec::map_indexed(s.len(), |p| {
        let m = quadrature::integrate(|x| law.mu(x), 0.0, s[p] * s[p], quadrature::ABS_TOL)?;
        let l = quadrature::integrate(|x| law.lambda(x) * x, 0.0, r[p], quadrature::ABS_TOL)?;
        Ok(m + l)
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(u.grid().cell_volume() * exec::sum(vals.len(), |p| vals[p]))
}

/// Returns `(J, bound)` with `J = ∫ (S u − S v) : ∇(u − v)` and
/// `bound = ε_μ ‖∇(u−v)‖² + (ε_μ + ε²_λ) ‖div(u−v)‖²`.
///
/// `J = −∫ (div S u − div S v)·(u − v)` after integration by parts. The
/// constants come from the law's certification (performed on demand).
pub fn coercivity_gap(law: &ConstitutiveLaw, u: &Field, v: &Field) -> Result<(f64, f64)> {
    if !u.same_shape(v) || u.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "coercivity_gap needs two vector fields on one grid".into(),
        ));
    }
    if u == v {
        return Err(Error::InvalidParameter(
            "coercivity_gap needs u != v".into(),
        ));
    }
    coercivity_gap_with(law, &law.constants()?, u, v)
}

/// [`coercivity_gap`] with caller-supplied constants, e.g. the raw scan
/// infima of a law that fails certification.
pub fn coercivity_gap_with(
    law: &ConstitutiveLaw,
    eps: &EllipticityConstants,
    u: &Field,
    v: &Field,
) -> Result<(f64, f64)> {
    if !u.same_shape(v) || u.rank() != Rank::Vector {
        return Err(Error::ShapeMismatch(
            "coercivity_gap needs two vector fields on one grid".into(),
        ));
    }
    let w = u - v;
    let su = stress_field(law, u)?;
    let sv = stress_field(law, v)?;
    let gw_spec: Spectrum = grad_spectrum(&w.spectrum())?;
    let gw = gw_spec.to_field();
    let d = u.d();
    let divw = Field::scalar(
        *u.grid(),
        exec::map_indexed(u.len(), |p| (0..d).map(|i| gw.entry(i, i)[p]).sum()),
    )?;
    let j = (&su - &sv).inner(&gw);
    let bound = eps.eps_mu * gw.inner(&gw) + (eps.eps_mu + eps.eps_lambda_2) * divw.inner(&divw);
    Ok((j, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, RandomSpec};
    use crate::spectral::{norms, TorusGrid};
    use std::f64::consts::PI;

    fn sin_x1(g: TorusGrid, amp: f64) -> Field {
        Field::vector_from_fn(g, |x| {
            let mut v = [0.0; 3];
            v[0] = amp * x[0].sin();
            v
        })
    }

    #[test]
    fn pointwise_stress_examples() {
        let newt = ConstitutiveLaw::newtonian(1.0, 0.0);
        assert_eq!(stress(&newt, &[0.0; 4], 0.0), vec![0.0; 4]);
        assert_eq!(
            stress(&newt, &[0.5, 0.0, 0.0, 0.5], 1.0),
            vec![1.0, 0.0, 0.0, 1.0]
        );
        let lin = ConstitutiveLaw::power_law(1.0, 1.0, 1.0, 1.0);
        assert_eq!(
            stress(&lin, &[1.0, 0.0, 0.0, 0.0], 1.0),
            vec![5.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn newtonian_div_stress_of_sine() {
        let g = TorusGrid::new(3, 8).unwrap();
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        let r = div_stress(&law, &sin_x1(g, 1.0)).unwrap();
        let expect = sin_x1(g, -2.0);
        assert!((&r - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn chain_rule_matches_direct_on_sine() {
        let g = TorusGrid::new(3, 16).unwrap();
        let law = ConstitutiveLaw::power_law(1.0, 1.0, 1.0, 0.0);
        for amp in [1e-3, 0.3, 1.0] {
            let u = sin_x1(g, amp);
            let a = div_stress(&law, &u).unwrap();
            let b = div_stress_direct(&law, &u).unwrap();
            assert!((&a - &b).max_abs() <= 1e-10 * b.max_abs());
        }
    }

    #[test]
    fn under_resolved_input_rejected() {
        let g = TorusGrid::new(1, 16).unwrap();
        let u = Field::vector_from_fn(g, |x| [(7.0 * x[0]).sin(), 0.0, 0.0]);
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        assert!(matches!(
            div_stress(&law, &u),
            Err(Error::ResolutionInsufficient { .. })
        ));
    }

    #[test]
    fn dissipation_potential_oracles() {
        let g = TorusGrid::new(3, 16).unwrap();
        let newt = ConstitutiveLaw::newtonian(1.0, 0.0);
        let zero = Field::zeros(g, Rank::Vector);
        assert_eq!(dissipation_potential(&newt, &zero).unwrap(), 0.0);

        let u = random_field(g, Rank::Vector, &RandomSpec::band(3), 2, 0);
        let du = crate::spectral::sym_grad(&u).unwrap();
        let expect = du.inner(&du);
        let got = dissipation_potential(&newt, &u).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect);

        // μ = 1 + s on u = (sin x1, 0, 0): ∫ cos² + cos⁴/2 over T³
        let lin = ConstitutiveLaw::power_law(1.0, 1.0, 1.0, 0.0);
        let oracle = (2.0 * PI).powi(2) * (PI + 0.5 * 3.0 * PI / 4.0);
        let got = dissipation_potential(&lin, &sin_x1(g, 1.0)).unwrap();
        assert!((got - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn dissipation_rate_is_stress_power() {
        let g = TorusGrid::new(2, 16).unwrap();
        let law = ConstitutiveLaw::power_law(1.0, 0.5, 1.0, 0.0);
        let law = ConstitutiveLaw {
            lambda: super::super::BulkLaw { l0: 0.3, l2: 0.2 },
            ..law
        };
        let a = random_field(g, Rank::Vector, &RandomSpec::band(2), 5, 0);
        let b = random_field(g, Rank::Vector, &RandomSpec::band(2), 5, 1);
        let path = |t: f64| &a + &b.scaled(t.sin());
        let t0 = 0.4;
        let rate = stress_power(&law, &path(t0), &b.scaled(t0.cos())).unwrap();
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let fd = (dissipation_potential(&law, &path(t0 + h)).unwrap()
                - dissipation_potential(&law, &path(t0 - h)).unwrap())
                / (2.0 * h);
            errs.push((fd - rate).abs());
        }
        assert!(errs[1] < errs[0] / 3.0, "not second order: {errs:?}");
        assert!(errs[1] < 1e-3 * rate.abs().max(1.0));
    }

    #[test]
    fn coercivity_linear_identity() {
        let g = TorusGrid::new(3, 8).unwrap();
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        let u = random_field(g, Rank::Vector, &RandomSpec::band(2), 9, 0);
        let v = Field::zeros(g, Rank::Vector);
        let (j, bound) = coercivity_gap(&law, &u, &v).unwrap();
        let expect =
            norms::grad_l2(&u).powi(2) + norms::lq(&crate::spectral::div(&u).unwrap(), 2.0).powi(2);
        assert!((j - expect).abs() < 1e-10 * expect);
        assert!((j - bound).abs() < 1e-10 * expect);
    }
}
