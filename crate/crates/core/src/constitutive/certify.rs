use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConstitutiveLaw, ScanDomain};
use crate::exec;

/// Infima of the four ellipticity functions over the certified domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    /// `inf μ(s)`.
    pub eps_mu_1: f64,
    /// `inf μ(s) + 2 s μ′(s)`.
    pub eps_mu_2: f64,
    /// `inf λ(r)`.
    pub eps_lambda_1: f64,
    /// `inf λ(r) + r λ′(r)`.
    pub eps_lambda_2: f64,
    /// `min(eps_mu_1, eps_mu_2)`.
    pub eps_mu: f64,
    /// Sample points attaining the four infima, in the order above.
    pub witnesses: [f64; 4],
    pub domain: ScanDomain,
    pub samples: usize,
}

impl EllipticityConstants {
    /// `2 ε¹_μ + 3 ε¹_λ`.
    pub fn margin_1(&self) -> f64 {
        2.0 * self.eps_mu_1 + 3.0 * self.eps_lambda_1
    }

    /// `2 ε_μ + 3 ε²_λ`.
    pub fn margin_2(&self) -> f64 {
        2.0 * self.eps_mu + 3.0 * self.eps_lambda_2
    }
}

/// One failed inequality, with the value of its left side and the sample
/// points responsible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub value: f64,
    /// `(variable name, sample point)` pairs.
    pub witnesses: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationFailure {
    pub constants: EllipticityConstants,
    pub violations: Vec<Violation>,
}

impl fmt::Display for CertificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} violated (value {:.6e}", v.condition, v.value)?;
            for (name, x) in &v.witnesses {
                write!(f, ", {name} = {x}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::error::Error for CertificationFailure {}

/// Minimum of `f` over `2n − 1` equispaced points of `[a, b]` (the uniform
/// `n`-point grid plus its midpoints), with the first minimizing point.
fn scan_min(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64 + Sync + Send) -> (f64, f64) {
    let m = 2 * n - 1;
    let x = |i: usize| a + (b - a) * i as f64 / (m - 1) as f64;
    let vals = exec::map_indexed(m, |i| f(x(i)));
    let mut best = (f64::INFINITY, a);
    for (i, v) in vals.into_iter().enumerate() {
        if v.is_nan() {
            return (f64::NAN, x(i));
        }
        if v < best.0 {
            best = (v, x(i));
        }
    }
    best
}

/// Scans `μ`, `μ + 2sμ′`, `λ`, `λ + rλ′` over the law's scan domain and
/// checks `ε¹_μ > 0`, `ε²_μ > 0`, `2ε¹_μ + 3ε¹_λ > 0`, `2ε_μ + 3ε²_λ > 0`.
///
/// The constants are infima over the sample set only; they certify the
/// scanned rectangle, not all of `[0, ∞) × ℝ`.
pub fn certify(
    law: &ConstitutiveLaw,
    n_samples: usize,
) -> Result<EllipticityConstants, CertificationFailure> {
    let dom = law.scan;
    let n = n_samples.max(2);
    let (e_mu1, s1) = scan_min(0.0, dom.s_max, n, |s| law.mu(s));
    let (e_mu2, s2) = scan_min(0.0, dom.s_max, n, |s| law.mu(s) + 2.0 * s * law.mu_prime(s));
    let (e_l1, r1) = scan_min(-dom.r_max, dom.r_max, n, |r| law.lambda(r));
    let (e_l2, r2) = scan_min(-dom.r_max, dom.r_max, n, |r| {
        law.lambda(r) + r * law.lambda_prime(r)
    });
    let eps = EllipticityConstants {
        eps_mu_1: e_mu1,
        eps_mu_2: e_mu2,
        eps_lambda_1: e_l1,
        eps_lambda_2: e_l2,
        eps_mu: e_mu1.min(e_mu2),
        witnesses: [s1, s2, r1, r2],
        domain: dom,
        samples: n,
    };
    let mut violations = Vec::new();
    if n_samples < 2 {
        violations.push(Violation {
            condition: "n_samples >= 2".into(),
            value: n_samples as f64,
            witnesses: vec![],
        });
    }
    let w = |name: &str, x: f64| (name.to_string(), x);
    if !(e_mu1 > 0.0) {
        violations.push(Violation {
            condition: "eps_mu_1 > 0".into(),
            value: e_mu1,
            witnesses: vec![w("s", s1)],
        });
    }
    if !(e_mu2 > 0.0) {
        violations.push(Violation {
            condition: "eps_mu_2 > 0".into(),
            value: e_mu2,
            witnesses: vec![w("s", s2)],
        });
    }
    if !(eps.margin_1() > 0.0) {
        violations.push(Violation {
            condition: "2 eps_mu_1 + 3 eps_lambda_1 > 0".into(),
            value: eps.margin_1(),
            witnesses: vec![w("s", s1), w("r", r1)],
        });
    }
    if !(eps.margin_2() > 0.0) {
        let s = if e_mu1 <= e_mu2 { s1 } else { s2 };
        violations.push(Violation {
            condition: "2 eps_mu + 3 eps_lambda_2 > 0".into(),
            value: eps.margin_2(),
            witnesses: vec![w("s", s), w("r", r2)],
        });
    }
    if violations.is_empty() {
        Ok(eps)
    } else {
        Err(CertificationFailure {
            constants: eps,
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newtonian_passes() {
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        let e = certify(&law, 101).unwrap();
        assert_eq!(
            (e.eps_mu_1, e.eps_mu_2, e.eps_lambda_1, e.eps_lambda_2),
            (1.0, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn negative_bulk_fails_with_witness() {
        let law = ConstitutiveLaw::newtonian(1.0, -1.0);
        let f = certify(&law, 101).unwrap_err();
        let v = f
            .violations
            .iter()
            .find(|v| v.condition.starts_with("2 eps_mu +"))
            .unwrap();
        assert_eq!(v.value, -1.0);
        assert!(f.to_string().contains("violated"));
    }

    #[test]
    fn too_few_samples_is_reported() {
        let law = ConstitutiveLaw::newtonian(1.0, 0.0);
        assert!(certify(&law, 1).is_err());
    }

    #[test]
    fn witnesses_point_at_minimizers() {
        // μ = 2 + (s − 3)² has its minimum inside the domain
        let law = ConstitutiveLaw::new(
            super::super::ViscosityLaw::Tabulated(
                super::super::Pchip::new(vec![0.0, 3.0, 6.0], vec![11.0, 2.0, 11.0]).unwrap(),
            ),
            super::super::BulkLaw::constant(0.0),
        )
        .with_scan(ScanDomain {
            s_max: 6.0,
            r_max: 1.0,
        });
        // μ + 2sμ′ goes negative on the decreasing branch, so this law fails
        let e = certify(&law, 61).unwrap_err().constants;
        assert!(e.eps_mu_2 < 0.0);
        assert_eq!(e.eps_mu_1, 2.0);
        assert_eq!(e.witnesses[0], 3.0);
    }
}
