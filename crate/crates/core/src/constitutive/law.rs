//! Scalar viscosity, bulk and pressure functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
///
/// Outside the sample range the interpolant continues linearly with the end
/// slope, which keeps it C¹ everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PchipSamples", into = "PchipSamples")]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PchipSamples {
    s: Vec<f64>,
    mu: Vec<f64>,
}

impl TryFrom<PchipSamples> for Pchip {
    type Error = Error;
    fn try_from(p: PchipSamples) -> Result<Self> {
        Pchip::new(p.s, p.mu)
    }
}

impl From<Pchip> for PchipSamples {
    fn from(p: Pchip) -> Self {
        PchipSamples { s: p.x, mu: p.y }
    }
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidParameter(
                "a table needs at least two (s, mu) samples of equal length".into(),
            ));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "table samples must be finite".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "table abscissae must increase strictly".into(),
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let last = self.x.len() - 1;
        if t < self.x[0] {
            return self.y[0] + self.m[0] * (t - self.x[0]);
        }
        if t > self.x[last] {
            return self.y[last] + self.m[last] * (t - self.x[last]);
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let last = self.x.len() - 1;
        if t < self.x[0] {
            return self.m[0];
        }
        if t > self.x[last] {
            return self.m[last];
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let d00 = 6.0 * u * (u - 1.0) / h;
        let d10 = (1.0 - u) * (1.0 - 3.0 * u);
        let d01 = -d00;
        let d11 = u * (3.0 * u - 2.0);
        d00 * self.y[i] + d10 * self.m[i] + d01 * self.y[i + 1] + d11 * self.m[i + 1]
    }

    /// Sample abscissae.
    pub fn knots(&self) -> &[f64] {
        &self.x
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Shear viscosity `μ(s)` as a function of `s = |Du|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscosityLaw {
    /// `μ ≡ mu0`.
    Newtonian { mu0: f64 },
    /// `μ(s) = mu0 + k s^m`.
    PowerLaw { mu0: f64, k: f64, m: f64 },
    /// `μ(s) = delta + s^{(p−2)/2}`.
    PDelta { delta: f64, p: f64 },
    /// Monotone cubic interpolation of `(s, μ(s))` samples.
    Tabulated(Pchip),
}

impl ViscosityLaw {
    pub fn mu(&self, s: f64) -> f64 {
        match self {
            Self::Newtonian { mu0 } => *mu0,
            Self::PowerLaw { mu0, k, m } => mu0 + k * pow(s, *m),
            Self::PDelta { delta, p } => delta + pow(s, (p - 2.0) / 2.0),
            Self::Tabulated(t) => t.value(s),
        }
    }

    pub fn mu_prime(&self, s: f64) -> f64 {
        match self {
            Self::Newtonian { .. } => 0.0,
            Self::PowerLaw { k, m, .. } => k * m * pow(s, m - 1.0),
            Self::PDelta { p, .. } => {
                let e = (p - 2.0) / 2.0;
                e * pow(s, e - 1.0)
            }
            Self::Tabulated(t) => t.derivative(s),
        }
    }

    /// `∫_0^s μ` in closed form where one exists.
    pub fn antiderivative(&self, s: f64) -> Option<f64> {
        match self {
            Self::Newtonian { mu0 } => Some(mu0 * s),
            Self::PowerLaw { mu0, k, m } => Some(mu0 * s + k * pow(s, m + 1.0) / (m + 1.0)),
            Self::PDelta { delta, p } => Some(delta * s + pow(s, p / 2.0) / (p / 2.0)),
            Self::Tabulated(_) => None,
        }
    }

    /// Rejects parameter choices for which μ is not C¹ on `[0, ∞)`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Newtonian { mu0 } if !mu0.is_finite() => bad("mu0 must be finite".into()),
            Self::PowerLaw { mu0, k, m } => {
                if ![*mu0, *k, *m].iter().all(|v| v.is_finite()) {
                    bad("power_law parameters must be finite".into())
                } else if *m != 0.0 && *m < 1.0 {
                    bad(format!(
                        "power_law exponent m = {m} is not C1 at s = 0 (need m = 0 or m >= 1)"
                    ))
                } else {
                    Ok(())
                }
            }
            Self::PDelta { delta, p } => {
                if !delta.is_finite() || !p.is_finite() {
                    bad("p_delta parameters must be finite".into())
                } else if *p != 2.0 && *p < 4.0 {
                    bad(format!(
                        "p_delta exponent p = {p} is not C1 at s = 0 (need p = 2 or p >= 4)"
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// `x^e` with `0^0 = 1` and `0^e = 0` for `e > 0`.
fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

/// Bulk viscosity `λ(r) = l0 + l2 r²` as a function of `r = div u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkLaw {
    pub l0: f64,
    #[serde(default)]
    pub l2: f64,
}

impl BulkLaw {
    pub fn constant(l0: f64) -> Self {
        Self { l0, l2: 0.0 }
    }

    pub fn lambda(&self, r: f64) -> f64 {
        self.l0 + self.l2 * r * r
    }

    pub fn lambda_prime(&self, r: f64) -> f64 {
        2.0 * self.l2 * r
    }

    /// `∫_0^r λ(σ) σ dσ`.
    pub fn weighted_antiderivative(&self, r: f64) -> f64 {
        let r2 = r * r;
        0.5 * self.l0 * r2 + 0.25 * self.l2 * r2 * r2
    }

    pub fn validate(&self) -> Result<()> {
        if self.l0.is_finite() && self.l2.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "bulk law parameters must be finite".into(),
            ))
        }
    }
}

/// Barotropic pressure `p(ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureLaw {
    /// `p ≡ p0`; its gradient vanishes.
    Constant { p0: f64 },
    /// `p = a ρ`.
    Linear { a: f64 },
    /// `p = a ρ^gamma`, `gamma ≥ 1`.
    Polytropic { a: f64, gamma: f64 },
}

impl PressureLaw {
    pub fn p(&self, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        match *self {
            Self::Constant { p0 } => p0,
            Self::Linear { a } => a * rho,
            Self::Polytropic { a, gamma } => a * rho.powf(gamma),
        }
    }

    pub fn p_prime(&self, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Linear { a } => a,
            Self::Polytropic { a, gamma } => a * gamma * rho.powf(gamma - 1.0),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    /// Checks `p ≥ 0` on `[0, rho_max]` and C¹ regularity at vacuum.
    pub fn validate(&self, rho_max: f64) -> Result<()> {
        if let Self::Polytropic { gamma, .. } = self {
            if !(*gamma >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "polytropic exponent {gamma} must be >= 1 for a C1 pressure at vacuum"
                )));
            }
        }
        for i in 0..=64 {
            let rho = rho_max * i as f64 / 64.0;
            let v = self.p(rho);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "pressure p({rho}) = {v} is not a finite non-negative number"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_interpolates_and_is_c1() {
        let t = Pchip::new(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, 1.5, 1.8, 2.0]).unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, 1.5), (2.0, 1.8), (4.0, 2.0)] {
            assert!((t.value(x) - y).abs() < 1e-15);
        }
        for &x in &[0.0, 1.0, 2.0, 4.0] {
            let l = t.derivative(x - 1e-9);
            let r = t.derivative(x + 1e-9);
            assert!((l - r).abs() < 1e-6, "slope jump at {x}: {l} vs {r}");
        }
        for i in 0..200 {
            let x = -0.5 + 5.0 * i as f64 / 200.0;
            let fd = (t.value(x + 1e-6) - t.value(x - 1e-6)) / 2e-6;
            assert!((fd - t.derivative(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn pchip_preserves_monotonicity() {
        let t = Pchip::new(vec![0.0, 1.0, 1.1, 3.0], vec![0.0, 0.0, 2.0, 2.0]).unwrap();
        let mut prev = t.value(0.0);
        for i in 1..=300 {
            let v = t.value(3.0 * i as f64 / 300.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let laws = [
            ViscosityLaw::PowerLaw {
                mu0: 1.0,
                k: 0.3,
                m: 1.5,
            },
            ViscosityLaw::PDelta { delta: 0.1, p: 5.0 },
        ];
        for law in &laws {
            for &s in &[0.2, 1.0, 3.7] {
                let fd = (law.mu(s + 1e-6) - law.mu(s - 1e-6)) / 2e-6;
                assert!((fd - law.mu_prime(s)).abs() < 1e-6);
            }
        }
        let b = BulkLaw { l0: 0.5, l2: 0.2 };
        let fd = (b.lambda(1.3 + 1e-6) - b.lambda(1.3 - 1e-6)) / 2e-6;
        assert!((fd - b.lambda_prime(1.3)).abs() < 1e-8);
    }

    #[test]
    fn non_c1_parameters_rejected() {
        assert!(ViscosityLaw::PowerLaw {
            mu0: 1.0,
            k: 1.0,
            m: 0.5
        }
        .validate()
        .is_err());
        assert!(ViscosityLaw::PDelta { delta: 0.1, p: 3.0 }
            .validate()
            .is_err());
        assert!(ViscosityLaw::PDelta { delta: 0.1, p: 4.0 }
            .validate()
            .is_ok());
        assert!(PressureLaw::Polytropic { a: 1.0, gamma: 0.5 }
            .validate(1.0)
            .is_err());
        assert!(PressureLaw::Constant { p0: -1.0 }.validate(1.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let law = ViscosityLaw::Tabulated(Pchip::new(vec![0.0, 2.0], vec![1.0, 3.0]).unwrap());
        let json = serde_json::to_string(&law).unwrap();
        let back: ViscosityLaw = serde_json::from_str(&json).unwrap();
        assert_eq!(law, back);
    }
}
