//! Viscosity pair `(μ, λ)`, pressure law, ellipticity certification and the
//! stress operator `S u = 2μ(|Du|²) Du + λ(div u) div u I`.

mod certify;
mod law;
mod stress;

pub use certify::{certify, CertificationFailure, EllipticityConstants, Violation};
pub use law::{BulkLaw, Pchip, PressureLaw, ViscosityLaw};
pub use stress::{
    coercivity_gap, coercivity_gap_with, dissipation_potential, div_stress, div_stress_direct,
    stress, stress_field, stress_power,
};
pub(crate) use stress::{div_stress_unchecked, StressKernel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar viscosity functions entering the stress.
pub trait Rheology: Sync + Send {
    fn mu(&self, s: f64) -> f64;
    fn mu_prime(&self, s: f64) -> f64;
    fn lambda(&self, r: f64) -> f64;
    fn lambda_prime(&self, r: f64) -> f64;
}

impl Rheology for ConstitutiveLaw {
    fn mu(&self, s: f64) -> f64 {
        self.mu.mu(s)
    }
    fn mu_prime(&self, s: f64) -> f64 {
        self.mu.mu_prime(s)
    }
    fn lambda(&self, r: f64) -> f64 {
        self.lambda.lambda(r)
    }
    fn lambda_prime(&self, r: f64) -> f64 {
        self.lambda.lambda_prime(r)
    }
}

/// Default number of uniform samples per axis used by [`certify`].
pub const DEFAULT_SAMPLES: usize = 2001;

/// Rectangle `[0, s_max] × [−r_max, r_max]` on which ellipticity is certified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanDomain {
    pub s_max: f64,
    pub r_max: f64,
}

impl Default for ScanDomain {
    fn default() -> Self {
        Self {
            s_max: 25.0,
            r_max: 5.0,
        }
    }
}

/// A viscosity pair together with its certification domain and, once
/// certified, its ellipticity constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveLaw {
    pub mu: ViscosityLaw,
    pub lambda: BulkLaw,
    pub scan: ScanDomain,
    pub eps: Option<EllipticityConstants>,
}

impl ConstitutiveLaw {
    pub fn new(mu: ViscosityLaw, lambda: BulkLaw) -> Self {
        Self {
            mu,
            lambda,
            scan: ScanDomain::default(),
            eps: None,
        }
    }

    pub fn newtonian(mu0: f64, l0: f64) -> Self {
        Self::new(ViscosityLaw::Newtonian { mu0 }, BulkLaw::constant(l0))
    }

    /// `μ(s) = mu0 + k s^m` with constant bulk viscosity.
    pub fn power_law(mu0: f64, k: f64, m: f64, l0: f64) -> Self {
        Self::new(ViscosityLaw::PowerLaw { mu0, k, m }, BulkLaw::constant(l0))
    }

    pub fn p_delta(delta: f64, p: f64, l0: f64) -> Self {
        Self::new(ViscosityLaw::PDelta { delta, p }, BulkLaw::constant(l0))
    }

    pub fn with_scan(mut self, scan: ScanDomain) -> Self {
        self.scan = scan;
        self.eps = None;
        self
    }

    pub fn mu(&self, s: f64) -> f64 {
        self.mu.mu(s)
    }

    pub fn mu_prime(&self, s: f64) -> f64 {
        self.mu.mu_prime(s)
    }

    pub fn lambda(&self, r: f64) -> f64 {
        self.lambda.lambda(r)
    }

    pub fn lambda_prime(&self, r: f64) -> f64 {
        self.lambda.lambda_prime(r)
    }

    /// Parameter checks plus finite-difference consistency of the stored
    /// derivatives on the scan domain.
    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        self.lambda.validate()?;
        let ScanDomain { s_max, r_max } = self.scan;
        if !(s_max > 0.0 && s_max.is_finite() && r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scan domain must be finite and non-degenerate (s_max = {s_max}, r_max = {r_max})"
            )));
        }
        const M: usize = 97;
        for i in 0..=M {
            let s = s_max * i as f64 / M as f64;
            let h = 1e-6 * (1.0 + s);
            let lo = (s - h).max(0.0);
            let fd = (self.mu(s + h) - self.mu(lo)) / (s + h - lo);
            let an = self.mu_prime(s);
            if !fd.is_finite() || !an.is_finite() || (fd - an).abs() > 1e-4 * (1.0 + an.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "mu' inconsistent with mu at s = {s}: stored {an}, finite difference {fd}"
                )));
            }
            let r = -r_max + 2.0 * r_max * i as f64 / M as f64;
            let hr = 1e-6 * (1.0 + r.abs());
            let fd = (self.lambda(r + hr) - self.lambda(r - hr)) / (2.0 * hr);
            let an = self.lambda_prime(r);
            if (fd - an).abs() > 1e-4 * (1.0 + an.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda' inconsistent with lambda at r = {r}: stored {an}, finite difference {fd}"
                )));
            }
        }
        Ok(())
    }

    /// Certifies with [`DEFAULT_SAMPLES`] and stores the constants.
    pub fn certified(mut self) -> Result<Self> {
        self.validate()?;
        let eps =
            certify(&self, DEFAULT_SAMPLES).map_err(|f| Error::Certification(f.to_string()))?;
        self.eps = Some(eps);
        Ok(self)
    }

    /// Stored constants, or a fresh certification if none are stored.
    pub fn constants(&self) -> Result<EllipticityConstants> {
        match self.eps {
            Some(e) => Ok(e),
            None => {
                self.validate()?;
                certify(self, DEFAULT_SAMPLES).map_err(|f| Error::Certification(f.to_string()))
            }
        }
    }

    /// Constants computed on the scan domain whether or not they certify.
    pub fn raw_constants(&self) -> EllipticityConstants {
        match certify(self, DEFAULT_SAMPLES) {
            Ok(e) => e,
            Err(f) => f.constants,
        }
    }
}
