//! One linearized Picard stage: transport of the density by a given velocity
//! history and the degenerate momentum solve for the new velocity.

mod momentum;
mod transport;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub(crate) use momentum::momentum_run;
pub use momentum::{linear_viscous, momentum_stage, viscous_force, MomentumStats};
pub(crate) use transport::transport_run;
pub use transport::{transport_rate, transport_stage};

use crate::error::{Error, Result};
use crate::spectral::{Field, Rank, TorusGrid};

/// Time integration controls shared by both stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the explicit stability limit that `dt` may use.
    pub cfl_safety: f64,
    /// Accepted negative density, relative to the initial maximum.
    pub negativity_tol: f64,
    /// Relative residual target of the implicit momentum solve.
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    /// Densities below this count as vacuum in diagnostics.
    pub rho_floor: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 0.1,
            cfl_safety: 0.9,
            negativity_tol: 1e-12,
            pcg_tol: 1e-12,
            pcg_max_iter: 2000,
            rho_floor: 1e-10,
        }
    }
}

impl StepConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    /// Number of steps covering `[0, t_end]`; `t_end` must be a whole
    /// number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be >= 0",
                self.t_end
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(
                "cfl_safety must lie in (0, 1]".into(),
            ));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Snapshots of a field at `t_i = i dt`, `i = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    dt: f64,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn new(dt: f64, states: Vec<Field>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter(
                "a trajectory needs at least one state".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} must be positive"
            )));
        }
        if states.iter().any(|s| !s.same_shape(&states[0])) {
            return Err(Error::ShapeMismatch(
                "trajectory states differ in shape".into(),
            ));
        }
        Ok(Self { dt, states })
    }

    /// `steps + 1` copies of `state`.
    pub fn constant(state: Field, dt: f64, steps: usize) -> Self {
        Self {
            dt,
            states: vec![state; steps + 1],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored snapshots.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn at(&self, i: usize) -> &Field {
        &self.states[i]
    }

    pub fn first(&self) -> &Field {
        &self.states[0]
    }

    pub fn last(&self) -> &Field {
        &self.states[self.states.len() - 1]
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn grid(&self) -> &TorusGrid {
        self.states[0].grid()
    }

    pub fn rank(&self) -> Rank {
        self.states[0].rank()
    }

    /// Keeps snapshots `0..=last`.
    pub fn truncate(&mut self, last: usize) {
        self.states.truncate(last + 1);
    }

    /// Cubic Lagrange interpolation in time through the four nearest
    /// snapshots (fewer when the trajectory is shorter). Exact at nodes.
    pub fn sample(&self, t: f64) -> Field {
        let n = self.states.len();
        let x = t / self.dt;
        let i = x.round();
        if (x - i).abs() < 1e-12 && i >= 0.0 && (i as usize) < n {
            return self.states[i as usize].clone();
        }
        let m = n.min(4);
        let base = (x.floor() as i64 - 1).clamp(0, (n - m) as i64) as usize;
        let mut out = Field::zeros(*self.grid(), self.rank());
        for a in 0..m {
            let xa = (base + a) as f64;
            let mut w = 1.0;
            for b in 0..m {
                if a != b {
                    let xb = (base + b) as f64;
                    w *= (x - xb) / (xa - xb);
                }
            }
            out.axpy(w, &self.states[base + a]);
        }
        out
    }
}

/// Density and velocity at one instant, with the regularization level.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub rho: Field,
    pub u: Field,
    pub t: f64,
    pub delta: f64,
}

/// Time-dependent body force `f(t, x)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Steady(Field),
    /// `f = rate · t · shape`.
    Ramp {
        shape: Field,
        rate: f64,
    },
    Custom(Arc<dyn Fn(f64) -> Field + Send + Sync>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Steady(_) => write!(f, "Steady(..)"),
            Self::Ramp { rate, .. } => write!(f, "Ramp {{ rate: {rate} }}"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Forcing {
    pub fn eval(&self, t: f64, grid: TorusGrid) -> Field {
        match self {
            Self::Zero => Field::zeros(grid, Rank::Vector),
            Self::Steady(f) => f.clone(),
            Self::Ramp { shape, rate } => shape.scaled(rate * t),
            Self::Custom(g) => g(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Same forcing multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Forcing {
        match self {
            Self::Zero => Self::Zero,
            Self::Steady(f) => Self::Steady(f.scaled(factor)),
            Self::Ramp { shape, rate } => Self::Ramp {
                shape: shape.clone(),
                rate: rate * factor,
            },
            Self::Custom(g) => {
                let g = g.clone();
                Self::Custom(Arc::new(move |t| g(t).scaled(factor)))
            }
        }
    }
}

/// `dt · max|w| · n/2`.
pub(crate) fn courant(w: &Field, dt: f64) -> f64 {
    let vmax = w.magnitude().into_iter().fold(0.0, f64::max);
    dt * vmax * (w.grid().n() as f64 / 2.0)
}
