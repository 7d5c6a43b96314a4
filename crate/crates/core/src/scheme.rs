//! The constructive pipeline: regularized data, compatible initial velocity,
//! Picard iteration, δ → 0 continuation and twin runs.

use serde::{Deserialize, Serialize};

use crate::constitutive::{ConstitutiveLaw, PressureLaw};
use crate::elliptic::{self, default_lambda_bar, EllipticOptions};
use crate::error::{Error, Result};
use crate::evolution::{
    momentum_run, transport_rate, transport_run, viscous_force, FluidState, Forcing, StepConfig,
    Trajectory,
};
use crate::exec;
use crate::lame::LameParameter;
use crate::monitors::{
    self, blowup_watchdog, phi_series, third_time_derivative, time_derivative, Verdict,
};
use crate::spectral::{dealias, grad, norm, norms, partials, Field, Rank, Space, TorusGrid};

/// Initial density, compatibility datum, forcing and horizon.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub rho0: Field,
    pub g: Field,
    pub forcing: Forcing,
    /// Integrability exponent of the density gradient.
    pub q: f64,
    pub t_end: f64,
}

impl ProblemData {
    pub fn new(rho0: Field, g: Field, forcing: Forcing, q: f64, t_end: f64) -> Result<Self> {
        let data = Self {
            rho0,
            g,
            forcing,
            q,
            t_end,
        };
        data.validate()?;
        Ok(data)
    }

    /// Data with `ρ₀`, `g = 0`, no forcing.
    pub fn rest(rho0: Field, q: f64, t_end: f64) -> Result<Self> {
        let g = Field::zeros(*rho0.grid(), Rank::Vector);
        Self::new(rho0, g, Forcing::Zero, q, t_end)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho0.grid()
    }

    /// `min(6, q)`.
    pub fn q0(&self) -> f64 {
        self.q.min(6.0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.grid().d();
        if self.rho0.rank() != Rank::Scalar
            || self.g.rank() != Rank::Vector
            || self.g.grid() != self.grid()
        {
            return Err(Error::ShapeMismatch(
                "rho0 must be a scalar and g a vector on one grid".into(),
            ));
        }
        if self.rho0.min_value() < -1e-12 || !self.rho0.is_finite() {
            return Err(Error::InvalidParameter(
                "rho0 must be finite and non-negative".into(),
            ));
        }
        let q_min = if d == 3 { 3.0 } else { d as f64 };
        if !(self.q > q_min) {
            return Err(Error::InvalidParameter(format!(
                "q = {} must exceed {q_min}",
                self.q
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "T = {} must be positive",
                self.t_end
            )));
        }
        Ok(())
    }

    pub fn with_forcing(&self, forcing: Forcing) -> Self {
        Self {
            forcing,
            ..self.clone()
        }
    }
}

/// Controls of the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub dt: f64,
    pub cfl_safety: f64,
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    pub rho_floor: f64,
    pub k_max: usize,
    /// Picard stopping threshold on the combined successive difference.
    pub tol: f64,
    /// δ-continuation differences below this declare the limit attained.
    pub delta_tol: f64,
    pub elliptic: EllipticOptions,
    /// Watchdog level as a multiple of `Φ(0)`.
    pub blowup_factor: f64,
    /// Absolute watchdog level; overrides `blowup_factor`.
    pub blowup_threshold: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let s = StepConfig::default();
        Self {
            dt: s.dt,
            cfl_safety: s.cfl_safety,
            pcg_tol: s.pcg_tol,
            pcg_max_iter: s.pcg_max_iter,
            rho_floor: s.rho_floor,
            k_max: 30,
            tol: 1e-8,
            delta_tol: 1e-4,
            elliptic: EllipticOptions::default(),
            blowup_factor: monitors::DEFAULT_BLOWUP_FACTOR,
            blowup_threshold: None,
        }
    }
}

impl SchemeConfig {
    pub fn step(&self, t_end: f64) -> StepConfig {
        StepConfig {
            dt: self.dt,
            t_end,
            cfl_safety: self.cfl_safety,
            pcg_tol: self.pcg_tol,
            pcg_max_iter: self.pcg_max_iter,
            rho_floor: self.rho_floor,
            ..StepConfig::default()
        }
    }
}

/// Bookkeeping of the initial elliptic solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub delta: f64,
    /// Mean removed from `√ρ₀^δ g − ∇p₀^δ` before the solve.
    pub discarded_mean: Vec<f64>,
    pub rhs_l2: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `(ρ₀ + δ, u₀^δ)` with `−div S u₀^δ = (ρ₀+δ)^{1/2} g − ∇p(ρ₀+δ)`, the right
/// side dealiased and projected to zero mean.
pub fn regularize_and_initialize(
    data: &ProblemData,
    delta: f64,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    opts: &EllipticOptions,
) -> Result<(FluidState, InitReport)> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must be >= 0"
        )));
    }
    data.validate()?;
    let rho = data.rho0.map(|r| r.max(0.0) + delta);
    pressure.validate(rho.max_abs())?;
    let sqrt_rho = rho.map(f64::sqrt);
    let mut rhs = data.g.mul_scalar_field(&sqrt_rho);
    if !pressure.is_constant() {
        let p = dealias(&rho.map(|r| pressure.p(r)));
        rhs = &rhs - &grad(&p)?;
    }
    let mut rhs = dealias(&rhs);
    let discarded_mean = rhs.remove_mean();
    let param = LameParameter::new(default_lambda_bar(law))?;
    let report = elliptic::solve(law, param, &rhs, opts)?;
    let init = InitReport {
        delta,
        discarded_mean,
        rhs_l2: report.f_l2,
        iterations: report.iterations,
        relative_residual: report.relative_residual(),
    };
    let u = report.u.expect("converged solve carries its solution");
    Ok((
        FluidState {
            rho,
            u,
            t: 0.0,
            delta,
        },
        init,
    ))
}

/// Successive-difference record of one Picard iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `sup_t ‖√ρᵏ (uᵏ − u^{k−1})‖_{L²}`.
    pub du: f64,
    /// `sup_t ‖ρᵏ − ρ^{k−1}‖_{L²}`.
    pub drho: f64,
    /// `du + drho`.
    pub diff: f64,
    /// `sup_t Φ` of this iterate.
    pub phi_sup: f64,
    /// `max_{j ≤ k} sup_t Φ` over iterates.
    pub phi_k: f64,
    /// Horizon after this iterate.
    pub t_star: f64,
    pub pcg_max_residual: f64,
    pub pcg_iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub delta: f64,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn diffs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.diff).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Everything carried from one Picard iterate to the next; enough to
/// resume a run exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PicardCheckpoint {
    pub delta: f64,
    pub k: usize,
    pub rho: Trajectory,
    pub u: Trajectory,
    pub trace: IterationTrace,
    pub threshold: f64,
    pub verdict: Verdict,
    pub stop_reason: Option<String>,
    /// Whether the horizon shrank during iterate `k`.
    pub truncated: bool,
}

/// Result of [`picard`]. Non-convergence is reported through `converged`,
/// with the trace kept for diagnosis.
#[derive(Clone, Debug)]
pub struct PicardRun {
    pub delta: f64,
    pub rho: Trajectory,
    pub u: Trajectory,
    pub trace: IterationTrace,
    pub init: InitReport,
    pub converged: bool,
    pub t_star: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    /// Why the horizon was shortened, if it was.
    pub stop_reason: Option<String>,
}

impl PicardRun {
    pub fn iterations(&self) -> usize {
        self.trace.records.len()
    }

    pub fn require_converged(&self, k_max: usize) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::PicardNonConvergence {
                k_max,
                last: self.trace.last().map_or(f64::NAN, |r| r.diff),
            })
        }
    }

    pub fn final_state(&self) -> FluidState {
        FluidState {
            rho: self.rho.last().clone(),
            u: self.u.last().clone(),
            t: self.t_star,
            delta: self.delta,
        }
    }
}

fn sup_differences(
    rho: &Trajectory,
    u: &Trajectory,
    rho_prev: &Trajectory,
    u_prev: &Trajectory,
    steps: usize,
) -> (f64, f64) {
    let idx: Vec<usize> = (0..=steps).collect();
    let pairs = exec::map_items(&idx, |&i| {
        let dv = u.at(i) - u_prev.at(i);
        let w = rho.grid().cell_volume();
        let mags = dv.magnitude();
        let du = (w * rho
            .at(i)
            .values()
            .iter()
            .zip(&mags)
            .map(|(r, m)| r.max(0.0) * m * m)
            .sum::<f64>())
        .sqrt();
        let drho = norms::lq(&(rho.at(i) - rho_prev.at(i)), 2.0);
        (du, drho)
    });
    pairs.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (f64::max(a, x), f64::max(b, y))
    })
}

/// Picard iteration from `u⁰ = 0` for the regularization level `delta`.
pub fn picard(
    data: &ProblemData,
    delta: f64,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    cfg: &SchemeConfig,
) -> Result<PicardRun> {
    picard_with(data, delta, law, pressure, cfg, None, &mut |_| Ok(()))
}

/// [`picard`] with an optional resume point and a callback invoked after
/// every iterate (used for checkpointing).
pub fn picard_with(
    data: &ProblemData,
    delta: f64,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    cfg: &SchemeConfig,
    resume: Option<PicardCheckpoint>,
    on_iterate: &mut dyn FnMut(&PicardCheckpoint) -> Result<()>,
) -> Result<PicardRun> {
    let law = &law.clone().certified()?;
    let (init_state, init) = regularize_and_initialize(data, delta, law, pressure, &cfg.elliptic)?;
    let q0 = data.q0();
    let g = *data.grid();
    let full_steps = cfg.step(data.t_end).steps()?;

    let mut ck = match resume {
        Some(c) => {
            if c.delta != delta {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint is for delta = {}, run asks for {delta}",
                    c.delta
                )));
            }
            c
        }
        None => {
            let threshold = cfg.blowup_threshold.unwrap_or_else(|| {
                monitors::default_threshold(
                    monitors::phi(&init_state.rho, &init_state.u, q0),
                    cfg.blowup_factor,
                )
            });
            PicardCheckpoint {
                delta,
                k: 0,
                rho: Trajectory::constant(init_state.rho.clone(), cfg.dt, full_steps),
                u: Trajectory::constant(Field::zeros(g, Rank::Vector), cfg.dt, full_steps),
                trace: IterationTrace {
                    delta,
                    records: Vec::new(),
                },
                threshold,
                verdict: Verdict::Healthy,
                stop_reason: None,
                truncated: false,
            }
        }
    };

    let converged_at = |c: &PicardCheckpoint| {
        c.k > 0 && !c.truncated && c.trace.last().is_some_and(|r| r.diff < cfg.tol)
    };
    let mut converged = converged_at(&ck);
    while !converged && ck.k < cfg.k_max {
        let mut steps = ck.rho.steps();
        let mut truncated = false;
        let step = cfg.step(steps as f64 * cfg.dt);

        let (mut rho_k, err) = transport_run(&init_state.rho, &ck.u, &step)?;
        if let Some(e) = err {
            ck.stop_reason = Some(e.to_string());
            if rho_k.steps() == 0 {
                return Err(e);
            }
            steps = rho_k.steps();
            truncated = true;
        }
        let step = cfg.step(steps as f64 * cfg.dt);
        let (mut u_k, stats, err) = momentum_run(
            law,
            pressure,
            &rho_k,
            &ck.u,
            &init_state.u,
            &data.forcing,
            &step,
        )?;
        if let Some(e) = err {
            ck.stop_reason = Some(e.to_string());
            if u_k.steps() == 0 {
                return Err(e);
            }
            steps = u_k.steps();
            truncated = true;
        }
        rho_k.truncate(steps);
        u_k.truncate(steps);

        let phis = phi_series(&rho_k, &u_k, q0);
        let verdict = blowup_watchdog(&phis, cfg.dt, ck.threshold);
        if let Verdict::Triggered { index, time, .. } = verdict {
            if index == 0 {
                return Err(Error::BlowUp { time: 0.0 });
            }
            ck.stop_reason = Some(format!(
                "watchdog: Phi above {:e} at t = {time}",
                ck.threshold
            ));
            ck.verdict = verdict;
            steps = index - 1;
            if steps == 0 {
                return Err(Error::BlowUp { time });
            }
            rho_k.truncate(steps);
            u_k.truncate(steps);
            truncated = true;
        }

        let (du, drho) = sup_differences(&rho_k, &u_k, &ck.rho, &ck.u, steps);
        let phi_sup = phis[..=steps].iter().copied().fold(0.0, f64::max);
        let phi_k = ck.trace.last().map_or(phi_sup, |r| r.phi_k.max(phi_sup));
        ck.k += 1;
        ck.trace.records.push(IterationRecord {
            k: ck.k,
            du,
            drho,
            diff: du + drho,
            phi_sup,
            phi_k,
            t_star: steps as f64 * cfg.dt,
            pcg_max_residual: stats.max_residual(),
            pcg_iterations: stats.pcg_iterations.iter().sum(),
        });
        ck.rho = rho_k;
        ck.u = u_k;
        ck.truncated = truncated;
        on_iterate(&ck)?;
        converged = converged_at(&ck);
    }

    let t_star = ck.rho.t_end();
    Ok(PicardRun {
        delta,
        rho: ck.rho,
        u: ck.u,
        trace: ck.trace,
        init,
        converged,
        t_star,
        threshold: ck.threshold,
        verdict: ck.verdict,
        stop_reason: ck.stop_reason,
    })
}

/// `1e−2, 5e−3, …` halving while above `floor`, ending at `floor`.
pub fn default_delta_schedule(start: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = start;
    while d > floor * (1.0 + 1e-12) {
        out.push(d);
        d *= 0.5;
    }
    out.push(floor);
    out
}

/// Summary of one δ-level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub t_star: f64,
    pub final_diff: f64,
    pub phi_k: f64,
    pub init: InitReport,
}

/// Differences between consecutive δ-levels on their common horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRecord {
    pub delta_a: f64,
    pub delta_b: f64,
    /// `sup_t ‖u^a − u^b‖_{H¹}`.
    pub du_h1: f64,
    /// `sup_t ‖ρ^a − ρ^b‖_{L^{q₀}}`.
    pub drho_lq0: f64,
    /// `sup_t ‖ρ^a − ρ^b‖_{L^∞}`.
    pub drho_linf: f64,
    /// `du_h1 + drho_lq0`.
    pub total: f64,
    /// `total` over the previous record's `total`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ContinuationReport {
    pub levels: Vec<DeltaSummary>,
    pub cauchy: Vec<CauchyRecord>,
    /// Every ratio is at most 1 (halving up to a factor 2).
    pub cauchy_ok: bool,
    /// Last difference below `delta_tol`.
    pub limit_attained: bool,
    /// The run at the smallest δ.
    pub final_run: PicardRun,
}

fn cauchy_record(a: &PicardRun, b: &PicardRun, q0: f64, prev: Option<f64>) -> CauchyRecord {
    let steps = a.u.steps().min(b.u.steps());
    let idx: Vec<usize> = (0..=steps).collect();
    let vals = exec::map_items(&idx, |&i| {
        let du = norm(&(a.u.at(i) - b.u.at(i)), Space::H1);
        let dr = a.rho.at(i) - b.rho.at(i);
        (du, norms::lq(&dr, q0), dr.max_abs())
    });
    let (du_h1, drho_lq0, drho_linf) = vals
        .into_iter()
        .fold((0.0, 0.0, 0.0), |(x, y, z), (p, q, r)| {
            (f64::max(x, p), f64::max(y, q), f64::max(z, r))
        });
    let total = du_h1 + drho_lq0;
    CauchyRecord {
        delta_a: a.delta,
        delta_b: b.delta,
        du_h1,
        drho_lq0,
        drho_linf,
        total,
        ratio: prev.map(|p| {
            if p > 0.0 {
                total / p
            } else if total == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }),
    }
}

/// Runs [`picard`] for every δ of a strictly decreasing schedule (levels in
/// parallel) and reports cross-level differences.
pub fn continuation_in_delta(
    data: &ProblemData,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    cfg: &SchemeConfig,
    schedule: &[f64],
) -> Result<ContinuationReport> {
    if schedule.is_empty()
        || schedule.iter().any(|d| !(*d > 0.0))
        || schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "delta schedule must be positive and strictly decreasing".into(),
        ));
    }
    let law = law.clone().certified()?;
    let runs: Vec<PicardRun> = exec::map_items(schedule, |&d| picard(data, d, &law, pressure, cfg))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(continuation_from_runs(runs, data.q0(), cfg.delta_tol))
}

/// Assembles a [`ContinuationReport`] from runs already ordered by
/// decreasing δ.
///
/// # Panics
///
/// If `runs` is empty.
pub fn continuation_from_runs(runs: Vec<PicardRun>, q0: f64, delta_tol: f64) -> ContinuationReport {
    let mut cauchy: Vec<CauchyRecord> = Vec::new();
    for w in runs.windows(2) {
        let prev = cauchy.last().map(|c| c.total);
        cauchy.push(cauchy_record(&w[0], &w[1], q0, prev));
    }
    let cauchy_ok = cauchy.iter().all(|c| c.ratio.is_none_or(|r| r <= 1.0));
    let limit_attained = cauchy.last().is_some_and(|c| c.total < delta_tol);
    let levels = runs
        .iter()
        .map(|r| DeltaSummary {
            delta: r.delta,
            converged: r.converged,
            iterations: r.iterations(),
            t_star: r.t_star,
            final_diff: r.trace.last().map_or(f64::NAN, |x| x.diff),
            phi_k: r.trace.last().map_or(f64::NAN, |x| x.phi_k),
            init: r.init.clone(),
        })
        .collect();
    let final_run = runs.into_iter().next_back().expect("non-empty schedule");
    ContinuationReport {
        levels,
        cauchy,
        cauchy_ok,
        limit_attained,
        final_run,
    }
}

/// Divergence of two runs with different data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinReport {
    pub times: Vec<f64>,
    /// `‖u_A(t) − u_B(t)‖_{L²}`.
    pub du: Vec<f64>,
    /// `‖ρ_A(t) − ρ_B(t)‖_{L²}`.
    pub drho: Vec<f64>,
    /// `‖ρ₀ᴬ − ρ₀ᴮ‖ + ‖gᴬ − gᴮ‖ + sup_t ‖fᴬ − fᴮ‖`, all in `L²`.
    pub data_diff: f64,
    pub max_du: f64,
    pub max_drho: f64,
    /// `(max_du + max_drho) / data_diff`; absent for identical data.
    pub ratio: Option<f64>,
    /// Trajectories and traces agree bit for bit.
    pub identical: bool,
    pub converged: [bool; 2],
    pub t_star: f64,
}

/// Runs both data sets at regularization `delta` and compares them.
pub fn twin_run(
    a: &ProblemData,
    b: &ProblemData,
    delta: f64,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    cfg: &SchemeConfig,
) -> Result<TwinReport> {
    if a.grid() != b.grid() {
        return Err(Error::ShapeMismatch(
            "twin data live on different grids".into(),
        ));
    }
    let law = law.clone().certified()?;
    let data = [a, b];
    let mut runs = exec::map_items(&data, |d| picard(d, delta, &law, pressure, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rb = runs.pop().expect("two runs");
    let ra = runs.pop().expect("two runs");
    let steps = ra.u.steps().min(rb.u.steps());
    let g = *a.grid();
    let mut times = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    let mut drho = Vec::with_capacity(steps + 1);
    let mut f_diff: f64 = 0.0;
    for i in 0..=steps {
        let t = ra.u.time(i);
        times.push(t);
        du.push(norms::lq(&(ra.u.at(i) - rb.u.at(i)), 2.0));
        drho.push(norms::lq(&(ra.rho.at(i) - rb.rho.at(i)), 2.0));
        f_diff = f_diff.max(norms::lq(
            &(&a.forcing.eval(t, g) - &b.forcing.eval(t, g)),
            2.0,
        ));
    }
    let data_diff = norms::lq(&(&a.rho0 - &b.rho0), 2.0) + norms::lq(&(&a.g - &b.g), 2.0) + f_diff;
    let max_du = du.iter().copied().fold(0.0, f64::max);
    let max_drho = drho.iter().copied().fold(0.0, f64::max);
    let identical = ra.u.states().len() == rb.u.states().len()
        && ra
            .u
            .states()
            .iter()
            .zip(rb.u.states())
            .all(|(x, y)| bit_equal(x, y))
        && ra
            .rho
            .states()
            .iter()
            .zip(rb.rho.states())
            .all(|(x, y)| bit_equal(x, y))
        && ra.trace == rb.trace;
    Ok(TwinReport {
        times,
        du,
        drho,
        data_diff,
        max_du,
        max_drho,
        ratio: (data_diff > 0.0).then(|| (max_du + max_drho) / data_diff),
        identical,
        converged: [ra.converged, rb.converged],
        t_star: ra.t_star.min(rb.t_star),
    })
}

fn bit_equal(a: &Field, b: &Field) -> bool {
    a.same_shape(b)
        && a.components()
            .iter()
            .zip(b.components())
            .all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()))
}

/// Strong-form residuals of both equations along a trajectory, at interior
/// nodes with centered time differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `‖ρ_t + div(ρu)‖_{L²}` per interior node.
    pub continuity: Vec<f64>,
    /// `‖ρ(u_t + u·∇u) − div S u + ∇p − ρf‖_{L²}` per interior node.
    pub momentum: Vec<f64>,
    /// Largest residual over the largest term norm, continuity equation.
    pub continuity_relative: f64,
    /// Same for the momentum equation.
    pub momentum_relative: f64,
    /// Truncation of the centered time difference per node,
    /// `dt²/6 ‖∂³_t ρ‖_{L²}`, estimated from the trajectory itself.
    pub continuity_truncation: Vec<f64>,
    /// `dt²/6 ‖ρ ∂³_t u‖_{L²}` per node.
    pub momentum_truncation: Vec<f64>,
    /// Largest term norm over the nodes, continuity equation.
    pub continuity_scale: f64,
    pub momentum_scale: f64,
}

impl ResidualReport {
    /// Largest ratio of residual to `10 (truncation + tol · scale)` over the
    /// nodes, for continuity and momentum. `scale` is the largest term norm
    /// of the equation, as in the relative residuals.
    pub fn excess_over_truncation(&self, tol: f64) -> (f64, f64) {
        let worst = |res: &[f64], tr: &[f64], scale: f64| {
            res.iter()
                .zip(tr)
                .map(|(r, t)| {
                    if *r == 0.0 {
                        0.0
                    } else {
                        r / (10.0 * (t + tol * scale))
                    }
                })
                .fold(0.0, f64::max)
        };
        (
            worst(
                &self.continuity,
                &self.continuity_truncation,
                self.continuity_scale,
            ),
            worst(
                &self.momentum,
                &self.momentum_truncation,
                self.momentum_scale,
            ),
        )
    }
}

pub fn pde_residuals(
    rho: &Trajectory,
    u: &Trajectory,
    law: &ConstitutiveLaw,
    pressure: &PressureLaw,
    forcing: &Forcing,
) -> Result<ResidualReport> {
    let n = rho.len().min(u.len());
    let g = *rho.grid();
    let d = g.d();
    let idx: Vec<usize> = (1..n.saturating_sub(1)).collect();
    let rows = exec::map_items(&idx, |&i| -> Result<(f64, f64, f64, f64, f64, f64)> {
        let (r, v) = (rho.at(i), u.at(i));
        let rt = time_derivative(rho, i);
        let rate = transport_rate(r, v)?;
        let c_res = norms::lq(&(&rt - &rate), 2.0);
        let c_scale = norms::lq(&rt, 2.0).max(norms::lq(&rate, 2.0));

        let ut = time_derivative(u, i);
        let dv = partials(v);
        let conv_comps = (0..d)
            .map(|a| {
                (0..g.len())
                    .map(|p| {
                        (0..d).map(|j| v.comp(j)[p] * dv[j].comp(a)[p]).sum::<f64>() * r.values()[p]
                    })
                    .collect()
            })
            .collect();
        let conv = dealias(&Field::from_components(g, Rank::Vector, conv_comps)?);
        let mass = ut.mul_scalar_field(r);
        let visc = viscous_force(law, v)?;
        let rf = forcing.eval(i as f64 * u.dt(), g).mul_scalar_field(r);
        let gp = if pressure.is_constant() {
            Field::zeros(g, Rank::Vector)
        } else {
            grad(&dealias(&r.map(|x| pressure.p(x))))?
        };
        let res = &(&(&(&mass + &conv) - &visc) + &gp) - &rf;
        let terms = [&mass, &conv, &visc, &gp, &rf];
        let m_scale = terms.iter().map(|t| norms::lq(t, 2.0)).fold(0.0, f64::max);
        let h = u.dt().powi(2) / 6.0;
        let c_tr = third_time_derivative(rho, i).map_or(0.0, |x| h * norms::lq(&x, 2.0));
        let m_tr =
            third_time_derivative(u, i).map_or(0.0, |x| h * norms::lq(&x.mul_scalar_field(r), 2.0));
        Ok((c_res, c_scale, norms::lq(&res, 2.0), m_scale, c_tr, m_tr))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let continuity: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let momentum: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let rel = |res: &[f64], scale: f64| {
        let m = res.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            0.0
        } else {
            m / scale
        }
    };
    let c_scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let m_scale = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(ResidualReport {
        continuity_relative: rel(&continuity, c_scale),
        momentum_relative: rel(&momentum, m_scale),
        continuity,
        momentum,
        continuity_scale: c_scale,
        momentum_scale: m_scale,
        continuity_truncation: rows.iter().map(|r| r.4).collect(),
        momentum_truncation: rows.iter().map(|r| r.5).collect(),
    })
}
