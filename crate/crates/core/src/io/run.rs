//! Run orchestration on top of [`crate::scheme`]: δ-levels one after the
//! other with a checkpoint after every Picard iterate, then monitor, trace
//! and field output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::fieldfile::{load_trajectory, save_field, save_trajectory, write_atomic};
use super::report::{render_run, render_twin, RunSummary, SUMMARY_FILE, TWIN_FILE};
use crate::error::{Error, Result};
use crate::monitors::{apriori_series, write_csv, Verdict};
use crate::scheme::{
    continuation_from_runs, pde_residuals, picard_with, twin_run, CauchyRecord, IterationTrace,
    PicardCheckpoint, PicardRun, TwinReport,
};

/// Owner of every write into one output directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&p, bytes)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointState {
    delta: f64,
    k: usize,
    dt: f64,
    trace: IterationTrace,
    threshold: f64,
    verdict: Verdict,
    stop_reason: Option<String>,
    truncated: bool,
}

fn level_dir(level: usize) -> String {
    format!("checkpoints/level_{level:02}")
}

/// Stores `ck` as level `level`. Trajectories go to files named after the
/// iterate and `state.json` is replaced last, so an interrupted write
/// leaves the previous checkpoint intact.
pub fn save_checkpoint(dir: &RunDir, level: usize, ck: &PicardCheckpoint) -> Result<()> {
    let base = level_dir(level);
    fs::create_dir_all(dir.path(&base))?;
    let rho = format!("{base}/rho_{:03}.tfld", ck.k);
    let u = format!("{base}/u_{:03}.tfld", ck.k);
    save_trajectory(&dir.path(&rho), &ck.rho, ck.delta)?;
    save_trajectory(&dir.path(&u), &ck.u, ck.delta)?;
    let state = CheckpointState {
        delta: ck.delta,
        k: ck.k,
        dt: ck.u.dt(),
        trace: ck.trace.clone(),
        threshold: ck.threshold,
        verdict: ck.verdict,
        stop_reason: ck.stop_reason.clone(),
        truncated: ck.truncated,
    };
    dir.write(
        &format!("{base}/state.json"),
        &serde_json::to_vec_pretty(&state)?,
    )?;
    if ck.k > 0 {
        for stale in [
            format!("{base}/rho_{:03}.tfld", ck.k - 1),
            format!("{base}/u_{:03}.tfld", ck.k - 1),
        ] {
            let _ = fs::remove_file(dir.path(&stale));
        }
    }
    Ok(())
}

/// The checkpoint of level `level`, if one was written.
pub fn load_checkpoint(root: &Path, level: usize) -> Result<Option<PicardCheckpoint>> {
    let base = root.join(level_dir(level));
    let state_path = base.join("state.json");
    if !state_path.exists() {
        return Ok(None);
    }
    let state: CheckpointState = serde_json::from_slice(&fs::read(&state_path)?)?;
    let (rho, d_rho) = load_trajectory(&base.join(format!("rho_{:03}.tfld", state.k)), state.dt)?;
    let (u, d_u) = load_trajectory(&base.join(format!("u_{:03}.tfld", state.k)), state.dt)?;
    if d_rho.to_bits() != state.delta.to_bits() || d_u.to_bits() != state.delta.to_bits() {
        return Err(Error::FieldFile(format!(
            "checkpoint {} mixes regularization levels",
            base.display()
        )));
    }
    Ok(Some(PicardCheckpoint {
        delta: state.delta,
        k: state.k,
        rho,
        u,
        trace: state.trace,
        threshold: state.threshold,
        verdict: state.verdict,
        stop_reason: state.stop_reason,
        truncated: state.truncated,
    }))
}

/// Output of [`run_pipeline`]. `failed` flags a physics-level failure
/// (a level without convergence or a watchdog trigger); the files are
/// written either way.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub dir: PathBuf,
    pub failed: bool,
}

fn picard_csv(runs: &[PicardRun]) -> String {
    let mut s =
        String::from("delta,k,du,drho,diff,phi_sup,phi_k,t_star,pcg_max_residual,pcg_iterations\n");
    for r in runs {
        for x in &r.trace.records {
            s.push_str(&format!(
                "{:?},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
                r.delta,
                x.k,
                x.du,
                x.drho,
                x.diff,
                x.phi_sup,
                x.phi_k,
                x.t_star,
                x.pcg_max_residual,
                x.pcg_iterations
            ));
        }
    }
    s
}

fn cauchy_csv(rows: &[CauchyRecord]) -> String {
    let mut s = String::from("delta_a,delta_b,du_h1,drho_lq0,drho_linf,total,ratio\n");
    for c in rows {
        let ratio = c.ratio.map_or(String::new(), |r| format!("{r:?}"));
        s.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{ratio}\n",
            c.delta_a, c.delta_b, c.du_h1, c.drho_lq0, c.drho_linf, c.total
        ));
    }
    s
}

/// Runs every δ-level of the schedule and writes the run directory:
///
/// * `config.json`: the validated configuration,
/// * `picard.csv`, `cauchy.csv`: iteration traces and cross-level differences,
/// * `monitors.csv`: monitor series of the smallest δ,
/// * `rho_final.tfld`, `u_final.tfld`: last snapshots of that run,
/// * `summary.json`, `report.txt`,
/// * `checkpoints/`: per-level state after the latest iterate.
///
/// With `resume`, levels restart from their checkpoints.
pub fn run_pipeline(cfg: &RunConfig, out: &Path, resume: bool) -> Result<RunOutcome> {
    let data = cfg.problem()?;
    let law = cfg.law.build().certified()?;
    let dir = RunDir::create(out)?;
    dir.write("config.json", &serde_json::to_vec_pretty(cfg)?)?;

    let mut runs = Vec::with_capacity(cfg.delta_schedule.len());
    for (level, &delta) in cfg.delta_schedule.iter().enumerate() {
        let start = if resume {
            load_checkpoint(dir.root(), level)?
        } else {
            None
        };
        let mut save = |ck: &PicardCheckpoint| save_checkpoint(&dir, level, ck);
        runs.push(picard_with(
            &data,
            delta,
            &law,
            &cfg.pressure,
            &cfg.scheme,
            start,
            &mut save,
        )?);
    }
    dir.write("picard.csv", picard_csv(&runs).as_bytes())?;
    let report = continuation_from_runs(runs, data.q0(), cfg.scheme.delta_tol);
    dir.write("cauchy.csv", cauchy_csv(&report.cauchy).as_bytes())?;

    let fin = &report.final_run;
    let grid = *data.grid();
    let monitors = apriori_series(&fin.rho, &fin.u, data.q0(), &cfg.pressure, |t| {
        data.forcing.eval(t, grid)
    })?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &monitors, fin.threshold)?;
    dir.write("monitors.csv", &csv)?;
    save_field(
        &dir.path("rho_final.tfld"),
        fin.rho.last(),
        fin.t_star,
        fin.delta,
    )?;
    save_field(
        &dir.path("u_final.tfld"),
        fin.u.last(),
        fin.t_star,
        fin.delta,
    )?;

    let residuals = if fin.u.len() >= 3 {
        Some(pde_residuals(
            &fin.rho,
            &fin.u,
            &law,
            &cfg.pressure,
            &data.forcing,
        )?)
    } else {
        None
    };
    let summary = RunSummary::new(&report, residuals, cfg.scheme.tol);
    dir.write(SUMMARY_FILE, &serde_json::to_vec_pretty(&summary)?)?;
    dir.write("report.txt", render_run(&summary).as_bytes())?;
    let failed = !summary.all_converged() || summary.final_verdict.is_triggered();
    Ok(RunOutcome {
        summary,
        dir: dir.root().to_path_buf(),
        failed,
    })
}

/// Runs the configured twin pair and writes `twin.csv`, `twin.json` and
/// `twin_report.txt`.
pub fn run_twin(cfg: &RunConfig, out: &Path) -> Result<(TwinReport, bool)> {
    let a = cfg.problem()?;
    let b = cfg.twin_problem(&a)?;
    let law = cfg.law.build().certified()?;
    let dir = RunDir::create(out)?;
    dir.write("config.json", &serde_json::to_vec_pretty(cfg)?)?;
    let rep = twin_run(&a, &b, cfg.twin_delta(), &law, &cfg.pressure, &cfg.scheme)?;
    let mut s = String::from("t,du,drho\n");
    for i in 0..rep.times.len() {
        s.push_str(&format!(
            "{:?},{:?},{:?}\n",
            rep.times[i], rep.du[i], rep.drho[i]
        ));
    }
    dir.write("twin.csv", s.as_bytes())?;
    dir.write(TWIN_FILE, &serde_json::to_vec_pretty(&rep)?)?;
    dir.write("twin_report.txt", render_twin(&rep).as_bytes())?;
    let failed = !rep.converged.iter().all(|c| *c);
    Ok((rep, failed))
}
