//! Run summaries and their plain-text rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitors::Verdict;
use crate::scheme::{CauchyRecord, ContinuationReport, DeltaSummary, ResidualReport, TwinReport};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TWIN_FILE: &str = "twin.json";

/// Everything `report` needs from a finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub levels: Vec<DeltaSummary>,
    pub cauchy: Vec<CauchyRecord>,
    pub cauchy_ok: bool,
    pub limit_attained: bool,
    pub final_delta: f64,
    pub final_converged: bool,
    pub final_iterations: usize,
    pub t_star: f64,
    pub threshold: f64,
    pub final_verdict: Verdict,
    pub stop_reason: Option<String>,
    pub residuals: Option<ResidualReport>,
    /// Picard tolerance, used as the floor of the residual comparison.
    pub tol: f64,
}

impl RunSummary {
    pub fn new(rep: &ContinuationReport, residuals: Option<ResidualReport>, tol: f64) -> Self {
        let f = &rep.final_run;
        Self {
            levels: rep.levels.clone(),
            cauchy: rep.cauchy.clone(),
            cauchy_ok: rep.cauchy_ok,
            limit_attained: rep.limit_attained,
            final_delta: f.delta,
            final_converged: f.converged,
            final_iterations: f.iterations(),
            t_star: f.t_star,
            threshold: f.threshold,
            final_verdict: f.verdict,
            stop_reason: f.stop_reason.clone(),
            residuals,
            tol,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged)
    }
}

pub fn render_run(s: &RunSummary) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "delta levels: {}", s.levels.len());
    let _ = writeln!(
        o,
        "{:>12} {:>9} {:>5} {:>10} {:>12} {:>12}",
        "delta", "converged", "k", "T*", "last diff", "Phi_k"
    );
    for l in &s.levels {
        let _ = writeln!(
            o,
            "{:>12.4e} {:>9} {:>5} {:>10.4} {:>12.4e} {:>12.6}",
            l.delta, l.converged, l.iterations, l.t_star, l.final_diff, l.phi_k
        );
    }
    if !s.cauchy.is_empty() {
        let _ = writeln!(o, "\ncross-level differences");
        let _ = writeln!(
            o,
            "{:>12} {:>12} {:>12} {:>12} {:>8}",
            "delta_a", "delta_b", "du_H1", "drho_Lq0", "ratio"
        );
        for c in &s.cauchy {
            let ratio = c.ratio.map_or("-".to_string(), |r| format!("{r:.3}"));
            let _ = writeln!(
                o,
                "{:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>8}",
                c.delta_a, c.delta_b, c.du_h1, c.drho_lq0, ratio
            );
        }
        let _ = writeln!(
            o,
            "Cauchy (ratios <= 1): {}; limit attained: {}",
            s.cauchy_ok, s.limit_attained
        );
    }
    let _ = writeln!(
        o,
        "\nfinal level delta = {:e}: converged {} after {} iterates, T* = {}",
        s.final_delta, s.final_converged, s.final_iterations, s.t_star
    );
    match s.final_verdict {
        Verdict::Healthy => {
            let _ = writeln!(o, "watchdog: healthy (threshold {:.4e})", s.threshold);
        }
        Verdict::Triggered {
            time, last_healthy, ..
        } => {
            let _ = writeln!(
                o,
                "watchdog: TRIGGERED at t = {time} (threshold {:.4e}, last healthy t = {last_healthy})",
                s.threshold
            );
        }
    }
    if let Some(r) = &s.stop_reason {
        let _ = writeln!(o, "horizon shortened: {r}");
    }
    if let Some(r) = &s.residuals {
        let (c, m) = r.excess_over_truncation(s.tol);
        let _ = writeln!(
            o,
            "PDE residuals (relative): continuity {:.3e}, momentum {:.3e}; over 10x time truncation: {c:.3}, {m:.3}",
            r.continuity_relative, r.momentum_relative
        );
    }
    o
}

pub fn render_twin(r: &TwinReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "twin runs up to T* = {}", r.t_star);
    let _ = writeln!(o, "converged: {:?}", r.converged);
    let _ = writeln!(o, "data difference: {:.6e}", r.data_diff);
    let _ = writeln!(
        o,
        "max |du|: {:.6e}, max |drho|: {:.6e}",
        r.max_du, r.max_drho
    );
    match r.ratio {
        Some(x) => {
            let _ = writeln!(o, "divergence ratio: {x:.6}");
        }
        None => {
            let _ = writeln!(o, "identical data; bitwise identical runs: {}", r.identical);
        }
    }
    o
}

/// Text report for the run and/or twin results found in `dir`.
pub fn report_dir(dir: &Path) -> Result<String> {
    let mut out = String::new();
    let summary = dir.join(SUMMARY_FILE);
    let twin = dir.join(TWIN_FILE);
    if summary.exists() {
        let s: RunSummary = serde_json::from_slice(&fs::read(&summary)?)?;
        out.push_str(&render_run(&s));
    }
    if twin.exists() {
        let t: TwinReport = serde_json::from_slice(&fs::read(&twin)?)?;
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&render_twin(&t));
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} holds neither {SUMMARY_FILE} nor {TWIN_FILE}",
            dir.display()
        )));
    }
    Ok(out)
}
