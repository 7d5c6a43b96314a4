//! `vacflow`: command-line driver.
//!
//! Exit status is 0 on success, 2 when the computation itself fails
//! (certification, non-convergence, watchdog trigger) and 1 on bad input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vacflow::constitutive::{certify, div_stress, DEFAULT_SAMPLES};
use vacflow::elliptic::{default_lambda_bar, solve, verify_h2_estimate, EllipticOptions};
use vacflow::io::{
    law_from_pairs, parse_config, report_dir, run_pipeline, run_twin, RunConfig, OUTPUT_DIR_ENV,
};
use vacflow::lame::{measured_operator_norm, riesz_constants, LameParameter};
use vacflow::random::{random_field, RandomSpec};
use vacflow::spectral::{norms, Field, Rank, TorusGrid};
use vacflow::{exec, Error};

#[derive(Parser)]
#[command(
    name = "vacflow",
    version,
    about = "Compressible shear-dependent flow with vacuum on the flat torus"
)]
struct Cli {
    /// Run kernels sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the ellipticity of a viscosity law.
    Certify {
        #[command(flatten)]
        law: LawArgs,
        /// Samples per axis of the scan.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Solve -div S u = f on the torus and check the H2 estimate.
    Elliptic(EllipticArgs),
    /// Print the Riesz-transform constants of the Lame solver.
    LameConstants {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: usize,
        #[arg(long = "lambda-bar", default_value_t = 0.0, allow_hyphen_values = true)]
        lambda_bar: f64,
        /// Also measure the operator norm on this many random right sides.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the delta-continuation of a configuration.
    Run {
        #[command(flatten)]
        io: RunIo,
        /// Restart every level from its checkpoint.
        #[arg(long)]
        resume: bool,
    },
    /// Run the configuration against a copy with perturbed forcing.
    Twin {
        #[command(flatten)]
        io: RunIo,
    },
    /// Print the report of a finished run directory.
    Report {
        /// Run directory (defaults to $VACFLOW_OUTPUT_DIR).
        dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunIo {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides $VACFLOW_OUTPUT_DIR and the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawKind {
    Newtonian,
    PowerLaw,
    PDelta,
}

#[derive(Args)]
struct LawArgs {
    #[arg(long, value_enum, default_value = "newtonian")]
    law: LawKind,
    #[arg(long, allow_hyphen_values = true)]
    mu0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Exponent of the p-delta law.
    #[arg(long = "p")]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda2: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
}

impl LawArgs {
    fn build(&self) -> vacflow::Result<vacflow::constitutive::ConstitutiveLaw> {
        let kind = match self.law {
            LawKind::Newtonian => "newtonian",
            LawKind::PowerLaw => "power_law",
            LawKind::PDelta => "p_delta",
        };
        let named = [
            ("mu0", self.mu0),
            ("k", self.k),
            ("m", self.m),
            ("delta", self.delta),
            ("p", self.p),
            ("lambda0", self.lambda0),
            ("lambda2", self.lambda2),
            ("s_max", self.s_max),
            ("r_max", self.r_max),
        ];
        let pairs: Vec<(&str, f64)> = named
            .iter()
            .filter_map(|(k, v)| v.map(|v| (*k, v)))
            .collect();
        Ok(law_from_pairs(kind, &pairs)?.build())
    }
}

#[derive(Args)]
struct EllipticArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Right side from u* = (sin x1, 0, 0) and report the error against u*.
    #[arg(long, conflicts_with = "seed")]
    manufactured: bool,
    /// Seed of a random band-limited right side.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    rms: f64,
    #[arg(long, default_value_t = 4)]
    max_mode: usize,
    #[arg(long = "lambda-bar", allow_hyphen_values = true)]
    lambda_bar: Option<f64>,
    #[arg(long, default_value_t = EllipticOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = EllipticOptions::default().max_iter)]
    max_iter: usize,
}

/// A failure together with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_physics() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn physics(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_config(&text)?)
}

fn output_dir(cfg: &RunConfig, flag: &Option<PathBuf>) -> PathBuf {
    flag.clone().unwrap_or_else(|| cfg.resolved_output_dir())
}

fn cmd_certify(law: &LawArgs, samples: usize) -> Result<(), Failure> {
    let law = law.build()?;
    law.validate()?;
    let (eps, verdict) = match certify(&law, samples) {
        Ok(e) => (e, None),
        Err(f) => (f.constants, Some(f.to_string())),
    };
    println!("eps_mu_1 = {}", eps.eps_mu_1);
    println!("eps_mu_2 = {}", eps.eps_mu_2);
    println!("eps_lambda_1 = {}", eps.eps_lambda_1);
    println!("eps_lambda_2 = {}", eps.eps_lambda_2);
    println!("eps_mu = {}", eps.eps_mu);
    println!("witnesses = {:?}", eps.witnesses);
    println!(
        "domain = s in [0, {}], r in [-{}, {}]",
        eps.domain.s_max, eps.domain.r_max, eps.domain.r_max
    );
    match verdict {
        None => {
            println!("certified = true");
            Ok(())
        }
        Some(v) => {
            println!("certified = false");
            Err(physics(v))
        }
    }
}

fn cmd_elliptic(a: &EllipticArgs) -> Result<(), Failure> {
    let law = a.law.build()?.certified()?;
    let grid = TorusGrid::new(a.d, a.n)?;
    let (f, exact) = if a.manufactured || a.seed.is_none() {
        let u = Field::vector_from_fn(grid, |x| [x[0].sin(), 0.0, 0.0]);
        (div_stress(&law, &u)?.scaled(-1.0), Some(u))
    } else {
        let spec = RandomSpec::band(a.max_mode).with_rms(a.rms);
        (
            random_field(grid, Rank::Vector, &spec, a.seed.unwrap_or(0), 0),
            None,
        )
    };
    let param = LameParameter::new(a.lambda_bar.unwrap_or_else(|| default_lambda_bar(&law)))?;
    let opts = EllipticOptions {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let mut report = solve(&law, param, &f, &opts)?;
    let h2 = verify_h2_estimate(&law, &f, &report)?;
    let error = exact.as_ref().map(|e| {
        let u = report.solution();
        norms::lq(&(u - e), 2.0) / norms::lq(e, 2.0)
    });
    report.estimate_checks.push(h2);
    let out = json!({
        "d": a.d,
        "n": a.n,
        "law": law,
        "report": report,
        "manufactured_relative_error": error,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable report")
    );
    Ok(())
}

fn cmd_lame(
    p: f64,
    d: usize,
    lambda_bar: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<(), Failure> {
    let param = LameParameter::new(lambda_bar)?;
    let c = riesz_constants(p, d, param)?;
    println!("p = {p}");
    println!("d = {d}");
    println!("lambda_bar = {lambda_bar}");
    println!("C1 = {}", c.c1);
    println!("C2 = {}", c.c2);
    println!("C_total = {}", c.c_total);
    if trials > 0 {
        let m = measured_operator_norm(param, p, d, n, trials, seed)?;
        println!("measured_hessian_ratio = {m}");
        println!("within_C1 = {}", m <= c.c1);
    }
    Ok(())
}

fn cmd_run(io: &RunIo, resume: bool) -> Result<(), Failure> {
    let cfg = load_config(&io.config)?;
    let dir = output_dir(&cfg, &io.output_dir);
    let out = run_pipeline(&cfg, &dir, resume)?;
    print!(
        "{}",
        std::fs::read_to_string(out.dir.join("report.txt")).unwrap_or_default()
    );
    if out.failed {
        return Err(physics("run did not converge or the watchdog triggered"));
    }
    Ok(())
}

fn cmd_twin(io: &RunIo) -> Result<(), Failure> {
    let cfg = load_config(&io.config)?;
    let dir = output_dir(&cfg, &io.output_dir);
    let (_, failed) = run_twin(&cfg, &dir)?;
    print!(
        "{}",
        std::fs::read_to_string(dir.join("twin_report.txt")).unwrap_or_default()
    );
    if failed {
        return Err(physics("a twin run did not converge"));
    }
    Ok(())
}

fn cmd_report(dir: &Option<PathBuf>) -> Result<(), Failure> {
    let dir = match dir {
        Some(d) => d.clone(),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| Failure {
                code: 1,
                message: format!("no run directory given and {OUTPUT_DIR_ENV} is unset"),
            })?,
    };
    print!("{}", report_dir(&dir)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.sequential {
        exec::set_parallel(false);
    }
    let result = match &cli.command {
        Command::Certify { law, samples } => cmd_certify(law, *samples),
        Command::Elliptic(a) => cmd_elliptic(a),
        Command::LameConstants {
            p,
            d,
            lambda_bar,
            trials,
            n,
            seed,
        } => cmd_lame(*p, *d, *lambda_bar, *trials, *n, *seed),
        Command::Run { io, resume } => cmd_run(io, *resume),
        Command::Twin { io } => cmd_twin(io),
        Command::Report { dir } => cmd_report(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
