//! Run configuration: a TOML document with dotted sections, validated in one
//! pass so that every problem is reported at once.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [grid]
//! d = 2
//! n = 32
//!
//! [law]
//! kind = "power_law"    # newtonian | power_law | p_delta | tabulated
//! mu0 = 1.0
//! k = 0.1
//! m = 1.0
//!
//! [pressure]
//! kind = "linear"       # constant | linear | polytropic
//! a = 1.0
//!
//! [data]
//! q = 4.0
//! t_end = 0.1
//! rho0 = { kind = "bump", power = 8 }
//! g = { kind = "mode", component = 1, wavevector = [0, 1, 0], amplitude = 0.5 }
//!
//! [scheme]
//! dt = 0.01
//! delta_schedule = [1e-2, 1e-3]
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::constitutive::{BulkLaw, ConstitutiveLaw, Pchip, PressureLaw, ScanDomain, ViscosityLaw};
use crate::elliptic::EllipticOptions;
use crate::error::{Error, Result};
use crate::evolution::Forcing;
use crate::random::{random_field, RandomSpec};
use crate::scheme::{default_delta_schedule, ProblemData, SchemeConfig};
use crate::spectral::{Field, Rank, TorusGrid};

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "VACFLOW_OUTPUT_DIR";

/// Random streams used for the data presets, one per field.
const STREAM_RHO0: u64 = 1;
const STREAM_G: u64 = 2;
const STREAM_F: u64 = 3;
const STREAM_TWIN: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
}

/// Viscosity pair and the rectangle it is certified on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    pub mu: ViscosityLaw,
    pub lambda: BulkLaw,
    pub scan: ScanDomain,
}

impl LawSpec {
    pub fn build(&self) -> ConstitutiveLaw {
        ConstitutiveLaw::new(self.mu.clone(), self.lambda).with_scan(self.scan)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    /// `amplitude · max(0, sin x₁)^power`: vacuum on half the torus.
    Bump {
        amplitude: f64,
        power: u32,
    },
    /// `mean` plus a random zero-mean band-limited field of RMS `rms`.
    Random {
        mean: f64,
        rms: f64,
        max_mode: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    Sin,
    Cos,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorSpec {
    Zero,
    /// `amplitude · wave(k·x)` in one component.
    Mode {
        component: usize,
        wavevector: [i64; 3],
        amplitude: f64,
        wave: Wave,
    },
    Random {
        rms: f64,
        max_mode: usize,
    },
}

impl VectorSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn build(&self, grid: TorusGrid, seed: u64, stream: u64) -> Field {
        match *self {
            Self::Zero => Field::zeros(grid, Rank::Vector),
            Self::Mode {
                component,
                wavevector: k,
                amplitude,
                wave,
            } => Field::vector_from_fn(grid, |x| {
                let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                let v = amplitude
                    * match wave {
                        Wave::Sin => phase.sin(),
                        Wave::Cos => phase.cos(),
                    };
                let mut out = [0.0; 3];
                out[component] = v;
                out
            }),
            Self::Random { rms, max_mode } => random_field(
                grid,
                Rank::Vector,
                &RandomSpec::band(max_mode).with_rms(rms),
                seed,
                stream,
            ),
        }
    }
}

/// Body force: a vector preset, constant in time or ramped as `rate · t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub shape: VectorSpec,
    pub ramp_rate: Option<f64>,
}

impl ForcingSpec {
    pub fn build(&self, grid: TorusGrid, seed: u64, stream: u64) -> Forcing {
        if self.shape.is_zero() {
            return Forcing::Zero;
        }
        let shape = self.shape.build(grid, seed, stream);
        match self.ramp_rate {
            Some(rate) => Forcing::Ramp { shape, rate },
            None => Forcing::Steady(shape),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub q: f64,
    pub t_end: f64,
    pub rho0: DensitySpec,
    pub g: VectorSpec,
    pub f: ForcingSpec,
}

/// Second run of `twin`: the base forcing plus `epsilon · h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinSpec {
    pub epsilon: f64,
    pub h: VectorSpec,
    /// Regularization level; defaults to the last entry of the schedule.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridSpec,
    pub law: LawSpec,
    pub pressure: PressureLaw,
    pub data: DataSpec,
    pub scheme: SchemeConfig,
    /// Regularization levels, strictly decreasing and non-negative.
    pub delta_schedule: Vec<f64>,
    pub twin: TwinSpec,
}

impl RunConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.d, self.grid.n)
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }

    pub fn problem(&self) -> Result<ProblemData> {
        let grid = self.grid()?;
        let rho0 = match self.data.rho0 {
            DensitySpec::Constant { value } => Field::constant_scalar(grid, value),
            DensitySpec::Bump { amplitude, power } => {
                Field::scalar_from_fn(grid, |x| amplitude * x[0].sin().max(0.0).powi(power as i32))
            }
            DensitySpec::Random {
                mean,
                rms,
                max_mode,
            } => {
                let r = random_field(
                    grid,
                    Rank::Scalar,
                    &RandomSpec::band(max_mode).with_rms(rms),
                    self.seed,
                    STREAM_RHO0,
                );
                r.map(|v| v + mean)
            }
        };
        if rho0.min_value() < 0.0 {
            return Err(Error::Config(vec![format!(
                "data.rho0: preset reaches {:.3e} < 0; raise the mean or lower the rms",
                rho0.min_value()
            )]));
        }
        self.pressure
            .validate(rho0.max_abs() + self.delta_schedule[0])
            .map_err(|e| Error::Config(vec![format!("pressure: {e}")]))?;
        let g = self.data.g.build(grid, self.seed, STREAM_G);
        let f = self.data.f.build(grid, self.seed, STREAM_F);
        ProblemData::new(rho0, g, f, self.data.q, self.data.t_end)
    }

    /// Data of the second twin: forcing shifted by `epsilon · h` (held
    /// constant in time).
    pub fn twin_problem(&self, base: &ProblemData) -> Result<ProblemData> {
        if self.twin.epsilon == 0.0 {
            return Ok(base.clone());
        }
        let grid = *base.grid();
        let h = self
            .twin
            .h
            .build(grid, self.seed, STREAM_TWIN)
            .scaled(self.twin.epsilon);
        let f = base.forcing.clone();
        let shifted = Forcing::Custom(std::sync::Arc::new(move |t| &f.eval(t, grid) + &h));
        Ok(base.with_forcing(shifted))
    }

    pub fn twin_delta(&self) -> f64 {
        self.twin
            .delta
            .unwrap_or_else(|| *self.delta_schedule.last().expect("validated schedule"))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![format!("malformed document: {}", e.message())])
    })?;
    let mut r = Reader::default();
    let cfg = read_config(&mut r, &table);
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(r.errors))
    }
}

/// Reads a `[law]`-shaped table on its own (used by the CLI flags).
pub fn parse_law_table(table: &Table) -> Result<LawSpec> {
    let mut r = Reader::default();
    let law = read_law(&mut r, table, "law");
    if r.errors.is_empty() {
        Ok(law)
    } else {
        Err(Error::Config(r.errors))
    }
}

/// Law from a kind name and numeric parameters, with the same names,
/// defaults and checks as the `[law]` section.
pub fn law_from_pairs(kind: &str, pairs: &[(&str, f64)]) -> Result<LawSpec> {
    let mut t = Table::new();
    t.insert("kind".into(), Value::String(kind.replace('-', "_")));
    for (k, v) in pairs {
        t.insert((*k).into(), Value::Float(*v));
    }
    parse_law_table(&t)
}

#[derive(Default)]
struct Reader {
    errors: Vec<String>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Reader {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn check(&mut self, ok: bool, path: &str, msg: impl std::fmt::Display) {
        if !ok {
            self.err(path, msg);
        }
    }

    fn unknown(&mut self, t: &Table, path: &str, known: &[&str]) {
        let known: BTreeSet<&str> = known.iter().copied().collect();
        for k in t.keys() {
            if !known.contains(k.as_str()) {
                self.err(&join(path, k), "unknown key");
            }
        }
    }

    fn opt_f64(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        match t.get(key) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(v) => {
                self.err(
                    &join(path, key),
                    format!("expected a number, found {}", v.type_str()),
                );
                None
            }
        }
    }

    fn f64(&mut self, t: &Table, path: &str, key: &str, default: f64) -> f64 {
        self.opt_f64(t, path, key).unwrap_or(default)
    }

    fn int(&mut self, t: &Table, path: &str, key: &str, default: i64) -> i64 {
        match t.get(key) {
            None => default,
            Some(Value::Integer(i)) => *i,
            Some(v) => {
                self.err(
                    &join(path, key),
                    format!("expected an integer, found {}", v.type_str()),
                );
                default
            }
        }
    }

    fn count(&mut self, t: &Table, path: &str, key: &str, default: usize) -> usize {
        let v = self.int(t, path, key, default as i64);
        if v < 0 {
            self.err(&join(path, key), format!("must be >= 0, got {v}"));
            return default;
        }
        v as usize
    }

    fn string(&mut self, t: &Table, path: &str, key: &str) -> Option<String> {
        match t.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => {
                self.err(
                    &join(path, key),
                    format!("expected a string, found {}", v.type_str()),
                );
                None
            }
        }
    }

    fn f64_list(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let p = join(path, key);
        match t.get(key) {
            None => None,
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        _ => self.err(&format!("{p}[{i}]"), "expected a number"),
                    }
                }
                Some(out)
            }
            Some(v) => {
                self.err(&p, format!("expected an array, found {}", v.type_str()));
                None
            }
        }
    }

    /// Sub-table `key`; an empty table when absent.
    fn section<'t>(&mut self, t: &'t Table, path: &str, key: &str) -> Option<&'t Table> {
        match t.get(key) {
            None => None,
            Some(Value::Table(s)) => Some(s),
            Some(v) => {
                self.err(
                    &join(path, key),
                    format!("expected a table, found {}", v.type_str()),
                );
                None
            }
        }
    }
}

fn read_config(r: &mut Reader, t: &Table) -> RunConfig {
    r.unknown(
        t,
        "",
        &[
            "seed",
            "output_dir",
            "grid",
            "law",
            "pressure",
            "data",
            "scheme",
            "monitors",
            "twin",
        ],
    );
    let seed = r.int(t, "", "seed", 0);
    r.check(seed >= 0, "seed", "must be >= 0");
    let output_dir = r
        .string(t, "", "output_dir")
        .unwrap_or_else(|| "vacflow-out".into());
    r.check(!output_dir.is_empty(), "output_dir", "must not be empty");

    let empty = Table::new();
    let grid_t = r.section(t, "", "grid").unwrap_or(&empty);
    r.unknown(grid_t, "grid", &["d", "n"]);
    let grid = GridSpec {
        d: r.count(grid_t, "grid", "d", 2),
        n: r.count(grid_t, "grid", "n", 32),
    };
    let grid_ok = match TorusGrid::new(grid.d, grid.n) {
        Ok(_) => true,
        Err(e) => {
            r.err("grid", e);
            false
        }
    };

    let law_t = r.section(t, "", "law").unwrap_or(&empty);
    let law = read_law(r, law_t, "law");
    let pressure_t = r.section(t, "", "pressure").unwrap_or(&empty);
    let pressure = read_pressure(r, pressure_t, "pressure");
    let data_t = r.section(t, "", "data").unwrap_or(&empty);
    let data = read_data(r, data_t, "data", grid.d, grid_ok);
    let scheme_t = r.section(t, "", "scheme").unwrap_or(&empty);
    let monitors_t = r.section(t, "", "monitors").unwrap_or(&empty);
    let (scheme, delta_schedule) = read_scheme(r, scheme_t, monitors_t, data.t_end);
    let twin_t = r.section(t, "", "twin").unwrap_or(&empty);
    let twin = read_twin(r, twin_t, "twin", grid.d, grid_ok);

    RunConfig {
        seed: seed.max(0) as u64,
        output_dir: PathBuf::from(output_dir),
        grid,
        law,
        pressure,
        data,
        scheme,
        delta_schedule,
        twin,
    }
}

fn read_law(r: &mut Reader, t: &Table, path: &str) -> LawSpec {
    let kind = r
        .string(t, path, "kind")
        .unwrap_or_else(|| "newtonian".into());
    let common = ["kind", "lambda0", "lambda2", "s_max", "r_max"];
    let (mu, extra): (ViscosityLaw, &[&str]) = match kind.as_str() {
        "newtonian" => (
            ViscosityLaw::Newtonian {
                mu0: r.f64(t, path, "mu0", 1.0),
            },
            &["mu0"],
        ),
        "power_law" => (
            ViscosityLaw::PowerLaw {
                mu0: r.f64(t, path, "mu0", 1.0),
                k: r.f64(t, path, "k", 0.0),
                m: r.f64(t, path, "m", 1.0),
            },
            &["mu0", "k", "m"],
        ),
        "p_delta" => (
            ViscosityLaw::PDelta {
                delta: r.f64(t, path, "delta", 0.1),
                p: r.f64(t, path, "p", 4.0),
            },
            &["delta", "p"],
        ),
        "tabulated" => {
            let s = r.f64_list(t, path, "s").unwrap_or_default();
            let m = r.f64_list(t, path, "mu").unwrap_or_default();
            let table = match Pchip::new(s, m) {
                Ok(p) => p,
                Err(e) => {
                    r.err(&join(path, "s"), e);
                    Pchip::new(vec![0.0, 1.0], vec![1.0, 1.0]).expect("constant table")
                }
            };
            (ViscosityLaw::Tabulated(table), &["s", "mu"])
        }
        other => {
            r.err(
                &join(path, "kind"),
                format!("unknown law '{other}' (newtonian, power_law, p_delta, tabulated)"),
            );
            (ViscosityLaw::Newtonian { mu0: 1.0 }, &[])
        }
    };
    let mut known: Vec<&str> = common.to_vec();
    known.extend_from_slice(extra);
    r.unknown(t, path, &known);
    let lambda = BulkLaw {
        l0: r.f64(t, path, "lambda0", 0.0),
        l2: r.f64(t, path, "lambda2", 0.0),
    };
    let defaults = ScanDomain::default();
    let scan = ScanDomain {
        s_max: r.f64(t, path, "s_max", defaults.s_max),
        r_max: r.f64(t, path, "r_max", defaults.r_max),
    };
    let spec = LawSpec { mu, lambda, scan };
    if let Err(e) = spec.build().validate() {
        r.err(path, e);
    }
    spec
}

fn read_pressure(r: &mut Reader, t: &Table, path: &str) -> PressureLaw {
    let kind = r
        .string(t, path, "kind")
        .unwrap_or_else(|| "constant".into());
    let (law, known): (PressureLaw, &[&str]) = match kind.as_str() {
        "constant" => (
            PressureLaw::Constant {
                p0: r.f64(t, path, "p0", 1.0),
            },
            &["kind", "p0"],
        ),
        "linear" => (
            PressureLaw::Linear {
                a: r.f64(t, path, "a", 1.0),
            },
            &["kind", "a"],
        ),
        "polytropic" => (
            PressureLaw::Polytropic {
                a: r.f64(t, path, "a", 1.0),
                gamma: r.f64(t, path, "gamma", 1.4),
            },
            &["kind", "a", "gamma"],
        ),
        other => {
            r.err(
                &join(path, "kind"),
                format!("unknown pressure '{other}' (constant, linear, polytropic)"),
            );
            (PressureLaw::Constant { p0: 1.0 }, &["kind"])
        }
    };
    r.unknown(t, path, known);
    match law {
        PressureLaw::Linear { a } | PressureLaw::Polytropic { a, .. } => {
            r.check(
                a >= 0.0 && a.is_finite(),
                &join(path, "a"),
                "must be finite and >= 0",
            );
        }
        PressureLaw::Constant { p0 } => {
            r.check(p0.is_finite(), &join(path, "p0"), "must be finite")
        }
    }
    if let PressureLaw::Polytropic { gamma, .. } = law {
        r.check(
            gamma >= 1.0,
            &join(path, "gamma"),
            "must be >= 1 (C1 pressure at vacuum)",
        );
    }
    law
}

fn read_density(r: &mut Reader, t: &Table, path: &str) -> DensitySpec {
    let kind = r
        .string(t, path, "kind")
        .unwrap_or_else(|| "constant".into());
    let (spec, known): (DensitySpec, &[&str]) = match kind.as_str() {
        "constant" => (
            DensitySpec::Constant {
                value: r.f64(t, path, "value", 1.0),
            },
            &["kind", "value"],
        ),
        "bump" => {
            let power = r.int(t, path, "power", 8);
            r.check(power >= 1, &join(path, "power"), "must be >= 1");
            (
                DensitySpec::Bump {
                    amplitude: r.f64(t, path, "amplitude", 1.0),
                    power: power.clamp(1, 64) as u32,
                },
                &["kind", "amplitude", "power"],
            )
        }
        "random" => (
            DensitySpec::Random {
                mean: r.f64(t, path, "mean", 1.0),
                rms: r.f64(t, path, "rms", 0.1),
                max_mode: r.count(t, path, "max_mode", 4),
            },
            &["kind", "mean", "rms", "max_mode"],
        ),
        other => {
            r.err(
                &join(path, "kind"),
                format!("unknown density preset '{other}' (constant, bump, random)"),
            );
            (DensitySpec::Constant { value: 1.0 }, &["kind"])
        }
    };
    r.unknown(t, path, known);
    match spec {
        DensitySpec::Constant { value } => r.check(
            value >= 0.0 && value.is_finite(),
            &join(path, "value"),
            "must be finite and >= 0",
        ),
        DensitySpec::Bump { amplitude, .. } => r.check(
            amplitude > 0.0 && amplitude.is_finite(),
            &join(path, "amplitude"),
            "must be finite and > 0",
        ),
        DensitySpec::Random { mean, rms, .. } => {
            r.check(
                mean > 0.0 && mean.is_finite(),
                &join(path, "mean"),
                "must be finite and > 0",
            );
            r.check(
                rms >= 0.0 && rms.is_finite(),
                &join(path, "rms"),
                "must be finite and >= 0",
            );
        }
    }
    spec
}

fn read_vector(r: &mut Reader, t: &Table, path: &str, d: usize, extra: &[&str]) -> VectorSpec {
    let kind = r.string(t, path, "kind").unwrap_or_else(|| "zero".into());
    let (spec, known): (VectorSpec, &[&str]) = match kind.as_str() {
        "zero" => (VectorSpec::Zero, &["kind"]),
        "mode" => {
            let component = r.count(t, path, "component", 0);
            r.check(
                component < d,
                &join(path, "component"),
                format!("must be below d = {d}"),
            );
            let k = r
                .f64_list(t, path, "wavevector")
                .unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
            let mut wavevector = [0i64; 3];
            if k.len() > 3 {
                r.err(&join(path, "wavevector"), "at most three entries");
            }
            for (i, v) in k.iter().take(3).enumerate() {
                if v.fract() != 0.0 {
                    r.err(
                        &format!("{}[{i}]", join(path, "wavevector")),
                        "must be an integer",
                    );
                } else if i >= d && *v != 0.0 {
                    r.err(
                        &format!("{}[{i}]", join(path, "wavevector")),
                        format!("axis {i} does not exist for d = {d}"),
                    );
                }
                wavevector[i] = *v as i64;
            }
            let wave = match r.string(t, path, "wave").as_deref() {
                None | Some("sin") => Wave::Sin,
                Some("cos") => Wave::Cos,
                Some(other) => {
                    r.err(
                        &join(path, "wave"),
                        format!("unknown wave '{other}' (sin, cos)"),
                    );
                    Wave::Sin
                }
            };
            let amplitude = r.f64(t, path, "amplitude", 1.0);
            r.check(
                amplitude.is_finite(),
                &join(path, "amplitude"),
                "must be finite",
            );
            (
                VectorSpec::Mode {
                    component: component.min(2),
                    wavevector,
                    amplitude,
                    wave,
                },
                &["kind", "component", "wavevector", "wave", "amplitude"],
            )
        }
        "random" => {
            let rms = r.f64(t, path, "rms", 0.1);
            r.check(
                rms >= 0.0 && rms.is_finite(),
                &join(path, "rms"),
                "must be finite and >= 0",
            );
            (
                VectorSpec::Random {
                    rms,
                    max_mode: r.count(t, path, "max_mode", 4),
                },
                &["kind", "rms", "max_mode"],
            )
        }
        other => {
            r.err(
                &join(path, "kind"),
                format!("unknown vector preset '{other}' (zero, mode, random)"),
            );
            (VectorSpec::Zero, &["kind"])
        }
    };
    let mut all: Vec<&str> = known.to_vec();
    all.extend_from_slice(extra);
    r.unknown(t, path, &all);
    spec
}

fn read_data(r: &mut Reader, t: &Table, path: &str, d: usize, grid_ok: bool) -> DataSpec {
    r.unknown(t, path, &["q", "t_end", "rho0", "g", "f"]);
    let q = r.f64(t, path, "q", 4.0);
    if grid_ok {
        let q_min = if d == 3 { 3.0 } else { d as f64 };
        r.check(
            q > q_min && q.is_finite(),
            &join(path, "q"),
            format!("q = {q} must exceed {q_min}"),
        );
    }
    let t_end = r.f64(t, path, "t_end", 0.1);
    r.check(
        t_end > 0.0 && t_end.is_finite(),
        &join(path, "t_end"),
        "must be finite and > 0",
    );
    let empty = Table::new();
    let rho0_t = r.section(t, path, "rho0").unwrap_or(&empty);
    let rho0 = read_density(r, rho0_t, &join(path, "rho0"));
    let g_t = r.section(t, path, "g").unwrap_or(&empty);
    let g = read_vector(r, g_t, &join(path, "g"), d, &[]);
    let f_t = r.section(t, path, "f").unwrap_or(&empty);
    let f_path = join(path, "f");
    let shape = read_vector(r, f_t, &f_path, d, &["ramp_rate"]);
    let ramp_rate = r.opt_f64(f_t, &f_path, "ramp_rate");
    if let Some(rate) = ramp_rate {
        r.check(
            rate.is_finite(),
            &join(&f_path, "ramp_rate"),
            "must be finite",
        );
    }
    DataSpec {
        q,
        t_end,
        rho0,
        g,
        f: ForcingSpec { shape, ramp_rate },
    }
}

fn read_scheme(r: &mut Reader, t: &Table, m: &Table, t_end: f64) -> (SchemeConfig, Vec<f64>) {
    let path = "scheme";
    r.unknown(
        t,
        path,
        &[
            "dt",
            "k_max",
            "tol",
            "delta_tol",
            "cfl_safety",
            "pcg_tol",
            "pcg_max_iter",
            "rho_floor",
            "elliptic_tol",
            "elliptic_max_iter",
            "delta_schedule",
            "delta_start",
            "delta_floor",
        ],
    );
    let def = SchemeConfig::default();
    let eo = EllipticOptions::default();
    let mut cfg = SchemeConfig {
        dt: r.f64(t, path, "dt", def.dt),
        k_max: r.count(t, path, "k_max", def.k_max),
        tol: r.f64(t, path, "tol", def.tol),
        delta_tol: r.f64(t, path, "delta_tol", def.delta_tol),
        cfl_safety: r.f64(t, path, "cfl_safety", def.cfl_safety),
        pcg_tol: r.f64(t, path, "pcg_tol", def.pcg_tol),
        pcg_max_iter: r.count(t, path, "pcg_max_iter", def.pcg_max_iter),
        rho_floor: r.f64(t, path, "rho_floor", def.rho_floor),
        elliptic: EllipticOptions {
            tol: r.f64(t, path, "elliptic_tol", eo.tol),
            max_iter: r.count(t, path, "elliptic_max_iter", eo.max_iter),
        },
        ..def
    };
    let positive = |v: f64| v > 0.0 && v.is_finite();
    r.check(
        positive(cfg.dt),
        "scheme.dt",
        format!("dt = {} must be finite and > 0", cfg.dt),
    );
    if positive(cfg.dt) && t_end > 0.0 {
        if let Err(e) = cfg.step(t_end).steps() {
            r.err("scheme.dt", e);
        }
    }
    r.check(cfg.k_max >= 1, "scheme.k_max", "must be >= 1");
    r.check(positive(cfg.tol), "scheme.tol", "must be finite and > 0");
    r.check(
        positive(cfg.delta_tol),
        "scheme.delta_tol",
        "must be finite and > 0",
    );
    r.check(
        cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0,
        "scheme.cfl_safety",
        "must lie in (0, 1]",
    );
    r.check(
        positive(cfg.pcg_tol),
        "scheme.pcg_tol",
        "must be finite and > 0",
    );
    r.check(cfg.pcg_max_iter >= 1, "scheme.pcg_max_iter", "must be >= 1");
    r.check(cfg.rho_floor >= 0.0, "scheme.rho_floor", "must be >= 0");
    r.check(
        positive(cfg.elliptic.tol),
        "scheme.elliptic_tol",
        "must be finite and > 0",
    );
    r.check(
        cfg.elliptic.max_iter >= 1,
        "scheme.elliptic_max_iter",
        "must be >= 1",
    );

    let listed = r.f64_list(t, path, "delta_schedule");
    let start = r.opt_f64(t, path, "delta_start");
    let floor = r.opt_f64(t, path, "delta_floor");
    let schedule = match (listed, start, floor) {
        (Some(list), None, None) => list,
        (None, Some(s), Some(f)) => {
            if positive(s) && positive(f) && f <= s {
                default_delta_schedule(s, f)
            } else {
                r.err(
                    path,
                    "delta_start and delta_floor must be positive with delta_floor <= delta_start",
                );
                vec![0.0]
            }
        }
        (None, None, None) => vec![0.0],
        _ => {
            r.err(
                path,
                "give either delta_schedule or both delta_start and delta_floor",
            );
            vec![0.0]
        }
    };
    if schedule.is_empty() {
        r.err("scheme.delta_schedule", "must not be empty");
    }
    if schedule.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        r.err("scheme.delta_schedule", "entries must be finite and >= 0");
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        r.err("scheme.delta_schedule", "must be strictly decreasing");
    }

    let mpath = "monitors";
    r.unknown(m, mpath, &["blowup_factor", "blowup_threshold"]);
    cfg.blowup_factor = r.f64(m, mpath, "blowup_factor", def.blowup_factor);
    cfg.blowup_threshold = r.opt_f64(m, mpath, "blowup_threshold");
    r.check(
        cfg.blowup_factor > 1.0,
        "monitors.blowup_factor",
        "must exceed 1",
    );
    if let Some(th) = cfg.blowup_threshold {
        r.check(
            th > 1.0 && th.is_finite(),
            "monitors.blowup_threshold",
            "must be finite and exceed 1 (Phi >= 1)",
        );
    }
    let schedule = if schedule.is_empty() {
        vec![0.0]
    } else {
        schedule
    };
    (cfg, schedule)
}

fn read_twin(r: &mut Reader, t: &Table, path: &str, d: usize, grid_ok: bool) -> TwinSpec {
    let epsilon = r.f64(t, path, "epsilon", 1e-3);
    r.check(
        epsilon >= 0.0 && epsilon.is_finite(),
        &join(path, "epsilon"),
        "must be finite and >= 0",
    );
    let delta = r.opt_f64(t, path, "delta");
    if let Some(dl) = delta {
        r.check(
            dl >= 0.0 && dl.is_finite(),
            &join(path, "delta"),
            "must be finite and >= 0",
        );
    }
    let empty = Table::new();
    let h_t = r.section(t, path, "h").unwrap_or(&empty);
    let h = if h_t.is_empty() {
        // shear mode transverse to x₁ when there is a second axis
        let wavevector = if d > 1 && grid_ok {
            [0, 1, 0]
        } else {
            [1, 0, 0]
        };
        VectorSpec::Mode {
            component: 0,
            wavevector,
            amplitude: 1.0,
            wave: Wave::Sin,
        }
    } else {
        read_vector(r, h_t, &join(path, "h"), d, &[])
    };
    r.unknown(t, path, &["epsilon", "delta", "h"]);
    TwinSpec { epsilon, h, delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn empty_document_gets_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.grid, GridSpec { d: 2, n: 32 });
        assert_eq!(c.law.mu, ViscosityLaw::Newtonian { mu0: 1.0 });
        assert_eq!(c.data.rho0, DensitySpec::Constant { value: 1.0 });
        assert!(c.data.g.is_zero() && c.data.f.shape.is_zero());
        assert_eq!(c.delta_schedule, vec![0.0]);
        assert_eq!(c.scheme, SchemeConfig::default());
    }

    #[test]
    fn q_must_exceed_three_in_three_dimensions() {
        let e = errors("[grid]\nd = 3\nn = 8\n[data]\nq = 2.0\n");
        assert!(
            e.iter()
                .any(|m| m.starts_with("data.q") && m.contains("must exceed 3")),
            "{e:?}"
        );
    }

    #[test]
    fn all_violations_are_collected() {
        let e = errors(
            "colour = 1\n[scheme]\ndt = -0.01\nk_max = 0\n[law]\nkind = \"power_law\"\nm = 0.5\nwhat = 2\n",
        );
        for needle in [
            "colour: unknown key",
            "scheme.dt",
            "scheme.k_max",
            "law.what: unknown key",
            "law: invalid parameter",
        ] {
            assert!(
                e.iter().any(|m| m.contains(needle)),
                "missing {needle} in {e:?}"
            );
        }
    }

    #[test]
    fn wrong_types_are_reported_with_paths() {
        let e = errors("[grid]\nn = \"big\"\n[data]\nrho0 = 3\n");
        assert!(
            e.iter()
                .any(|m| m.starts_with("grid.n: expected an integer")),
            "{e:?}"
        );
        assert!(
            e.iter()
                .any(|m| m.starts_with("data.rho0: expected a table")),
            "{e:?}"
        );
    }

    #[test]
    fn t_end_must_be_whole_steps() {
        let e = errors("[data]\nt_end = 0.1\n[scheme]\ndt = 0.03\n");
        assert!(e.iter().any(|m| m.starts_with("scheme.dt")), "{e:?}");
    }

    #[test]
    fn schedule_from_start_and_floor() {
        let c = parse_config("[scheme]\ndelta_start = 1e-2\ndelta_floor = 1e-3\n").unwrap();
        assert_eq!(c.delta_schedule, default_delta_schedule(1e-2, 1e-3));
        let e = errors("[scheme]\ndelta_schedule = [1e-3, 1e-2]\n");
        assert!(e.iter().any(|m| m.contains("strictly decreasing")));
    }

    #[test]
    fn presets_build_problem_data() {
        let c = parse_config(
            r#"
            [grid]
            d = 2
            n = 16
            [data]
            rho0 = { kind = "bump", power = 4 }
            g = { kind = "mode", component = 1, wavevector = [1, 0, 0], amplitude = 0.5 }
            f = { kind = "random", rms = 0.2, max_mode = 3, ramp_rate = 2.0 }
            [scheme]
            delta_schedule = [1e-2]
            "#,
        )
        .unwrap();
        let p = c.problem().unwrap();
        assert!(p.rho0.min_value() >= 0.0);
        assert_eq!(p.rho0.values()[0], 0.0);
        let gx = p.g.comp(1)[p.g.grid().flat_index([4, 0, 0])];
        assert!((gx - 0.5).abs() < 1e-15);
        assert!(matches!(p.forcing, Forcing::Ramp { rate, .. } if rate == 2.0));
    }

    #[test]
    fn negative_random_density_is_rejected() {
        let c =
            parse_config("[data]\nrho0 = { kind = \"random\", mean = 0.1, rms = 1.0 }\n").unwrap();
        assert!(matches!(c.problem(), Err(Error::Config(_))));
    }

    #[test]
    fn law_table_round_trip() {
        let t: Table = "kind = \"p_delta\"\ndelta = 0.2\np = 4\n".parse().unwrap();
        let l = parse_law_table(&t).unwrap();
        assert_eq!(l.mu, ViscosityLaw::PDelta { delta: 0.2, p: 4.0 });
        let same = law_from_pairs("p-delta", &[("delta", 0.2), ("p", 4.0)]).unwrap();
        assert_eq!(same, l);
        assert!(law_from_pairs("newtonian", &[("k", 1.0)]).is_err());
    }
}
