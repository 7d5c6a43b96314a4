use std::fs;

use vacflow::io::{load_field, parse_config, run_pipeline, RunConfig};

const SMALL: &str = r#"
seed = 11

[grid]
d = 2
n = 16

[law]
kind = "power_law"
mu0 = 1.0
k = 0.1
m = 1.0

[pressure]
kind = "linear"
a = 1.0

[data]
t_end = 0.1
rho0 = { kind = "random", mean = 1.0, rms = 0.2, max_mode = 2 }
g = { kind = "random", rms = 0.3, max_mode = 2 }

[scheme]
dt = 0.01
tol = 1e-10
delta_schedule = [1e-2, 5e-3]
"#;

fn config(text: &str) -> RunConfig {
    parse_config(text).unwrap()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let cfg = config(SMALL);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&cfg, a.path(), false).unwrap();
    run_pipeline(&cfg, b.path(), false).unwrap();
    for name in [
        "monitors.csv",
        "picard.csv",
        "cauchy.csv",
        "summary.json",
        "u_final.tfld",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
}

#[test]
fn resumed_run_reproduces_the_uninterrupted_trace() {
    let full = config(SMALL);
    let whole = tempfile::tempdir().unwrap();
    let reference = run_pipeline(&full, whole.path(), false).unwrap();
    assert!(reference.summary.levels.iter().all(|l| l.iterations > 2));

    // stop every level after two iterates, then continue from the checkpoints
    let mut short = full.clone();
    short.scheme.k_max = 2;
    let split = tempfile::tempdir().unwrap();
    let first = run_pipeline(&short, split.path(), false).unwrap();
    assert!(!first.summary.final_converged && first.failed);
    let resumed = run_pipeline(&full, split.path(), true).unwrap();

    assert_eq!(resumed.summary, reference.summary);
    for name in ["picard.csv", "monitors.csv", "rho_final.tfld"] {
        assert_eq!(
            fs::read(whole.path().join(name)).unwrap(),
            fs::read(split.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn rest_run_has_zero_velocity_columns() {
    let cfg = config("[grid]\nd = 2\nn = 8\n[data]\nt_end = 0.05\n");
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&cfg, dir.path(), false).unwrap();
    assert!(!out.failed);
    let csv = fs::read_to_string(dir.path().join("monitors.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let zero_cols = [
        "kinetic_energy",
        "u_h1",
        "u_h2",
        "grad_u_l2_sq",
        "sqrt_rho_ut",
        "ut_h1",
    ];
    let idx: Vec<usize> = zero_cols
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    let mut rows = 0;
    for line in lines {
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(idx.iter().all(|&i| vals[i] == 0.0), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 6);
    let u = load_field(&dir.path().join("u_final.tfld")).unwrap();
    assert_eq!(u.field.max_abs(), 0.0);
    assert_eq!(u.time, 0.05);
}

#[test]
fn uncertifiable_law_is_a_physics_failure() {
    let cfg = config("[law]\nkind = \"newtonian\"\nlambda0 = -1.0\n");
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&cfg, dir.path(), false).unwrap_err();
    assert!(err.is_physics(), "{err}");
}
