//! Functionals bounded by the a priori estimates, the blow-up watchdog and
//! CSV emission of monitor series.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constitutive::PressureLaw;
use crate::error::Result;
use crate::evolution::{transport_rate, Trajectory};
use crate::spectral::{dealias, grad, norm, norms, partials, Field, Rank, Space};

/// Default trigger level relative to `Φ(0)`.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e3;

/// `1 + ‖ρ‖_{W^{1,q₀}} + ‖u‖_{H¹}`.
pub fn phi(rho: &Field, u: &Field, q0: f64) -> f64 {
    1.0 + norm(rho, Space::W1q(q0)) + norm(u, Space::H1)
}

/// `‖g‖²_{L²}`.
pub fn compatibility_energy(g: &Field) -> f64 {
    norms::lq(g, 2.0).powi(2)
}

/// Time derivative at node `i`: centered in the interior, second-order
/// one-sided at the ends (first order with two nodes, zero with one).
pub fn time_derivative(tr: &Trajectory, i: usize) -> Field {
    let n = tr.len();
    let dt = tr.dt();
    match n {
        1 => Field::zeros(*tr.grid(), tr.rank()),
        2 => (tr.at(1) - tr.at(0)).scaled(1.0 / dt),
        _ if i == 0 => {
            let mut v = tr.at(0).scaled(-1.5);
            v.axpy(2.0, tr.at(1));
            v.axpy(-0.5, tr.at(2));
            v.scaled(1.0 / dt)
        }
        _ if i == n - 1 => {
            let mut v = tr.at(n - 1).scaled(1.5);
            v.axpy(-2.0, tr.at(n - 2));
            v.axpy(0.5, tr.at(n - 3));
            v.scaled(1.0 / dt)
        }
        _ => (tr.at(i + 1) - tr.at(i - 1)).scaled(0.5 / dt),
    }
}

/// Third time derivative at node `i` from a four- or five-point stencil,
/// centered where the neighbours allow it. `None` with fewer than four nodes.
pub fn third_time_derivative(tr: &Trajectory, i: usize) -> Option<Field> {
    let n = tr.len();
    if n < 4 || i >= n {
        return None;
    }
    let dt3 = tr.dt().powi(3);
    let combo = |terms: &[(usize, f64)], scale: f64| {
        let mut v = Field::zeros(*tr.grid(), tr.rank());
        for &(k, c) in terms {
            v.axpy(c, tr.at(k));
        }
        v.scaled(scale / dt3)
    };
    let out = if i >= 2 && i + 2 < n {
        combo(
            &[(i + 2, 1.0), (i + 1, -2.0), (i - 1, 2.0), (i - 2, -1.0)],
            0.5,
        )
    } else if i + 3 < n {
        // forward: nodes i-1..i+2 when i > 0, i..i+3 at the start
        let b = i.saturating_sub(1);
        combo(&[(b + 3, 1.0), (b + 2, -3.0), (b + 1, 3.0), (b, -1.0)], 1.0)
    } else {
        let b = (i + 1).min(n - 1);
        combo(&[(b, 1.0), (b - 1, -3.0), (b - 2, 3.0), (b - 3, -1.0)], 1.0)
    };
    Some(out)
}

/// Every quantity of the a priori bound pattern at one time, plus the
/// blow-up functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AprioriRecord {
    pub t: f64,
    /// `Φ(t)` at this instant.
    pub phi: f64,
    /// `sup_{s ≤ t} Φ(s)`.
    pub phi_sup: f64,
    pub rho_w1q0: f64,
    pub rho_min: f64,
    pub mass: f64,
    pub kinetic_energy: f64,
    pub u_h1: f64,
    pub u_h2: f64,
    pub grad_u_l2_sq: f64,
    /// `∫ ρ |u_t|²`.
    pub rho_ut_sq: f64,
    /// `‖√ρ u_t‖_{L²}`.
    pub sqrt_rho_ut: f64,
    pub rho_t_lq0: f64,
    pub rho_t_l2: f64,
    pub u_w2q0: f64,
    pub ut_h1: f64,
    /// `∫₀ᵗ ‖u‖²_{W^{2,q₀}}`.
    pub int_u_w2q0_sq: f64,
    /// `∫₀ᵗ ‖u_t‖²_{H¹}`.
    pub int_ut_h1_sq: f64,
    /// The functional `I(t)`.
    pub i_functional: f64,
    /// [`elliptic_h2_surrogate`] at this instant.
    pub h2_ratio: f64,
}

/// Record at one instant. `previous` carries the running supremum and the
/// time integrals (trapezoidal rule); `rho_t` is evaluated from the
/// continuity equation with `u` as the transporting velocity.
pub fn apriori_snapshot(
    t: f64,
    rho: &Field,
    u: &Field,
    u_t: &Field,
    q0: f64,
    previous: Option<&AprioriRecord>,
) -> Result<AprioriRecord> {
    let rho_t = transport_rate(rho, u)?;
    let rho_w1q0 = norm(rho, Space::W1q(q0));
    let u_h1 = norm(u, Space::H1);
    let u_h2 = norm(u, Space::H2);
    let rho_ut_sq = weighted_square(rho, u_t);
    let phi_now = 1.0 + rho_w1q0 + u_h1;
    let u_w2q0 = norm(u, Space::W2q(q0));
    let ut_h1 = norm(u_t, Space::H1);
    let (phi_sup, int_w2, int_ut) = match previous {
        None => (phi_now, 0.0, 0.0),
        Some(p) => {
            let h = t - p.t;
            (
                if phi_now.is_finite() {
                    p.phi_sup.max(phi_now)
                } else {
                    f64::INFINITY
                },
                p.int_u_w2q0_sq + 0.5 * h * (p.u_w2q0.powi(2) + u_w2q0.powi(2)),
                p.int_ut_h1_sq + 0.5 * h * (p.ut_h1.powi(2) + ut_h1.powi(2)),
            )
        }
    };
    let rho_t_l2 = norms::lq(&rho_t, 2.0);
    let sqrt_rho_ut = rho_ut_sq.max(0.0).sqrt();
    Ok(AprioriRecord {
        t,
        phi: phi_now,
        phi_sup,
        rho_w1q0,
        rho_min: rho.min_value(),
        mass: rho.integrals()[0],
        kinetic_energy: 0.5 * weighted_square(rho, u),
        u_h1,
        u_h2,
        grad_u_l2_sq: norms::grad_l2(u).powi(2),
        rho_ut_sq,
        sqrt_rho_ut,
        rho_t_lq0: norms::lq(&rho_t, q0),
        rho_t_l2,
        u_w2q0,
        ut_h1,
        int_u_w2q0_sq: int_w2,
        int_ut_h1_sq: int_ut,
        i_functional: 1.0 + rho_w1q0 + rho_t_l2 + u_h2 + sqrt_rho_ut + int_w2 + int_ut,
        h2_ratio: 0.0,
    })
}

/// `∫ ρ |v|²`.
fn weighted_square(rho: &Field, v: &Field) -> f64 {
    let mags = v.magnitude();
    let w = rho.grid().cell_volume();
    w * rho
        .values()
        .iter()
        .zip(&mags)
        .map(|(r, m)| r * m * m)
        .sum::<f64>()
}

/// Empirical elliptic-regularity ratio `‖u‖_{H²} / ‖F‖_{L²}` with
/// `F = ρ f − ρ u_t − ρ (u·∇)u − ∇p(ρ)`; zero when `u` vanishes.
pub fn elliptic_h2_surrogate(
    rho: &Field,
    u: &Field,
    u_t: &Field,
    pressure: &PressureLaw,
    f: &Field,
) -> Result<f64> {
    let h2 = norm(u, Space::H2);
    if h2 == 0.0 {
        return Ok(0.0);
    }
    let g = *u.grid();
    let d = g.d();
    let du = partials(u);
    let r = rho.values();
    let comps = (0..d)
        .map(|i| {
            (0..g.len())
                .map(|p| {
                    let conv: f64 = (0..d).map(|j| u.comp(j)[p] * du[j].comp(i)[p]).sum();
                    r[p] * (f.comp(i)[p] - u_t.comp(i)[p] - conv)
                })
                .collect()
        })
        .collect();
    let mut big_f = Field::from_components(g, Rank::Vector, comps)?;
    if !pressure.is_constant() {
        let p = dealias(&rho.map(|x| pressure.p(x)));
        big_f = &big_f - &grad(&p)?;
    }
    let fl2 = norms::lq(&big_f, 2.0);
    Ok(h2 / (fl2 + 1e-300))
}

/// Monitor series along a trajectory pair. `forcing(t)` supplies `f` for
/// the H² surrogate.
pub fn apriori_series<F>(
    rho: &Trajectory,
    u: &Trajectory,
    q0: f64,
    pressure: &PressureLaw,
    forcing: F,
) -> Result<Vec<AprioriRecord>>
where
    F: Fn(f64) -> Field,
{
    let n = rho.len().min(u.len());
    let mut out: Vec<AprioriRecord> = Vec::with_capacity(n);
    for i in 0..n {
        let t = u.time(i);
        let ut = time_derivative(u, i);
        let mut rec = apriori_snapshot(t, rho.at(i), u.at(i), &ut, q0, out.last())?;
        rec.h2_ratio = elliptic_h2_surrogate(rho.at(i), u.at(i), &ut, pressure, &forcing(t))?;
        out.push(rec);
    }
    Ok(out)
}

/// One point of the blow-up watch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    pub t: f64,
    pub phi: f64,
    pub phi_sup: f64,
    pub i_functional: f64,
    pub threshold: f64,
}

impl BlowupRecord {
    pub fn from_apriori(r: &AprioriRecord, threshold: f64) -> Self {
        Self {
            t: r.t,
            phi: r.phi,
            phi_sup: r.phi_sup,
            i_functional: r.i_functional,
            threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Healthy,
    /// `Φ` first exceeded the threshold (or stopped being finite) at node
    /// `index`, time `time`; `last_healthy` is the previous node's time.
    Triggered {
        index: usize,
        time: f64,
        last_healthy: f64,
    },
}

impl Verdict {
    pub fn is_triggered(&self) -> bool {
        matches!(self, Self::Triggered { .. })
    }
}

/// `factor · Φ(0)`.
pub fn default_threshold(phi0: f64, factor: f64) -> f64 {
    factor * phi0
}

/// Scans a `Φ` series sampled every `dt`.
pub fn blowup_watchdog(phi: &[f64], dt: f64, threshold: f64) -> Verdict {
    for (i, &p) in phi.iter().enumerate() {
        if !p.is_finite() || p > threshold {
            return Verdict::Triggered {
                index: i,
                time: i as f64 * dt,
                last_healthy: (i.max(1) - 1) as f64 * dt,
            };
        }
    }
    Verdict::Healthy
}

/// `Φ` at every node of a trajectory pair.
pub fn phi_series(rho: &Trajectory, u: &Trajectory, q0: f64) -> Vec<f64> {
    (0..rho.len().min(u.len()))
        .map(|i| phi(rho.at(i), u.at(i), q0))
        .collect()
}

/// CSV column names, in the order written by [`write_csv`].
pub const CSV_COLUMNS: [&str; 21] = [
    "t",
    "phi",
    "phi_sup",
    "rho_w1q0",
    "rho_min",
    "mass",
    "kinetic_energy",
    "u_h1",
    "u_h2",
    "grad_u_l2_sq",
    "rho_ut_sq",
    "sqrt_rho_ut",
    "rho_t_lq0",
    "rho_t_l2",
    "u_w2q0",
    "ut_h1",
    "int_u_w2q0_sq",
    "int_ut_h1_sq",
    "i_functional",
    "h2_ratio",
    "threshold",
];

/// One row per record. Floats use the shortest round-trip representation,
/// so identical series give identical bytes.
pub fn write_csv<W: Write>(
    out: &mut W,
    rows: &[AprioriRecord],
    threshold: f64,
) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        let v = [
            r.t,
            r.phi,
            r.phi_sup,
            r.rho_w1q0,
            r.rho_min,
            r.mass,
            r.kinetic_energy,
            r.u_h1,
            r.u_h2,
            r.grad_u_l2_sq,
            r.rho_ut_sq,
            r.sqrt_rho_ut,
            r.rho_t_lq0,
            r.rho_t_l2,
            r.u_w2q0,
            r.ut_h1,
            r.int_u_w2q0_sq,
            r.int_ut_h1_sq,
            r.i_functional,
            r.h2_ratio,
            threshold,
        ];
        let line: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn third_difference_is_exact_for_cubics() {
        let g = TorusGrid::new(1, 4).unwrap();
        let dt = 0.05;
        let c = |t: f64| 2.0 - t + 0.7 * t * t - 1.5 * t * t * t;
        let tr = Trajectory::new(
            dt,
            (0..7)
                .map(|i| Field::constant_scalar(g, c(i as f64 * dt)))
                .collect(),
        )
        .unwrap();
        for i in 0..7 {
            let v = third_time_derivative(&tr, i).unwrap().values()[0];
            assert!((v + 9.0).abs() < 1e-7, "node {i}: {v}");
        }
        let short = Trajectory::new(dt, vec![Field::constant_scalar(g, 1.0); 3]).unwrap();
        assert!(third_time_derivative(&short, 1).is_none());
    }

    #[test]
    fn compatibility_energy_of_sine() {
        let g = TorusGrid::new(3, 8).unwrap();
        let v = Field::vector_from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let e = (2.0 * PI).powi(3) / 2.0;
        assert!((compatibility_energy(&v) - e).abs() < 1e-10 * e);
    }

    #[test]
    fn rest_state_record() {
        let g = TorusGrid::new(2, 8).unwrap();
        let rho = Field::constant_scalar(g, 1.3);
        let z = Field::zeros(g, Rank::Vector);
        let r = apriori_snapshot(0.0, &rho, &z, &z, 4.0, None).unwrap();
        let expect = 1.0 + norm(&rho, Space::W1q(4.0));
        assert_eq!(r.phi, expect);
        assert_eq!(r.u_h2, 0.0);
        assert_eq!(r.rho_t_l2, 0.0);
        assert_eq!(r.i_functional, expect);
        // every Φ term appears in I
        assert!(r.phi <= r.i_functional + 1e-12);
    }

    #[test]
    fn h2_surrogate_single_mode() {
        // u = (sin x₂, 0) steady with f = −div S u = sin x₂ e₁ (μ = 1): no
        // convection, so F = f and the ratio is the symbol (1 + 1 + 1)^{1/2}
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Field::vector_from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let rho = Field::constant_scalar(g, 1.0);
        let z = Field::zeros(g, Rank::Vector);
        let r =
            elliptic_h2_surrogate(&rho, &u, &z, &PressureLaw::Constant { p0: 0.0 }, &u).unwrap();
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
        let zero =
            elliptic_h2_surrogate(&rho, &z, &z, &PressureLaw::Constant { p0: 0.0 }, &z).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn watchdog_verdicts() {
        let phi = [1.0, 2.0, 50.0, 2000.0];
        assert_eq!(blowup_watchdog(&phi, 0.1, f64::INFINITY), Verdict::Healthy);
        match blowup_watchdog(&phi, 0.1, 1000.0) {
            Verdict::Triggered {
                index,
                last_healthy,
                ..
            } => {
                assert_eq!(index, 3);
                assert!((last_healthy - 0.2).abs() < 1e-15);
            }
            v => panic!("{v:?}"),
        }
        assert!(blowup_watchdog(&[1.0, f64::NAN], 0.1, f64::INFINITY).is_triggered());
    }

    #[test]
    fn time_derivative_is_exact_for_quadratics() {
        let g = TorusGrid::new(1, 4).unwrap();
        let p = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t;
        let dp = |t: f64| 2.0 - 6.0 * t;
        let tr = Trajectory::new(
            0.1,
            (0..5)
                .map(|i| Field::constant_scalar(g, p(0.1 * i as f64)))
                .collect(),
        )
        .unwrap();
        for i in 0..5 {
            assert!((time_derivative(&tr, i).values()[0] - dp(0.1 * i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_shape() {
        let rows = vec![AprioriRecord::default(); 3];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, 5.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines
            .iter()
            .all(|l| l.split(',').count() == CSV_COLUMNS.len()));
    }
}
