use super::{courant, StepConfig, Trajectory};
use crate::error::{Error, Result};
use crate::exec;
use crate::spectral::{dealias_spectrum, partials, Field, Rank, Spectrum};

/// Classical RK4 stability limit on the imaginary axis, `2√2`.
const RK4_IMAG_LIMIT: f64 = 2.8;

/// `∂_t ρ = −(w·∇ρ + ρ div w)`, dealiased.
///
/// Both products are summed in the same pass; with skew-symmetric spectral
/// derivatives the grid sum of the result vanishes to round-off, so the
/// mean density is conserved.
pub fn transport_rate(rho: &Field, w: &Field) -> Result<Field> {
    if rho.rank() != Rank::Scalar || w.rank() != Rank::Vector || rho.grid() != w.grid() {
        return Err(Error::ShapeMismatch(
            "transport needs a scalar density and a vector velocity".into(),
        ));
    }
    let g = *rho.grid();
    let d = g.d();
    let drho = partials(rho);
    let dw: Vec<Field> = (0..d)
        .map(|j| {
            let wj = Field::scalar(g, w.comp(j).to_vec()).expect("component length");
            partials(&wj).swap_remove(j)
        })
        .collect();
    let r = rho.values();
    let vals = exec::map_indexed(g.len(), |p| {
        let mut acc = 0.0;
        for j in 0..d {
            acc += w.comp(j)[p] * drho[j].values()[p] + r[p] * dw[j].values()[p];
        }
        -acc
    });
    let mut spec: Spectrum = Field::scalar(g, vals)?.spectrum();
    dealias_spectrum(&mut spec);
    Ok(spec.to_field())
}

/// Integrates the continuity equation with velocity history `w` from `rho0`
/// over `[0, cfg.t_end]` by RK4, sampling `w` at stage times with cubic
/// interpolation.
///
/// Fails on a CFL violation, on a density below
/// `−negativity_tol · max ρ₀`, or on non-finite values.
pub fn transport_stage(rho0: &Field, w: &Trajectory, cfg: &StepConfig) -> Result<Trajectory> {
    match transport_run(rho0, w, cfg)? {
        (tr, None) => Ok(tr),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`transport_stage`], but a failing step ends the run and is
/// returned alongside the healthy prefix.
pub(crate) fn transport_run(
    rho0: &Field,
    w: &Trajectory,
    cfg: &StepConfig,
) -> Result<(Trajectory, Option<Error>)> {
    let steps = cfg.steps()?;
    if w.steps() < steps || (w.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::ShapeMismatch(format!(
            "velocity history covers {} steps of {}, need {} of {}",
            w.steps(),
            w.dt(),
            steps,
            cfg.dt
        )));
    }
    if rho0.grid() != w.grid() {
        return Err(Error::ShapeMismatch(
            "density and velocity live on different grids".into(),
        ));
    }
    let dt = cfg.dt;
    let floor = -cfg.negativity_tol * rho0.max_abs().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(rho0.clone());
    let mut rho = rho0.clone();
    for n in 0..steps {
        let t = n as f64 * dt;
        let w0 = w.at(n);
        let wh = w.sample(t + 0.5 * dt);
        let w1 = w.at(n + 1);
        for (wi, ti) in [(w0, t), (&wh, t + 0.5 * dt), (w1, t + dt)] {
            let c = courant(wi, dt);
            if !(c <= cfg.cfl_safety * RK4_IMAG_LIMIT) {
                let e = Error::Cfl {
                    time: ti,
                    courant: c,
                    limit: cfg.cfl_safety * RK4_IMAG_LIMIT,
                };
                return Ok((Trajectory::new(dt, out)?, Some(e)));
            }
        }
        let k1 = transport_rate(&rho, w0)?;
        let k2 = transport_rate(&(&rho + &(&k1 * (0.5 * dt))), &wh)?;
        let k3 = transport_rate(&(&rho + &(&k2 * (0.5 * dt))), &wh)?;
        let k4 = transport_rate(&(&rho + &(&k3 * dt)), w1)?;
        rho.axpy(dt / 6.0, &k1);
        rho.axpy(dt / 3.0, &k2);
        rho.axpy(dt / 3.0, &k3);
        rho.axpy(dt / 6.0, &k4);
        if !rho.is_finite() {
            return Ok((
                Trajectory::new(dt, out)?,
                Some(Error::BlowUp { time: t + dt }),
            ));
        }
        let min = rho.min_value();
        if min < floor {
            let e = Error::NegativeDensity { time: t + dt, min };
            return Ok((Trajectory::new(dt, out)?, Some(e)));
        }
        out.push(rho.clone());
    }
    Ok((Trajectory::new(dt, out)?, None))
}
