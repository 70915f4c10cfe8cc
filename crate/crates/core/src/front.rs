//! Spreading speeds from direct simulation of the full system.

use crate::error::{domain, numerical, Result};
use crate::evolver::{step_full_system, Boundary, StepperOptions};
use crate::grid::{Field, Grid1D, Tail};
use crate::params::{upper_bound_c0, ChemoParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingOptions {
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot spacing in time.
    pub record_every: f64,
    /// Fit window start; earlier snapshots are transient.
    pub t_burn: f64,
    /// Slack on the global bound `max{sup u0, C0}`.
    pub bound_tol: f64,
}

impl SpreadingOptions {
    /// `T = 60/a`, burn-in `10/a`, `dx ~ 0.1/sqrt(a)`, `dt = 0.02/a` on
    /// `[-W, W]` with `W = 1.2 * 2 sqrt(a) T + 20/sqrt(a)`.
    pub fn for_params(p: &ChemoParams) -> Self {
        Self::with_horizon(p, 60.0 / p.a)
    }

    pub fn with_horizon(p: &ChemoParams, t_end: f64) -> Self {
        let ra = p.a.sqrt();
        let half = 1.2 * 2.0 * ra * t_end + 20.0 / ra;
        let dx = 0.1 / ra;
        let n = (2.0 * half / dx).round() as usize + 1;
        SpreadingOptions {
            grid: Grid1D {
                x_min: -half,
                x_max: half,
                n,
            },
            dt: 0.02 / p.a,
            t_end,
            record_every: 0.5 / p.a,
            t_burn: 10.0 / p.a,
            bound_tol: 1e-8,
        }
    }
}

/// Initial bump `a/b` on `|x| <= 5/sqrt(a)`, zero elsewhere, shifted by `shift`.
pub fn default_bump(p: &ChemoParams, grid: Grid1D, shift: f64) -> Field {
    let w = 5.0 / p.a.sqrt();
    let k = p.carrying_capacity();
    Field {
        grid,
        values: grid.sample(|x| if (x - shift).abs() <= w { k } else { 0.0 }),
        left: Tail::constant(0.0),
        right: Tail::constant(0.0),
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    /// Largest `sup u` seen over all steps.
    pub max_sup: f64,
}

/// Evolves the full system in the lab frame and records snapshots, checking
/// `sup u(t) <= max{sup u0, C0}` after every step.
pub fn simulate_spreading(p: &ChemoParams, u0: &Field, opts: &SpreadingOptions) -> Result<Trajectory> {
    let c0 = upper_bound_c0(p)?;
    if u0.grid != opts.grid {
        return Err(domain("initial datum is not on the configured grid"));
    }
    if u0.values.iter().any(|&v| v < 0.0) {
        return Err(domain("initial datum must be nonnegative"));
    }
    let bound = u0.sup_norm().max(c0) + opts.bound_tol;
    let stepper = StepperOptions {
        dt: opts.dt,
        t_max: opts.t_end.max(opts.dt),
        steady_tol: f64::MIN_POSITIVE,
        blowup_bound: 10.0 * bound,
        monotone_slack: 0.0,
        sandwich_tol: 0.0,
        boundary: Boundary::NEUMANN,
    };
    let steps = (opts.t_end / opts.dt).round() as usize;
    let stride = ((opts.record_every / opts.dt).round() as usize).max(1);
    let mut u = u0.clone();
    let mut times = vec![0.0];
    let mut snapshots = vec![u.clone()];
    let mut max_sup = u.sup_norm();
    for k in 1..=steps {
        u = step_full_system(&u, p, 0.0, &stepper)?;
        let s = u.sup_norm();
        max_sup = max_sup.max(s);
        let t = k as f64 * opts.dt;
        if s > bound {
            return Err(numerical(format!(
                "global bound violated at t = {t:.4}: sup u = {s:.10e} > {bound:.10e}"
            )));
        }
        if k % stride == 0 || k == steps {
            times.push(t);
            snapshots.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        snapshots,
        max_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontStatus {
    Ok,
    /// No point reaches the level (or every point does).
    NoFront,
    /// The level set touches the right end of the grid.
    ReachedEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedMeasurement {
    pub level: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub fitted_speed: f64,
    pub r_squared: f64,
    pub status: FrontStatus,
}

impl SpeedMeasurement {
    /// A measurement is trusted when the front was tracked throughout and the fit has `R^2 >= 0.99`.
    pub fn trusted(&self) -> bool {
        self.status == FrontStatus::Ok && self.r_squared >= 0.99
    }
}

/// Largest `x` with `u(x) >= level`, interpolated linearly to the next node.
pub fn front_position(u: &Field, level: f64) -> std::result::Result<f64, FrontStatus> {
    let v = &u.values;
    let n = v.len();
    let Some(i) = v.iter().rposition(|&x| x >= level) else {
        return Err(FrontStatus::NoFront);
    };
    if i == n - 1 {
        return Err(if v.iter().all(|&x| x >= level) {
            FrontStatus::NoFront
        } else {
            FrontStatus::ReachedEdge
        });
    }
    let t = (v[i] - level) / (v[i] - v[i + 1]);
    Ok(u.grid.x(i) + t * u.grid.dx())
}

/// Least-squares slope of the front position over `fit_window`.
pub fn measure_front_speed(traj: &Trajectory, level: f64, fit_window: (f64, f64)) -> SpeedMeasurement {
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut status = FrontStatus::Ok;
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        if *t < fit_window.0 || *t > fit_window.1 {
            continue;
        }
        match front_position(u, level) {
            Ok(x) => {
                times.push(*t);
                positions.push(x);
            }
            Err(s) => {
                status = s;
                break;
            }
        }
    }
    if status != FrontStatus::Ok || times.len() < 3 {
        if status == FrontStatus::Ok {
            status = FrontStatus::NoFront;
        }
        return SpeedMeasurement {
            level,
            times,
            positions,
            fitted_speed: f64::NAN,
            r_squared: 0.0,
            status,
        };
    }
    let m = times.len() as f64;
    let mt = times.iter().sum::<f64>() / m;
    let mx = positions.iter().sum::<f64>() / m;
    let (mut stt, mut stx, mut sxx) = (0.0, 0.0, 0.0);
    for (t, x) in times.iter().zip(&positions) {
        stt += (t - mt) * (t - mt);
        stx += (t - mt) * (x - mx);
        sxx += (x - mx) * (x - mx);
    }
    let slope = stx / stt;
    let r_squared = if sxx > 0.0 { stx * stx / (stt * sxx) } else { 0.0 };
    SpeedMeasurement {
        level,
        times,
        positions,
        fitted_speed: slope,
        r_squared,
        status,
    }
}

/// Simulates from `u0` and fits the `a/(2b)` level set after the burn-in.
pub fn spreading_speed(p: &ChemoParams, u0: &Field, opts: &SpreadingOptions) -> Result<SpeedMeasurement> {
    let traj = simulate_spreading(p, u0, opts)?;
    Ok(measure_front_speed(
        &traj,
        0.5 * p.carrying_capacity(),
        (opts.t_burn, opts.t_end),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_state_has_no_front() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let mut o = SpreadingOptions::for_params(&p);
        o.t_end = 1.0;
        let u0 = Field::constant(o.grid, 1.0);
        let m = spreading_speed(&p, &u0, &o).unwrap();
        assert_eq!(m.status, FrontStatus::NoFront);
        assert!(!m.trusted());
    }

    #[test]
    fn front_position_interpolates() {
        let g = Grid1D { x_min: 0.0, x_max: 10.0, n: 11 };
        let u = Field {
            grid: g,
            values: (0..11).map(|i| if i <= 4 { 1.0 } else if i == 5 { 0.25 } else { 0.0 }).collect(),
            left: Tail::constant(1.0),
            right: Tail::constant(0.0),
        };
        let x = front_position(&u, 0.5).unwrap();
        assert!((x - (4.0 + 0.5 / 0.75)).abs() < 1e-14);
        assert_eq!(front_position(&u, 2.0), Err(FrontStatus::NoFront));
    }

    #[test]
    fn kpp_front_speed() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let o = SpreadingOptions::for_params(&p);
        let m = spreading_speed(&p, &default_bump(&p, o.grid, 0.0), &o).unwrap();
        assert!(m.trusted());
        assert!((m.fitted_speed - 2.0).abs() < 0.1, "{}", m.fitted_speed);
    }
}
