//! Traveling waves as fixed points of `u -> U(.; u)`, the long-time limit of
//! the frozen flow from `U^+`.

use crate::elliptic::{screened_residual, solve_chemicals, Chemicals};
use crate::error::{domain, numerical, precondition, Error, Result};
use crate::evolver::{evolve_to_steady, StepperOptions};
use crate::grid::{Field, Grid1D};
use crate::params::{check_hypothesis_h, compute_mu_star, mu_of_c, upper_bound_c0, ChemoParams};
use crate::params::{DEFAULT_BISECT_TOL, DEFAULT_SCAN_POINTS};
use crate::profiles::EnvelopeParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveOptions {
    pub grid: Grid1D,
    pub stepper: StepperOptions,
    /// Stop when successive iterates differ by less than this in sup norm.
    pub fp_tol: f64,
    pub k_max: usize,
    /// Initial relaxation weight; halved when the iterate distance grows.
    pub omega: f64,
    /// Largest acceptable stationary residual.
    pub residual_bound: f64,
}

impl WaveOptions {
    pub fn for_params(p: &ChemoParams) -> Self {
        let c0 = upper_bound_c0(p).unwrap_or(p.a / p.b);
        WaveOptions {
            grid: Grid1D::default_for(p.a, p.lambda1, p.lambda2),
            stepper: StepperOptions::for_params(p),
            fp_tol: 1e-6 * c0,
            k_max: 200,
            omega: 1.0,
            residual_bound: 1e-4,
        }
    }

    /// Same options on a grid with twice the resolution (nodes nested).
    pub fn refined(&self) -> Self {
        let mut o = *self;
        o.grid.n = 2 * self.grid.n - 1;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    /// Window `[x0, x1]` where `1e-6 C0 <= U <= 1e-2 C0`.
    pub window: (f64, f64),
    /// Min and max of `U(x) exp(sqrt(a) mu x)` on the window.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Least-squares slope of `ln U` on the window.
    pub log_slope: f64,
}

#[derive(Debug, Clone)]
pub struct WaveSolution {
    pub c: f64,
    pub mu: f64,
    pub c_star: f64,
    pub envelope: EnvelopeParams,
    pub u: Field,
    pub v1: Field,
    pub v2: Field,
    /// Sup of the second-difference stationary residual.
    pub residual_sup: f64,
    /// Sup of the fourth-order-stencil stationary residual.
    pub residual4_sup: f64,
    /// Relative residuals of the two elliptic equations.
    pub v_residuals: (f64, f64),
    pub left_value: f64,
    pub tail: TailReport,
    pub iterations: usize,
    pub iterate_distance: f64,
    /// Weighted local norm of the last iterate increment.
    pub iterate_star_distance: f64,
    pub history: Vec<f64>,
}

impl WaveSolution {
    pub fn chemicals(&self, p: &ChemoParams) -> Result<Chemicals> {
        solve_chemicals(&self.u, p)
    }
}

/// Checks the preconditions of the construction and returns `(mu, c*)`.
pub fn wave_preconditions(p: &ChemoParams, c: f64) -> Result<(f64, f64)> {
    p.validate()?;
    let kpp = p.kpp_speed();
    if !(c > kpp) {
        return Err(precondition(format!(
            "c = {c} <= 2 sqrt(a) = {kpp}: no traveling wave with this speed"
        )));
    }
    let mu = mu_of_c(p, c)?;
    check_hypothesis_h(p, mu).require(mu)?;
    let star = compute_mu_star(p, DEFAULT_SCAN_POINTS, DEFAULT_BISECT_TOL)?;
    if !(c > star.c_star) {
        return Err(precondition(format!(
            "c = {c} <= c* = {}: construction needs c > c*",
            star.c_star
        )));
    }
    Ok((mu, star.c_star))
}

/// Builds the wave with speed `c` by successive approximation from `U^+`.
pub fn construct_wave(p: &ChemoParams, c: f64, opts: &WaveOptions) -> Result<WaveSolution> {
    let (mu, _) = wave_preconditions(p, c)?;
    let env = EnvelopeParams::new(p, mu)?;
    let start = env.u_plus_field(opts.grid);
    construct_wave_from(p, c, opts, start)
}

/// Same as [`construct_wave`] with a caller-supplied first iterate, which
/// must lie between the envelopes.
pub fn construct_wave_from(
    p: &ChemoParams,
    c: f64,
    opts: &WaveOptions,
    start: Field,
) -> Result<WaveSolution> {
    let (mu, c_star) = wave_preconditions(p, c)?;
    let env = EnvelopeParams::new(p, mu)?;
    if start.grid != opts.grid {
        return Err(domain("first iterate is not on the configured grid"));
    }
    if !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(domain(format!("omega must be in (0, 1], got {}", opts.omega)));
    }
    let mut u = start;
    let mut omega = opts.omega;
    let mut history = Vec::new();
    for k in 1..=opts.k_max {
        let st = evolve_to_steady(&u, p, c, &env, &opts.stepper)?;
        let mut next = st.field;
        if omega < 1.0 {
            for (n, o) in next.values.iter_mut().zip(&u.values) {
                *n = (1.0 - omega) * o + omega * *n;
            }
        }
        let dist = next.sup_distance(&u);
        let check = env.sandwich(&next, opts.stepper.sandwich_tol);
        if !check.member {
            return Err(numerical(format!(
                "iterate {k} leaves [U-_delta, U+] by {:.3e} at x = {:.6}",
                check.worst_violation, check.location
            )));
        }
        if let Some(&prev) = history.last() {
            if dist > prev && omega > 1.0 / 64.0 {
                omega *= 0.5;
            }
        }
        history.push(dist);
        let step = Field {
            values: next.values.iter().zip(&u.values).map(|(a, b)| a - b).collect(),
            ..next.clone()
        };
        u = next;
        if dist < opts.fp_tol {
            return assemble(p, c, mu, c_star, env, u, k, dist, step.star_norm(), history, opts);
        }
    }
    Err(Error::NonConvergence {
        reason: format!(
            "fixed-point iteration did not reach {:.3e} in {} iterations",
            opts.fp_tol, opts.k_max
        ),
        history,
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    p: &ChemoParams,
    c: f64,
    mu: f64,
    c_star: f64,
    env: EnvelopeParams,
    u: Field,
    iterations: usize,
    dist: f64,
    star: f64,
    history: Vec<f64>,
    opts: &WaveOptions,
) -> Result<WaveSolution> {
    let ch = solve_chemicals(&u, p)?;
    let tail = tail_report(&u, p.a, mu, env.c0)?;
    let v_residuals = (
        screened_residual(&u, &ch.v1, p.lambda1, p.mu1),
        screened_residual(&u, &ch.v2, p.lambda2, p.mu2),
    );
    let mut w = WaveSolution {
        c,
        mu,
        c_star,
        envelope: env,
        left_value: u.values[0],
        u,
        v1: ch.v1,
        v2: ch.v2,
        residual_sup: 0.0,
        residual4_sup: 0.0,
        v_residuals,
        tail,
        iterations,
        iterate_distance: dist,
        iterate_star_distance: star,
        history,
    };
    w.residual_sup = stationary_residual(&w, p)?.sup_norm();
    w.residual4_sup = stationary_residual_fourth_order(&w, p)?.sup_norm();
    if w.residual_sup > opts.residual_bound {
        return Err(numerical(format!(
            "stationary residual {:.3e} exceeds {:.3e}",
            w.residual_sup, opts.residual_bound
        )));
    }
    Ok(w)
}

fn frozen_terms(u: &Field, p: &ChemoParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.chi1 == 0.0 && p.chi2 == 0.0 {
        return Ok((vec![0.0; u.len()], vec![0.0; u.len()]));
    }
    let ch = solve_chemicals(u, p)?;
    Ok((ch.drift(p).values, ch.potential(p).values))
}

/// Pointwise residual of
/// `U'' + (c + d/dx (chi2 V2 - chi1 V1)) U' + (a + chi2 lambda2 V2 - chi1 lambda1 V1 - damping U) U`
/// with second differences; zero at the two end nodes.
pub fn stationary_residual(w: &WaveSolution, p: &ChemoParams) -> Result<Field> {
    residual_with(&w.u, p, w.c, 1)
}

/// As [`stationary_residual`] with five-point fourth-order stencils; zero
/// on the two outermost nodes at each end.
pub fn stationary_residual_fourth_order(w: &WaveSolution, p: &ChemoParams) -> Result<Field> {
    residual_with(&w.u, p, w.c, 2)
}

/// Residual of the stationary wave equation for an arbitrary profile.
pub fn profile_residual(u: &Field, p: &ChemoParams, c: f64) -> Result<Field> {
    residual_with(u, p, c, 1)
}

fn residual_with(u: &Field, p: &ChemoParams, c: f64, half_width: usize) -> Result<Field> {
    let (q, pot) = frozen_terms(u, p)?;
    let h = u.grid.dx();
    let n = u.len();
    let v = &u.values;
    let damp = p.damping();
    let mut r = vec![0.0; n];
    for i in half_width..n - half_width {
        let (d2, d1) = if half_width == 1 {
            (
                (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h),
                (v[i + 1] - v[i - 1]) / (2.0 * h),
            )
        } else {
            (
                (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h * h),
                (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h),
            )
        };
        r[i] = d2 + (c + q[i]) * d1 + (p.a + pot[i] - damp * v[i]) * v[i];
    }
    Ok(Field {
        grid: u.grid,
        values: r,
        left: crate::grid::Tail::constant(0.0),
        right: crate::grid::Tail::constant(0.0),
    })
}

/// Tail ratio and log-slope of a decaying profile on the window where
/// `1e-6 C0 <= U <= 1e-2 C0`.
pub fn tail_report(u: &Field, a: f64, mu: f64, c0: f64) -> Result<TailReport> {
    let sigma = a.sqrt() * mu;
    let (lo, hi) = (1e-6 * c0, 1e-2 * c0);
    let pts: Vec<(f64, f64)> = u
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= lo && v <= hi)
        .map(|(i, &v)| (u.grid.x(i), v))
        .collect();
    if pts.len() < 3 {
        return Err(numerical(
            "tail window 1e-6 C0 <= U <= 1e-2 C0 is empty; grid too small",
        ));
    }
    let mut rmin = f64::INFINITY;
    let mut rmax = f64::NEG_INFINITY;
    for &(x, v) in &pts {
        let r = v * (sigma * x).exp();
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(TailReport {
        window: (pts[0].0, pts[pts.len() - 1].0),
        ratio_min: rmin,
        ratio_max: rmax,
        log_slope: sxy / sxx,
    })
}

/// `tail_report` for a constructed wave.
pub fn tail_diagnostics(w: &WaveSolution) -> Result<TailReport> {
    tail_report(&w.u, w.envelope.a, w.mu, w.envelope.c0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_constant_states() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        for c in [0.0, 3.0] {
            let r = profile_residual(&Field::constant(g, 1.0), &p, c).unwrap();
            assert_eq!(r.sup_norm(), 0.0);
            let r = profile_residual(&Field::zeros(g), &p, c).unwrap();
            assert_eq!(r.sup_norm(), 0.0);
        }
    }

    #[test]
    fn rejects_slow_speeds() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let o = WaveOptions::for_params(&p);
        assert!(matches!(construct_wave(&p, 1.5, &o), Err(Error::Precondition(_))));
        assert!(matches!(construct_wave(&p, 2.0, &o), Err(Error::Precondition(_))));
    }

    #[test]
    fn kpp_wave() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let w = construct_wave(&p, 2.5, &WaveOptions::for_params(&p)).unwrap();
        assert_eq!(w.mu, 0.5);
        assert!(w.residual_sup < 1e-4);
        assert!((w.left_value - 1.0).abs() < 1e-2);
        assert!(w.tail.ratio_min >= 0.9 && w.tail.ratio_max <= 1.1, "{:?}", w.tail);
        assert!((w.tail.log_slope + 0.5).abs() < 0.01);
    }

    #[test]
    fn tail_window_must_exist() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        assert!(tail_report(&Field::constant(g, 1.0), 1.0, 0.5, 1.0).is_err());
    }
}
