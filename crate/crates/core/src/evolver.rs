//! Time stepping for the frozen-coefficient equation
//!
//! ```text
//! U_t = U_xx + (c + q) U_x + (a + P - (b + chi2 mu2 - chi1 mu1) U) U
//! ```
//!
//! with `q = d/dx (chi2 V2 - chi1 V1)` and `P = chi2 lambda2 V2 - chi1 lambda1 V1`
//! generated by a fixed density, and for the full system where `V1`, `V2`
//! follow `u` at every step.
//!
//! Diffusion and advection are implicit (central differences, falling back
//! to upwind on cells where the central stencil would lose its sign), the
//! reaction is explicit. The step matrix is then an M-matrix and the step map
//! is order preserving for `dt * (a + |P| + 2 damping sup U) <= 1`.

use crate::elliptic::{combo_drift_and_potential, solve_chemicals};
use crate::error::{domain, numerical, Error, Result};
use crate::grid::{sup_distance, Field, Tail};
use crate::params::{upper_bound_c0, ChemoParams};
use crate::profiles::{EnvelopeParams, Membership};

/// Value used for the ghost node one cell beyond an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ghost {
    /// `edge * exp(-rate * dx)`; rate 0 is a Neumann condition.
    Rate(f64),
    /// A fixed value.
    Value(f64),
}

impl Ghost {
    /// Decay rate used for the tail of the output field.
    fn tail_rate(&self, edge: f64, dx: f64) -> f64 {
        match *self {
            Ghost::Rate(r) => r,
            Ghost::Value(g) if g > 0.0 && edge > 0.0 => (edge / g).ln() / dx,
            Ghost::Value(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub left: Ghost,
    pub right: Ghost,
}

impl Boundary {
    pub const NEUMANN: Boundary = Boundary {
        left: Ghost::Rate(0.0),
        right: Ghost::Rate(0.0),
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop when `sup |U(t+dt) - U(t)| / dt` falls below this.
    pub steady_tol: f64,
    /// Abort when `sup |U|` exceeds this.
    pub blowup_bound: f64,
    /// Allowed pointwise increase per step in the monotone flow.
    pub monotone_slack: f64,
    /// Absolute tolerance of the envelope check.
    pub sandwich_tol: f64,
    pub boundary: Boundary,
}

impl StepperOptions {
    /// `dt = 0.1/a`, `t_max = 200/a`, `steady_tol = 1e-8 C0`, blow-up at `10 C0`.
    pub fn for_params(p: &ChemoParams) -> Self {
        let c0 = upper_bound_c0(p).unwrap_or(p.a / p.b);
        StepperOptions {
            dt: 0.1 / p.a,
            t_max: 200.0 / p.a,
            steady_tol: 1e-8 * c0,
            blowup_bound: 10.0 * c0,
            monotone_slack: 1e-10,
            sandwich_tol: 1e-8,
            boundary: Boundary::NEUMANN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(domain(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= self.dt) {
            return Err(domain("t_max must be at least dt"));
        }
        if !(self.steady_tol > 0.0) {
            return Err(domain("steady_tol must be > 0"));
        }
        Ok(())
    }
}

/// Coefficients of the frozen equation on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenCoefficients {
    pub c: f64,
    /// `c + d/dx (chi2 V2 - chi1 V1)`
    pub drift: Field,
    /// `a + chi2 lambda2 V2 - chi1 lambda1 V1`
    pub potential: Field,
    /// `b + chi2 mu2 - chi1 mu1`
    pub damping: f64,
}

impl FrozenCoefficients {
    pub fn from_density(p: &ChemoParams, c: f64, u: &Field) -> Result<Self> {
        let (q, pot) = combo_drift_and_potential(u, p)?;
        Ok(FrozenCoefficients {
            c,
            drift: q.map(|v| v + c),
            potential: pot.map(|v| v + p.a),
            damping: p.damping(),
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.drift.len() != n || self.potential.len() != n {
            return Err(domain("coefficient fields do not match the grid"));
        }
        if self
            .drift
            .values
            .iter()
            .chain(&self.potential.values)
            .any(|v| !v.is_finite())
        {
            return Err(domain("coefficient fields must be finite"));
        }
        Ok(())
    }
}

/// `I - dt A` in factored (Thomas) form; reused across steps.
#[derive(Debug, Clone)]
pub struct StepMatrix {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_den: Vec<f64>,
    /// Right-hand-side contributions of fixed-value ghosts on rows 0 and n-1.
    ghost_rhs: (f64, f64),
}

impl StepMatrix {
    fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, ghost_rhs: (f64, f64)) -> Result<Self> {
        let n = diag.len();
        let mut c_prime = vec![0.0; n];
        let mut inv_den = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let den = diag[i] - if i > 0 { lower[i] * prev_c } else { 0.0 };
            if !(den > 0.0) {
                return Err(numerical("step matrix lost diagonal dominance"));
            }
            inv_den[i] = 1.0 / den;
            prev_c = if i + 1 < n { upper[i] / den } else { 0.0 };
            c_prime[i] = prev_c;
        }
        Ok(StepMatrix {
            lower,
            c_prime,
            inv_den,
            ghost_rhs,
        })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut d = vec![0.0; n];
        d[0] = (rhs[0] + self.ghost_rhs.0) * self.inv_den[0];
        for i in 1..n {
            let r = if i == n - 1 { rhs[i] + self.ghost_rhs.1 } else { rhs[i] };
            d[i] = (r - self.lower[i] * d[i - 1]) * self.inv_den[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
        d
    }

    /// Builds `I - dt A` for `A U = U'' + beta U' (+ d/dx (q U))`, with
    /// `beta` at the nodes and, for the full system, `q` on the n+1 cell
    /// faces (the two outer faces sit half a cell beyond the grid).
    fn assemble(
        dx: f64,
        dt: f64,
        node_drift: &[f64],
        flux_faces: Option<&[f64]>,
        bc: Boundary,
    ) -> Result<Self> {
        let n = node_drift.len();
        let inv_h2 = 1.0 / (dx * dx);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut ghost_rhs = (0.0, 0.0);
        for i in 0..n {
            // Velocity seen by the i+1 and i-1 neighbours.
            let (b_up, b_dn, d_extra) = match flux_faces {
                None => (node_drift[i], node_drift[i], 0.0),
                Some(f) => {
                    let (qr, ql) = (f[i + 1], f[i]);
                    (node_drift[i] + qr, node_drift[i] + ql, (qr - ql) / (2.0 * dx))
                }
            };
            let mut up = inv_h2 + b_up / (2.0 * dx);
            let mut lo = inv_h2 - b_dn / (2.0 * dx);
            let mut centre = -2.0 * inv_h2 + d_extra;
            if up < 0.0 || lo < 0.0 {
                // Upwind fallback on this row.
                let bu = 0.5 * (b_up + b_dn);
                up = inv_h2 + bu.max(0.0) / dx;
                lo = inv_h2 + (-bu).max(0.0) / dx;
                centre = -2.0 * inv_h2 - bu.abs() / dx + d_extra;
            }
            if i == 0 {
                match bc.left {
                    Ghost::Rate(r) => centre += lo * (-r * dx).exp(),
                    Ghost::Value(g) => ghost_rhs.0 = dt * lo * g,
                }
                lo = 0.0;
            }
            if i == n - 1 {
                match bc.right {
                    Ghost::Rate(r) => centre += up * (-r * dx).exp(),
                    Ghost::Value(g) => ghost_rhs.1 = dt * up * g,
                }
                up = 0.0;
            }
            lower[i] = -dt * lo;
            upper[i] = -dt * up;
            diag[i] = 1.0 - dt * centre;
        }
        Self::new(lower, diag, upper, ghost_rhs)
    }
}

/// Stepper for one frozen equation; the step matrix is factored once.
#[derive(Debug, Clone)]
pub struct FrozenStepper {
    pub coeffs: FrozenCoefficients,
    pub opts: StepperOptions,
    matrix: StepMatrix,
}

impl FrozenStepper {
    pub fn new(coeffs: FrozenCoefficients, opts: StepperOptions) -> Result<Self> {
        opts.validate()?;
        let n = coeffs.drift.len();
        coeffs.validate(n)?;
        let matrix = StepMatrix::assemble(
            coeffs.drift.grid.dx(),
            opts.dt,
            &coeffs.drift.values,
            None,
            opts.boundary,
        )?;
        Ok(FrozenStepper {
            coeffs,
            opts,
            matrix,
        })
    }

    pub fn step_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let dt = self.opts.dt;
        let pot = &self.coeffs.potential.values;
        let damp = self.coeffs.damping;
        let rhs: Vec<f64> = u
            .iter()
            .zip(pot)
            .map(|(&v, &p)| v + dt * (p - damp * v) * v)
            .collect();
        let out = self.matrix.solve(&rhs);
        check_bound(&out, self.opts.blowup_bound)?;
        Ok(out)
    }

    pub fn step(&self, u: &Field) -> Result<Field> {
        if u.len() != self.coeffs.drift.len() {
            return Err(domain("field does not match the coefficient grid"));
        }
        let values = self.step_values(&u.values)?;
        Ok(with_boundary_tails(u, values, self.opts.boundary))
    }
}

fn check_bound(values: &[f64], bound: f64) -> Result<()> {
    let sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !sup.is_finite() || sup > bound {
        return Err(numerical(format!(
            "instability: sup |U| = {sup:.6e} exceeds {bound:.6e}"
        )));
    }
    Ok(())
}

fn with_boundary_tails(u: &Field, values: Vec<f64>, bc: Boundary) -> Field {
    let n = values.len();
    let dx = u.grid.dx();
    Field {
        grid: u.grid,
        left: Tail::exponential(values[0], bc.left.tail_rate(values[0], dx)),
        right: Tail::exponential(values[n - 1], bc.right.tail_rate(values[n - 1], dx)),
        values,
    }
}

/// Boundary for the frozen flow in the wave frame: Neumann on the left, the
/// ghost on the right pinned to the tail `phi_mu(x_max + dx)`.
pub fn wave_frame_boundary(env: &EnvelopeParams, grid: crate::grid::Grid1D) -> Boundary {
    Boundary {
        left: Ghost::Rate(0.0),
        right: Ghost::Value(env.u_plus(grid.x_max + grid.dx())),
    }
}

/// One step of the frozen equation.
pub fn step_frozen(u: &Field, co: &FrozenCoefficients, opts: &StepperOptions) -> Result<Field> {
    if u.values.iter().any(|&v| v < 0.0) {
        return Err(domain("step_frozen needs a nonnegative field"));
    }
    FrozenStepper::new(co.clone(), *opts)?.step(u)
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub field: Field,
    pub time: f64,
    pub steps: usize,
    /// Final `sup |dU| / dt`.
    pub rate: f64,
    /// Largest pointwise increase seen in any step.
    pub max_increase: f64,
    pub sandwich: Membership,
}

/// Long-time limit of the frozen flow started from `U^+`, with coefficients
/// generated by `u_env`. Checks that the flow is nonincreasing and stays
/// between the flattened sub-solution and `U^+`.
pub fn evolve_to_steady(
    u_env: &Field,
    p: &ChemoParams,
    c: f64,
    env: &EnvelopeParams,
    opts: &StepperOptions,
) -> Result<SteadyState> {
    let c_env = p.c_of_mu(env.mu);
    if (c - c_env).abs() > 1e-10 * c_env {
        return Err(domain(format!(
            "speed {c} does not match the envelope rate (c_mu = {c_env})"
        )));
    }
    let memb = env.membership(u_env, opts.sandwich_tol);
    if !memb.member {
        return Err(numerical(format!(
            "input density leaves the envelope band by {:.3e} at x = {:.6}",
            memb.worst_violation, memb.location
        )));
    }
    let co = FrozenCoefficients::from_density(p, c, u_env)?;
    let mut o = *opts;
    o.boundary = wave_frame_boundary(env, u_env.grid);
    let stepper = FrozenStepper::new(co, o)?;
    let start = env.u_plus_field(u_env.grid);
    run_monotone(&stepper, env, start)
}

fn run_monotone(stepper: &FrozenStepper, env: &EnvelopeParams, start: Field) -> Result<SteadyState> {
    let o = stepper.opts;
    let grid = start.grid;
    let mut u = start.values;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut max_increase = f64::NEG_INFINITY;
    let mut history = Vec::new();
    loop {
        let next = stepper.step_values(&u)?;
        steps += 1;
        t += o.dt;
        let mut inc = f64::NEG_INFINITY;
        let mut inc_at = 0;
        for (i, (a, b)) in next.iter().zip(&u).enumerate() {
            if a - b > inc {
                inc = a - b;
                inc_at = i;
            }
        }
        max_increase = max_increase.max(inc);
        if inc > o.monotone_slack {
            return Err(numerical(format!(
                "flow from U+ increased by {inc:.3e} at x = {:.6} (t = {t:.4}); dt too large",
                grid.x(inc_at)
            )));
        }
        let rate = sup_distance(&next, &u) / o.dt;
        u = next;
        if steps.is_multiple_of(100) {
            history.push(rate);
        }
        if rate < o.steady_tol {
            let field = with_boundary_tails(&Field::zeros(grid), u, o.boundary);
            let sandwich = env.sandwich(&field, o.sandwich_tol);
            if !sandwich.member {
                return Err(numerical(format!(
                    "steady state leaves [U-_delta, U+] by {:.3e} at x = {:.6}",
                    sandwich.worst_violation, sandwich.location
                )));
            }
            return Ok(SteadyState {
                field,
                time: t,
                steps,
                rate,
                max_increase,
                sandwich,
            });
        }
        if t >= o.t_max {
            history.push(rate);
            return Err(Error::NonConvergence {
                reason: format!(
                    "frozen flow not steady by t = {t:.4} (rate {rate:.3e} >= {:.3e})",
                    o.steady_tol
                ),
                history,
            });
        }
    }
}

/// Trajectory of the frozen flow from `U^+`, recording every `stride`-th
/// state, for diagnostics. Runs for exactly `t_end` (rounded to steps).
pub fn frozen_trajectory(
    stepper: &FrozenStepper,
    start: &Field,
    t_end: f64,
    stride: usize,
) -> Result<Vec<(f64, Field)>> {
    let steps = (t_end / stepper.opts.dt).round() as usize;
    let stride = stride.max(1);
    let mut out = vec![(0.0, start.clone())];
    let mut u = start.clone();
    for k in 1..=steps {
        u = stepper.step(&u)?;
        if k % stride == 0 || k == steps {
            out.push((k as f64 * stepper.opts.dt, u.clone()));
        }
    }
    Ok(out)
}

/// Frozen stepper for the coefficients generated by `u_env`, with the
/// boundary used by [`evolve_to_steady`].
pub fn frozen_stepper_for(
    u_env: &Field,
    p: &ChemoParams,
    env: &EnvelopeParams,
    opts: &StepperOptions,
) -> Result<FrozenStepper> {
    let co = FrozenCoefficients::from_density(p, p.c_of_mu(env.mu), u_env)?;
    let mut o = *opts;
    o.boundary = wave_frame_boundary(env, u_env.grid);
    FrozenStepper::new(co, o)
}

/// One step of the full system in a frame moving with `frame_speed`: the
/// chemicals are re-solved from `u`, the taxis flux `d/dx (u q)` is taken in
/// conservative form with face values of `q`, and the logistic term is
/// explicit.
pub fn step_full_system(
    u: &Field,
    p: &ChemoParams,
    frame_speed: f64,
    opts: &StepperOptions,
) -> Result<Field> {
    opts.validate()?;
    if u.values.iter().any(|&v| v < 0.0) {
        return Err(domain("step_full_system needs a nonnegative field"));
    }
    let n = u.len();
    let dx = u.grid.dx();
    let node_drift = vec![frame_speed; n];
    let faces = if p.chi1 == 0.0 && p.chi2 == 0.0 {
        None
    } else {
        let ch = solve_chemicals(u, p)?;
        let q = ch.drift(p).values;
        let mut f = vec![0.0; n + 1];
        f[0] = q[0];
        f[n] = q[n - 1];
        for i in 1..n {
            f[i] = 0.5 * (q[i - 1] + q[i]);
        }
        Some(f)
    };
    let m = StepMatrix::assemble(dx, opts.dt, &node_drift, faces.as_deref(), opts.boundary)?;
    let dt = opts.dt;
    let rhs: Vec<f64> = u
        .values
        .iter()
        .map(|&v| v + dt * v * (p.a - p.b * v))
        .collect();
    let out = m.solve(&rhs);
    check_bound(&out, opts.blowup_bound)?;
    Ok(with_boundary_tails(u, out, opts.boundary))
}

/// Runs [`step_full_system`] for `t_end` (rounded to whole steps).
pub fn evolve_full_system(
    u0: &Field,
    p: &ChemoParams,
    frame_speed: f64,
    t_end: f64,
    opts: &StepperOptions,
) -> Result<Field> {
    let steps = (t_end / opts.dt).round() as usize;
    let mut u = u0.clone();
    for _ in 0..steps {
        u = step_full_system(&u, p, frame_speed, opts)?;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn kpp_coeffs(g: Grid1D, c: f64) -> FrozenCoefficients {
        FrozenCoefficients {
            c,
            drift: Field::constant(g, c),
            potential: Field::constant(g, 1.0),
            damping: 1.0,
        }
    }

    fn opts() -> StepperOptions {
        StepperOptions::for_params(&ChemoParams::kpp(1.0, 1.0).unwrap())
    }

    #[test]
    fn equilibria_are_fixed() {
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let co = kpp_coeffs(g, 2.5);
        let z = step_frozen(&Field::zeros(g), &co, &opts()).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let one = step_frozen(&Field::constant(g, 1.0), &co, &opts()).unwrap();
        for v in &one.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn small_bump_grows_like_linear_heat_flow() {
        // Oracle: one implicit heat step on the same grid followed by the
        // exact linear growth factor exp(a dt) is within O(dt^2).
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        let co = kpp_coeffs(g, 0.0);
        let mut o = opts();
        o.dt = 0.01;
        let bump = Field::from_fn(g, |x| 1e-6 * (-x * x).exp(), Tail::constant(0.0), Tail::constant(0.0))
            .unwrap();
        let out = step_frozen(&bump, &co, &o).unwrap();
        assert!(out.values[400] > 0.99 * bump.values[400]);
        let heat_only = FrozenCoefficients {
            potential: Field::zeros(g),
            ..co.clone()
        };
        let h = step_frozen(&bump, &heat_only, &o).unwrap();
        let growth = out.values[400] / h.values[400];
        assert!((growth - (o.dt).exp()).abs() < 1e-4, "{growth}");
        let mass: f64 = out.values.iter().sum::<f64>();
        let mass_h: f64 = h.values.iter().sum::<f64>();
        assert!(mass > mass_h);
    }

    #[test]
    fn comparison_on_ordered_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let p = ChemoParams::new(1.0, 1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let base = Field::from_fn(g, |x| 0.5 / (1.0 + x.exp()), Tail::constant(0.5), Tail::constant(0.0))
            .unwrap();
        let co = FrozenCoefficients::from_density(&p, 2.5, &base).unwrap();
        let stepper = FrozenStepper::new(co, StepperOptions::for_params(&p)).unwrap();
        for _ in 0..20 {
            let lo: Vec<f64> = (0..g.n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.2)).collect();
            let (mut a, mut b) = (lo, hi);
            for _ in 0..50 {
                a = stepper.step_values(&a).unwrap();
                b = stepper.step_values(&b).unwrap();
                assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
                assert!(a.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn blowup_detected() {
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let co = kpp_coeffs(g, 0.0);
        let mut o = opts();
        o.blowup_bound = 0.5;
        assert!(matches!(
            step_frozen(&Field::constant(g, 1.0), &co, &o),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn kpp_steady_state_from_u_plus() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let g = Grid1D::default_for(1.0, 1.0, 1.0);
        let env = EnvelopeParams::new(&p, 0.5).unwrap();
        let u_env = env.u_plus_field(g);
        let st = evolve_to_steady(&u_env, &p, 2.5, &env, &StepperOptions::for_params(&p)).unwrap();
        assert!(st.max_increase <= 1e-10);
        assert!(st.sandwich.member);
        // left plateau at a/b
        assert!((st.field.values[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn full_system_keeps_constant_state() {
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let p = ChemoParams::new(1.0, 1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let u = Field::constant(g, 1.0);
        let out = evolve_full_system(&u, &p, 0.0, 2.0, &StepperOptions::for_params(&p)).unwrap();
        for v in &out.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_system_without_taxis_matches_frozen_stepper() {
        let g = Grid1D::new(-30.0, 30.0, 601).unwrap();
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let o = StepperOptions::for_params(&p);
        let u0 = Field::from_fn(g, |x| if x < 0.0 { 1.0 } else { 0.0 }, Tail::constant(1.0), Tail::constant(0.0))
            .unwrap();
        let co = kpp_coeffs(g, 0.0);
        let mut a = u0.clone();
        let mut b = u0.clone();
        for _ in 0..50 {
            a = step_full_system(&a, &p, 0.0, &o).unwrap();
            b = step_frozen(&b, &co, &o).unwrap();
        }
        assert!(a.sup_distance(&b) < 1e-13);
        // the step has moved right
        assert!(a.values[320] > 0.1);
    }

    #[test]
    fn positive_state_relaxes_to_capacity() {
        let g = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let p = ChemoParams::new(1.0, 1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let o = StepperOptions::for_params(&p);
        let u0 = Field::from_fn(g, |x| 1.0 + 0.3 * (0.7 * x).sin(), Tail::constant(1.0), Tail::constant(1.0))
            .unwrap();
        let d0 = u0.sup_distance(&Field::constant(g, 1.0));
        let u1 = evolve_full_system(&u0, &p, 0.0, 5.0, &o).unwrap();
        let d1 = u1.sup_distance(&Field::constant(g, 1.0));
        let u2 = evolve_full_system(&u1, &p, 0.0, 5.0, &o).unwrap();
        let d2 = u2.sup_distance(&Field::constant(g, 1.0));
        assert!(d1 < 0.5 * d0 && d2 < 0.5 * d1, "{d0} {d1} {d2}");
    }
}
