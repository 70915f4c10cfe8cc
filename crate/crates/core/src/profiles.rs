//! Explicit super- and sub-solution envelopes and the convex set between them.

use crate::error::{domain, precondition, Result};
use crate::grid::{Field, Grid1D, Tail};
use crate::params::{check_hypothesis_h, compute_mu_constants, upper_bound_c0, ChemoParams};

/// Placement of `mu_tilde` inside its admissible interval.
pub const MU_TILDE_THETA: f64 = 0.5;
/// Relative safety margin applied to `d0`.
pub const D0_MARGIN: f64 = 1e-6;
/// Offset of the flattened sub-solution as a fraction of `a_upper - a_lower`.
pub const DELTA_FRACTION: f64 = 1e-3;

/// `exp(-sqrt(a) mu x)`
pub fn phi_mu(a: f64, mu: f64, x: f64) -> f64 {
    (-a.sqrt() * mu * x).exp()
}

/// `min{C0, phi_mu(x)}`
pub fn u_plus(p: &ChemoParams, mu: f64, x: f64) -> Result<f64> {
    let c0 = upper_bound_c0(p)?;
    Ok(c0.min(phi_mu(p.a, mu, x)))
}

/// Position where `phi_mu` crosses `C0`.
pub fn u_plus_crossover(a: f64, mu: f64, c0: f64) -> f64 {
    -c0.ln() / (a.sqrt() * mu)
}

/// `mu + theta * min{cap, (Lbar + Lunder) / (sqrt(a) K_mu)}` with
/// `cap = (min{1, 2 mu, sqrt(lambda1/a), sqrt(lambda2/a)} - mu) / 2`.
pub fn choose_mu_tilde(p: &ChemoParams, mu: f64) -> Result<f64> {
    check_hypothesis_h(p, mu).require(mu)?;
    let k = compute_mu_constants(p, mu)?;
    let top = p.mu_upper().min(2.0 * mu);
    let cap = 0.5 * (top - mu);
    let room = if k.k_mu > 0.0 {
        cap.min((k.l_upper + k.l_lower) / (p.a.sqrt() * k.k_mu))
    } else {
        cap
    };
    let mt = mu + MU_TILDE_THETA * room;
    if !(mt > mu) {
        return Err(precondition(format!(
            "no admissible mu_tilde above mu = {mu}: sqrt(a) K_mu (mu_tilde - mu) <= Lbar_mu + L_mu forces mu_tilde = mu"
        )));
    }
    Ok(mt)
}

/// `max{1, A1 / A0} (1 + margin)` with `A0 = a (mu~ - mu)(1 - mu mu~) / mu` and
/// `A1 = sqrt(a) K_mu mu + L_mu + b + chi2 mu2 - chi1 mu1`.
pub fn compute_d0(p: &ChemoParams, mu: f64, mu_tilde: f64) -> Result<f64> {
    let (a0, a1) = d0_parts(p, mu, mu_tilde)?;
    Ok((a1 / a0).max(1.0) * (1.0 + D0_MARGIN))
}

/// `(A0, A1)` from [`compute_d0`].
pub fn d0_parts(p: &ChemoParams, mu: f64, mu_tilde: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu_tilde > mu && mu_tilde < 1.0) {
        return Err(domain(format!(
            "need 0 < mu < mu_tilde < 1, got mu = {mu}, mu_tilde = {mu_tilde}"
        )));
    }
    let k = compute_mu_constants(p, mu)?;
    let a0 = p.a * (mu_tilde - mu) * (1.0 - mu * mu_tilde) / mu;
    let a1 = p.a.sqrt() * k.k_mu * mu + k.l_lower + p.damping();
    Ok((a0, a1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub a: f64,
    pub c0: f64,
    pub mu: f64,
    pub mu_tilde: f64,
    pub d: f64,
    /// Zero of `phi_mu - d phi_mu~`.
    pub a_lower: f64,
    /// Maximiser of `phi_mu - d phi_mu~`.
    pub a_upper: f64,
    pub delta: f64,
}

impl EnvelopeParams {
    /// Envelopes for the decay parameter `mu`, with `mu~` and `d` from the
    /// standing rules. `d` is raised above `d0` if needed so that the
    /// sub-solution stays below `C0`.
    pub fn new(p: &ChemoParams, mu: f64) -> Result<Self> {
        let c0 = upper_bound_c0(p)?;
        let mt = choose_mu_tilde(p, mu)?;
        let d0 = compute_d0(p, mu, mt)?;
        let d = d0.max(d_for_ceiling(mu, mt, c0) * (1.0 + D0_MARGIN));
        Self::from_parts(p.a, c0, mu, mt, d)
    }

    pub fn from_parts(a: f64, c0: f64, mu: f64, mu_tilde: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && c0 > 0.0) {
            return Err(domain("a and C0 must be positive"));
        }
        if !(mu > 0.0 && mu_tilde > mu) {
            return Err(domain(format!(
                "need 0 < mu < mu_tilde, got mu = {mu}, mu_tilde = {mu_tilde}"
            )));
        }
        if !(d > 1.0 && d.is_finite()) {
            return Err(domain(format!("d must exceed 1, got {d}")));
        }
        let gap = (mu_tilde - mu) * a.sqrt();
        let a_lower = d.ln() / gap;
        let a_upper = (d * mu_tilde / mu).ln() / gap;
        Ok(EnvelopeParams {
            a,
            c0,
            mu,
            mu_tilde,
            d,
            a_lower,
            a_upper,
            delta: DELTA_FRACTION * (a_upper - a_lower),
        })
    }

    pub fn phi(&self, x: f64) -> f64 {
        phi_mu(self.a, self.mu, x)
    }

    pub fn crossover(&self) -> f64 {
        u_plus_crossover(self.a, self.mu, self.c0)
    }

    pub fn u_plus(&self, x: f64) -> f64 {
        self.c0.min(self.phi(x))
    }

    /// `max{0, phi_mu(x) - d phi_mu~(x)}`
    pub fn u_minus(&self, x: f64) -> f64 {
        if x <= self.a_lower {
            return 0.0;
        }
        (self.phi(x) - self.d * phi_mu(self.a, self.mu_tilde, x)).max(0.0)
    }

    pub fn x_delta(&self) -> f64 {
        self.a_lower + self.delta
    }

    /// Sub-solution flattened to the constant `U^-(x_delta)` left of `x_delta`.
    pub fn u_minus_delta(&self, x: f64) -> f64 {
        self.u_minus(x.max(self.x_delta()))
    }

    pub fn max_u_minus(&self) -> f64 {
        self.u_minus(self.a_upper)
    }

    pub fn u_plus_field(&self, grid: Grid1D) -> Field {
        let values = grid.sample(|x| self.u_plus(x));
        let right = if grid.x_max > self.crossover() {
            Tail::exponential(values[grid.n - 1], self.a.sqrt() * self.mu)
        } else {
            Tail::constant(self.c0)
        };
        Field {
            grid,
            values,
            left: Tail::constant(self.c0),
            right,
        }
    }

    pub fn u_minus_delta_field(&self, grid: Grid1D) -> Field {
        let values = grid.sample(|x| self.u_minus_delta(x));
        Field {
            grid,
            left: Tail::constant(self.u_minus_delta(grid.x_min)),
            right: Tail::exponential(values[grid.n - 1], self.a.sqrt() * self.mu),
            values,
        }
    }

    pub fn u_minus_field(&self, grid: Grid1D) -> Field {
        let values = grid.sample(|x| self.u_minus(x));
        Field {
            grid,
            left: Tail::constant(0.0),
            right: Tail::exponential(values[grid.n - 1], self.a.sqrt() * self.mu),
            values,
        }
    }

    /// Checks `U^- <= u <= U^+` on the grid of `u`.
    pub fn membership(&self, u: &Field, tol: f64) -> Membership {
        self.check_between(u, |x| self.u_minus(x), tol)
    }

    /// Checks `U^-_{mu,delta} <= u <= U^+` on the grid of `u`.
    pub fn sandwich(&self, u: &Field, tol: f64) -> Membership {
        self.check_between(u, |x| self.u_minus_delta(x), tol)
    }

    fn check_between(&self, u: &Field, lower: impl Fn(f64) -> f64, tol: f64) -> Membership {
        let mut worst = f64::NEG_INFINITY;
        let mut at = u.grid.x_min;
        for (i, &v) in u.values.iter().enumerate() {
            let x = u.grid.x(i);
            let viol = (lower(x) - v).max(v - self.u_plus(x));
            if viol > worst {
                worst = viol;
                at = x;
            }
        }
        Membership {
            member: worst <= tol,
            worst_violation: worst,
            location: at,
        }
    }
}

/// Smallest `d` with `max (phi_mu - d phi_mu~) <= c0`. The maximum equals
/// `(1 - mu/mu~) (d mu~/mu)^(-mu/(mu~-mu))`.
fn d_for_ceiling(mu: f64, mu_tilde: f64, c0: f64) -> f64 {
    let peak_at_d1 = 1.0 - mu / mu_tilde;
    if peak_at_d1 * (mu_tilde / mu).powf(-mu / (mu_tilde - mu)) <= c0 {
        return 1.0;
    }
    let expo = -(mu_tilde - mu) / mu;
    (c0 / peak_at_d1).powf(expo) * mu / mu_tilde
}

/// Result of an envelope check: `worst_violation` is the largest signed
/// amount by which `u` leaves the band (negative when strictly inside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub worst_violation: f64,
    pub location: f64,
}

/// Membership of `u` in the set between `U^-` and `U^+`.
pub fn e_mu_membership(u: &Field, env: &EnvelopeParams, tol: f64) -> Membership {
    env.membership(u, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> ChemoParams {
        ChemoParams::new(1.0, 1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi_mu(1.0, 0.5, 0.0), 1.0);
        assert!((phi_mu(1.0, 0.5, 2.0) - (-1.0_f64).exp()).abs() < 1e-15);
        // phi'' + c_mu phi' + a phi = 0 by second differences
        let (a, mu, h) = (2.0_f64, 0.4, 1e-3);
        let c = a.sqrt() * (mu + 1.0 / mu);
        for x in [-3.0, 0.0, 1.7] {
            let f = |y: f64| phi_mu(a, mu, y);
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((d2 + c * d1 + a * f(x)).abs() < 1e-5 * f(x));
        }
    }

    #[test]
    fn u_plus_crossover_p0() {
        let p = p0();
        assert_eq!(u_plus_crossover(1.0, 0.5, 1.0), 0.0);
        assert!((u_plus(&p, 0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(u_plus(&p, 0.5, -50.0).unwrap(), 1.0);
        let xs: Vec<f64> = (0..100).map(|i| -10.0 + 0.2 * i as f64).collect();
        for w in xs.windows(2) {
            assert!(u_plus(&p, 0.5, w[0]).unwrap() >= u_plus(&p, 0.5, w[1]).unwrap());
        }
        // continuity with C0 != 1 and a != 1
        let q = ChemoParams::new(4.0, 2.0, 0.0, 0.0, 1.0, 1.0, 9.0, 9.0).unwrap();
        let env = EnvelopeParams::new(&q, 0.5).unwrap();
        let xc = env.crossover();
        assert!((env.phi(xc) - env.c0).abs() < 1e-14);
    }

    #[test]
    fn mu_tilde_and_d0_without_chemotaxis() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let mt = choose_mu_tilde(&p, 0.5).unwrap();
        assert!((mt - 0.625).abs() < 1e-15);
        let (a0, a1) = d0_parts(&p, 0.5, mt).unwrap();
        assert!((a0 - 0.171875).abs() < 1e-15);
        assert!((a1 - 1.0).abs() < 1e-15);
        let d0 = compute_d0(&p, 0.5, mt).unwrap();
        assert!((d0 - 5.818187636363636).abs() < 1e-9, "{d0}");
    }

    #[test]
    fn mu_tilde_p0() {
        let p = p0();
        let mu = 0.5;
        let mt = choose_mu_tilde(&p, mu).unwrap();
        let k = compute_mu_constants(&p, mu).unwrap();
        assert!(mu < mt && mt < 2.0 * mu);
        assert!(p.a.sqrt() * k.k_mu * (mt - mu) <= k.l_upper + k.l_lower);
        assert!((mt - 0.625).abs() < 1e-15, "{mt}");
    }

    #[test]
    fn envelope_geometry() {
        let p = p0();
        let env = EnvelopeParams::new(&p, 0.5).unwrap();
        assert!(env.a_lower < env.a_upper);
        let lhs = env.phi(env.a_lower);
        let rhs = env.d * phi_mu(env.a, env.mu_tilde, env.a_lower);
        assert!((lhs - rhs).abs() < 1e-12);
        assert_eq!(env.u_minus(env.a_lower), 0.0);
        let h = 1e-5;
        let f = |x: f64| env.phi(x) - env.d * phi_mu(env.a, env.mu_tilde, x);
        let slope = (f(env.a_upper + h) - f(env.a_upper - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-8);

        // golden-section oracle for the maximum
        let (mut lo, mut hi) = (env.a_lower, env.a_lower + 200.0);
        let r = 0.5 * (5.0_f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        assert!((f(0.5 * (lo + hi)) - env.max_u_minus()).abs() < 1e-12);
        assert!((0.5 * (lo + hi) - env.a_upper).abs() < 1e-6);
    }

    #[test]
    fn membership_checks() {
        let p = p0();
        let env = EnvelopeParams::new(&p, 0.5).unwrap();
        let g = Grid1D::new(-40.0, 60.0, 1001).unwrap();
        let up = env.u_plus_field(g);
        let m = env.membership(&up, 1e-12);
        assert!(m.member);
        assert!(m.worst_violation.abs() < 1e-15);
        assert!(env.membership(&env.u_minus_field(g), 1e-12).member);
        let big = up.map(|v| 1.01 * v);
        let m = env.membership(&big, 1e-12);
        assert!(!m.member);
        assert!((m.worst_violation - 0.01 * env.c0).abs() < 1e-12);
    }

    #[test]
    fn ceiling_adjustment_keeps_order() {
        // Large b gives C0 well below the unadjusted sub-solution peak.
        let p = ChemoParams::new(1.0, 50.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let env = EnvelopeParams::new(&p, 0.9).unwrap();
        assert!(env.max_u_minus() <= env.c0);
        let g = Grid1D::new(-40.0, 60.0, 2001).unwrap();
        for i in 0..g.n {
            let x = g.x(i);
            assert!(env.u_minus(x) <= env.u_plus(x));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(EnvelopeParams::from_parts(1.0, 1.0, 0.5, 0.4, 2.0).is_err());
        assert!(EnvelopeParams::from_parts(1.0, 1.0, 0.5, 0.6, 1.0).is_err());
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        assert!(choose_mu_tilde(&p, 1.0).is_err());
        assert!(compute_d0(&p, 0.5, 0.5).is_err());
    }
}
