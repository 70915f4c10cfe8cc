//! Model constants, threshold quantities and the critical speed.
//!
//! Every threshold is evaluated branch by branch from its defining
//! `min{.., ..}` expression; no algebraic simplification is applied so that
//! the closed forms for equal degradation rates stay usable as independent
//! test oracles.

use crate::error::{domain, precondition, Error, Result};

#[inline]
fn pos(r: f64) -> f64 {
    r.max(0.0)
}

#[inline]
fn neg(r: f64) -> f64 {
    (-r).max(0.0)
}

/// The eight constants of the attraction-repulsion chemotaxis model
/// `u_t = u_xx - chi1 (u v1_x)_x + chi2 (u v2_x)_x + u (a - b u)`,
/// `0 = v_i'' - lambda_i v_i + mu_i u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemoParams {
    pub a: f64,
    pub b: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ChemoParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        b: f64,
        chi1: f64,
        chi2: f64,
        mu1: f64,
        mu2: f64,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        let p = ChemoParams {
            a,
            b,
            chi1,
            chi2,
            mu1,
            mu2,
            lambda1,
            lambda2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Fisher-KPP parameters: no chemotaxis, unit production and degradation.
    pub fn kpp(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("a", self.a),
            ("b", self.b),
            ("chi1", self.chi1),
            ("chi2", self.chi2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(domain(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if v <= 0.0 {
                return Err(domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.chi1 < 0.0 || self.chi2 < 0.0 {
            return Err(domain("chi1 and chi2 must be >= 0"));
        }
        Ok(())
    }

    /// `chi1 * mu1`
    pub fn s1(&self) -> f64 {
        self.chi1 * self.mu1
    }

    /// `chi2 * mu2`
    pub fn s2(&self) -> f64 {
        self.chi2 * self.mu2
    }

    /// `b + chi2 mu2 - chi1 mu1`, the effective logistic damping.
    pub fn damping(&self) -> f64 {
        self.b + self.s2() - self.s1()
    }

    /// Carrying capacity `a / b`.
    pub fn carrying_capacity(&self) -> f64 {
        self.a / self.b
    }

    /// Upper end (exclusive) of the admissible decay parameter range,
    /// `min{1, sqrt(lambda1/a), sqrt(lambda2/a)}`.
    pub fn mu_upper(&self) -> f64 {
        1.0_f64
            .min((self.lambda1 / self.a).sqrt())
            .min((self.lambda2 / self.a).sqrt())
    }

    /// Speed attached to the tail rate `sqrt(a) mu`.
    pub fn c_of_mu(&self, mu: f64) -> f64 {
        self.a.sqrt() * (mu + 1.0 / mu)
    }

    pub fn kpp_speed(&self) -> f64 {
        2.0 * self.a.sqrt()
    }
}

/// Constant `M`: the uniform upper bound of `chi2 lambda2 V2 - chi1 lambda1 V1`
/// per unit density.
pub fn compute_m(p: &ChemoParams) -> f64 {
    let (s1, s2, l1, l2) = (p.s1(), p.s2(), p.lambda1, p.lambda2);
    let first = (pos(s2 * l2 - s1 * l1) + s1 * pos(l1 - l2)) / l2;
    let second = (s2 * pos(l1 - l2) + pos(s2 * l2 - s1 * l1)) / l1;
    first.min(second)
}

/// Constant `M~`, the negative-part counterpart of [`compute_m`].
pub fn compute_mtilde(p: &ChemoParams) -> f64 {
    let (s1, s2, l1, l2) = (p.s1(), p.s2(), p.lambda1, p.lambda2);
    let first = (neg(s2 * l2 - s1 * l1) + s1 * neg(l1 - l2)) / l2;
    let second = (s2 * neg(l1 - l2) + neg(s2 * l2 - s1 * l1)) / l1;
    first.min(second)
}

/// Stability constant `K`.
pub fn compute_k(p: &ChemoParams) -> f64 {
    let (s1, s2, l1, l2) = (p.s1(), p.s2(), p.lambda1, p.lambda2);
    let first = ((s2 * l2 - s1 * l1).abs() + s1 * (l1 - l2).abs()) / l2;
    let second = (s2 * (l1 - l2).abs() + (s2 * l2 - s1 * l1).abs()) / l1;
    first.min(second)
}

/// Gradient constant `K~` (the small-`mu` limit of `K_mu`).
pub fn compute_ktilde(p: &ChemoParams) -> f64 {
    let (s1, s2, l1, l2) = (p.s1(), p.s2(), p.lambda1, p.lambda2);
    let (r1, r2) = (l1.sqrt(), l2.sqrt());
    let first = (s1 - s2).abs() / r2 + s1 * (r1 - r2).abs() / (r1 * r2);
    let second = (s1 - s2).abs() / r1 + s2 * (r1 - r2).abs() / (r1 * r2);
    first.min(second)
}

/// All `mu`-independent threshold quantities together with the two
/// standing hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub m: f64,
    pub mtilde: f64,
    pub k: f64,
    pub ktilde: f64,
    /// `a / (b + chi2 mu2 - chi1 mu1 - M)`; `+inf` when `hypothesis_h1` fails.
    pub c0: f64,
    /// `b + chi2 mu2 > chi1 mu1 + M` (global boundedness).
    pub hypothesis_h1: bool,
    /// `M + M~ + chi1 mu1 < b + chi2 mu2` (stability of `a/b`).
    pub hypothesis_stability: bool,
}

pub fn compute_thresholds(p: &ChemoParams) -> ThresholdReport {
    let m = compute_m(p);
    let mtilde = compute_mtilde(p);
    let k = compute_k(p);
    let ktilde = compute_ktilde(p);
    let h1 = p.b + p.s2() > p.s1() + m;
    let c0 = if h1 {
        p.a / (p.damping() - m)
    } else {
        f64::INFINITY
    };
    ThresholdReport {
        m,
        mtilde,
        k,
        ktilde,
        c0,
        hypothesis_h1: h1,
        hypothesis_stability: m + mtilde + p.s1() < p.b + p.s2(),
    }
}

/// `C0 = a / (b + chi2 mu2 - chi1 mu1 - M)`, the uniform bound on the density.
pub fn upper_bound_c0(p: &ChemoParams) -> Result<f64> {
    let t = compute_thresholds(p);
    if !t.hypothesis_h1 {
        return Err(precondition(format!(
            "b + chi2*mu2 > chi1*mu1 + M violated (M = {}, b + chi2*mu2 = {})",
            t.m,
            p.b + p.s2()
        )));
    }
    Ok(t.c0)
}

/// Quantities depending on the decay parameter `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuDependentConstants {
    pub mu: f64,
    pub k_mu: f64,
    pub l_upper: f64,
    pub l_lower: f64,
    pub c_mu: f64,
}

pub fn compute_mu_constants(p: &ChemoParams, mu: f64) -> Result<MuDependentConstants> {
    if !(mu > 0.0 && mu < p.mu_upper()) {
        return Err(domain(format!(
            "mu = {mu} outside (0, {}) (need lambda_i - a mu^2 > 0)",
            p.mu_upper()
        )));
    }
    let (s1, s2, l1, l2) = (p.s1(), p.s2(), p.lambda1, p.lambda2);
    let am2 = p.a * mu * mu;
    let (d1, d2) = (l1 - am2, l2 - am2);
    let ra = p.a.sqrt();

    let l_upper = {
        let first = s1 * l1 * pos(l1 - l2) / (d2 * d1) + pos(s2 * l2 - s1 * l1) / d2;
        let second = s2 * l2 * pos(l1 - l2) / (d2 * d1) + pos(s2 * l2 - s1 * l1) / d1;
        first.min(second)
    };
    let l_lower = {
        let first = s1 * l1 * neg(l1 - l2) / (d2 * d1) + neg(s2 * l2 - s1 * l1) / d2;
        let second = s2 * l2 * neg(l1 - l2) / (d2 * d1) + neg(s2 * l2 - s1 * l1) / d1;
        first.min(second)
    };
    let k_mu = {
        let first = (s2 - s1).abs() * (d2.sqrt() + mu * ra) / d2
            + (s1 / d1.sqrt() - s1 / d2.sqrt()).abs()
            + mu * ra * s1 * (l1 - l2).abs() / (d1 * d2);
        let second = (s2 - s1).abs() * (d1.sqrt() + mu * ra) / d1
            + (s2 / d2.sqrt() - s2 / d1.sqrt()).abs()
            + mu * ra * s2 * (l2 - l1).abs() / (d2 * d1);
        first.min(second)
    };
    Ok(MuDependentConstants {
        mu,
        k_mu,
        l_upper,
        l_lower,
        c_mu: p.c_of_mu(mu),
    })
}

/// The left side of the super-solution inequality,
/// `g(mu) = mu sqrt(a) K_mu + Lbar_mu`.
pub fn super_solution_lhs(p: &ChemoParams, mu: f64) -> Result<f64> {
    let k = compute_mu_constants(p, mu)?;
    Ok(mu * p.a.sqrt() * k.k_mu + k.l_upper)
}

/// Flags of the standing hypothesis at a given `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    pub mu_in_range: bool,
    pub stability: bool,
    pub super_solution: bool,
    /// `g(mu)`, NaN when `mu` is out of range.
    pub lhs: f64,
    /// `b + chi2 mu2 - chi1 mu1`.
    pub rhs: f64,
}

impl HypothesisReport {
    pub fn all(&self) -> bool {
        self.mu_in_range && self.stability && self.super_solution
    }

    /// Turns the report into an error naming the first violated condition.
    pub fn require(&self, mu: f64) -> Result<()> {
        if !self.mu_in_range {
            return Err(precondition(format!(
                "hypothesis (H): mu = {mu} not in (0, min{{1, sqrt(lambda1/a), sqrt(lambda2/a)}})"
            )));
        }
        if !self.stability {
            return Err(precondition(
                "hypothesis (H): M + M~ + chi1*mu1 < b + chi2*mu2 violated",
            ));
        }
        if !self.super_solution {
            return Err(precondition(format!(
                "hypothesis (H): mu*sqrt(a)*K_mu + Lbar_mu <= b + chi2*mu2 - chi1*mu1 violated at mu = {mu} ({} > {})",
                self.lhs, self.rhs
            )));
        }
        Ok(())
    }
}

pub fn check_hypothesis_h(p: &ChemoParams, mu: f64) -> HypothesisReport {
    check_hypothesis_h_with_margin(p, mu, 0.0)
}

/// Same as [`check_hypothesis_h`] but both inequalities must hold with the
/// given nonnegative slack.
pub fn check_hypothesis_h_with_margin(p: &ChemoParams, mu: f64, margin: f64) -> HypothesisReport {
    let t = compute_thresholds(p);
    let rhs = p.damping();
    let stability = t.m + t.mtilde + p.s1() + margin < p.b + p.s2();
    match super_solution_lhs(p, mu) {
        Ok(lhs) => HypothesisReport {
            mu_in_range: true,
            stability,
            super_solution: lhs + margin <= rhs,
            lhs,
            rhs,
        },
        Err(_) => HypothesisReport {
            mu_in_range: false,
            stability,
            super_solution: false,
            lhs: f64::NAN,
            rhs,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuStarResult {
    pub mu_star: f64,
    pub c_star: f64,
    pub grid_points_checked: usize,
    /// The inequality held at every scanned point `<= mu_star`.
    pub certified_prefix: bool,
}

pub const DEFAULT_SCAN_POINTS: usize = 4096;
pub const DEFAULT_BISECT_TOL: f64 = 1e-8;

/// Largest `mu_bar` such that `g(mu) <= b + chi2 mu2 - chi1 mu1` for all
/// `0 < mu <= mu_bar`, located by a uniform scan and refined by bisection on
/// the first violating cell.
pub fn compute_mu_star(
    p: &ChemoParams,
    scan_resolution: usize,
    bisect_tol: f64,
) -> Result<MuStarResult> {
    p.validate()?;
    if scan_resolution < 1000 {
        return Err(domain(format!(
            "scan_resolution must be >= 1000, got {scan_resolution}"
        )));
    }
    if !(bisect_tol > 0.0) {
        return Err(domain("bisect_tol must be > 0"));
    }
    let t = compute_thresholds(p);
    if !t.hypothesis_stability {
        return Err(precondition(
            "M + M~ + chi1*mu1 < b + chi2*mu2 violated; mu* undefined",
        ));
    }
    let rhs = p.damping();
    let top = p.mu_upper();
    let holds = |mu: f64| -> bool { super_solution_lhs(p, mu).is_ok_and(|g| g <= rhs) };

    let n = scan_resolution;
    let mut checked = 0usize;
    let mut first_bad = None;
    for j in 1..n {
        let mu = top * j as f64 / n as f64;
        checked += 1;
        if !holds(mu) {
            first_bad = Some(j);
            break;
        }
    }

    let mu_star = match first_bad {
        None => top,
        Some(j) => {
            let mut lo = top * (j - 1) as f64 / n as f64;
            let mut hi = top * j as f64 / n as f64;
            if j == 1 {
                // Walk down geometrically until a valid point is found.
                let mut probe = hi;
                loop {
                    probe *= 0.5;
                    checked += 1;
                    if probe < top * 1e-12 {
                        return Err(Error::Numerical(
                            "mu* = 0: super-solution inequality fails arbitrarily close to 0 \
                             although the stability hypothesis holds (internal inconsistency)"
                                .into(),
                        ));
                    }
                    if holds(probe) {
                        lo = probe;
                        hi = 2.0 * probe;
                        break;
                    }
                }
                // TODO: the prefix below `lo` is only sampled geometrically here.
            }
            while hi - lo > bisect_tol {
                let mid = 0.5 * (lo + hi);
                checked += 1;
                if holds(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };

    Ok(MuStarResult {
        mu_star,
        c_star: p.c_of_mu(mu_star),
        grid_points_checked: checked,
        certified_prefix: first_bad.is_none_or(|j| j > 1),
    })
}

/// The root in `(0, 1]` of `sqrt(a) (mu + 1/mu) = c`.
pub fn mu_of_c(p: &ChemoParams, c: f64) -> Result<f64> {
    let ra = p.a.sqrt();
    if !(c.is_finite() && c >= 2.0 * ra) {
        return Err(domain(format!(
            "c = {c} below the minimal speed 2 sqrt(a) = {}",
            2.0 * ra
        )));
    }
    let disc = (c * c - 4.0 * p.a).max(0.0).sqrt();
    // 2 sqrt(a) / (c + sqrt(c^2 - 4a)) avoids the cancellation in (c - sqrt(..)) / (2 sqrt(a)).
    Ok(2.0 * ra / (c + disc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> ChemoParams {
        ChemoParams::new(1.0, 1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn with(a: f64, l1: f64, l2: f64, s1: f64, s2: f64) -> ChemoParams {
        ChemoParams::new(a, 1.0, s1, s2, 1.0, 1.0, l1, l2).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ChemoParams::new(f64::NAN, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ChemoParams::new(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ChemoParams::new(1.0, 1.0, -0.1, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ChemoParams::new(1.0, 1.0, 0.0, 0.0, 1.0, 1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn no_chemotaxis_thresholds_vanish() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let t = compute_thresholds(&p);
        assert_eq!((t.m, t.mtilde, t.k, t.ktilde), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(t.c0, 1.0);
        let k = compute_mu_constants(&p, 0.3).unwrap();
        assert_eq!((k.k_mu, k.l_upper, k.l_lower), (0.0, 0.0, 0.0));
        assert!((k.c_mu - (0.3 + 1.0 / 0.3)).abs() < 1e-15);
    }

    #[test]
    fn equal_rates_m_matches_positive_part() {
        let p = with(1.0, 2.0, 2.0, 0.2, 0.3);
        assert!((compute_m(&p) - 0.1).abs() < 1e-15);
        assert!(compute_mtilde(&p).abs() < 1e-15);
        assert!((compute_k(&p) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unequal_rates_hand_values() {
        // lambda1 = 1, lambda2 = 4, chi1 mu1 = 1, chi2 mu2 = 0:
        // M branches: (0 + 1*0)/4, (0 + 0)/1 -> 0
        // M~ branches: (1 + 1*3)/4 = 1, (0 + 1)/1 = 1 -> 1
        // K branches: (1 + 1*3)/4 = 1, (0 + 1)/1 = 1 -> 1
        let p = with(1.0, 1.0, 4.0, 1.0, 0.0);
        assert_eq!(compute_m(&p), 0.0);
        assert_eq!(compute_mtilde(&p), 1.0);
        assert_eq!(compute_k(&p), 1.0);
    }

    #[test]
    fn mu_constants_p0_at_half() {
        // Frozen from the general displays with lambda1 = lambda2 = 1, a = 1, mu = 0.5:
        // Lbar = 0.1 / 0.75, K_mu = 0.1 * (1/sqrt(0.75) + 0.5/0.75).
        let k = compute_mu_constants(&p0(), 0.5).unwrap();
        assert!((k.l_upper - 0.133_333_333_333_333_33).abs() < 1e-15);
        assert!((k.k_mu - 0.182_136_720_504_591_8).abs() < 1e-14);
        assert_eq!(k.l_lower, 0.0);
    }

    #[test]
    fn mu_constants_domain() {
        let p = p0();
        assert!(compute_mu_constants(&p, 0.0).is_err());
        assert!(compute_mu_constants(&p, 1.0).is_err());
        let q = with(4.0, 1.0, 9.0, 0.0, 0.0);
        assert!(compute_mu_constants(&q, 0.5).is_err());
        assert!(compute_mu_constants(&q, 0.499).is_ok());
    }

    #[test]
    fn c_mu_minimum_at_one() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        assert_eq!(p.c_of_mu(1.0), 2.0);
    }

    #[test]
    fn hypothesis_flags() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        assert!(check_hypothesis_h(&p, 0.5).all());

        let h = check_hypothesis_h(&p0(), 0.5);
        assert!(h.all());
        // 0.5 * 0.1821367 + 0.1333333
        assert!((h.lhs - 0.224_401_693_585_629_3).abs() < 1e-14);
        assert!((h.rhs - 1.1).abs() < 1e-15);

        // M + M~ + chi1 mu1 == b + chi2 mu2 exactly: strict inequality fails.
        let q = ChemoParams::new(1.0, 1.0, 0.75, 0.25, 1.0, 1.0, 1.0, 1.0).unwrap();
        let t = compute_thresholds(&q);
        assert_eq!(t.m + t.mtilde + q.s1(), q.b + q.s2());
        assert!(!t.hypothesis_stability);
        assert!(!check_hypothesis_h(&q, 0.1).stability);

        assert!(!check_hypothesis_h(&p0(), 1.5).mu_in_range);
        assert!(check_hypothesis_h(&p0(), 1.5).require(1.5).is_err());
    }

    #[test]
    fn mu_star_without_chemotaxis() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let r = compute_mu_star(&p, DEFAULT_SCAN_POINTS, DEFAULT_BISECT_TOL).unwrap();
        assert_eq!(r.mu_star, 1.0);
        assert_eq!(r.c_star, 2.0);
        assert!(r.certified_prefix);

        let q = with(4.0, 1.0, 9.0, 0.0, 0.0);
        let r = compute_mu_star(&q, DEFAULT_SCAN_POINTS, DEFAULT_BISECT_TOL).unwrap();
        assert_eq!(r.mu_star, 0.5);
        assert!((r.c_star - 5.0).abs() < 1e-14);
    }

    #[test]
    fn mu_star_rejects_bad_inputs() {
        assert!(compute_mu_star(&p0(), 10, 1e-8).is_err());
        assert!(compute_mu_star(&p0(), 4096, 0.0).is_err());
        let q = ChemoParams::new(1.0, 1.0, 0.75, 0.25, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            compute_mu_star(&q, 4096, 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mu_of_c_values() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        assert_eq!(mu_of_c(&p, 2.0).unwrap(), 1.0);
        assert!((mu_of_c(&p, 2.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(mu_of_c(&p, 1.99).is_err());
        // a = 4, c = 5: 2 mu^2 - 5 mu + 2 = 0 has roots 0.5 and 2; the root below 1 is 0.5.
        let q = ChemoParams::kpp(4.0, 1.0).unwrap();
        assert!((mu_of_c(&q, 5.0).unwrap() - 0.5).abs() < 1e-15);
    }
}
