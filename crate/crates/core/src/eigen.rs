//! Principal eigenvalues of `phi'' + (c + b1) phi' + (a + b2) phi = lambda phi`
//! on `(0, L)` and the nonexistence certificate for slow speeds.

use crate::elliptic::solve_chemicals;
use crate::error::{domain, numerical, precondition, Result};
use crate::grid::{gradient, Field, Grid1D, Tail};
use crate::params::ChemoParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `phi(0) = phi(L) = 0`
    Dirichlet,
    /// `phi'(0) = 0`, `phi(L) = 0`
    NeumannDirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenProblem {
    pub length: f64,
    pub c: f64,
    pub a: f64,
    /// Drift perturbation on `[0, L]`; `None` means zero.
    pub b1: Option<Field>,
    /// Potential perturbation on `[0, L]`; `None` means zero.
    pub b2: Option<Field>,
    pub bc: BoundaryKind,
}

impl EigenProblem {
    pub fn constant(c: f64, a: f64, length: f64, bc: BoundaryKind) -> Self {
        EigenProblem {
            length,
            c,
            a,
            b1: None,
            b2: None,
            bc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(domain(format!("L must be > 0, got {}", self.length)));
        }
        if !(self.c.is_finite() && self.a.is_finite()) {
            return Err(domain("c and a must be finite"));
        }
        for f in [&self.b1, &self.b2].into_iter().flatten() {
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(domain("coefficient fields must be finite"));
            }
        }
        Ok(())
    }

    fn b_at(f: &Option<Field>, x: f64) -> f64 {
        f.as_ref().map_or(0.0, |f| f.eval(x))
    }

    fn b2_sup(&self) -> f64 {
        self.b2.as_ref().map_or(0.0, |f| f.sup_norm())
    }
}

/// Tridiagonal discretisation: row `i` is `lower[i] phi[i-1] + diag[i] phi[i] + upper[i] phi[i+1]`.
#[derive(Debug, Clone)]
struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<f64>,
}

/// Central second-order discretisation with `n` unknowns.
///
/// Dirichlet: interior nodes `x_i = i h`, `h = L/(n+1)`. Neumann-Dirichlet:
/// nodes `x_i = i h` for `i = 0..n`, `h = L/n`, with a reflected ghost at `x = -h`.
fn discretise(prob: &EigenProblem, n: usize) -> Result<Tridiagonal> {
    let (h, first) = match prob.bc {
        BoundaryKind::Dirichlet => (prob.length / (n + 1) as f64, 1usize),
        BoundaryKind::NeumannDirichlet => (prob.length / n as f64, 0usize),
    };
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut nodes = vec![0.0; n];
    for i in 0..n {
        let x = (i + first) as f64 * h;
        nodes[i] = x;
        let drift = prob.c + EigenProblem::b_at(&prob.b1, x);
        let pot = prob.a + EigenProblem::b_at(&prob.b2, x);
        let lo = 1.0 / (h * h) - drift / (2.0 * h);
        let up = 1.0 / (h * h) + drift / (2.0 * h);
        if !(lo > 0.0 && up > 0.0) {
            return Err(domain(format!(
                "n = {n} too small: cell Peclet number |c + b1| h / 2 = {} >= 1",
                drift.abs() * h / 2.0
            )));
        }
        lower[i] = lo;
        upper[i] = up;
        diag[i] = -2.0 / (h * h) + pot;
        if i == 0 && prob.bc == BoundaryKind::NeumannDirichlet {
            upper[i] = lo + up;
            lower[i] = 0.0;
        }
    }
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    Ok(Tridiagonal {
        lower,
        diag,
        upper,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCertificate {
    pub lambda_principal: f64,
    /// Normalised eigenfunction on the finest level (unit sup norm).
    pub eigenfunction: Vec<f64>,
    pub nodes: Vec<f64>,
    /// `(n, lambda)` for each level, coarse to fine.
    pub refinement_levels: Vec<(usize, f64)>,
    /// Richardson value `(4 lambda_fine - lambda_coarse) / 3` from the two finest levels.
    pub extrapolated: f64,
    pub iterations: usize,
}

pub const MIN_POINTS: usize = 64;
const MAX_ITER: usize = 20_000;

/// Largest eigenvalue of the discrete operator by shifted inverse power
/// iteration; returns `(lambda, vector, iterations)`.
fn inverse_power(t: &Tridiagonal, shift: f64) -> Result<(f64, Vec<f64>, usize)> {
    let n = t.diag.len();
    // (shift I - A) is an M-matrix with positive pivots.
    let lower: Vec<f64> = t.lower.iter().map(|v| -v).collect();
    let upper: Vec<f64> = t.upper.iter().map(|v| -v).collect();
    let diag: Vec<f64> = t.diag.iter().map(|v| shift - v).collect();
    let mut v = vec![1.0; n];
    let mut lambda = f64::NAN;
    for it in 1..=MAX_ITER {
        let w = crate::grid::solve_tridiagonal(&lower, &diag, &upper, &v);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let vw: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let est = shift - vv / vw;
        let norm = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = crate::grid::sup_distance(&next, &v);
        v = next;
        let converged = (est - lambda).abs() <= 1e-14 * (1.0 + est.abs()) && change < 1e-12;
        lambda = est;
        if converged {
            // Residual check of A v = lambda v.
            let res = apply(t, &v)
                .iter()
                .zip(&v)
                .fold(0.0_f64, |m, (av, x)| m.max((av - lambda * x).abs()));
            let scale = t.diag.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
            if res > 1e-8 * scale {
                return Err(numerical(format!(
                    "inverse iteration converged to a poor eigenpair (residual {res:.3e})"
                )));
            }
            return Ok((lambda, v, it));
        }
    }
    Err(numerical(format!(
        "inverse power iteration stagnated after {MAX_ITER} iterations (lambda ~ {lambda})"
    )))
}

fn apply(t: &Tridiagonal, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut s = t.diag[i] * v[i];
            if i > 0 {
                s += t.lower[i] * v[i - 1];
            }
            if i + 1 < n {
                s += t.upper[i] * v[i + 1];
            }
            s
        })
        .collect()
}

fn solve_level(prob: &EigenProblem, n: usize) -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
    let t = discretise(prob, n)?;
    let shift = prob.a + prob.b2_sup() + 1.0;
    let (lambda, v, it) = inverse_power(&t, shift)?;
    if let Some(i) = v.iter().position(|&x| x <= 0.0) {
        return Err(numerical(format!(
            "principal eigenfunction not positive at node {i} (n = {n})"
        )));
    }
    Ok((lambda, v, t.nodes, it))
}

/// Principal eigenvalue with two refinements (`n`, `2n+1`, `4n+3` unknowns for
/// Dirichlet; `n`, `2n`, `4n` for Neumann-Dirichlet, so nodes nest) and
/// Richardson extrapolation.
pub fn variable_coeff_principal_eig(prob: &EigenProblem, n: usize) -> Result<EigenCertificate> {
    prob.validate()?;
    if n < MIN_POINTS {
        return Err(domain(format!("n must be >= {MIN_POINTS}, got {n}")));
    }
    let refine = |m: usize| match prob.bc {
        BoundaryKind::Dirichlet => 2 * m + 1,
        BoundaryKind::NeumannDirichlet => 2 * m,
    };
    let mut levels = Vec::new();
    let mut m = n;
    let mut last = None;
    let mut iterations = 0;
    for _ in 0..3 {
        let (lambda, v, nodes, it) = solve_level(prob, m)?;
        iterations += it;
        levels.push((m, lambda));
        last = Some((v, nodes));
        m = refine(m);
    }
    let k = levels.len();
    let extrapolated = (4.0 * levels[k - 1].1 - levels[k - 2].1) / 3.0;
    let (eigenfunction, nodes) = last.expect("three levels solved");
    Ok(EigenCertificate {
        lambda_principal: levels[k - 1].1,
        eigenfunction,
        nodes,
        refinement_levels: levels,
        extrapolated,
        iterations,
    })
}

/// Dirichlet principal eigenvalue of `phi'' + c phi' + a phi` on `(0, L)`.
pub fn dirichlet_principal_eig(c: f64, a: f64, length: f64, n: usize) -> Result<EigenCertificate> {
    variable_coeff_principal_eig(&EigenProblem::constant(c, a, length, BoundaryKind::Dirichlet), n)
}

/// `a - c^2/4 - pi^2/L^2`
pub fn dirichlet_closed_form(c: f64, a: f64, length: f64) -> f64 {
    a - c * c / 4.0 - (std::f64::consts::PI / length).powi(2)
}

/// Neumann-Dirichlet principal eigenvalue of the constant-coefficient
/// operator, from `k cos(kL) + (c/2) sin(kL) = 0` (or its hyperbolic
/// counterpart when `c L < -2`).
pub fn neumann_dirichlet_closed_form(c: f64, a: f64, length: f64) -> f64 {
    let base = a - c * c / 4.0;
    let l = length;
    if c * l < -2.0 {
        let g = |k: f64| k * (k * l).cosh() + 0.5 * c * (k * l).sinh();
        let k = bisect(g, 0.0, 0.5 * c.abs());
        base + k * k
    } else if c * l == -2.0 {
        base
    } else {
        let f = |k: f64| k * (k * l).cos() + 0.5 * c * (k * l).sin();
        let k = bisect(f, 0.0, std::f64::consts::PI / l);
        base - k * k
    }
}

/// Root of `f` on `(lo, hi)` given `f(lo+) > 0 > f(hi)` (or the reverse).
fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let probe = lo + 1e-9 * (hi - lo);
    let pos_low = f(probe) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == pos_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `L = pi / sqrt(a - c^2/4 - lambda0)`, the interval on which the Dirichlet
/// principal eigenvalue equals `lambda0`.
pub fn find_l_for_lambda0(c: f64, a: f64, lambda0: f64) -> Result<f64> {
    let gap = a - c * c / 4.0 - lambda0;
    if !(gap > 0.0) {
        return Err(precondition(format!(
            "c^2 - 4a + 4 lambda0 < 0 violated (c = {c}, a = {a}, lambda0 = {lambda0})"
        )));
    }
    Ok(std::f64::consts::PI / gap.sqrt())
}

/// Interval length on which the Neumann-Dirichlet principal eigenvalue of
/// the constant-coefficient operator with `c < 0` equals `lambda0 < a`.
pub fn find_l_for_lambda0_nd(c: f64, a: f64, lambda0: f64) -> Result<f64> {
    if !(c < 0.0) {
        return Err(precondition(format!("Neumann-Dirichlet branch needs c < 0, got {c}")));
    }
    if !(lambda0 < a) {
        return Err(precondition(format!(
            "lambda0 = {lambda0} must be below a = {a} on the Neumann-Dirichlet branch"
        )));
    }
    let base = a - c * c / 4.0;
    let s = 2.0 / c.abs();
    if lambda0 > base {
        let k = (lambda0 - base).sqrt();
        Ok((k * s).atanh() / k)
    } else if lambda0 == base {
        Ok(s)
    } else {
        let k = (base - lambda0).sqrt();
        Ok((k * s).atan() / k)
    }
}

/// Largest eigenvalue of the same discrete operator after the diagonal
/// similarity that symmetrises it (the discrete form of `phi = e^{-cx/2} psi`),
/// located by Sturm-sequence bisection.
pub fn symmetric_gauge_eig(prob: &EigenProblem, n: usize) -> Result<f64> {
    prob.validate()?;
    let t = discretise(prob, n)?;
    let off: Vec<f64> = (1..n).map(|i| (t.lower[i] * t.upper[i - 1]).sqrt()).collect();
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1] } else { 0.0 } + if i + 1 < n { off[i] } else { 0.0 };
        lo = lo.min(t.diag[i] - r);
        hi = hi.max(t.diag[i] + r);
    }
    // Number of eigenvalues greater than x.
    let count_above = |x: f64| -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            q = (t.diag[i] - x) - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = f64::MIN_POSITIVE;
            }
            if q > 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_above(mid) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The perturbed principal eigenvalue is positive: no positive solution
    /// of the tail equation exists there, so no wave has this speed.
    NoWave,
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub c: f64,
    pub bc: BoundaryKind,
    pub eps: f64,
    pub lambda0: f64,
    pub length: f64,
    /// Window `[x_s, x_s + L]` on the profile grid.
    pub window: Option<(f64, f64)>,
    /// Perturbed principal eigenvalue (extrapolated), NaN when inconclusive.
    pub lambda_eps: f64,
    /// Same discretisation with the perturbations removed.
    pub lambda_unperturbed: f64,
    pub certificate: Option<EigenCertificate>,
    pub verdict: Verdict,
}

pub fn default_eps(p: &ChemoParams) -> f64 {
    1e-3 * p.a / p.b
}

/// Dirichlet branch for `0 <= c < 2 sqrt(a)`, Neumann-Dirichlet for `c < 0`.
/// The perturbations `b1 = d/dx (chi2 V2 - chi1 V1)` and
/// `b2 = chi2 lambda2 V2 - chi1 lambda1 V1 - damping U` are read off the
/// leftmost window of length `L` on which `U`, `V1`, `V2` and `|V1'|`,
/// `|V2'|` are all below `eps` (for `c < 0` also `U' < 0` at its left end).
pub fn nonexistence_certificate(
    p: &ChemoParams,
    c: f64,
    profile: &Field,
    eps: Option<f64>,
    n: usize,
) -> Result<CertificateReport> {
    p.validate()?;
    let kpp = p.kpp_speed();
    if !(c < kpp) {
        return Err(precondition(format!(
            "certificate needs c < 2 sqrt(a) = {kpp}, got c = {c}"
        )));
    }
    let eps = eps.unwrap_or_else(|| default_eps(p));
    if !(eps > 0.0) {
        return Err(domain("eps must be > 0"));
    }
    let (bc, lambda0, length) = if c >= 0.0 {
        let l0 = (4.0 * p.a - c * c) / 8.0;
        (BoundaryKind::Dirichlet, l0, find_l_for_lambda0(c, p.a, l0)?)
    } else {
        let l0 = 0.5 * p.a;
        (BoundaryKind::NeumannDirichlet, l0, find_l_for_lambda0_nd(c, p.a, l0)?)
    };

    let g = profile.grid;
    let (v_sup, dv_sup, q, pot) = if p.chi1 == 0.0 && p.chi2 == 0.0 {
        let z = vec![0.0; g.n];
        (z.clone(), z.clone(), z.clone(), z)
    } else {
        let ch = solve_chemicals(profile, p)?;
        let q = ch.drift(p).values;
        let pot = ch.potential(p).values;
        let dv: Vec<f64> = ch
            .dv1
            .values
            .iter()
            .zip(&ch.dv2.values)
            .map(|(a, b)| a.abs().max(b.abs()))
            .collect();
        let vmax: Vec<f64> = ch
            .v1
            .values
            .iter()
            .zip(&ch.v2.values)
            .map(|(a, b)| a.abs().max(b.abs()))
            .collect();
        (vmax, dv, q, pot)
    };
    let du = gradient(&profile.values, g.dx());
    let small: Vec<bool> = (0..g.n)
        .map(|i| profile.values[i] > 0.0 && profile.values[i] < eps && v_sup[i] < eps && dv_sup[i] < eps)
        .collect();

    let inconclusive = |why: String| CertificateReport {
        c,
        bc,
        eps,
        lambda0,
        length,
        window: None,
        lambda_eps: f64::NAN,
        lambda_unperturbed: f64::NAN,
        certificate: None,
        verdict: Verdict::Inconclusive(why),
    };

    // Leftmost start whose whole window is small.
    let span = (length / g.dx()).ceil() as usize;
    let mut start = None;
    let mut run = 0usize;
    for i in (0..g.n).rev() {
        run = if small[i] { run + 1 } else { 0 };
        if run > span && (bc == BoundaryKind::Dirichlet || du[i] < 0.0) {
            start = Some(i);
        }
    }
    let Some(s) = start else {
        return Ok(inconclusive(format!(
            "no window of length {length:.6} with U, V < {eps:.3e} on the grid"
        )));
    };
    let x_s = g.x(s);

    let damp = p.damping();
    let sub = Grid1D::new(0.0, g.dx() * span as f64, span + 1)?;
    let b1: Vec<f64> = (0..=span).map(|j| q[s + j]).collect();
    let b2: Vec<f64> = (0..=span)
        .map(|j| pot[s + j] - damp * profile.values[s + j])
        .collect();
    let prob = EigenProblem {
        length,
        c,
        a: p.a,
        b1: Some(Field::new(sub, b1, Tail::constant(0.0), Tail::constant(0.0))?),
        b2: Some(Field::new(sub, b2, Tail::constant(0.0), Tail::constant(0.0))?),
        bc,
    };
    let cert = variable_coeff_principal_eig(&prob, n)?;
    let base = variable_coeff_principal_eig(&EigenProblem::constant(c, p.a, length, bc), n)?;
    let lambda_eps = cert.extrapolated;
    let verdict = if lambda_eps > 0.0 {
        Verdict::NoWave
    } else {
        Verdict::Inconclusive(format!(
            "perturbed principal eigenvalue {lambda_eps:.6e} is not positive; decrease eps"
        ))
    };
    Ok(CertificateReport {
        c,
        bc,
        eps,
        lambda0,
        length,
        window: Some((x_s, x_s + length)),
        lambda_eps,
        lambda_unperturbed: base.extrapolated,
        certificate: Some(cert),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_closed_form_values() {
        let pi = std::f64::consts::PI;
        assert!((dirichlet_closed_form(0.0, 0.0, pi) + 1.0).abs() < 1e-15);
        assert!((dirichlet_closed_form(1.0, 1.0, pi) + 0.25).abs() < 1e-15);
        let e = dirichlet_principal_eig(1.0, 1.0, pi, 128).unwrap();
        assert!((e.extrapolated + 0.25).abs() < 1e-6, "{}", e.extrapolated);
        assert!(e.eigenfunction.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn find_l_values() {
        let pi = std::f64::consts::PI;
        assert!((find_l_for_lambda0(0.0, 1.0, 0.0).unwrap() - pi).abs() < 1e-15);
        assert!((find_l_for_lambda0(1.0, 1.0, 0.5).unwrap() - 2.0 * pi).abs() < 1e-14);
        assert!(find_l_for_lambda0(2.0, 1.0, 0.0).is_err());
        for (c, a, l0) in [(-2.0, 1.0, 0.5), (-1.0, 2.0, 0.5)] {
            let l = find_l_for_lambda0_nd(c, a, l0).unwrap();
            assert!((neumann_dirichlet_closed_form(c, a, l) - l0).abs() < 1e-12);
        }
        assert!(find_l_for_lambda0_nd(1.0, 1.0, 0.5).is_err());
        assert!(find_l_for_lambda0_nd(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nd_closed_form_branches() {
        // c = 0: cos(kL) = 0, k = pi / 2L
        let l = 3.0;
        let want = 1.0 - (std::f64::consts::PI / (2.0 * l)).powi(2);
        assert!((neumann_dirichlet_closed_form(0.0, 1.0, l) - want).abs() < 1e-12);
        // long intervals with c < 0 approach a
        assert!((neumann_dirichlet_closed_form(-1.0, 1.0, 60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_matches_direct() {
        for (c, bc) in [(1.3, BoundaryKind::Dirichlet), (-0.8, BoundaryKind::NeumannDirichlet)] {
            let prob = EigenProblem::constant(c, 1.0, 7.0, bc);
            let t = discretise(&prob, 200).unwrap();
            let (direct, _, _) = inverse_power(&t, 2.0).unwrap();
            let sym = symmetric_gauge_eig(&prob, 200).unwrap();
            assert!((direct - sym).abs() < 1e-8, "{direct} {sym}");
        }
    }

    #[test]
    fn synthetic_tail_certificate() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let g = Grid1D::new(-10.0, 60.0, 7001).unwrap();
        let u = Field::from_fn(g, |x| (-x).exp(), Tail::constant(10f64.exp()), Tail::exponential((-60f64).exp(), 1.0))
            .unwrap();
        let r = nonexistence_certificate(&p, 1.0, &u, Some(1e-3), 128).unwrap();
        assert_eq!(r.verdict, Verdict::NoWave);
        assert!((r.lambda_eps - r.lambda0).abs() < 2e-3);
        let r2 = nonexistence_certificate(&p, 1.0, &u, Some(5e-4), 128).unwrap();
        let ratio = (r.lambda_eps - r.lambda_unperturbed) / (r2.lambda_eps - r2.lambda_unperturbed);
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        assert!(nonexistence_certificate(&p, 2.0, &u, None, 128).is_err());
    }

    #[test]
    fn certificate_without_window_is_inconclusive() {
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let g = Grid1D::new(-10.0, 10.0, 2001).unwrap();
        let u = Field::constant(g, 1.0);
        let r = nonexistence_certificate(&p, 1.0, &u, None, 128).unwrap();
        assert!(matches!(r.verdict, Verdict::Inconclusive(_)));
        assert!(r.lambda_eps.is_nan());
    }
}
