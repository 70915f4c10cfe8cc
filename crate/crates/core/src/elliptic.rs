//! Screened Poisson solves `0 = v'' - lambda v + mu u` on the whole line.
//!
//! The solution is `v = mu * (G * u)` with `G(x) = exp(-sqrt(lambda)|x|) / (2 sqrt(lambda))`.
//! The on-grid part of the convolution is evaluated exactly for the
//! piecewise-linear interpolant of `u` with two O(n) exponential sweeps;
//! the tail extensions are integrated in closed form. The interpolation
//! error of the on-grid part is removed to fourth order with the identity
//! `G * u'' = lambda G * u - u` (plus boundary terms), which needs no
//! derivative data beyond the tail rates.

use crate::error::{domain, numerical, Result};
use crate::grid::{gradient, Field, Tail};
use crate::params::ChemoParams;

/// `exp(-sqrt(lambda)|x|) / (2 sqrt(lambda))`.
pub fn green_kernel(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be > 0, got {lambda}")));
    }
    let k = lambda.sqrt();
    Ok((-k * x.abs()).exp() / (2.0 * k))
}

/// Derivative of [`green_kernel`] in `x` (zero at the origin by symmetry).
pub fn green_kernel_derivative(lambda: f64, x: f64) -> Result<f64> {
    let g = green_kernel(lambda, x)?;
    Ok(-x.signum() * lambda.sqrt() * g * if x == 0.0 { 0.0 } else { 1.0 })
}

/// `G * u` and `(G * u)'` on the grid nodes.
struct Convolution {
    value: Vec<f64>,
    slope: Vec<f64>,
}

fn check_inputs(u: &Field, lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain(format!("mu must be > 0, got {mu}")));
    }
    let k = lambda.sqrt();
    for (side, t) in [("left", u.left), ("right", u.right)] {
        if t.rate <= -k {
            return Err(domain(format!(
                "{side} tail grows at rate {} >= sqrt(lambda) = {k}; convolution diverges",
                -t.rate
            )));
        }
    }
    Ok(k)
}

fn convolve(u: &Field, lambda: f64, k: f64) -> Convolution {
    let g = &u.grid;
    let n = g.n;
    let h = g.dx();
    let vals = &u.values;
    let kh = k * h;
    let e = (-kh).exp();
    let one_minus_e = -(-kh).exp_m1();
    // One cell [0, h], kernel exp(-k (h - t)), hat functions (1 - t/h) and t/h.
    let w_far = (one_minus_e - kh * e) / (k * kh);
    let w_near = one_minus_e / k - w_far;

    // Exponential sweeps over the interpolant restricted to the grid.
    let mut left = vec![0.0; n];
    for i in 1..n {
        left[i] = e * left[i - 1] + w_far * vals[i - 1] + w_near * vals[i];
    }
    let mut right = vec![0.0; n];
    for i in (0..n - 1).rev() {
        right[i] = e * right[i + 1] + w_near * vals[i] + w_far * vals[i + 1];
    }

    let (x0, xn) = (g.x_min, g.x_max);
    let (u0, un) = (vals[0], vals[n - 1]);
    let (rl, rr) = (u.left.rate, u.right.rate);
    let corr = h * h / 12.0;
    let denom = 1.0 + lambda * corr;
    let du = gradient(vals, h);

    let tail_l = u.left.at_edge / (k + rl);
    let tail_r = u.right.at_edge / (k + rr);

    let mut value = vec![0.0; n];
    let mut slope = vec![0.0; n];
    for i in 0..n {
        let x = g.x(i);
        let el = (-k * (x - x0)).exp();
        let er = (-k * (xn - x)).exp();

        // Boundary terms of integrating G * u'' by parts over the grid, using
        // the tail rates for the edge derivatives.
        let bl = 0.5 * u0 * (1.0 - rl / k);
        let br = 0.5 * un * (1.0 - rr / k);
        let bnd = el * bl + er * br;
        let bnd_slope = k * (er * br - el * bl);

        let s_h = (left[i] + right[i]) / (2.0 * k);
        let d_h = 0.5 * (right[i] - left[i]);
        let s = (s_h + corr * (vals[i] - bnd)) / denom;
        let d = (d_h + corr * (du[i] - bnd_slope)) / denom;

        let t = (el * tail_l + er * tail_r) / (2.0 * k);
        let t_slope = 0.5 * (er * tail_r - el * tail_l);
        value[i] = s + t;
        slope[i] = d + t_slope;
    }
    Convolution { value, slope }
}

fn output_tails(u: &Field, k: f64, v: &[f64]) -> (Tail, Tail) {
    let n = v.len();
    (
        Tail::exponential(v[0], u.left.rate.min(k)),
        Tail::exponential(v[n - 1], u.right.rate.min(k)),
    )
}

/// `v = mu (G * u)`, the bounded solution of `v'' - lambda v + mu u = 0`.
pub fn solve_screened(u: &Field, lambda: f64, mu: f64) -> Result<Field> {
    let k = check_inputs(u, lambda, mu)?;
    let conv = convolve(u, lambda, k);
    let v: Vec<f64> = conv.value.iter().map(|s| mu * s).collect();
    let (l, r) = output_tails(u, k, &v);
    Ok(Field {
        grid: u.grid,
        values: v,
        left: l,
        right: r,
    })
}

/// `v'` for the solution of [`solve_screened`], from the derivative kernel.
pub fn solve_screened_derivative(u: &Field, lambda: f64, mu: f64) -> Result<Field> {
    let k = check_inputs(u, lambda, mu)?;
    let conv = convolve(u, lambda, k);
    let dv: Vec<f64> = conv.slope.iter().map(|s| mu * s).collect();
    Ok(Field {
        grid: u.grid,
        values: dv,
        left: Tail::exponential(0.0, 0.0),
        right: Tail::exponential(0.0, 0.0),
    })
}

/// `v` and `v'` together (one pair of sweeps).
pub fn solve_screened_pair(u: &Field, lambda: f64, mu: f64) -> Result<(Field, Field)> {
    let k = check_inputs(u, lambda, mu)?;
    let conv = convolve(u, lambda, k);
    let v: Vec<f64> = conv.value.iter().map(|s| mu * s).collect();
    let dv: Vec<f64> = conv.slope.iter().map(|s| mu * s).collect();
    let (l, r) = output_tails(u, k, &v);
    let vf = Field {
        grid: u.grid,
        values: v,
        left: l,
        right: r,
    };
    let dvf = Field {
        grid: u.grid,
        values: dv,
        left: Tail::constant(0.0),
        right: Tail::constant(0.0),
    };
    Ok((vf, dvf))
}

/// Interior residual `sup |v'' - lambda v + mu u| / sup |mu u|`, with `v''`
/// from second differences.
pub fn screened_residual(u: &Field, v: &Field, lambda: f64, mu: f64) -> f64 {
    let h = u.grid.dx();
    let n = u.len();
    let scale = (mu * u.sup_norm()).max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for i in 1..n - 1 {
        let d2 = (v.values[i + 1] - 2.0 * v.values[i] + v.values[i - 1]) / (h * h);
        let r = d2 - lambda * v.values[i] + mu * u.values[i];
        worst = worst.max(r.abs());
    }
    worst / scale
}

/// [`solve_screened`] followed by a residual check: fails when the relative
/// residual exceeds `c * dx^2`. Only meaningful for smooth `u`; rough
/// fields legitimately produce O(1) second-difference residuals.
pub fn solve_screened_checked(u: &Field, lambda: f64, mu: f64, c: f64) -> Result<Field> {
    let v = solve_screened(u, lambda, mu)?;
    let h = u.grid.dx();
    let r = screened_residual(u, &v, lambda, mu);
    if r > c * h * h {
        return Err(numerical(format!(
            "screened Poisson residual {r:.3e} exceeds {c} dx^2 = {:.3e}; grid too coarse",
            c * h * h
        )));
    }
    Ok(v)
}

/// The two chemical concentrations and their gradients for a density `u`.
#[derive(Debug, Clone)]
pub struct Chemicals {
    pub v1: Field,
    pub v2: Field,
    pub dv1: Field,
    pub dv2: Field,
}

pub fn solve_chemicals(u: &Field, p: &ChemoParams) -> Result<Chemicals> {
    let (v1, dv1) = solve_screened_pair(u, p.lambda1, p.mu1)?;
    let (v2, dv2) = solve_screened_pair(u, p.lambda2, p.mu2)?;
    Ok(Chemicals { v1, v2, dv1, dv2 })
}

impl Chemicals {
    /// `d/dx (chi2 V2 - chi1 V1)`
    pub fn drift(&self, p: &ChemoParams) -> Field {
        combine(&self.dv2, p.chi2, &self.dv1, p.chi1)
    }

    /// `chi2 lambda2 V2 - chi1 lambda1 V1`
    pub fn potential(&self, p: &ChemoParams) -> Field {
        combine(&self.v2, p.chi2 * p.lambda2, &self.v1, p.chi1 * p.lambda1)
    }
}

fn combine(plus: &Field, cp: f64, minus: &Field, cm: f64) -> Field {
    let values = plus
        .values
        .iter()
        .zip(&minus.values)
        .map(|(a, b)| cp * a - cm * b)
        .collect();
    Field {
        grid: plus.grid,
        values,
        left: Tail::constant(cp * plus.left.at_edge - cm * minus.left.at_edge),
        right: Tail::constant(cp * plus.right.at_edge - cm * minus.right.at_edge),
    }
}

/// Coefficient fields of the frozen-coefficient equation generated by `u`:
/// `drift = d/dx (chi2 V2 - chi1 V1)` and
/// `potential = chi2 lambda2 V2 - chi1 lambda1 V1`.
pub fn combo_drift_and_potential(u: &Field, p: &ChemoParams) -> Result<(Field, Field)> {
    if p.chi1 == 0.0 && p.chi2 == 0.0 {
        return Ok((Field::zeros(u.grid), Field::zeros(u.grid)));
    }
    let ch = solve_chemicals(u, p)?;
    Ok((ch.drift(p), ch.potential(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn phi_field(g: Grid1D, sigma: f64) -> Field {
        Field::from_fn(
            g,
            |x| (-sigma * x).exp(),
            Tail::exponential((-sigma * g.x_min).exp(), -sigma),
            Tail::exponential((-sigma * g.x_max).exp(), sigma),
        )
        .unwrap()
    }

    /// Time-integrated heat kernel at x = 0: int_0^inf e^{-lambda s} (4 pi s)^{-1/2} ds,
    /// by midpoint quadrature after s = t^2.
    fn heat_kernel_integral_at_zero(lambda: f64) -> f64 {
        // s = t^2, ds = 2t dt: integrand 2t e^{-lambda t^2} / sqrt(4 pi) / t.
        let n = 200_000;
        let t_max = 12.0 / lambda.sqrt();
        let dt = t_max / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                2.0 * (-lambda * t * t).exp() / (4.0 * std::f64::consts::PI).sqrt()
            })
            .sum::<f64>()
            * dt
    }

    #[test]
    fn kernel_matches_heat_kernel_integral() {
        for lambda in [1.0, 4.0] {
            let oracle = heat_kernel_integral_at_zero(lambda);
            let g = green_kernel(lambda, 0.0).unwrap();
            assert!((g - oracle).abs() < 1e-9, "lambda={lambda}: {g} vs {oracle}");
        }
        assert_eq!(green_kernel(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(green_kernel(4.0, 0.0).unwrap(), 0.25);
        assert!(green_kernel(1.0, 800.0).unwrap() == 0.0);
        assert!(green_kernel(0.0, 1.0).is_err());
        assert!(green_kernel(-1.0, 1.0).is_err());
    }

    #[test]
    fn constant_density() {
        let g = Grid1D::new(-30.0, 30.0, 601).unwrap();
        let u = Field::constant(g, 0.7);
        let v = solve_screened(&u, 2.0, 3.0).unwrap();
        for x in &v.values {
            assert!((x - 3.0 * 0.7 / 2.0).abs() < 1e-13);
        }
        let dv = solve_screened_derivative(&u, 2.0, 3.0).unwrap();
        assert!(dv.sup_norm() < 1e-13);

        let z = solve_screened(&Field::zeros(g), 2.0, 3.0).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn exponential_density() {
        // v = mu phi / (lambda - a mu_d^2) with sigma = sqrt(a) mu_d.
        let g = Grid1D::new(-40.0, 40.0, 2048).unwrap();
        let (lambda, mu, sigma) = (1.0, 1.5, 0.5);
        let u = phi_field(g, sigma);
        let (v, dv) = solve_screened_pair(&u, lambda, mu).unwrap();
        let coef = mu / (lambda - sigma * sigma);
        let mut worst = 0.0_f64;
        let mut worst_d = 0.0_f64;
        for i in 0..g.n {
            let phi = u.values[i];
            worst = worst.max((v.values[i] / (coef * phi) - 1.0).abs());
            worst_d = worst_d.max((dv.values[i] / (-sigma * coef * phi) - 1.0).abs());
        }
        assert!(worst < 1e-7, "relative error {worst}");
        assert!(worst_d < 1e-6, "relative derivative error {worst_d}");
    }

    #[test]
    fn derivative_matches_centered_differences() {
        let g = Grid1D::new(-20.0, 20.0, 1601).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / (1.0 + x.exp()), Tail::constant(1.0), Tail::constant(0.0))
            .unwrap();
        let (v, dv) = solve_screened_pair(&u, 2.0, 1.0).unwrap();
        let fd = gradient(&v.values, g.dx());
        let h2 = g.dx() * g.dx();
        for i in 1..g.n - 1 {
            assert!((fd[i] - dv.values[i]).abs() < 0.5 * h2, "i={i}");
        }
    }

    #[test]
    fn residual_is_second_order_on_smooth_data() {
        let mut prev = None;
        for n in [401, 801] {
            let g = Grid1D::new(-20.0, 20.0, n).unwrap();
            let u = Field::from_fn(g, |x| (-x * x / 4.0).exp(), Tail::constant(0.0), Tail::constant(0.0))
                .unwrap();
            let v = solve_screened(&u, 1.5, 1.0).unwrap();
            let r = screened_residual(&u, &v, 1.5, 1.0);
            if let Some(p) = prev {
                let ratio: f64 = p / r;
                assert!(ratio > 3.5, "ratio {ratio}");
            }
            prev = Some(r);
            assert!(solve_screened_checked(&u, 1.5, 1.0, 1.0).is_ok());
        }
    }

    #[test]
    fn checked_solve_flags_coarse_grid() {
        let g = Grid1D::new(-20.0, 20.0, 17).unwrap();
        let u = Field::from_fn(g, |x| (-x * x).exp(), Tail::constant(0.0), Tail::constant(0.0)).unwrap();
        assert!(matches!(
            solve_screened_checked(&u, 1.0, 1.0, 1e-3),
            Err(crate::Error::Numerical(_))
        ));
    }

    #[test]
    fn rejects_divergent_tail() {
        let g = Grid1D::new(-10.0, 10.0, 64).unwrap();
        let u = phi_field(g, 1.5);
        assert!(solve_screened(&u, 1.0, 1.0).is_err());
        assert!(solve_screened(&Field::zeros(g), 0.0, 1.0).is_err());
        assert!(solve_screened(&Field::zeros(g), 1.0, 0.0).is_err());
    }

    #[test]
    fn no_chemotaxis_coefficients_vanish() {
        let g = Grid1D::new(-10.0, 10.0, 64).unwrap();
        let p = ChemoParams::kpp(1.0, 1.0).unwrap();
        let u = Field::constant(g, 1.0);
        let (d, q) = combo_drift_and_potential(&u, &p).unwrap();
        assert_eq!(d.sup_norm(), 0.0);
        assert_eq!(q.sup_norm(), 0.0);
    }

    #[test]
    fn kernel_derivative_sign() {
        assert!(green_kernel_derivative(1.0, 1.0).unwrap() < 0.0);
        assert!(green_kernel_derivative(1.0, -1.0).unwrap() > 0.0);
        assert_eq!(green_kernel_derivative(1.0, 0.0).unwrap(), 0.0);
    }
}
