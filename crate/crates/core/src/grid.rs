//! Uniform 1-D grids, sampled fields with tail extensions, and the Thomas
//! solver shared by the time steppers and eigen solvers.

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(domain("grid bounds must be finite"));
        }
        if n < Self::MIN_POINTS {
            return Err(domain(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(x_max > x_min) {
            return Err(domain(format!("x_max = {x_max} must exceed x_min = {x_min}")));
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        // Interpolate from both ends so the last node is exactly x_max.
        let t = i as f64 / (self.n - 1) as f64;
        self.x_min * (1.0 - t) + self.x_max * t
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    /// Index of the last node with `x_i <= x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx()).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n - 1)
        }
    }

    /// Grid for wave problems: `[-80, 80] * max(1, 1/sqrt(min(lambda1, lambda2, a)))`.
    pub fn default_for(a: f64, lambda1: f64, lambda2: f64) -> Self {
        let scale = (1.0 / lambda1.min(lambda2).min(a).sqrt()).max(1.0);
        Grid1D {
            x_min: -80.0 * scale,
            x_max: 80.0 * scale,
            n: 4096,
        }
    }
}

/// Extension of a field beyond one end of its grid: at distance `s` past the
/// edge the value is `at_edge * exp(-rate * s)`. A zero rate is a constant
/// extension; a negative rate grows away from the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub at_edge: f64,
    pub rate: f64,
}

impl Tail {
    pub fn constant(v: f64) -> Self {
        Tail {
            at_edge: v,
            rate: 0.0,
        }
    }

    pub fn exponential(at_edge: f64, rate: f64) -> Self {
        Tail { at_edge, rate }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.at_edge * (-self.rate * s).exp()
    }
}

/// A function sampled on a uniform grid together with its tail extensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub left: Tail,
    pub right: Tail,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>, left: Tail, right: Tail) -> Result<Self> {
        if values.len() != grid.n {
            return Err(domain(format!(
                "field has {} values for a {}-point grid",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("field values must be finite"));
        }
        if !(left.at_edge.is_finite()
            && left.rate.is_finite()
            && right.at_edge.is_finite()
            && right.rate.is_finite())
        {
            return Err(domain("tail parameters must be finite"));
        }
        Ok(Field {
            grid,
            values,
            left,
            right,
        })
    }

    /// Field with constant extensions equal to the end values.
    pub fn with_flat_tails(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        let (l, r) = (values[0], values[values.len() - 1]);
        Self::new(grid, values, Tail::constant(l), Tail::constant(r))
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64, left: Tail, right: Tail) -> Result<Self> {
        Self::new(grid, grid.sample(f), left, right)
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n],
            left: Tail::constant(0.0),
            right: Tail::constant(0.0),
        }
    }

    pub fn constant(grid: Grid1D, v: f64) -> Self {
        Field {
            grid,
            values: vec![v; grid.n],
            left: Tail::constant(v),
            right: Tail::constant(v),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Evaluates the piecewise-linear interpolant, using the tails outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.x_min {
            return self.left.value(g.x_min - x);
        }
        if x >= g.x_max {
            return self.right.value(x - g.x_max);
        }
        let i = g.locate(x).min(g.n - 2);
        let t = (x - g.x(i)) / g.dx();
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |self - other|` over the shared grid.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    /// Weighted local norm `sum_n 2^-n sup_{[-n, n]} |u|`, truncated where
    /// the window covers the grid.
    pub fn star_norm(&self) -> f64 {
        let g = &self.grid;
        let reach = g.x_min.abs().max(g.x_max.abs()).ceil().max(1.0) as usize;
        let mut by_radius = vec![0.0_f64; reach + 1];
        for (i, v) in self.values.iter().enumerate() {
            let r = (g.x(i).abs().ceil() as usize).clamp(1, reach);
            by_radius[r] = by_radius[r].max(v.abs());
        }
        let mut total = 0.0;
        let mut running = 0.0_f64;
        let mut weight = 0.5;
        for sup in by_radius.iter().skip(1) {
            running = running.max(*sup);
            total += weight * running;
            weight *= 0.5;
        }
        // Windows wider than the grid all see the full sup.
        total + 2.0 * weight * running
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            left: Tail {
                at_edge: f(self.left.at_edge),
                rate: self.left.rate,
            },
            right: Tail {
                at_edge: f(self.right.at_edge),
                rate: self.right.rate,
            },
        }
    }
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting: intended for the
/// diagonally dominant M-matrices produced by the implicit steppers.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / den;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Centered first difference with one-sided differences at the ends.
pub fn gradient(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        g[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    g[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx);
    g[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dx);
    g
}
