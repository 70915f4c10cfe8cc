//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, unknown or repeated keys are
//! rejected. [`RunConfig::canonical`] prints every key in a fixed order
//! using the shortest round-trip form of each number, so parsing the
//! canonical text gives back the same configuration.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolver::StepperOptions;
use crate::front::SpreadingOptions;
use crate::grid::Grid1D;
use crate::params::ChemoParams;
use crate::wave::WaveOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ChemoParams,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub steady_tol: Option<f64>,
    pub fp_tol: Option<f64>,
    pub k_max: usize,
    pub omega: f64,
    pub residual_bound: f64,
    /// Wave or certificate speed.
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub eig_n: usize,
    pub eig_length: Option<f64>,
    /// Horizon for `evolve` and `speed`.
    pub t_end: Option<f64>,
    pub stride: usize,
    pub scan_points: usize,
    pub bisect_tol: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ChemoParams {
                a: 1.0,
                b: 1.0,
                chi1: 0.0,
                chi2: 0.0,
                mu1: 1.0,
                mu2: 1.0,
                lambda1: 1.0,
                lambda2: 1.0,
            },
            x_min: None,
            x_max: None,
            n: None,
            dt: None,
            t_max: None,
            steady_tol: None,
            fp_tol: None,
            k_max: 200,
            omega: 1.0,
            residual_bound: 1e-4,
            c: None,
            eps: None,
            eig_n: 256,
            eig_length: None,
            t_end: None,
            stride: 10,
            scan_points: crate::params::DEFAULT_SCAN_POINTS,
            bisect_tol: crate::params::DEFAULT_BISECT_TOL,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "a",
    "b",
    "chi1",
    "chi2",
    "mu1",
    "mu2",
    "lambda1",
    "lambda2",
    "x_min",
    "x_max",
    "n",
    "dt",
    "t_max",
    "steady_tol",
    "fp_tol",
    "k_max",
    "omega",
    "residual_bound",
    "c",
    "eps",
    "eig_n",
    "eig_length",
    "t_end",
    "stride",
    "scan_points",
    "bisect_tol",
    "seed",
];

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| cfg_err(format!("{key}: cannot parse '{v}' as a number")))?;
    if !x.is_finite() {
        return Err(cfg_err(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| cfg_err(format!("{key}: cannot parse '{v}' as a nonnegative integer")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(cfg_err(format!("line {}: duplicate key '{k}'", ln + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| cfg_err(format!("line {}: {}", ln + 1, strip(e))))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let f = |v: &str| parse_f64(key, v);
        let p = &mut self.params;
        match key {
            "a" => p.a = f(v)?,
            "b" => p.b = f(v)?,
            "chi1" => p.chi1 = f(v)?,
            "chi2" => p.chi2 = f(v)?,
            "mu1" => p.mu1 = f(v)?,
            "mu2" => p.mu2 = f(v)?,
            "lambda1" => p.lambda1 = f(v)?,
            "lambda2" => p.lambda2 = f(v)?,
            "x_min" => self.x_min = Some(f(v)?),
            "x_max" => self.x_max = Some(f(v)?),
            "n" => self.n = Some(parse_usize(key, v)?),
            "dt" => self.dt = Some(f(v)?),
            "t_max" => self.t_max = Some(f(v)?),
            "steady_tol" => self.steady_tol = Some(f(v)?),
            "fp_tol" => self.fp_tol = Some(f(v)?),
            "k_max" => self.k_max = parse_usize(key, v)?,
            "omega" => self.omega = f(v)?,
            "residual_bound" => self.residual_bound = f(v)?,
            "c" => self.c = Some(f(v)?),
            "eps" => self.eps = Some(f(v)?),
            "eig_n" => self.eig_n = parse_usize(key, v)?,
            "eig_length" => self.eig_length = Some(f(v)?),
            "t_end" => self.t_end = Some(f(v)?),
            "stride" => self.stride = parse_usize(key, v)?,
            "scan_points" => self.scan_points = parse_usize(key, v)?,
            "bisect_tol" => self.bisect_tol = f(v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| cfg_err(format!("seed: cannot parse '{v}'")))?
            }
            _ => return Err(cfg_err(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key in [`KEYS`] order; unset optional keys are omitted.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("a", p.a.to_string());
        put("b", p.b.to_string());
        put("chi1", p.chi1.to_string());
        put("chi2", p.chi2.to_string());
        put("mu1", p.mu1.to_string());
        put("mu2", p.mu2.to_string());
        put("lambda1", p.lambda1.to_string());
        put("lambda2", p.lambda2.to_string());
        let opt = |x: Option<f64>| x.map(|v| v.to_string());
        for (k, v) in [
            ("x_min", opt(self.x_min)),
            ("x_max", opt(self.x_max)),
            ("n", self.n.map(|v| v.to_string())),
            ("dt", opt(self.dt)),
            ("t_max", opt(self.t_max)),
            ("steady_tol", opt(self.steady_tol)),
            ("fp_tol", opt(self.fp_tol)),
            ("k_max", Some(self.k_max.to_string())),
            ("omega", Some(self.omega.to_string())),
            ("residual_bound", Some(self.residual_bound.to_string())),
            ("c", opt(self.c)),
            ("eps", opt(self.eps)),
            ("eig_n", Some(self.eig_n.to_string())),
            ("eig_length", opt(self.eig_length)),
            ("t_end", opt(self.t_end)),
            ("stride", Some(self.stride.to_string())),
            ("scan_points", Some(self.scan_points.to_string())),
            ("bisect_tol", Some(self.bisect_tol.to_string())),
            ("seed", Some(self.seed.to_string())),
        ] {
            if let Some(v) = v {
                put(k, v);
            }
        }
        s
    }

    /// Wave grid: the default grid with any configured overrides.
    pub fn wave_grid(&self) -> Result<Grid1D> {
        let p = &self.params;
        let d = Grid1D::default_for(p.a, p.lambda1, p.lambda2);
        Grid1D::new(
            self.x_min.unwrap_or(d.x_min),
            self.x_max.unwrap_or(d.x_max),
            self.n.unwrap_or(d.n),
        )
    }

    pub fn stepper(&self) -> StepperOptions {
        let mut o = StepperOptions::for_params(&self.params);
        if let Some(v) = self.dt {
            o.dt = v;
        }
        if let Some(v) = self.t_max {
            o.t_max = v;
        }
        if let Some(v) = self.steady_tol {
            o.steady_tol = v;
        }
        o
    }

    pub fn wave_options(&self) -> Result<WaveOptions> {
        let mut o = WaveOptions::for_params(&self.params);
        o.grid = self.wave_grid()?;
        o.stepper = self.stepper();
        if let Some(v) = self.fp_tol {
            o.fp_tol = v;
        }
        o.k_max = self.k_max;
        o.omega = self.omega;
        o.residual_bound = self.residual_bound;
        Ok(o)
    }

    pub fn spreading_options(&self) -> Result<SpreadingOptions> {
        let p = &self.params;
        let mut o = SpreadingOptions::with_horizon(p, self.t_end.unwrap_or(60.0 / p.a));
        if self.x_min.is_some() || self.x_max.is_some() || self.n.is_some() {
            o.grid = Grid1D::new(
                self.x_min.unwrap_or(o.grid.x_min),
                self.x_max.unwrap_or(o.grid.x_max),
                self.n.unwrap_or(o.grid.n),
            )?;
        }
        if let Some(v) = self.dt {
            o.dt = v;
        }
        Ok(o)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
