//! Command-line front end.
//!
//! Exit codes: 0 success, 2 violated precondition or bad input, 3
//! non-convergence or numerical failure (including an inconclusive
//! certificate), 1 for I/O errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::eigen::{
    dirichlet_closed_form, find_l_for_lambda0, find_l_for_lambda0_nd, neumann_dirichlet_closed_form,
    nonexistence_certificate, variable_coeff_principal_eig, BoundaryKind, EigenProblem, Verdict,
};
use crate::elliptic::solve_chemicals;
use crate::error::{Error, Result};
use crate::evolver::step_full_system;
use crate::front::{default_bump, measure_front_speed, simulate_spreading, FrontStatus};
use crate::grid::{Field, Grid1D, Tail};
use crate::params::{compute_mu_star, compute_thresholds};
use crate::profiles::EnvelopeParams;
use crate::wave::{construct_wave, stationary_residual};

pub const THREADS_ENV: &str = "CHEMOWAVE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chemowave", version, about = "Traveling waves of an attraction-repulsion chemotaxis model")]
pub struct Cli {
    /// Configuration file (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for `sweep` (falls back to CHEMOWAVE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit the timestamp line from summary files.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Dirichlet,
    NeumannDirichlet,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold constants M, M~, K, K~, C0 and the global hypotheses.
    Constants,
    /// Critical decay parameter mu* and speed c*.
    Mustar,
    /// Construct the traveling wave with speed c.
    Wave {
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Also write the envelopes U-, U+ and phi_mu.
        #[arg(long)]
        dump_envelopes: bool,
    },
    /// Evolve the full system from a bump and dump space-time slices.
    Evolve {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        frame_speed: f64,
    },
    /// Measure the spreading speed from a bump.
    Speed,
    /// Principal eigenvalue of the constant-coefficient operator.
    Eigen {
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long, value_enum, default_value = "dirichlet")]
        bc: BcArg,
    },
    /// Nonexistence certificate for a speed below 2 sqrt(a).
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        /// Decaying profile as CSV with columns x,u on a uniform grid.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Thresholds and mu* (and a wave when a `c` column is present) for every row of a CSV grid.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Precondition(_) | Error::Config(_) => 2,
        Error::NonConvergence { .. } | Error::Numerical(_) => 3,
        Error::Io(_) => 1,
    }
}

/// Parses arguments, runs, prints errors to stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    fn new() -> Self {
        Summary { lines: Vec::new() }
    }

    fn f(&mut self, k: &str, v: f64) -> &mut Self {
        self.lines.push((k.into(), fmt_f64(v)));
        self
    }

    fn s(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.lines.push((k.into(), v.to_string()));
        self
    }

    fn render(&self, timestamp: bool) -> String {
        let mut s = format!("# chemowave {}\n", env!("CARGO_PKG_VERSION"));
        if timestamp {
            let t = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(s, "# timestamp_unix = {t}");
        }
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    fn row(&mut self, cells: &[f64]) {
        let cells: Vec<String> = cells.iter().map(|&x| fmt_f64(x)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
}

impl Ctx<'_> {
    fn write(&self, name: &str, content: &str) -> Result<()> {
        fs::create_dir_all(&self.cli.out)?;
        let path = self.cli.out.join(name);
        fs::write(&path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    fn summary(&self, name: &str, s: &Summary) -> Result<()> {
        let text = s.render(!self.cli.no_timestamp);
        print!("{}", s.render(false));
        self.write(name, &text)
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { cli, cfg };
    ctx.write("config.txt", &ctx.cfg.canonical())?;
    match &cli.command {
        Command::Constants => constants(&ctx),
        Command::Mustar => mustar(&ctx),
        Command::Wave { c, dump_envelopes } => wave(&ctx, *c, *dump_envelopes),
        Command::Evolve { frame_speed } => evolve(&ctx, *frame_speed),
        Command::Speed => speed(&ctx),
        Command::Eigen { c, length, bc } => eigen(&ctx, *c, *length, *bc),
        Command::Certify { c, profile } => certify(&ctx, *c, profile.as_deref()),
        Command::Sweep { grid } => sweep(&ctx, grid),
    }
}

fn constants(ctx: &Ctx) -> Result<i32> {
    let p = &ctx.cfg.params;
    p.validate()?;
    let t = compute_thresholds(p);
    let mut s = Summary::new();
    s.f("M", t.m)
        .f("M_tilde", t.mtilde)
        .f("K", t.k)
        .f("K_tilde", t.ktilde)
        .f("C0", t.c0)
        .s("hypothesis_h1", t.hypothesis_h1)
        .s("hypothesis_stability", t.hypothesis_stability);
    ctx.summary("constants.txt", &s)?;
    Ok(0)
}

fn mustar(ctx: &Ctx) -> Result<i32> {
    let p = &ctx.cfg.params;
    let r = compute_mu_star(p, ctx.cfg.scan_points, ctx.cfg.bisect_tol)?;
    let mut s = Summary::new();
    s.f("mu_star", r.mu_star)
        .f("c_star", r.c_star)
        .f("kpp_speed", p.kpp_speed())
        .s("grid_points_checked", r.grid_points_checked)
        .s("certified_prefix", r.certified_prefix);
    ctx.summary("mustar.txt", &s)?;
    Ok(0)
}

fn need_speed(ctx: &Ctx, c: Option<f64>) -> Result<f64> {
    c.or(ctx.cfg.c)
        .ok_or_else(|| Error::Config("a speed is required (--c or `c` in the config)".into()))
}

fn wave(ctx: &Ctx, c: Option<f64>, dump_envelopes: bool) -> Result<i32> {
    let p = &ctx.cfg.params;
    let c = need_speed(ctx, c)?;
    let opts = ctx.cfg.wave_options()?;
    let w = construct_wave(p, c, &opts)?;
    let res = stationary_residual(&w, p)?;
    let mut csv = Csv::new(&["x", "U", "V1", "V2", "residual"]);
    for i in 0..w.u.len() {
        csv.row(&[
            w.u.grid.x(i),
            w.u.values[i],
            w.v1.values[i],
            w.v2.values[i],
            res.values[i],
        ]);
    }
    ctx.write("wave.csv", &csv.text)?;
    if dump_envelopes {
        let env = &w.envelope;
        let mut e = Csv::new(&["x", "U_minus", "U_plus", "phi_mu"]);
        for i in 0..w.u.len() {
            let x = w.u.grid.x(i);
            e.row(&[x, env.u_minus(x), env.u_plus(x), env.phi(x)]);
        }
        ctx.write("envelopes.csv", &e.text)?;
    }
    let mut s = Summary::new();
    s.f("c", w.c)
        .f("mu", w.mu)
        .f("c_star", w.c_star)
        .f("residual_sup", w.residual_sup)
        .f("residual4_sup", w.residual4_sup)
        .f("left_value", w.left_value)
        .f("tail_min", w.tail.ratio_min)
        .f("tail_max", w.tail.ratio_max)
        .f("tail_slope", w.tail.log_slope)
        .f("tail_window_lo", w.tail.window.0)
        .f("tail_window_hi", w.tail.window.1)
        .s("iterations", w.iterations)
        .f("iterate_distance", w.iterate_distance)
        .f("iterate_star_distance", w.iterate_star_distance);
    ctx.summary("wave_summary.txt", &s)?;
    Ok(0)
}

fn evolve(ctx: &Ctx, frame_speed: f64) -> Result<i32> {
    let p = &ctx.cfg.params;
    p.validate()?;
    let grid = ctx.cfg.wave_grid()?;
    let stepper = ctx.cfg.stepper();
    let t_end = ctx.cfg.t_end.unwrap_or(10.0 / p.a);
    let steps = (t_end / stepper.dt).round() as usize;
    let stride = ctx.cfg.stride.max(1);
    let mut u = default_bump(p, grid, 0.0);
    let mut csv = Csv::new(&["t", "x", "u", "v1", "v2"]);
    let mut dump = |t: f64, u: &Field| -> Result<()> {
        let ch = solve_chemicals(u, p)?;
        for i in 0..u.len() {
            csv.row(&[t, grid.x(i), u.values[i], ch.v1.values[i], ch.v2.values[i]]);
        }
        Ok(())
    };
    dump(0.0, &u)?;
    for k in 1..=steps {
        u = step_full_system(&u, p, frame_speed, &stepper)?;
        if k % stride == 0 || k == steps {
            dump(k as f64 * stepper.dt, &u)?;
        }
    }
    ctx.write("evolve.csv", &csv.text)?;
    let mass: f64 = u.values.iter().sum::<f64>() * grid.dx();
    let mut s = Summary::new();
    s.f("frame_speed", frame_speed)
        .f("t_end", steps as f64 * stepper.dt)
        .s("steps", steps)
        .f("sup_u", u.sup_norm())
        .f("mass", mass);
    ctx.summary("evolve.txt", &s)?;
    Ok(0)
}

fn speed(ctx: &Ctx) -> Result<i32> {
    let p = &ctx.cfg.params;
    p.validate()?;
    let o = ctx.cfg.spreading_options()?;
    let u0 = default_bump(p, o.grid, 0.0);
    let traj = simulate_spreading(p, &u0, &o)?;
    let level = 0.5 * p.carrying_capacity();
    let all = measure_front_speed(&traj, level, (0.0, o.t_end));
    let m = measure_front_speed(&traj, level, (o.t_burn, o.t_end));
    let mut csv = Csv::new(&["t", "x_front"]);
    for (t, x) in all.times.iter().zip(&all.positions) {
        csv.row(&[*t, *x]);
    }
    ctx.write("speed.csv", &csv.text)?;
    let status = match m.status {
        FrontStatus::Ok => "ok",
        FrontStatus::NoFront => "no_front",
        FrontStatus::ReachedEdge => "reached_edge",
    };
    let mut s = Summary::new();
    s.f("level", level)
        .f("fitted_speed", m.fitted_speed)
        .f("r_squared", m.r_squared)
        .s("trusted", m.trusted())
        .s("status", status)
        .f("kpp_speed", p.kpp_speed())
        .f("t_burn", o.t_burn)
        .f("t_end", o.t_end)
        .f("max_sup", traj.max_sup);
    ctx.summary("speed.txt", &s)?;
    Ok(0)
}

fn bc_of(b: BcArg) -> BoundaryKind {
    match b {
        BcArg::Dirichlet => BoundaryKind::Dirichlet,
        BcArg::NeumannDirichlet => BoundaryKind::NeumannDirichlet,
    }
}

fn eigen(ctx: &Ctx, c: Option<f64>, length: Option<f64>, bc: BcArg) -> Result<i32> {
    let a = ctx.cfg.params.a;
    let c = c.or(ctx.cfg.c).unwrap_or(0.0);
    let bc = bc_of(bc);
    let length = match length.or(ctx.cfg.eig_length) {
        Some(l) => l,
        None => match bc {
            BoundaryKind::Dirichlet => find_l_for_lambda0(c, a, (4.0 * a - c * c) / 8.0)?,
            BoundaryKind::NeumannDirichlet => find_l_for_lambda0_nd(c, a, 0.5 * a)?,
        },
    };
    let cert = variable_coeff_principal_eig(&EigenProblem::constant(c, a, length, bc), ctx.cfg.eig_n)?;
    let closed = match bc {
        BoundaryKind::Dirichlet => dirichlet_closed_form(c, a, length),
        BoundaryKind::NeumannDirichlet => neumann_dirichlet_closed_form(c, a, length),
    };
    let mut csv = Csv::new(&["n", "lambda"]);
    for (n, l) in &cert.refinement_levels {
        csv.row(&[*n as f64, *l]);
    }
    ctx.write("eigen_refinement.csv", &csv.text)?;
    let mut s = Summary::new();
    s.s("bc", format!("{bc:?}"))
        .f("c", c)
        .f("a", a)
        .f("length", length)
        .f("lambda_principal", cert.lambda_principal)
        .f("extrapolated", cert.extrapolated)
        .f("closed_form", closed)
        .f("abs_error", (cert.extrapolated - closed).abs());
    ctx.summary("eigen.txt", &s)?;
    Ok(0)
}

/// Reads `x,u` rows (header first) on a uniform grid.
fn read_profile(path: &Path) -> Result<Field> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            it.next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("profile line {}: bad {what}", ln + 1)))
        };
        xs.push(next("x")?);
        us.push(next("u")?);
    }
    if xs.len() < Grid1D::MIN_POINTS {
        return Err(Error::Config("profile has too few rows".into()));
    }
    let grid = Grid1D::new(xs[0], xs[xs.len() - 1], xs.len())?;
    let h = grid.dx();
    if xs.iter().enumerate().any(|(i, x)| (x - grid.x(i)).abs() > 1e-6 * h) {
        return Err(Error::Config("profile grid is not uniform".into()));
    }
    let (l, r) = (us[0], us[us.len() - 1]);
    Field::new(grid, us, Tail::constant(l), Tail::constant(r))
}

fn certify(ctx: &Ctx, c: f64, profile: Option<&Path>) -> Result<i32> {
    let p = &ctx.cfg.params;
    let u = match profile {
        Some(path) => read_profile(path)?,
        None => {
            let grid = ctx.cfg.wave_grid()?;
            let ra = p.a.sqrt();
            let k = p.carrying_capacity();
            let vals = grid.sample(|x| k / (1.0 + (ra * x).exp()));
            let right = vals[grid.n - 1];
            Field::new(grid, vals, Tail::constant(k), Tail::exponential(right, ra))?
        }
    };
    let r = nonexistence_certificate(p, c, &u, ctx.cfg.eps, ctx.cfg.eig_n)?;
    if let Some(cert) = &r.certificate {
        let mut csv = Csv::new(&["n", "lambda"]);
        for (n, l) in &cert.refinement_levels {
            csv.row(&[*n as f64, *l]);
        }
        ctx.write("certify_refinement.csv", &csv.text)?;
    }
    let (verdict, code) = match &r.verdict {
        Verdict::NoWave => ("no traveling wave with this speed".to_string(), 0),
        Verdict::Inconclusive(why) => (format!("inconclusive: {why}"), 3),
    };
    let (lo, hi) = r.window.unwrap_or((f64::NAN, f64::NAN));
    let mut s = Summary::new();
    s.f("c", r.c)
        .s("bc", format!("{:?}", r.bc))
        .f("eps", r.eps)
        .f("lambda0", r.lambda0)
        .f("length", r.length)
        .f("window_lo", lo)
        .f("window_hi", hi)
        .f("lambda_eps", r.lambda_eps)
        .f("lambda_unperturbed", r.lambda_unperturbed)
        .s("verdict", verdict);
    ctx.summary("certify.txt", &s)?;
    Ok(code)
}

/// Worker count: `--threads`, then `CHEMOWAVE_THREADS`, then the machine default.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Precondition(_) => "precondition",
        Error::NonConvergence { .. } => "nonconvergence",
        Error::Numerical(_) => "numerical",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    }
}

const SWEEP_COLUMNS: &[&str] = &[
    "M",
    "M_tilde",
    "K",
    "K_tilde",
    "C0",
    "hypothesis_h1",
    "hypothesis_stability",
    "mu_star",
    "c_star",
    "status",
];
const SWEEP_WAVE_COLUMNS: &[&str] = &["wave_status", "wave_residual_sup", "wave_left_value", "wave_iterations"];

fn sweep_row(base: &RunConfig, keys: &[String], values: &[String], with_wave: bool) -> String {
    let mut cfg = base.clone();
    let mut cells = Vec::new();
    for (k, v) in keys.iter().zip(values) {
        if let Err(e) = cfg.set(k, v) {
            return format!("config error: {e}");
        }
    }
    for k in keys {
        cells.push(echo_key(&cfg, k));
    }
    let p = cfg.params;
    let nan = fmt_f64(f64::NAN);
    match p.validate() {
        Err(e) => {
            cells.extend(std::iter::repeat_n(nan.clone(), SWEEP_COLUMNS.len() - 1));
            cells.push(error_kind(&e).into());
        }
        Ok(()) => {
            let t = compute_thresholds(&p);
            cells.extend([t.m, t.mtilde, t.k, t.ktilde, t.c0].map(fmt_f64));
            cells.push(t.hypothesis_h1.to_string());
            cells.push(t.hypothesis_stability.to_string());
            match compute_mu_star(&p, cfg.scan_points, cfg.bisect_tol) {
                Ok(r) => {
                    cells.push(fmt_f64(r.mu_star));
                    cells.push(fmt_f64(r.c_star));
                    cells.push("ok".into());
                }
                Err(e) => {
                    cells.push(nan.clone());
                    cells.push(nan.clone());
                    cells.push(error_kind(&e).into());
                }
            }
        }
    }
    if with_wave {
        let out = cfg
            .wave_options()
            .and_then(|o| construct_wave(&p, cfg.c.unwrap_or(f64::NAN), &o));
        match out {
            Ok(w) => {
                cells.push("ok".into());
                cells.push(fmt_f64(w.residual_sup));
                cells.push(fmt_f64(w.left_value));
                cells.push(w.iterations.to_string());
            }
            Err(e) => {
                cells.push(error_kind(&e).into());
                cells.push(nan.clone());
                cells.push(nan.clone());
                cells.push("0".into());
            }
        }
    }
    cells.join(",")
}

fn echo_key(cfg: &RunConfig, key: &str) -> String {
    cfg.canonical()
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")).map(str::to_string))
        .unwrap_or_default()
}

/// Runs every row of a CSV parameter grid (header of config keys) in a
/// worker pool and merges the results in row order.
pub fn run_sweep(base: &RunConfig, grid_text: &str, threads: usize) -> Result<String> {
    let mut lines = grid_text.lines().filter(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("sweep grid is empty".into()))?;
    let keys: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    for k in &keys {
        if !crate::config::KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("sweep grid: unknown column '{k}'")));
        }
    }
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != keys.len()) {
        return Err(Error::Config(format!(
            "sweep grid row {} has the wrong number of cells",
            i + 1
        )));
    }
    let with_wave = keys.iter().any(|k| k == "c");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out: Vec<String> = pool.install(|| {
        rows.par_iter()
            .enumerate()
            .map(|(i, r)| format!("{i},{}", sweep_row(base, &keys, r, with_wave)))
            .collect()
    });
    let mut head: Vec<&str> = vec!["index"];
    head.extend(keys.iter().map(String::as_str));
    head.extend_from_slice(SWEEP_COLUMNS);
    if with_wave {
        head.extend_from_slice(SWEEP_WAVE_COLUMNS);
    }
    let mut text = head.join(",") + "\n";
    for line in out {
        text.push_str(&line);
        text.push('\n');
    }
    Ok(text)
}

fn sweep(ctx: &Ctx, grid: &Path) -> Result<i32> {
    let text = fs::read_to_string(grid).map_err(|e| Error::Io(format!("{}: {e}", grid.display())))?;
    let threads = resolve_threads(ctx.cli.threads);
    let csv = run_sweep(&ctx.cfg, &text, threads)?;
    ctx.write("sweep.csv", &csv)?;
    let rows = csv.lines().count() - 1;
    let mut s = Summary::new();
    s.s("rows", rows).s("threads", threads);
    ctx.summary("sweep.txt", &s)?;
    Ok(0)
}

/// Envelope sample used by tests and the `wave --dump-envelopes` output.
pub fn envelope_rows(env: &EnvelopeParams, grid: Grid1D) -> Vec<[f64; 4]> {
    (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            [x, env.u_minus(x), env.u_plus(x), env.phi(x)]
        })
        .collect()
}
