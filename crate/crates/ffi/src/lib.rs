//! C ABI for the chemowave library.
//!
//! Every function returns a [`CwStatus`]; on failure the message is available
//! from [`cw_last_error_message`] until the next call on the same thread.
//! Handles are created by `*_new`/`*_construct` and released by `*_free`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chemowave::eigen::{nonexistence_certificate, BoundaryKind, Verdict};
use chemowave::params::{compute_mu_star, compute_thresholds, mu_of_c, DEFAULT_BISECT_TOL, DEFAULT_SCAN_POINTS};
use chemowave::wave::{construct_wave, WaveOptions, WaveSolution};
use chemowave::{ChemoParams, Error, Field, Grid1D, Tail};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    /// Argument outside the mathematical domain.
    Domain = 1,
    /// A hypothesis of the construction does not hold.
    Precondition = 2,
    NonConvergence = 3,
    Numerical = 4,
    Config = 5,
    Io = 6,
    NullPointer = 7,
    /// Internal panic; the message holds the payload.
    Panic = 8,
}

/// Opaque model parameters.
pub struct CwParams {
    inner: ChemoParams,
}

/// Opaque constructed wave.
pub struct CwWave {
    inner: WaveSolution,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CwThresholds {
    pub m: f64,
    pub m_tilde: f64,
    pub k: f64,
    pub k_tilde: f64,
    pub c0: f64,
    pub hypothesis_h1: bool,
    pub hypothesis_stability: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CwWaveSummary {
    pub c: f64,
    pub mu: f64,
    pub c_star: f64,
    pub residual_sup: f64,
    pub left_value: f64,
    pub tail_ratio_min: f64,
    pub tail_ratio_max: f64,
    pub tail_slope: f64,
    pub len: usize,
    pub iterations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwVerdict {
    NoWave = 0,
    Inconclusive = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CwCertificate {
    pub c: f64,
    pub eps: f64,
    pub lambda0: f64,
    pub length: f64,
    /// Perturbed principal eigenvalue; NaN when inconclusive.
    pub lambda_eps: f64,
    pub lambda_unperturbed: f64,
    /// True for the Neumann-Dirichlet branch (`c < 0`).
    pub neumann: bool,
    pub verdict: CwVerdict,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::Domain(_) => CwStatus::Domain,
        Error::Precondition(_) => CwStatus::Precondition,
        Error::NonConvergence { .. } => CwStatus::NonConvergence,
        Error::Numerical(_) => CwStatus::Numerical,
        Error::Config(_) => CwStatus::Config,
        Error::Io(_) => CwStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CwStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CwStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            CwStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            CwStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

/// Message of the last failed call on this thread (empty after success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out_params` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cw_params_new(
    a: f64,
    b: f64,
    chi1: f64,
    chi2: f64,
    mu1: f64,
    mu2: f64,
    lambda1: f64,
    lambda2: f64,
    out_params: *mut *mut CwParams,
) -> CwStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        *slot = std::ptr::null_mut();
        let inner = ChemoParams::new(a, b, chi1, chi2, mu1, mu2, lambda1, lambda2)?;
        *slot = Box::into_raw(Box::new(CwParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`cw_params_new`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cw_params_free(params: *mut CwParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_thresholds(params: *const CwParams, out_thresholds: *mut CwThresholds) -> CwStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let o = out(out_thresholds, "out_thresholds")?;
        let t = compute_thresholds(p);
        *o = CwThresholds {
            m: t.m,
            m_tilde: t.mtilde,
            k: t.k,
            k_tilde: t.ktilde,
            c0: t.c0,
            hypothesis_h1: t.hypothesis_h1,
            hypothesis_stability: t.hypothesis_stability,
        };
        Ok(())
    })
}

/// Critical decay parameter and speed with the default scan and tolerance.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_mu_star(params: *const CwParams, out_mu_star: *mut f64, out_c_star: *mut f64) -> CwStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let m = out(out_mu_star, "out_mu_star")?;
        let c = out(out_c_star, "out_c_star")?;
        let r = compute_mu_star(p, DEFAULT_SCAN_POINTS, DEFAULT_BISECT_TOL)?;
        *m = r.mu_star;
        *c = r.c_star;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_mu_of_c(params: *const CwParams, c: f64, out_mu: *mut f64) -> CwStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let o = out(out_mu, "out_mu")?;
        *o = mu_of_c(p, c)?;
        Ok(())
    })
}

/// Constructs the wave with speed `c` on the default grid.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_wave_construct(params: *const CwParams, c: f64, out_wave: *mut *mut CwWave) -> CwStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let slot = out(out_wave, "out_wave")?;
        *slot = std::ptr::null_mut();
        let w = construct_wave(p, c, &WaveOptions::for_params(p))?;
        *slot = Box::into_raw(Box::new(CwWave { inner: w }));
        Ok(())
    })
}

/// # Safety
/// `wave` must come from [`cw_wave_construct`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cw_wave_free(wave: *mut CwWave) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_wave_summary(wave: *const CwWave, out_summary: *mut CwWaveSummary) -> CwStatus {
    guard(|| {
        let w = &deref(wave, "wave")?.inner;
        let o = out(out_summary, "out_summary")?;
        *o = CwWaveSummary {
            c: w.c,
            mu: w.mu,
            c_star: w.c_star,
            residual_sup: w.residual_sup,
            left_value: w.left_value,
            tail_ratio_min: w.tail.ratio_min,
            tail_ratio_max: w.tail.ratio_max,
            tail_slope: w.tail.log_slope,
            len: w.u.len(),
            iterations: w.iterations,
        };
        Ok(())
    })
}

/// Copies the grid and profiles into caller buffers of length `len`, which
/// must equal the wave length. Any buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cw_wave_copy_profile(
    wave: *const CwWave,
    x: *mut f64,
    u: *mut f64,
    v1: *mut f64,
    v2: *mut f64,
    len: usize,
) -> CwStatus {
    guard(|| {
        let w = &deref(wave, "wave")?.inner;
        let n = w.u.len();
        if len != n {
            return Err(Error::Domain(format!("buffer length {len} does not match wave length {n}")).into());
        }
        let xs = w.u.grid.points();
        for (dst, src) in [(x, &xs), (u, &w.u.values), (v1, &w.v1.values), (v2, &w.v2.values)] {
            if !dst.is_null() {
                std::slice::from_raw_parts_mut(dst, n).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// Nonexistence certificate for speed `c < 2 sqrt(a)` given a decaying profile
/// sampled at `x0 + i dx`, `i < len`. `eps <= 0` selects the default.
///
/// # Safety
/// `u` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cw_certify(
    params: *const CwParams,
    c: f64,
    x0: f64,
    dx: f64,
    u: *const f64,
    len: usize,
    eps: f64,
    out_certificate: *mut CwCertificate,
) -> CwStatus {
    guard(|| {
        let p = &deref(params, "params")?.inner;
        let o = out(out_certificate, "out_certificate")?;
        if u.is_null() {
            return Err(Fail::Null("u"));
        }
        if !(dx > 0.0) || len < 2 {
            return Err(Error::Domain("need dx > 0 and at least two samples".into()).into());
        }
        let vals = std::slice::from_raw_parts(u, len).to_vec();
        let grid = Grid1D::new(x0, x0 + dx * (len - 1) as f64, len)?;
        let (l, r) = (vals[0], vals[len - 1]);
        let field = Field::new(grid, vals, Tail::constant(l), Tail::constant(r))?;
        let eps = if eps > 0.0 { Some(eps) } else { None };
        let rep = nonexistence_certificate(p, c, &field, eps, 256)?;
        *o = CwCertificate {
            c: rep.c,
            eps: rep.eps,
            lambda0: rep.lambda0,
            length: rep.length,
            lambda_eps: rep.lambda_eps,
            lambda_unperturbed: rep.lambda_unperturbed,
            neumann: rep.bc == BoundaryKind::NeumannDirichlet,
            verdict: match rep.verdict {
                Verdict::NoWave => CwVerdict::NoWave,
                Verdict::Inconclusive(why) => {
                    set_error(&why);
                    CwVerdict::Inconclusive
                }
            },
        };
        Ok(())
    })
}
