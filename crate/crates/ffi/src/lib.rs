//! C ABI for the simulators, the online learner and the analytic helpers.
//!
//! Paths and trajectories are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`TkwStatus`]; on failure the
//! message is available from [`tkw_last_error_message`] on the same thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use threshold_kw::dynamics::{self, Ar1Params, DgsvParams, MaParams, ReturnPath};
use threshold_kw::kw::{self, Exponents, LearnerConfig, ScalingMode, StepOrigin, Trajectory};
use threshold_kw::oracle;
use threshold_kw::strategy::{self, Direction, StrategyKind, Theta};
use threshold_kw::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TooShort = 3,
    NoThreshold = 4,
    Runtime = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwSeries {
    H = 0,
    Eps = 1,
    Eta = 2,
    Nu = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwDirection {
    Above = 0,
    Below = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwKind {
    Univariate = 0,
    Volatility = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwScaling {
    None = 0,
    Stdev = 1,
    Stdev5 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkwStepOrigin {
    DataTime = 0,
    FirstUpdate = 1,
}

/// Learner settings; obtain defaults from [`tkw_learner_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TkwLearnerConfig {
    pub kind: TkwKind,
    pub direction: TkwDirection,
    pub p: f64,
    pub q: f64,
    pub p2: f64,
    pub q2: f64,
    pub scaling: TkwScaling,
    pub theta2_min: f64,
    pub theta2_max: f64,
    pub step_origin: TkwStepOrigin,
}

/// Simulated return path.
pub struct TkwPath(ReturnPath);

/// Learned thresholds, one entry per time step from `start_t`.
pub struct TkwTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> TkwStatus {
    match err {
        Error::Parameter { .. } => TkwStatus::InvalidArgument,
        Error::TooShort { .. } => TkwStatus::TooShort,
        Error::NoThreshold(_) => TkwStatus::NoThreshold,
        _ => TkwStatus::Runtime,
    }
}

fn guard<F>(f: F) -> TkwStatus
where
    F: FnOnce() -> Result<(), TkwStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TkwStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            TkwStatus::Panic
        }
    }
}

fn check<T>(result: threshold_kw::Result<T>) -> Result<T, TkwStatus> {
    result.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> TkwStatus {
    set_error(&format!("`{what}` is null"));
    TkwStatus::NullPointer
}

fn invalid(msg: &str) -> TkwStatus {
    set_error(msg);
    TkwStatus::InvalidArgument
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, TkwStatus> {
    // SAFETY: the caller passes a pointer obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), TkwStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the caller's contract, writable.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), TkwStatus> {
    if len < src.len() {
        return Err(invalid(&format!(
            "buffer holds {len} values, {} needed",
            src.len()
        )));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    // SAFETY: `buf` is valid for `len >= src.len()` writes.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

fn direction(d: TkwDirection) -> Direction {
    match d {
        TkwDirection::Above => Direction::Above,
        TkwDirection::Below => Direction::Below,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tkw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; valid until the next call
/// into the library from the same thread. Empty if nothing failed yet.
#[no_mangle]
pub extern "C" fn tkw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn emit_path(
    result: threshold_kw::Result<ReturnPath>,
    out: *mut *mut TkwPath,
) -> Result<(), TkwStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let path = check(result)?;
    // SAFETY: checked non-null above.
    unsafe { put(out, Box::into_raw(Box::new(TkwPath(path))), "out") }
}

/// Simulates `t_len` steps of `H_t = μ + α H_{t-1} + σ ε_t`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_simulate_ar1(
    mu: f64,
    alpha: f64,
    sigma: f64,
    t_len: usize,
    seed: u64,
    out: *mut *mut TkwPath,
) -> TkwStatus {
    guard(|| {
        let params = Ar1Params { mu, alpha, sigma };
        unsafe { emit_path(dynamics::simulate_ar1(&params, t_len, seed), out) }
    })
}

/// Simulates the moving average with coefficients `b0 (1 + j)^-b`, truncated
/// at `lags`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_simulate_ma(
    mu: f64,
    b0: f64,
    b: f64,
    lags: usize,
    t_len: usize,
    seed: u64,
    out: *mut *mut TkwPath,
) -> TkwStatus {
    guard(|| {
        let params = MaParams { mu, b0, b, lags };
        unsafe { emit_path(dynamics::simulate_ma(&params, t_len, seed), out) }
    })
}

/// Simulates the stochastic-volatility model; the path carries `ν`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tkw_simulate_dgsv(
    mu: f64,
    alpha: f64,
    sigma: f64,
    rho: f64,
    b0: f64,
    b: f64,
    lags: usize,
    t_len: usize,
    seed: u64,
    out: *mut *mut TkwPath,
) -> TkwStatus {
    guard(|| {
        let params = DgsvParams {
            mu,
            alpha,
            sigma,
            rho,
            b0,
            b,
            lags,
        };
        unsafe { emit_path(dynamics::simulate_dgsv(&params, t_len, seed), out) }
    })
}

/// Number of observations, 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_path_len(path: *const TkwPath) -> usize {
    unsafe { path.as_ref() }.map_or(0, |p| p.0.len())
}

/// Whether the path carries `η` and `ν`.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_path_has_volatility(path: *const TkwPath) -> bool {
    unsafe { path.as_ref() }.is_some_and(|p| p.0.has_volatility())
}

/// Copies one series into `buf`, which must hold `tkw_path_len` values.
///
/// # Safety
/// `path` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tkw_path_copy(
    path: *const TkwPath,
    series: TkwSeries,
    buf: *mut f64,
    len: usize,
) -> TkwStatus {
    guard(|| {
        let p = &unsafe { deref(path, "path") }?.0;
        let src = match series {
            TkwSeries::H => &p.h,
            TkwSeries::Eps => &p.eps,
            TkwSeries::Eta => &p.eta,
            TkwSeries::Nu => &p.nu,
        };
        if src.is_empty() && !p.is_empty() {
            return Err(invalid("series is absent for this model"));
        }
        unsafe { copy_out(src, buf, len) }
    })
}

/// # Safety
/// `path` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tkw_path_free(path: *mut TkwPath) {
    if !path.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(path) });
    }
}

#[no_mangle]
pub extern "C" fn tkw_learner_config_default() -> TkwLearnerConfig {
    let d = LearnerConfig::default();
    TkwLearnerConfig {
        kind: TkwKind::Univariate,
        direction: TkwDirection::Above,
        p: d.schedule.p,
        q: d.schedule.q,
        p2: d.schedule2.p,
        q2: d.schedule2.q,
        scaling: TkwScaling::None,
        theta2_min: d.theta2_bounds[0],
        theta2_max: d.theta2_bounds[1],
        step_origin: TkwStepOrigin::DataTime,
    }
}

fn learner_config(c: &TkwLearnerConfig) -> LearnerConfig {
    LearnerConfig {
        kind: match c.kind {
            TkwKind::Univariate => StrategyKind::Univariate,
            TkwKind::Volatility => StrategyKind::Volatility,
        },
        direction: direction(c.direction),
        schedule: Exponents { p: c.p, q: c.q },
        schedule2: Exponents { p: c.p2, q: c.q2 },
        scaling: match c.scaling {
            TkwScaling::None => ScalingMode::None,
            TkwScaling::Stdev => ScalingMode::Stdev,
            TkwScaling::Stdev5 => ScalingMode::Stdev5,
        },
        theta2_bounds: [c.theta2_min, c.theta2_max],
        step_origin: match c.step_origin {
            TkwStepOrigin::DataTime => StepOrigin::DataTime,
            TkwStepOrigin::FirstUpdate => StepOrigin::FirstUpdate,
        },
    }
}

/// Runs the online learner along `path`.
///
/// # Safety
/// `path` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tkw_learn(
    path: *const TkwPath,
    config: *const TkwLearnerConfig,
    out: *mut *mut TkwTrajectory,
) -> TkwStatus {
    guard(|| {
        let p = &unsafe { deref(path, "path") }?.0;
        let c = unsafe { deref(config, "config") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let learned = check(kw::run(p, &learner_config(c)))?;
        let handle = Box::into_raw(Box::new(TkwTrajectory(learned.trajectory)));
        unsafe { put(out, handle, "out") }
    })
}

/// Number of stored thresholds, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_trajectory_len(traj: *const TkwTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.len())
}

/// Time index of the first stored threshold.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tkw_trajectory_start_t(traj: *const TkwTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.start_t)
}

/// Copies `θ¹` (`component = 1`) or `θ²` (`component = 2`).
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tkw_trajectory_copy(
    traj: *const TkwTrajectory,
    component: u32,
    buf: *mut f64,
    len: usize,
) -> TkwStatus {
    guard(|| {
        let t = &unsafe { deref(traj, "traj") }?.0;
        let src = match (component, &t.theta2) {
            (1, _) => &t.theta1,
            (2, Some(t2)) => t2,
            (2, None) => return Err(invalid("univariate trajectory has no theta2")),
            _ => return Err(invalid("component must be 1 or 2")),
        };
        unsafe { copy_out(src, buf, len) }
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tkw_trajectory_free(traj: *mut TkwTrajectory) {
    if !traj.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Time-average growth of a fixed threshold strategy; `theta2` is used only
/// when `kind` is volatility.
///
/// # Safety
/// `path` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tkw_realized_growth(
    path: *const TkwPath,
    kind: TkwKind,
    theta1: f64,
    theta2: f64,
    dir: TkwDirection,
    out: *mut f64,
) -> TkwStatus {
    guard(|| {
        let p = &unsafe { deref(path, "path") }?.0;
        let (theta, kind) = match kind {
            TkwKind::Univariate => (Theta::univariate(theta1), StrategyKind::Univariate),
            TkwKind::Volatility => (Theta::volatility(theta1, theta2), StrategyKind::Volatility),
        };
        let g = check(strategy::realized_growth(
            p,
            &theta.with_direction(direction(dir)),
            kind,
        ))?;
        unsafe { put(out, g, "out") }
    })
}

/// Growth-optimal AR(1) threshold `-μ/α` and the side that buys.
///
/// # Safety
/// `theta` and `dir` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tkw_optimal_theta_ar1(
    mu: f64,
    alpha: f64,
    theta: *mut f64,
    dir: *mut TkwDirection,
) -> TkwStatus {
    guard(|| {
        if theta.is_null() || dir.is_null() {
            return Err(null("theta/dir"));
        }
        let (t, d) = check(oracle::optimal_theta_ar1(mu, alpha))?;
        let d = match d {
            Direction::Above => TkwDirection::Above,
            Direction::Below => TkwDirection::Below,
        };
        unsafe {
            put(theta, t, "theta")?;
            put(dir, d, "dir")
        }
    })
}

/// Checks the step-size conditions; bit `i - 1` of `failed_mask` is set when
/// condition `i` fails, so zero means all hold.
///
/// # Safety
/// `failed_mask` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tkw_validate_schedule(p: f64, q: f64, failed_mask: *mut u32) -> TkwStatus {
    guard(|| {
        if !p.is_finite() || !q.is_finite() {
            return Err(invalid("exponents must be finite"));
        }
        let mask = kw::validate_schedule(p, q)
            .failed()
            .iter()
            .fold(0u32, |m, c| m | 1 << (c.number() - 1));
        unsafe { put(failed_mask, mask, "failed_mask") }
    })
}
