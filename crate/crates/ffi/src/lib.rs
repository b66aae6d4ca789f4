//! C ABI for the `nldiff` solver.
//!
//! Every function returns an [`NldStatus`] or a plain value and never unwinds
//! across the boundary. On failure the message is available from
//! [`nld_last_error`] on the same thread. Strings handed out by this library
//! must be released with [`nld_string_free`], solutions with [`nld_solution_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nldiff::experiment::{ExperimentConfig, KernelConfig};
use nldiff::kernels::TimeGrid;
use nldiff::solver::{solve, Solution};
use nldiff::verify::{mittag_leffler, verify_suite};
use nldiff::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent JSON configuration.
    Config = 3,
    InvalidArgument = 4,
    /// Quadrature, linear solve, iteration or truncation failure.
    Numerical = 5,
    Io = 6,
    /// Caller buffer shorter than required.
    BufferTooSmall = 7,
    Panic = 8,
}

/// A computed solution. Opaque to C.
pub struct NldSolution {
    inner: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NldStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Json(_) => NldStatus::Config,
            Error::InvalidParameter { .. }
            | Error::GridMismatch { .. }
            | Error::InitialMismatch { .. }
            | Error::CoefficientBound { .. }
            | Error::Hypothesis(_) => NldStatus::InvalidArgument,
            Error::Io(_) => NldStatus::Io,
            _ => NldStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: NldStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NldStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NldStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            NldStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(NldStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(NldStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(NldStatus::Numerical, "output contains a NUL byte"))
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: checked for null; the caller owns the pointee for the duration of the call.
    unsafe { p.as_mut() }.ok_or_else(|| fail(NldStatus::NullPointer, format!("{name} is null")))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn nld_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Solves the problem described by an experiment config (JSON); `mode` and `output` are ignored.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_from_config(config_json: *const c_char, out: *mut *mut NldSolution) -> NldStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(read_str(config_json, "config_json")?)?;
        let spec = cfg.problem.build()?;
        let sol = solve(&spec, &cfg.solver)?;
        *out = Box::into_raw(Box::new(NldSolution { inner: sol }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from [`nld_solution_from_config`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_free(sol: *mut NldSolution) {
    if !sol.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sol))));
    }
}

/// Number of time steps `N`; rows are indexed `0..=N`. Returns 0 for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_steps(sol: *const NldSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.inner.grid.steps())
}

/// Number of cells `Nx`; each row holds `Nx + 1` nodes. Returns 0 for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_cells(sol: *const NldSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.inner.mesh.cells())
}

/// Final `eps` of the continuation (0 for nondegenerate laws). NaN for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_eps(sol: *const NldSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.inner.eps)
}

/// `max |u|` over all space-time nodes. NaN for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_sup(sol: *const NldSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.inner.sup())
}

unsafe fn copy_row(
    sol: *const NldSolution,
    n: usize,
    buf: *mut f64,
    len: usize,
    pick: fn(&Solution) -> &Vec<Vec<f64>>,
) -> NldStatus {
    guard(|| {
        let sol = sol
            .as_ref()
            .ok_or_else(|| fail(NldStatus::NullPointer, "sol is null"))?;
        let rows = pick(&sol.inner);
        let row = rows
            .get(n)
            .ok_or_else(|| fail(NldStatus::InvalidArgument, format!("row {n} outside 0..={}", rows.len() - 1)))?;
        if buf.is_null() {
            return Err(fail(NldStatus::NullPointer, "buf is null"));
        }
        if len < row.len() {
            return Err(fail(
                NldStatus::BufferTooSmall,
                format!("need {} entries, buffer holds {len}", row.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, row.len()).copy_from_slice(row);
        Ok(())
    })
}

/// Copies `u` at time row `n` (all `Nx + 1` nodes) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_copy_u(sol: *const NldSolution, n: usize, buf: *mut f64, len: usize) -> NldStatus {
    copy_row(sol, n, buf, len, |s| &s.u)
}

/// Copies `v = phi(u)` at time row `n` into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_copy_v(sol: *const NldSolution, n: usize, buf: *mut f64, len: usize) -> NldStatus {
    copy_row(sol, n, buf, len, |s| &s.v)
}

/// Solution as CSV with columns `n,t,i,x,u,v`. Free the string with [`nld_string_free`].
///
/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nld_solution_to_csv(sol: *const NldSolution, out: *mut *mut c_char) -> NldStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let sol = sol
            .as_ref()
            .ok_or_else(|| fail(NldStatus::NullPointer, "sol is null"))?;
        *out = to_c_string(sol.inner.to_csv())?;
        Ok(())
    })
}

/// Runs the verification suite for the config's problem, solver and suite options.
/// The JSON report goes to `report_json` and the number of failed checks to `failed`.
///
/// # Safety
/// `config_json` must be NUL-terminated; `report_json` and `failed` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nld_verify_suite(
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    failed: *mut usize,
) -> NldStatus {
    guard(|| {
        let report_json = out_ptr(report_json, "report_json")?;
        *report_json = ptr::null_mut();
        let failed = out_ptr(failed, "failed")?;
        let cfg = ExperimentConfig::from_json(read_str(config_json, "config_json")?)?;
        let spec = cfg.problem.build()?;
        let mut options = cfg.suite.clone();
        options.seed = cfg.seed;
        let report = verify_suite(&spec, &cfg.solver, &options)?;
        *failed = report.failed_count();
        *report_json = to_c_string(report.to_json().map_err(Error::from)?)?;
        Ok(())
    })
}

/// Cell averages of `k` (`side = 0`) or `l` (`side = 1`) for a kernel given as JSON,
/// e.g. `{"family": "fractional", "alpha": 0.5}`, on `steps` cells of `(0, horizon)`.
///
/// # Safety
/// `kernel_json` must be NUL-terminated and `buf` writable for `len >= steps` doubles.
#[no_mangle]
pub unsafe extern "C" fn nld_kernel_sample(
    kernel_json: *const c_char,
    horizon: f64,
    steps: usize,
    side: i32,
    buf: *mut f64,
    len: usize,
) -> NldStatus {
    guard(|| {
        let kernel: KernelConfig = serde_json::from_str(read_str(kernel_json, "kernel_json")?)
            .map_err(|e| fail(NldStatus::Config, format!("kernel_json: {e}")))?;
        let grid = TimeGrid::new(horizon, steps)?;
        let kernels = kernel.kernels(grid)?;
        let weights = match side {
            0 => kernels.k.weights(),
            1 => kernels.l.weights(),
            _ => return Err(fail(NldStatus::InvalidArgument, format!("side must be 0 (k) or 1 (l), got {side}"))),
        };
        if buf.is_null() {
            return Err(fail(NldStatus::NullPointer, "buf is null"));
        }
        if len < weights.len() {
            return Err(fail(
                NldStatus::BufferTooSmall,
                format!("need {} entries, buffer holds {len}", weights.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, weights.len()).copy_from_slice(weights);
        Ok(())
    })
}

/// `E_alpha(z)` for `alpha in (0, 1]` and `z <= 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nld_mittag_leffler(alpha: f64, z: f64, out: *mut f64) -> NldStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = mittag_leffler(alpha, z)?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nld_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
