//! C ABI over the `ordiso` solvers.
//!
//! Samples and fits live behind opaque handles created by `ordiso_*_new` or
//! `ordiso_solve` and released by the matching `_free`. Every fallible call
//! returns an [`OrdisoStatus`]; on failure a message is kept per thread and
//! can be read with [`ordiso_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ordiso::io::{read_sample, write_fit, FitOutput, InputFormat, OutputFormat};
use ordiso::{kkt_check, solve, Error, Method, PairedSample, Solution, SolverConfig, StepRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdisoStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Domain = 3,
    Parse = 4,
    Io = 5,
    BufferTooSmall = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdisoMethod {
    Dual = 0,
    GeneralizedPava = 1,
    Dykstra = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdisoStepRule {
    Polyak = 0,
    Diminishing = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdisoFormat {
    Json = 0,
    Csv = 1,
    PlotCsv = 2,
}

/// Solver settings; start from [`ordiso_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdisoConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub step_rule: OrdisoStepRule,
    pub step_constant: f64,
    pub oracle_check: bool,
    /// Tolerance of the certificate behind `ordiso_fit_converged` for the
    /// non-dual methods; also stored in JSON output.
    pub kkt_tol: f64,
}

/// Opaque sample handle.
pub struct OrdisoSample {
    inner: PairedSample,
}

/// Opaque fit handle. Keeps the sample and settings it was solved with.
pub struct OrdisoFit {
    sample: PairedSample,
    config: SolverConfig,
    kkt_tol: f64,
    solution: Solution,
}

const DEFAULT_KKT_TOL: f64 = 1e-6;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: OrdisoStatus,
    message: String,
}

impl Failure {
    fn new(status: OrdisoStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }

    fn null(what: &str) -> Self {
        Failure::new(OrdisoStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Dimension(_) => OrdisoStatus::Dimension,
            Error::Domain(_) => OrdisoStatus::Domain,
            Error::Parse { .. } | Error::Json(_) => OrdisoStatus::Parse,
            Error::Io(_) => OrdisoStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(OrdisoStatus::Io, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn guard<F>(body: F) -> OrdisoStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => OrdisoStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(_) => {
            set_last_error("internal panic");
            OrdisoStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or valid for `n` reads.
unsafe fn read_vec(p: *const f64, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(p, n).to_vec())
}

/// # Safety
/// `p` is null or valid for `n` reads.
unsafe fn read_opt(p: *const f64, n: usize, fill: impl Fn(usize) -> f64) -> Vec<f64> {
    if p.is_null() {
        (0..n).map(fill).collect()
    } else {
        slice::from_raw_parts(p, n).to_vec()
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(Failure::null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::new(OrdisoStatus::InvalidArgument, "path is not valid UTF-8"))
}

fn config_from_c(c: &OrdisoConfig) -> SolverConfig {
    SolverConfig {
        feas_tol: c.feas_tol,
        gap_tol: c.gap_tol,
        max_iter: c.max_iter,
        step_rule: match c.step_rule {
            OrdisoStepRule::Polyak => StepRule::Polyak,
            OrdisoStepRule::Diminishing => StepRule::Diminishing,
        },
        step_constant: c.step_constant,
        oracle_check: c.oracle_check,
    }
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn ordiso_config_default() -> OrdisoConfig {
    let d = SolverConfig::default();
    OrdisoConfig {
        feas_tol: d.feas_tol,
        gap_tol: d.gap_tol,
        max_iter: d.max_iter,
        step_rule: match d.step_rule {
            StepRule::Polyak => OrdisoStepRule::Polyak,
            StepRule::Diminishing => OrdisoStepRule::Diminishing,
        },
        step_constant: d.step_constant,
        oracle_check: d.oracle_check,
        kkt_tol: DEFAULT_KKT_TOL,
    }
}

/// Library version, a static NUL terminated string.
#[no_mangle]
pub extern "C" fn ordiso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length
/// without the terminator, or 0 if the last call succeeded.
///
/// # Safety
/// `buf` is null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ordiso_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Builds a sample of length `n`. `x` may be null for `1..=n`, and `w1`,
/// `w2` may be null for unit weights.
///
/// # Safety
/// Non-null arrays are valid for `n` reads; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ordiso_sample_new(
    x: *const f64,
    y: *const f64,
    z: *const f64,
    w1: *const f64,
    w2: *const f64,
    n: usize,
    out: *mut *mut OrdisoSample,
) -> OrdisoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let y = read_vec(y, n, "y")?;
        let z = read_vec(z, n, "z")?;
        let x = read_opt(x, n, |j| (j + 1) as f64);
        let w1 = read_opt(w1, n, |_| 1.0);
        let w2 = read_opt(w2, n, |_| 1.0);
        let inner = PairedSample::new(x, y, z, w1, w2)?;
        *out = Box::into_raw(Box::new(OrdisoSample { inner }));
        Ok(())
    })
}

/// Reads a sample from a CSV file with columns `x,y,z` and optional
/// `w1,w2`. Repeated `x` values are merged.
///
/// # Safety
/// `path` is a NUL terminated string; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ordiso_sample_from_csv(path: *const c_char, out: *mut *mut OrdisoSample) -> OrdisoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let file = File::open(&path).map_err(|e| Failure::new(OrdisoStatus::Io, format!("{path}: {e}")))?;
        let inner = read_sample(file, InputFormat::Csv)?;
        *out = Box::into_raw(Box::new(OrdisoSample { inner }));
        Ok(())
    })
}

/// Number of design points, 0 for a null handle.
///
/// # Safety
/// `sample` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_sample_len(sample: *const OrdisoSample) -> usize {
    sample.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `sample` is null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ordiso_sample_free(sample: *mut OrdisoSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Fits the ordered pair. `config` may be null for the defaults. A fit that
/// stopped without converging is still returned with status `Ok`; ask
/// [`ordiso_fit_converged`].
///
/// # Safety
/// `sample` is a live handle, `config` is null or valid, `out` is valid for
/// one write.
#[no_mangle]
pub unsafe extern "C" fn ordiso_solve(
    sample: *const OrdisoSample,
    method: OrdisoMethod,
    config: *const OrdisoConfig,
    out: *mut *mut OrdisoFit,
) -> OrdisoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let sample = sample.as_ref().ok_or_else(|| Failure::null("sample"))?;
        let c = config.as_ref().copied().unwrap_or_else(|| ordiso_config_default());
        let config = config_from_c(&c);
        let method = match method {
            OrdisoMethod::Dual => Method::Dual,
            OrdisoMethod::GeneralizedPava => Method::GeneralizedPava,
            OrdisoMethod::Dykstra => Method::Dykstra,
        };
        let solution = solve(&sample.inner, method, &config, c.kkt_tol)?;
        *out =
            Box::into_raw(Box::new(OrdisoFit { sample: sample.inner.clone(), config, kkt_tol: c.kkt_tol, solution }));
        Ok(())
    })
}

/// # Safety
/// `fit` is null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_free(fit: *mut OrdisoFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_len(fit: *const OrdisoFit) -> usize {
    fit.as_ref().map_or(0, |f| f.solution.fit.len())
}

/// Weighted residual sum of squares, NaN for a null handle.
///
/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_objective(fit: *const OrdisoFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.solution.fit.objective)
}

/// Dual value at the returned multipliers, NaN for a null handle.
///
/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_dual_value(fit: *const OrdisoFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.solution.dual.dual_value)
}

/// `max_j (a_j - b_j)`, NaN for a null handle.
///
/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_max_coupling_violation(fit: *const OrdisoFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.solution.fit.max_coupling_violation)
}

/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_converged(fit: *const OrdisoFit) -> bool {
    fit.as_ref().is_some_and(|f| f.solution.diagnostics.converged)
}

/// # Safety
/// `fit` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_iterations(fit: *const OrdisoFit) -> usize {
    fit.as_ref().map_or(0, |f| f.solution.diagnostics.iterations)
}

unsafe fn copy_out(fit: *const OrdisoFit, buf: *mut f64, len: usize, pick: fn(&OrdisoFit) -> &[f64]) -> OrdisoStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| Failure::null("fit"))?;
        let src = pick(fit);
        if len < src.len() {
            return Err(Failure::new(
                OrdisoStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        if src.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Copies the fitted lower curve into `buf`, which holds `len` values.
///
/// # Safety
/// `fit` is a live handle and `buf` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_copy_a(fit: *const OrdisoFit, buf: *mut f64, len: usize) -> OrdisoStatus {
    copy_out(fit, buf, len, |f| f.solution.fit.a.values())
}

/// Copies the fitted upper curve into `buf`, which holds `len` values.
///
/// # Safety
/// `fit` is a live handle and `buf` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_copy_b(fit: *const OrdisoFit, buf: *mut f64, len: usize) -> OrdisoStatus {
    copy_out(fit, buf, len, |f| f.solution.fit.b.values())
}

/// Copies the coupling multipliers into `buf`, which holds `len` values.
///
/// # Safety
/// `fit` is a live handle and `buf` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_copy_lambda(fit: *const OrdisoFit, buf: *mut f64, len: usize) -> OrdisoStatus {
    copy_out(fit, buf, len, |f| &f.solution.dual.lambda)
}

/// Runs the optimality check on a fit at `tol`. On failure the reasons are
/// available from [`ordiso_last_error`] while the status stays `Ok`.
///
/// # Safety
/// `fit` is a live handle and `passed` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_check(fit: *const OrdisoFit, tol: f64, passed: *mut bool) -> OrdisoStatus {
    let mut report = None;
    let status = guard(|| {
        let fit = fit.as_ref().ok_or_else(|| Failure::null("fit"))?;
        if passed.is_null() {
            return Err(Failure::null("passed"));
        }
        let r = kkt_check(&fit.sample, &fit.solution.fit, &fit.solution.dual.lambda, tol)?;
        *passed = r.passed();
        report = Some(r);
        Ok(())
    });
    if let Some(r) = report.filter(|r| !r.passed()) {
        set_last_error(&r.to_string());
    }
    status
}

/// Writes a fit to `path` as JSON, CSV or plotting CSV.
///
/// # Safety
/// `fit` is a live handle and `path` a NUL terminated string.
#[no_mangle]
pub unsafe extern "C" fn ordiso_fit_write(
    fit: *const OrdisoFit,
    path: *const c_char,
    format: OrdisoFormat,
) -> OrdisoStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| Failure::null("fit"))?;
        let path = path_arg(path)?;
        let file = File::create(&path).map_err(|e| Failure::new(OrdisoStatus::Io, format!("{path}: {e}")))?;
        let format = match format {
            OrdisoFormat::Json => OutputFormat::Json,
            OrdisoFormat::Csv => OutputFormat::Csv,
            OrdisoFormat::PlotCsv => OutputFormat::PlotCsv,
        };
        let out = FitOutput {
            sample: &fit.sample,
            config: &fit.config,
            kkt_tol: fit.kkt_tol,
            fit: &fit.solution.fit,
            dual: &fit.solution.dual,
            diagnostics: &fit.solution.diagnostics,
        };
        write_fit(out, BufWriter::new(file), format)?;
        Ok(())
    })
}

/// Weighted isotonic (nondecreasing) fit of `data` into `out`, all of
/// length `n`. `weights` may be null for unit weights.
///
/// # Safety
/// `data` and `out` are valid for `n` elements, `weights` is null or valid
/// for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn ordiso_isotonic_fit(
    data: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut f64,
) -> OrdisoStatus {
    guard(|| {
        let data = read_vec(data, n, "data")?;
        let weights = read_opt(weights, n, |_| 1.0);
        let prob = ordiso::IsotonicProblem::new(data, weights)?;
        let fit = ordiso::isotonic_fit(&prob);
        if n > 0 {
            if out.is_null() {
                return Err(Failure::null("out"));
            }
            ptr::copy_nonoverlapping(fit.values().as_ptr(), out, n);
        }
        Ok(())
    })
}
