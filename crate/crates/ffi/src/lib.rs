//! C ABI over the `amalgam` crate.
//!
//! Objects are opaque heap handles created by `amalgam_*_new`/`_parse`
//! functions and released with the matching `_free`. Every fallible call
//! returns an [`AmalgamStatus`] and writes its result through an out
//! pointer; the message of the last failure on the calling thread is
//! available from [`amalgam_last_error`].
//!
//! Exponents are passed as `double`, with `INFINITY` standing for `∞`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use amalgam::harness::{run_scenario, RunOptions, Scenario};
use amalgam::norms::{amalgam_norm, lq_norm_total, weak_norm, ScaleSearch, DEFAULT_LAMBDA_LEVELS};
use amalgam::operators::{maximal, potential, Kernel, KernelSpec, MaximalQuery};
use amalgam::{growth_constant, Error, Exponent, FunctionSpec, MeasureSpec, RadonMeasure, RealFunction};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmalgamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMeasure = 3,
    TrivialSpace = 4,
    Hypothesis = 5,
    Numerical = 6,
    Config = 7,
    Internal = 8,
    Panic = 9,
}

/// A Radon measure on the line.
pub struct AmalgamMeasure {
    inner: RadonMeasure,
}

/// A real function with bounded effective support.
pub struct AmalgamFunction {
    inner: RealFunction,
}

/// An even, radially nonincreasing kernel.
pub struct AmalgamKernel {
    inner: Kernel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AmalgamStatus {
    match e {
        Error::InvalidArgument(_) => AmalgamStatus::InvalidArgument,
        Error::InvalidMeasure(_) => AmalgamStatus::InvalidMeasure,
        Error::TrivialSpace { .. } => AmalgamStatus::TrivialSpace,
        Error::Hypothesis(_) => AmalgamStatus::Hypothesis,
        Error::Config(_) => AmalgamStatus::Config,
        Error::Internal(_) => AmalgamStatus::Internal,
        Error::Quadrature { .. } | Error::Evaluation(_) | Error::Divergence { .. } | Error::Inversion(_) => {
            AmalgamStatus::Numerical
        }
    }
}

/// Runs `body`, translating errors and panics into a status.
fn guard<F>(body: F) -> AmalgamStatus
where
    F: FnOnce() -> Result<(), AmalgamStatus>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AmalgamStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside amalgam".into());
            AmalgamStatus::Panic
        }
    }
}

fn fail(e: Error) -> AmalgamStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> AmalgamStatus {
    set_error(format!("{what} is null"));
    AmalgamStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, AmalgamStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        AmalgamStatus::InvalidArgument
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, AmalgamStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), AmalgamStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

fn exponent(v: f64) -> Result<Exponent, AmalgamStatus> {
    Exponent::new(v).map_err(fail)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn amalgam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn amalgam_status_name(status: AmalgamStatus) -> *const c_char {
    let s: &'static CStr = match status {
        AmalgamStatus::Ok => c"ok",
        AmalgamStatus::NullPointer => c"null pointer",
        AmalgamStatus::InvalidArgument => c"invalid argument",
        AmalgamStatus::InvalidMeasure => c"invalid measure",
        AmalgamStatus::TrivialSpace => c"trivial space",
        AmalgamStatus::Hypothesis => c"hypothesis violated",
        AmalgamStatus::Numerical => c"numerical failure",
        AmalgamStatus::Config => c"configuration error",
        AmalgamStatus::Internal => c"internal error",
        AmalgamStatus::Panic => c"panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn amalgam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- measures ----

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_lebesgue(out: *mut *mut AmalgamMeasure) -> AmalgamStatus {
    guard(|| put(out, Box::into_raw(Box::new(AmalgamMeasure { inner: RadonMeasure::lebesgue() }))))
}

/// `|x|^{-a} dx`, `0 < a < 1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_power(a: f64, out: *mut *mut AmalgamMeasure) -> AmalgamStatus {
    guard(|| {
        let m = RadonMeasure::power(a).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamMeasure { inner: m })))
    })
}

/// Shorthand (`lebesgue`, `power:0.5`) or a JSON measure block.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_parse(spec: *const c_char, out: *mut *mut AmalgamMeasure) -> AmalgamStatus {
    guard(|| {
        let s = text(spec, "spec")?;
        let parsed = if s.trim_start().starts_with('{') {
            serde_json::from_str::<MeasureSpec>(s).map_err(|e| fail(Error::Config(e.to_string())))?
        } else {
            MeasureSpec::parse_short(s).map_err(fail)?
        };
        let m = RadonMeasure::from_spec(&parsed).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamMeasure { inner: m })))
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_free(m: *mut AmalgamMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `F(x)`, the measure coordinate of `x`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_cdf(m: *const AmalgamMeasure, x: f64, out: *mut f64) -> AmalgamStatus {
    guard(|| put(out, handle(m, "measure")?.inner.cdf(x)))
}

/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_inv_cdf(m: *const AmalgamMeasure, t: f64, out: *mut f64) -> AmalgamStatus {
    guard(|| {
        let x = handle(m, "measure")?.inner.try_inv_cdf(t).map_err(fail)?;
        put(out, x)
    })
}

/// `μ([a, b))`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_mass(m: *const AmalgamMeasure, a: f64, b: f64, out: *mut f64) -> AmalgamStatus {
    guard(|| put(out, handle(m, "measure")?.inner.mass(a, b)))
}

/// Largest ratio `μ([t, t+r]) / μ([0, r])` (and its mirror) over the
/// default scale and translation grids.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_measure_growth_constant(m: *const AmalgamMeasure, out: *mut f64) -> AmalgamStatus {
    guard(|| {
        let m = &handle(m, "measure")?.inner;
        let v = growth_constant(m, &amalgam::measure::default_growth_scales(), &amalgam::measure::default_growth_translations())
            .map_err(fail)?;
        put(out, v)
    })
}

// ---- functions ----

/// Shorthand such as `indicator:0:1`, or a JSON function block.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_function_parse(spec: *const c_char, out: *mut *mut AmalgamFunction) -> AmalgamStatus {
    guard(|| {
        let s = text(spec, "spec")?;
        let parsed = if s.trim_start().starts_with('{') {
            serde_json::from_str::<FunctionSpec>(s).map_err(|e| fail(Error::Config(e.to_string())))?
        } else {
            FunctionSpec::parse_short(s).map_err(fail)?
        };
        let f = parsed.build().map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamFunction { inner: f })))
    })
}

/// `χ_{[a,b)}`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_function_indicator(a: f64, b: f64, out: *mut *mut AmalgamFunction) -> AmalgamStatus {
    guard(|| {
        let f = RealFunction::indicator(a, b).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamFunction { inner: f })))
    })
}

/// Piecewise-linear interpolation of `n` points `(xs[i], ys[i])`, zero
/// outside `[xs[0], xs[n-1])`.
///
/// # Safety
/// `xs` and `ys` must point to `n` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_function_table(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    out: *mut *mut AmalgamFunction,
) -> AmalgamStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(null("table"));
        }
        let (xs, ys) = (std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(ys, n));
        let points: Vec<[f64; 2]> = xs.iter().zip(ys).map(|(x, y)| [*x, *y]).collect();
        let f = RealFunction::table(&points).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamFunction { inner: f })))
    })
}

/// # Safety
/// `f` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amalgam_function_free(f: *mut AmalgamFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_function_eval(f: *const AmalgamFunction, x: f64, out: *mut f64) -> AmalgamStatus {
    guard(|| put(out, handle(f, "function")?.inner.eval(x)))
}

// ---- kernels ----

/// `riesz:<gamma>` or `indicator:<radius>`, or a JSON kernel block.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_kernel_parse(spec: *const c_char, out: *mut *mut AmalgamKernel) -> AmalgamStatus {
    guard(|| {
        let s = text(spec, "spec")?;
        let parsed = if s.trim_start().starts_with('{') {
            serde_json::from_str::<KernelSpec>(s).map_err(|e| fail(Error::Config(e.to_string())))?
        } else {
            KernelSpec::parse_short(s).map_err(fail)?
        };
        let k = Kernel::from_spec(&parsed).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamKernel { inner: k })))
    })
}

/// `|x|^{γ-1}`, `0 < γ < 1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_kernel_riesz(gamma: f64, out: *mut *mut AmalgamKernel) -> AmalgamStatus {
    guard(|| {
        let k = Kernel::riesz(gamma).map_err(fail)?;
        put(out, Box::into_raw(Box::new(AmalgamKernel { inner: k })))
    })
}

/// # Safety
/// `k` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amalgam_kernel_free(k: *mut AmalgamKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

// ---- norms and operators ----

/// `‖f‖_{L^q(μ)}` over the line.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_lq_norm(
    m: *const AmalgamMeasure,
    f: *const AmalgamFunction,
    q: f64,
    out: *mut f64,
) -> AmalgamStatus {
    guard(|| {
        let (m, f) = (&handle(m, "measure")?.inner, &handle(f, "function")?.inner);
        let v = lq_norm_total(m, f, exponent(q)?).map_err(fail)?;
        put(out, v)
    })
}

/// `‖f‖*_{α,∞}`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_weak_norm(
    m: *const AmalgamMeasure,
    f: *const AmalgamFunction,
    alpha: f64,
    out: *mut f64,
) -> AmalgamStatus {
    guard(|| {
        let (m, f) = (&handle(m, "measure")?.inner, &handle(f, "function")?.inner);
        let v = weak_norm(m, f, exponent(alpha)?, DEFAULT_LAMBDA_LEVELS).map_err(fail)?;
        put(out, v)
    })
}

/// `‖f‖_{q,p,α}` with partitions anchored at `anchor`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_amalgam_norm(
    m: *const AmalgamMeasure,
    f: *const AmalgamFunction,
    q: f64,
    p: f64,
    alpha: f64,
    anchor: f64,
    out: *mut f64,
) -> AmalgamStatus {
    guard(|| {
        let (m, f) = (&handle(m, "measure")?.inner, &handle(f, "function")?.inner);
        let search = ScaleSearch::for_function(m, f).with_anchor(anchor);
        let v = amalgam_norm(m, f, exponent(q)?, exponent(p)?, exponent(alpha)?, &search).map_err(fail)?;
        put(out, v.value)
    })
}

/// `𝔪_{q,β} f(x)`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_maximal(
    m: *const AmalgamMeasure,
    f: *const AmalgamFunction,
    q: f64,
    beta: f64,
    x: f64,
    out: *mut f64,
) -> AmalgamStatus {
    guard(|| {
        let (m, f) = (&handle(m, "measure")?.inner, &handle(f, "function")?.inner);
        let v = maximal(m, f, exponent(q)?, exponent(beta)?, &MaximalQuery::for_point(m, f, x)).map_err(fail)?;
        put(out, v)
    })
}

/// `Kf(x) = ∫ k(x - y) f(y) dμ(y)` to relative tolerance `tol`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amalgam_potential(
    m: *const AmalgamMeasure,
    f: *const AmalgamFunction,
    k: *const AmalgamKernel,
    x: f64,
    tol: f64,
    out: *mut f64,
) -> AmalgamStatus {
    guard(|| {
        let (m, f, k) = (&handle(m, "measure")?.inner, &handle(f, "function")?.inner, &handle(k, "kernel")?.inner);
        let v = potential(m, f, k, x, tol).map_err(fail)?;
        put(out, v)
    })
}

// ---- scenarios ----

/// Runs a scenario given as JSON text and returns the report JSON, to be
/// released with [`amalgam_string_free`]. A negative `seed` keeps the
/// scenario seed; `grid_scale <= 0` means 1.
///
/// # Safety
/// `scenario_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amalgam_verify_json(
    scenario_json: *const c_char,
    seed: i64,
    grid_scale: f64,
    out: *mut *mut c_char,
) -> AmalgamStatus {
    guard(|| {
        let scn = Scenario::from_json(text(scenario_json, "scenario_json")?).map_err(fail)?;
        let opts = RunOptions {
            seed: u64::try_from(seed).ok(),
            grid_scale: if grid_scale > 0.0 { grid_scale } else { 1.0 },
            tol: None,
        };
        let json = run_scenario(&scn, &opts).and_then(|r| r.to_json()).map_err(fail)?;
        let c = CString::new(json).map_err(|e| fail(Error::Internal(e.to_string())))?;
        put(out, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amalgam_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
