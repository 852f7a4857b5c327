//! C ABI over `ergot`. Problems are loaded from the same JSON documents the
//! command-line tool reads and are handed out as opaque pointers. Every
//! function returns an [`ErgotStatus`]; on failure the message is available
//! from [`ergot_last_error`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ergot::cli::Problem;
use ergot::error::Error;
use ergot::transport::{solve_constrained_ot, wasserstein, OtStatus};
use ergot::types::TransportPlan;
use ergot::verify::verify_decomposition;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed problem or arguments.
    InputError = 3,
    /// A marginal is outside its simplex or charges transient states.
    NotInSimplex = 4,
    /// The restricted problem has no feasible plan.
    Infeasible = 5,
    NotGeometric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Parsed problem file.
pub struct ErgotProblem {
    inner: Problem,
}

/// Optimal plan returned by [`ergot_solve`].
pub struct ErgotPlan {
    plan: TransportPlan,
    value: f64,
}

/// Both sides of the decomposition equality for a problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgotDecomposition {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub unconstrained: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> ErgotStatus {
    match e {
        Error::NotInSimplex(_) | Error::TransientMass(_) => ErgotStatus::NotInSimplex,
        Error::Infeasible => ErgotStatus::Infeasible,
        Error::NotGeometric(_) => ErgotStatus::NotGeometric,
        _ => ErgotStatus::InputError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), ErgotStatus>) -> ErgotStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ErgotStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            ErgotStatus::Panic
        }
    }
}

fn fail(e: Error) -> ErgotStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, ErgotStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument");
        ErgotStatus::NullPointer
    })
}

fn non_null<T>(p: *mut T) -> Result<(), ErgotStatus> {
    if p.is_null() {
        set_error("null output pointer");
        return Err(ErgotStatus::NullPointer);
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ergot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ergot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a problem document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable
/// pointer. On success `*out` owns a problem that must be released with
/// [`ergot_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn ergot_problem_from_json(
    json: *const c_char,
    out: *mut *mut ErgotProblem,
) -> ErgotStatus {
    guard(|| {
        non_null(out)?;
        *out = ptr::null_mut();
        if json.is_null() {
            set_error("null problem text");
            return Err(ErgotStatus::NullPointer);
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| {
            set_error("problem text is not UTF-8");
            ErgotStatus::InvalidUtf8
        })?;
        let inner = Problem::from_json_str(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(ErgotProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be NULL or a pointer from [`ergot_problem_from_json`]
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ergot_problem_free(problem: *mut ErgotProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of points of the problem's space, 0 for NULL.
///
/// # Safety
/// `problem` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ergot_problem_size(problem: *const ErgotProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.space.len())
}

/// Solves the restricted transport problem with the problem's cost (or its
/// metric raised to the problem's exponent).
///
/// # Safety
/// `problem` must be a live problem handle and `out` a writable pointer. On
/// success `*out` owns a plan released with [`ergot_plan_free`].
#[no_mangle]
pub unsafe extern "C" fn ergot_solve(
    problem: *const ErgotProblem,
    out: *mut *mut ErgotPlan,
) -> ErgotStatus {
    guard(|| {
        non_null(out)?;
        *out = ptr::null_mut();
        let p = &deref(problem)?.inner;
        let r = p.restriction().map_err(fail)?;
        let c = p.cost_matrix(p.p).map_err(fail)?;
        let (mu, nu) = p.marginals().map_err(fail)?;
        let res = solve_constrained_ot(mu, nu, &c, &r).map_err(fail)?;
        if res.status == OtStatus::Infeasible {
            return Err(fail(Error::Infeasible));
        }
        let value = res.value;
        let plan = res.into_plan().map_err(fail)?;
        *out = Box::into_raw(Box::new(ErgotPlan { plan, value }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a pointer from [`ergot_solve`] that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn ergot_plan_free(plan: *mut ErgotPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Optimal cost of the plan, NaN for NULL.
///
/// # Safety
/// `plan` must be NULL or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ergot_plan_value(plan: *const ErgotPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.value)
}

/// Writes the plan's row and column counts.
///
/// # Safety
/// `plan` must be a live plan handle; `rows` and `cols` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn ergot_plan_shape(
    plan: *const ErgotPlan,
    rows: *mut usize,
    cols: *mut usize,
) -> ErgotStatus {
    guard(|| {
        non_null(rows)?;
        non_null(cols)?;
        let p = &deref(plan)?.plan;
        *rows = p.p.nrows();
        *cols = p.p.ncols();
        Ok(())
    })
}

/// Copies the plan row-major into `buf`, which must hold `rows * cols`
/// values.
///
/// # Safety
/// `plan` must be a live plan handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ergot_plan_copy(
    plan: *const ErgotPlan,
    buf: *mut f64,
    len: usize,
) -> ErgotStatus {
    guard(|| {
        non_null(buf)?;
        let p = &deref(plan)?.plan;
        let (r, c) = p.p.shape();
        if len < r * c {
            set_error(format!("buffer holds {len} values, plan needs {}", r * c));
            return Err(ErgotStatus::BufferTooSmall);
        }
        let out = std::slice::from_raw_parts_mut(buf, r * c);
        for i in 0..r {
            for j in 0..c {
                out[i * c + j] = p.p[(i, j)];
            }
        }
        Ok(())
    })
}

/// Restricted Wasserstein distance between the problem's marginals under
/// its metric. Infeasible pairs give `+∞` with status OK.
///
/// # Safety
/// `problem` must be a live problem handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ergot_wasserstein(
    problem: *const ErgotProblem,
    p: f64,
    out: *mut f64,
) -> ErgotStatus {
    guard(|| {
        non_null(out)?;
        let prob = &deref(problem)?.inner;
        let d = prob
            .metric
            .as_ref()
            .ok_or_else(|| fail(Error::Parse("problem has no metric".into())))?;
        let r = prob.restriction().map_err(fail)?;
        let (mu, nu) = prob.marginals().map_err(fail)?;
        *out = wasserstein(mu, nu, d, p, &r).map_err(fail)?;
        Ok(())
    })
}

/// Solves the problem directly and through its extreme-point decomposition.
///
/// # Safety
/// `problem` must be a live problem handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ergot_verify_decomposition(
    problem: *const ErgotProblem,
    out: *mut ErgotDecomposition,
) -> ErgotStatus {
    guard(|| {
        non_null(out)?;
        let p = &deref(problem)?.inner;
        let r = p.restriction().map_err(fail)?;
        let c = p.cost_matrix(p.p).map_err(fail)?;
        let (mu, nu) = p.marginals().map_err(fail)?;
        let rep = verify_decomposition(mu, nu, &c, &r).map_err(fail)?;
        *out = ErgotDecomposition {
            lhs: rep.lhs,
            rhs: rep.rhs,
            gap: rep.gap,
            unconstrained: rep.unconstrained,
        };
        Ok(())
    })
}
