//! C ABI over the planner.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`StgcsStatus`];
//! on failure a message is available from [`stgcs_last_error`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stgcs::bench_io::{read_instance, InstanceFile, DEFAULT_BUDGET_S};
use stgcs::gcsprog::DEFAULT_EPS;
use stgcs::mrmp::{run_method, validate, Method, Solution};
use stgcs::{Error, SolveMode, SolveParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StgcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The planner ran but found no solution, or a solution failed validation.
    PlanningFailed = 3,
    SolverError = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StgcsMethod {
    Sp = 0,
    Rp = 1,
    Pbs = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StgcsSolver {
    Heuristic = 0,
    Exhaustive = 1,
}

/// Planner settings. Start from [`stgcs_plan_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StgcsPlanOptions {
    pub method: StgcsMethod,
    pub solver: StgcsSolver,
    pub seed: u64,
    pub budget_s: f64,
    pub eps: f64,
    /// 0 selects the automatic budget.
    pub path_budget: usize,
}

/// Parsed instance (opaque).
pub struct StgcsInstance {
    file: InstanceFile,
}

/// Planned trajectories with metrics (opaque).
pub struct StgcsSolution {
    sol: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: StgcsStatus, msg: impl Into<String>) -> StgcsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> StgcsStatus {
    let status = match e {
        Error::Solver(_) => StgcsStatus::SolverError,
        _ => StgcsStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> StgcsStatus) -> StgcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(StgcsStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, StgcsStatus> {
    if p.is_null() {
        return Err(fail(StgcsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(StgcsStatus::InvalidInput, format!("{what} is not UTF-8")))
}

/// Message of the last failure on this thread, or null. Owned by the
/// library; valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn stgcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn stgcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn stgcs_plan_options_default() -> StgcsPlanOptions {
    StgcsPlanOptions {
        method: StgcsMethod::Pbs,
        solver: StgcsSolver::Heuristic,
        seed: 0,
        budget_s: DEFAULT_BUDGET_S,
        eps: DEFAULT_EPS,
        path_budget: 0,
    }
}

/// Parses an instance from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stgcs_instance_from_json(json: *const c_char, out: *mut *mut StgcsInstance) -> StgcsStatus {
    guard(|| {
        if out.is_null() {
            return fail(StgcsStatus::NullPointer, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match InstanceFile::from_json(text) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(StgcsInstance { file }));
                StgcsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Reads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stgcs_instance_load(path: *const c_char, out: *mut *mut StgcsInstance) -> StgcsStatus {
    guard(|| {
        if out.is_null() {
            return fail(StgcsStatus::NullPointer, "out is null");
        }
        let p = match str_arg(path, "path") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match read_instance(Path::new(p)) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(StgcsInstance { file }));
                StgcsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of robots, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stgcs_instance_num_robots(inst: *const StgcsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.file.robots.len())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stgcs_instance_free(inst: *mut StgcsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

fn params_of(o: &StgcsPlanOptions) -> SolveParams {
    SolveParams {
        epsilon: o.eps,
        path_budget: (o.path_budget > 0).then_some(o.path_budget),
        rng_seed: o.seed,
        mode: match o.solver {
            StgcsSolver::Heuristic => SolveMode::Heuristic,
            StgcsSolver::Exhaustive => SolveMode::Exhaustive,
        },
        ..Default::default()
    }
}

/// Plans every robot of `inst`. On `PlanningFailed` no solution is written.
///
/// # Safety
/// `inst` must be a live handle, `opts` null (defaults) or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn stgcs_plan(
    inst: *const StgcsInstance,
    opts: *const StgcsPlanOptions,
    out: *mut *mut StgcsSolution,
) -> StgcsStatus {
    guard(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(StgcsStatus::NullPointer, "instance is null");
        };
        if out.is_null() {
            return fail(StgcsStatus::NullPointer, "out is null");
        }
        let o = opts.as_ref().copied().unwrap_or_else(|| stgcs_plan_options_default());
        if o.budget_s.is_nan() || o.budget_s <= 0.0 {
            return fail(StgcsStatus::InvalidInput, "budget_s must be positive");
        }
        let params = params_of(&o);
        if let Err(e) = params.validate() {
            return from_error(e);
        }
        let method = match o.method {
            StgcsMethod::Sp => Method::Sp,
            StgcsMethod::Rp => Method::Rp,
            StgcsMethod::Pbs => Method::Pbs,
        };
        let prepared = match inst.file.to_instance(params, o.budget_s) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        match run_method(&prepared, method) {
            Ok(outcome) => match outcome.solution {
                Some(sol) => {
                    *out = Box::into_raw(Box::new(StgcsSolution { sol }));
                    StgcsStatus::Ok
                }
                None => fail(
                    StgcsStatus::PlanningFailed,
                    outcome.failure.map_or_else(|| "no solution".into(), |f| f.to_string()),
                ),
            },
            Err(e) => from_error(e),
        }
    })
}

/// Parses a solution JSON as written by [`stgcs_solution_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stgcs_solution_from_json(json: *const c_char, out: *mut *mut StgcsSolution) -> StgcsStatus {
    guard(|| {
        if out.is_null() {
            return fail(StgcsStatus::NullPointer, "out is null");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match serde_json::from_str::<Solution>(text) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(StgcsSolution { sol }));
                StgcsStatus::Ok
            }
            Err(e) => fail(StgcsStatus::InvalidInput, format!("malformed solution: {e}")),
        }
    })
}

/// Sum of costs, or NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stgcs_solution_soc(sol: *const StgcsSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.sol.metrics.soc)
}

/// Makespan, or NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stgcs_solution_makespan(sol: *const StgcsSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.sol.metrics.makespan)
}

/// Solution as a JSON string; release it with [`stgcs_string_free`].
/// Null on failure.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stgcs_solution_to_json(sol: *const StgcsSolution) -> *mut c_char {
    let Some(s) = sol.as_ref() else {
        set_error("solution is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&s.sol).map(CString::new) {
        Ok(Ok(c)) => c.into_raw(),
        _ => {
            set_error("cannot serialize solution");
            ptr::null_mut()
        }
    }
}

/// Checks a solution against an instance. `Ok` when valid,
/// `PlanningFailed` with a message listing the first violation otherwise.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn stgcs_validate(inst: *const StgcsInstance, sol: *const StgcsSolution) -> StgcsStatus {
    guard(|| {
        let (Some(inst), Some(sol)) = (inst.as_ref(), sol.as_ref()) else {
            return fail(StgcsStatus::NullPointer, "instance or solution is null");
        };
        let prepared = match inst.file.to_instance(SolveParams::default(), DEFAULT_BUDGET_S) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let report = validate(&sol.sol.trajectories, &prepared);
        match report.violations.first() {
            None => StgcsStatus::Ok,
            Some(v) => fail(
                StgcsStatus::PlanningFailed,
                format!("{} violation(s), first: {v:?}", report.violations.len()),
            ),
        }
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stgcs_solution_free(sol: *mut StgcsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stgcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
