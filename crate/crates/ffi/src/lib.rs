//! C interface to the probcov coverage analyzer.
//!
//! Models and execution models are opaque handles created by `*_parse` /
//! `*_build` and released with the matching `*_free`. Every fallible function
//! returns a [`ProbcovStatus`]; on failure a description is available from
//! [`probcov_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use probcov::coverage::{evaluate, Method, Options};
use probcov::{expand, Error, ExecModel, Goal, MdpModel, MergePolicy, Trace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbcovStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    InvalidModel = 5,
    IllegalTrace = 6,
    GoalError = 7,
    PathCapExceeded = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbcovMethod {
    Label = 0,
    Brute = 1,
    MonteCarlo = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbcovMergePolicy {
    Always = 0,
    Never = 1,
    Bridge = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ProbcovOptions {
    pub method: ProbcovMethod,
    pub merge_policy: ProbcovMergePolicy,
    /// Number of samples for Monte-Carlo estimation.
    pub samples: u64,
    pub seed: u64,
    /// Enumeration refuses models with more paths than this.
    pub paths_cap: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ProbcovExecStats {
    pub nodes: usize,
    pub edges: usize,
    /// Saturates at `UINT64_MAX`.
    pub paths: u64,
    pub max_depth: usize,
    pub word_length: usize,
}

/// A parsed model.
pub struct ProbcovModel(MdpModel);

/// An execution model, possibly expanded to windows.
pub struct ProbcovExecModel(ExecModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Failure = (ProbcovStatus, String);

fn status_of(e: &Error) -> ProbcovStatus {
    match e {
        Error::ModelSyntax { .. }
        | Error::DuplicateTransition { .. }
        | Error::MissingInit
        | Error::UnknownInit(_)
        | Error::EmptyTrace
        | Error::TauInTrace => ProbcovStatus::ParseError,
        Error::InvalidModel(_) => ProbcovStatus::InvalidModel,
        Error::IllegalTrace { .. } => ProbcovStatus::IllegalTrace,
        Error::GoalSyntax { .. }
        | Error::MixedWordLength { .. }
        | Error::InvalidAggregate(_)
        | Error::WordLengthMismatch { .. } => ProbcovStatus::GoalError,
        Error::InvalidExpansion(_) | Error::PathNotInModel => ProbcovStatus::InvalidArgument,
        Error::PathCapExceeded { .. } => ProbcovStatus::PathCapExceeded,
    }
}

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

/// Runs `f`, recording its error message and turning panics into
/// `PROBCOV_STATUS_INTERNAL`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ProbcovStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ProbcovStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal error");
            ProbcovStatus::Internal
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((ProbcovStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            ProbcovStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| (ProbcovStatus::NullArgument, format!("{what} is null")))
}

fn null_out(what: &str) -> Failure {
    (ProbcovStatus::NullArgument, format!("{what} is null"))
}

unsafe fn resolve_options(opts: *const ProbcovOptions) -> Result<Options, Failure> {
    let o = opts
        .as_ref()
        .copied()
        .unwrap_or_else(|| probcov_options_default());
    if o.method == ProbcovMethod::MonteCarlo && o.samples == 0 {
        return Err((
            ProbcovStatus::InvalidArgument,
            "Monte-Carlo estimation needs at least one sample".into(),
        ));
    }
    Ok(Options {
        method: match o.method {
            ProbcovMethod::Label => Method::Label,
            ProbcovMethod::Brute => Method::Brute,
            ProbcovMethod::MonteCarlo => Method::Mc,
        },
        policy: match o.merge_policy {
            ProbcovMergePolicy::Always => MergePolicy::Always,
            ProbcovMergePolicy::Never => MergePolicy::Never,
            ProbcovMergePolicy::Bridge => MergePolicy::Bridge,
        },
        samples: o.samples,
        seed: o.seed,
        paths_cap: u128::from(o.paths_cap),
    })
}

/// Labelling with the bridge merge policy, 100000 samples, seed 0 and a
/// path cap of 10^7.
#[no_mangle]
pub extern "C" fn probcov_options_default() -> ProbcovOptions {
    let d = Options::default();
    ProbcovOptions {
        method: ProbcovMethod::Label,
        merge_policy: ProbcovMergePolicy::Bridge,
        samples: d.samples,
        seed: d.seed,
        paths_cap: d.paths_cap as u64,
    }
}

/// Parses a model from its text form.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer. On
/// success `*out` owns a model to be released with [`probcov_model_free`].
#[no_mangle]
pub unsafe extern "C" fn probcov_model_parse(
    text: *const c_char,
    out: *mut *mut ProbcovModel,
) -> ProbcovStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = ptr::null_mut();
        let model = MdpModel::parse(c_str(text, "text")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(ProbcovModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a pointer from [`probcov_model_parse`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn probcov_model_free(model: *mut ProbcovModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Checks the model's well-formedness rules. `*out_ok` is set to whether all
/// rules hold; the violations are then available from
/// [`probcov_last_error_message`].
///
/// # Safety
/// `model` must be a live handle and `out_ok` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn probcov_model_validate(
    model: *const ProbcovModel,
    out_ok: *mut bool,
) -> ProbcovStatus {
    let mut report = String::new();
    let status = guard(|| {
        let m = handle(model, "model")?;
        if out_ok.is_null() {
            return Err(null_out("out_ok"));
        }
        let r = m.0.validate();
        *out_ok = r.ok;
        if !r.ok {
            report = r.to_string();
        }
        Ok(())
    });
    if !report.is_empty() {
        set_last_error(&report);
    }
    status
}

/// Probability that `trace` (space-separated actions) covers `goal` on
/// `model`. `options` may be null for the defaults.
///
/// # Safety
/// `model` must be a live handle, `trace` and `goal` NUL-terminated strings,
/// `options` null or valid, and `out_prob` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn probcov_coverage(
    model: *const ProbcovModel,
    trace: *const c_char,
    goal: *const c_char,
    options: *const ProbcovOptions,
    out_prob: *mut f64,
) -> ProbcovStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let trace = Trace::parse(c_str(trace, "trace")?).map_err(fail)?;
        let goal = Goal::parse(c_str(goal, "goal")?).map_err(fail)?;
        if out_prob.is_null() {
            return Err(null_out("out_prob"));
        }
        let e = ExecModel::build(&m.0, &trace).map_err(fail)?;
        *out_prob = evaluate(&e, &goal, &resolve_options(options)?)
            .map_err(fail)?
            .probability;
        Ok(())
    })
}

/// Builds the execution model of `trace`, expanded to windows of length
/// `expand_k` when it is 2 or more.
///
/// # Safety
/// `model` must be a live handle, `trace` a NUL-terminated string and `out` a
/// valid pointer. On success `*out` must be released with
/// [`probcov_exec_free`].
#[no_mangle]
pub unsafe extern "C" fn probcov_exec_build(
    model: *const ProbcovModel,
    trace: *const c_char,
    expand_k: u32,
    out: *mut *mut ProbcovExecModel,
) -> ProbcovStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = ptr::null_mut();
        let m = handle(model, "model")?;
        let trace = Trace::parse(c_str(trace, "trace")?).map_err(fail)?;
        let mut e = ExecModel::build(&m.0, &trace).map_err(fail)?;
        if expand_k >= 2 {
            e = expand(&e, expand_k as usize).map_err(fail)?;
        }
        *out = Box::into_raw(Box::new(ProbcovExecModel(e)));
        Ok(())
    })
}

/// # Safety
/// `exec` must be null or a pointer from [`probcov_exec_build`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn probcov_exec_free(exec: *mut ProbcovExecModel) {
    if !exec.is_null() {
        drop(Box::from_raw(exec));
    }
}

/// Number of root-to-terminal paths, saturating at `UINT64_MAX`.
///
/// # Safety
/// `exec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn probcov_exec_path_count(
    exec: *const ProbcovExecModel,
    out: *mut u64,
) -> ProbcovStatus {
    guard(|| {
        let e = handle(exec, "exec")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        *out = u64::try_from(e.0.count_paths()).unwrap_or(u64::MAX);
        Ok(())
    })
}

/// # Safety
/// `exec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn probcov_exec_stats(
    exec: *const ProbcovExecModel,
    out: *mut ProbcovExecStats,
) -> ProbcovStatus {
    guard(|| {
        let e = handle(exec, "exec")?;
        if out.is_null() {
            return Err(null_out("out"));
        }
        let s = e.0.stats();
        *out = ProbcovExecStats {
            nodes: s.nodes,
            edges: s.edges,
            paths: u64::try_from(s.paths).unwrap_or(u64::MAX),
            max_depth: s.max_depth,
            word_length: e.0.word_length(),
        };
        Ok(())
    })
}

/// Probability that the execution model covers `goal`. Goals with longer
/// words than the model's windows expand an unexpanded model first.
///
/// # Safety
/// `exec` must be a live handle, `goal` a NUL-terminated string, `options`
/// null or valid, and `out_prob` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn probcov_exec_coverage(
    exec: *const ProbcovExecModel,
    goal: *const c_char,
    options: *const ProbcovOptions,
    out_prob: *mut f64,
) -> ProbcovStatus {
    guard(|| {
        let e = handle(exec, "exec")?;
        let goal = Goal::parse(c_str(goal, "goal")?).map_err(fail)?;
        if out_prob.is_null() {
            return Err(null_out("out_prob"));
        }
        *out_prob = evaluate(&e.0, &goal, &resolve_options(options)?)
            .map_err(fail)?
            .probability;
        Ok(())
    })
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn probcov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn probcov_status_name(status: ProbcovStatus) -> *const c_char {
    let name: &'static CStr = match status {
        ProbcovStatus::Ok => c"ok",
        ProbcovStatus::NullArgument => c"null argument",
        ProbcovStatus::InvalidUtf8 => c"invalid utf-8",
        ProbcovStatus::InvalidArgument => c"invalid argument",
        ProbcovStatus::ParseError => c"parse error",
        ProbcovStatus::InvalidModel => c"invalid model",
        ProbcovStatus::IllegalTrace => c"illegal trace",
        ProbcovStatus::GoalError => c"goal error",
        ProbcovStatus::PathCapExceeded => c"path cap exceeded",
        ProbcovStatus::Internal => c"internal error",
    };
    name.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn probcov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
