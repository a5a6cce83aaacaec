use std::ffi::{c_char, CStr, CString};
use std::ptr;

use probcov_ffi::*;

const EX1: &str = probcov::fixtures::EX1;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(probcov_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn parse(text: &str) -> *mut ProbcovModel {
    let mut m = ptr::null_mut();
    let text = cstr(text);
    assert_eq!(
        unsafe { probcov_model_parse(text.as_ptr(), &mut m) },
        ProbcovStatus::Ok
    );
    assert!(!m.is_null());
    m
}

fn prob(
    model: *const ProbcovModel,
    trace: &str,
    goal: &str,
    opts: *const ProbcovOptions,
) -> (ProbcovStatus, f64) {
    let (trace, goal) = (cstr(trace), cstr(goal));
    let mut p = -1.0;
    let status = unsafe { probcov_coverage(model, trace.as_ptr(), goal.as_ptr(), opts, &mut p) };
    (status, p)
}

#[test]
fn coverage_values() {
    let m = parse(EX1);
    for (goal, want) in [
        ("<1>", 0.75),
        ("<2>", 0.725),
        ("^1>=4", 0.05),
        ("<2,0>", 0.5),
    ] {
        let (status, p) = prob(m, "a b a", goal, ptr::null());
        assert_eq!(status, ProbcovStatus::Ok, "{goal}");
        assert!((p - want).abs() < 1e-9, "{goal}: {p}");
    }
    let mut opts = probcov_options_default();
    opts.method = ProbcovMethod::Brute;
    assert!((prob(m, "a b a", "^1>=3", &opts).1 - 0.525).abs() < 1e-12);
    opts.method = ProbcovMethod::Label;
    opts.merge_policy = ProbcovMergePolicy::Never;
    assert!((prob(m, "a b a", "^1>=3", &opts).1 - 0.525).abs() < 1e-12);
    opts.method = ProbcovMethod::MonteCarlo;
    opts.samples = 1000;
    assert_eq!(prob(m, "a b a", "<0>", &opts), (ProbcovStatus::Ok, 1.0));
    opts.samples = 0;
    assert_eq!(
        prob(m, "a b a", "<0>", &opts).0,
        ProbcovStatus::InvalidArgument
    );
    unsafe { probcov_model_free(m) };
}

#[test]
fn error_codes() {
    let m = parse(EX1);
    assert_eq!(
        prob(m, "a b b", "<1>", ptr::null()).0,
        ProbcovStatus::IllegalTrace
    );
    assert!(last_error().contains("`a b`"));
    assert_eq!(
        prob(m, "a b a", "<1", ptr::null()).0,
        ProbcovStatus::GoalError
    );
    assert_eq!(prob(m, "", "<1>", ptr::null()).0, ProbcovStatus::ParseError);
    assert_eq!(
        prob(ptr::null(), "a", "<1>", ptr::null()).0,
        ProbcovStatus::NullArgument
    );
    let mut opts = probcov_options_default();
    opts.method = ProbcovMethod::Brute;
    opts.paths_cap = 2;
    assert_eq!(
        prob(m, "a b a", "<1>", &opts).0,
        ProbcovStatus::PathCapExceeded
    );
    assert_eq!(prob(m, "a b a", "<1>", ptr::null()).0, ProbcovStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { probcov_model_free(m) };

    let mut out = ptr::null_mut();
    let bad = cstr("init: 0\n0 a 1.5 1\n");
    assert_eq!(
        unsafe { probcov_model_parse(bad.as_ptr(), &mut out) },
        ProbcovStatus::ParseError
    );
    assert!(out.is_null());
    assert!(last_error().contains("line 2"));

    let invalid_utf8 = [0xffu8, 0xfe, 0];
    let status = unsafe { probcov_model_parse(invalid_utf8.as_ptr() as *const c_char, &mut out) };
    assert_eq!(status, ProbcovStatus::InvalidUtf8);
    assert_eq!(
        unsafe { probcov_model_parse(ptr::null(), &mut out) },
        ProbcovStatus::NullArgument
    );
}

#[test]
fn validation() {
    let mut ok = false;
    let m = parse(EX1);
    assert_eq!(
        unsafe { probcov_model_validate(m, &mut ok) },
        ProbcovStatus::Ok
    );
    assert!(ok);
    unsafe { probcov_model_free(m) };

    let mixed = parse("init: 0\n0 a 1\n0 tau 2\n");
    assert_eq!(
        unsafe { probcov_model_validate(mixed, &mut ok) },
        ProbcovStatus::Ok
    );
    assert!(!ok);
    assert!(last_error().contains("tau-mix"));
    assert_eq!(
        prob(mixed, "a", "<1>", ptr::null()).0,
        ProbcovStatus::InvalidModel
    );
    unsafe { probcov_model_free(mixed) };
}

#[test]
fn execution_models() {
    let m = parse(EX1);
    let trace = cstr("a b a");
    let mut e = ptr::null_mut();
    assert_eq!(
        unsafe { probcov_exec_build(m, trace.as_ptr(), 0, &mut e) },
        ProbcovStatus::Ok
    );
    let mut paths = 0;
    assert_eq!(
        unsafe { probcov_exec_path_count(e, &mut paths) },
        ProbcovStatus::Ok
    );
    assert_eq!(paths, 5);
    let mut stats = ProbcovExecStats::default();
    assert_eq!(
        unsafe { probcov_exec_stats(e, &mut stats) },
        ProbcovStatus::Ok
    );
    assert_eq!(
        (stats.nodes, stats.edges, stats.paths, stats.word_length),
        (9, 11, 5, 1)
    );

    let goal = cstr("<0,1,3>");
    let mut p = 0.0;
    assert_eq!(
        unsafe { probcov_exec_coverage(e, goal.as_ptr(), ptr::null(), &mut p) },
        ProbcovStatus::Ok
    );
    assert!((p - 0.05).abs() < 1e-12);
    unsafe { probcov_exec_free(e) };

    let mut e3 = ptr::null_mut();
    assert_eq!(
        unsafe { probcov_exec_build(m, trace.as_ptr(), 3, &mut e3) },
        ProbcovStatus::Ok
    );
    assert_eq!(
        unsafe { probcov_exec_stats(e3, &mut stats) },
        ProbcovStatus::Ok
    );
    assert_eq!((stats.paths, stats.word_length), (5, 3));
    let short = cstr("<1>");
    let status = unsafe { probcov_exec_coverage(e3, short.as_ptr(), ptr::null(), &mut p) };
    assert_eq!(status, ProbcovStatus::GoalError);
    unsafe {
        probcov_exec_free(e3);
        probcov_exec_free(ptr::null_mut());
        probcov_model_free(m);
        probcov_model_free(ptr::null_mut());
    }
}

#[test]
fn static_strings() {
    let v = unsafe { CStr::from_ptr(probcov_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let name = unsafe { CStr::from_ptr(probcov_status_name(ProbcovStatus::IllegalTrace)) };
    assert_eq!(name.to_str().unwrap(), "illegal trace");
}

#[test]
fn errors_are_per_thread() {
    let m = parse(EX1);
    assert_eq!(
        prob(m, "z", "<1>", ptr::null()).0,
        ProbcovStatus::IllegalTrace
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
    unsafe { probcov_model_free(m) };
}
