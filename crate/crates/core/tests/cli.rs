use std::path::PathBuf;
use std::process::{Command, Output};

fn probcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probcov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ex1() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/ex1.model")
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn coverage(goal: &str, extra: &[&str]) -> Output {
    let model = ex1();
    let mut args = vec![
        "coverage", "--model", &model, "--trace", "a b a", "--goal", goal,
    ];
    args.extend_from_slice(extra);
    probcov(&args)
}

#[test]
fn coverage_prints_twelve_digits() {
    for (goal, want) in [
        ("<1>", "0.750000000000\n"),
        ("^1>=4", "0.050000000000\n"),
        ("<4>", "0.050000000000\n"),
        ("<2,0>", "0.500000000000\n"),
    ] {
        let o = coverage(goal, &[]);
        assert_eq!(o.status.code(), Some(0), "{goal}");
        assert_eq!(stdout(&o), want, "{goal}");
    }
}

#[test]
fn coverage_methods_and_policies() {
    let brute = coverage("^1>=3", &["--method", "brute"]);
    assert_eq!(stdout(&brute), "0.525000000000\n");
    for policy in ["always", "never", "bridge"] {
        let o = coverage("^1>=3", &["--merge-policy", policy]);
        assert_eq!(stdout(&o), "0.525000000000\n", "{policy}");
    }
    let mc = coverage(
        "<1>",
        &["--method", "mc", "--samples", "2000", "--seed", "9"],
    );
    let again = coverage(
        "<1>",
        &["--method", "mc", "--samples", "2000", "--seed", "9"],
    );
    assert_eq!(mc.status.code(), Some(0));
    assert_eq!(stdout(&mc), stdout(&again));
    let capped = coverage("<1>", &["--method", "brute", "--paths-cap", "3"]);
    assert_eq!(capped.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let model = ex1();
    assert_eq!(
        probcov(&["validate", "--model", &model]).status.code(),
        Some(0)
    );
    assert_eq!(
        probcov(&["validate", "--model", "/nonexistent/model"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let mixed = dir.path().join("mixed.model");
    std::fs::write(&mixed, "init: 0\n0 a 1\n0 tau 2\n").unwrap();
    let o = probcov(&["validate", "--model", mixed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("tau-mix"));

    let o = coverage("<1", &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = probcov(&[
        "coverage", "--model", &model, "--trace", "a b b", "--goal", "<1>",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`a b`"));

    let o = probcov(&[
        "coverage",
        "--model",
        mixed.to_str().unwrap(),
        "--trace",
        "a",
        "--goal",
        "<1>",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspect_dumps_model() {
    let model = ex1();
    let o = probcov(&["inspect", "--model", &model, "--trace", "a b a"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("stats: nodes=9 "));
    assert!(out.contains("u3 -> u5 [label=\"tau 1.000000000000\"]"));

    let o = probcov(&[
        "inspect", "--model", &model, "--trace", "a b a", "--expand", "3",
    ]);
    let out = stdout(&o);
    let root_edges: Vec<&str> = out.lines().filter(|l| l.starts_with("  u0 -> ")).collect();
    assert_eq!(root_edges.len(), 3);
    for p in ["0.050000000000", "0.450000000000", "0.500000000000"] {
        assert!(root_edges.iter().any(|l| l.contains(p)), "{p}");
    }
    assert!(out.contains("[1,#,#]"));

    let o = probcov(&[
        "inspect",
        "--model",
        &model,
        "--trace",
        "a b a",
        "--goal",
        "<0> ; <1>",
    ]);
    assert!(stdout(&o).contains("u1 1 <0> ; <1> 0.450000000000"));

    let o = probcov(&["inspect", "--model", &model, "--trace", "b"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let o = probcov(&[
        "bench",
        "--ms",
        "0,2",
        "--is",
        "3,4",
        "--repetitions",
        "1",
        "--paths-cap",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("capped"));
    for f in [
        "report.txt",
        "report.jsonl",
        "structure.csv",
        "runtime.csv",
        "speedup.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let jsonl = std::fs::read_to_string(out.join("report.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["m"], 0);
    assert_eq!(first["goal"], "f1");
}
