//! Scalable benchmark family and timing harness.
//!
//! `make_model(m)` is a six-state model whose state 4 can wander through `m`
//! auxiliary states `t0..`; `make_trace(i)` produces `a c^i a b^i a c^i a`.
//! The number of executions grows exponentially in `i`, which makes the family
//! a good stress test for exhaustive enumeration.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::aggregate::{aggregate_with_expansion, MergePolicy};
use crate::error::{Error, Result};
use crate::exec::{ExecModel, Trace};
use crate::expand::expand;
use crate::goal::Goal;
use crate::model::MdpModel;
use crate::oracle::{brute_force_prob, DEFAULT_PATH_CAP};
use crate::sentence::sentence_prob_on;

pub fn make_model(m: usize) -> MdpModel {
    let mut b = MdpModel::builder("0")
        .transition("0", "a", 1.0, "1")
        .transition("1", "c", 0.3, "2")
        .transition("1", "c", 0.7, "1")
        .transition("1", "a", 1.0, "3")
        .transition("2", "c", 0.7, "1")
        .transition("2", "c", 0.3, "2")
        .transition("3", "b", 1.0, "3")
        .transition("3", "a", 1.0, "4");
    if m == 0 {
        b = b.transition("4", "c", 1.0, "4");
    } else {
        b = b.transition("4", "c", 0.7, "4");
        let p = 0.3 / m as f64;
        for t in 0..m {
            b = b.transition("4", "c", p, &format!("t{t}"));
        }
    }
    b = b.transition("4", "a", 1.0, "5");
    for t in 0..m {
        b = b.transition(&format!("t{t}"), "c", 1.0, "4");
    }
    b.build().expect("benchmark model is well formed")
}

pub fn make_trace(i: usize) -> Trace {
    let mut actions = vec!["a"];
    actions.extend(std::iter::repeat_n("c", i));
    actions.push("a");
    actions.extend(std::iter::repeat_n("b", i));
    actions.push("a");
    actions.extend(std::iter::repeat_n("c", i));
    actions.push("a");
    Trace::new(actions).expect("non-empty trace")
}

/// The four standard goals, by name.
pub fn standard_goals() -> Vec<(&'static str, Goal)> {
    [
        ("f1", "<2> ; <t0>"),
        ("f2", "<1,1,1> ; <4,4,4>"),
        ("f3", "^1>=8"),
        ("f4", "^3>=8"),
    ]
    .into_iter()
    .map(|(name, text)| (name, Goal::parse(text).expect("standard goal parses")))
    .collect()
}

pub fn standard_goal(name: &str) -> Option<Goal> {
    standard_goals()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| g)
}

/// Closed-form number of executions of `make_trace(i)` on `make_model(m)`.
pub fn expected_paths(i: usize, m: usize) -> u128 {
    let (mut prev, mut cur) = (1u128, 1u128);
    for _ in 1..i {
        (prev, cur) = (cur, cur + m as u128 * prev);
    }
    (1u128 << (i - 1)) * cur
}

/// Runs `f` `reps` times and returns the median duration and the last result.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    assert!(reps >= 1);
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let out = f();
        times.push(start.elapsed());
        last = Some(out);
    }
    times.sort();
    (times[reps / 2], last.unwrap())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub ms: Vec<usize>,
    pub is: Vec<usize>,
    pub goals: Vec<String>,
    pub policies: Vec<MergePolicy>,
    pub repetitions: usize,
    pub paths_cap: u128,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ms: vec![0, 2, 8],
            is: (5..=9).collect(),
            goals: ["f1", "f2", "f3", "f4"].map(String::from).to_vec(),
            policies: vec![MergePolicy::Bridge],
            repetitions: 5,
            paths_cap: DEFAULT_PATH_CAP,
        }
    }
}

/// Structure of one execution model of the family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Structure {
    pub m: usize,
    pub i: usize,
    pub trace_len: usize,
    pub nodes: usize,
    pub edges: usize,
    pub paths: u128,
    pub nodes_e3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub m: usize,
    pub i: usize,
    pub goal: String,
    /// Only meaningful for aggregate goals.
    pub policy: Option<MergePolicy>,
    pub nodes: usize,
    pub edges: usize,
    pub paths: u128,
    pub nodes_e3: usize,
    pub probability: f64,
    pub brute_probability: Option<f64>,
    pub label_secs: f64,
    /// None when the path count exceeds the cap.
    pub brute_secs: Option<f64>,
    pub speedup: Option<f64>,
    pub entries_retained: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub structures: Vec<Structure>,
    pub records: Vec<CaseRecord>,
}

pub fn structure(m: usize, i: usize) -> Result<(ExecModel, Structure)> {
    let trace = make_trace(i);
    let e = ExecModel::build(&make_model(m), &trace)?;
    let stats = e.stats();
    let nodes_e3 = expand(&e, 3)?.len();
    let s = Structure {
        m,
        i,
        trace_len: trace.len(),
        nodes: stats.nodes,
        edges: stats.edges,
        paths: stats.paths,
        nodes_e3,
    };
    Ok((e, s))
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    let goals = cfg
        .goals
        .iter()
        .map(|name| {
            standard_goal(name)
                .map(|g| (name.clone(), g))
                .ok_or_else(|| Error::GoalSyntax {
                    offset: 0,
                    message: format!("unknown benchmark goal `{name}`"),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = cfg.repetitions.max(1);
    let mut report = BenchReport::default();
    for &m in &cfg.ms {
        for &i in &cfg.is {
            let (e, s) = structure(m, i)?;
            for (name, goal) in &goals {
                let policies: Vec<Option<MergePolicy>> = if goal.is_aggregate() {
                    cfg.policies.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                };
                for policy in policies {
                    report
                        .records
                        .push(run_case(&e, &s, name, goal, policy, reps, cfg.paths_cap)?);
                }
            }
            report.structures.push(s);
        }
    }
    Ok(report)
}

fn run_case(
    e: &ExecModel,
    s: &Structure,
    name: &str,
    goal: &Goal,
    policy: Option<MergePolicy>,
    reps: usize,
    cap: u128,
) -> Result<CaseRecord> {
    let mut entries_retained = None;
    let (label_time, probability) = match (goal, policy) {
        (Goal::Aggregate { k, n }, Some(p)) => {
            let (t, r) = median_time(reps, || aggregate_with_expansion(e, *k, *n, p));
            let r = r?;
            entries_retained = Some(r.counters.entries_retained);
            (t, r.probability)
        }
        _ => {
            let (t, r) = median_time(reps, || sentence_prob_on(e, goal));
            (t, r?)
        }
    };
    let (brute_secs, brute_probability) = if s.paths <= cap {
        let (t, r) = median_time(reps, || brute_force_prob(e, goal, cap));
        (Some(t.as_secs_f64()), Some(r?))
    } else {
        (None, None)
    };
    let label_secs = label_time.as_secs_f64();
    Ok(CaseRecord {
        m: s.m,
        i: s.i,
        goal: name.to_string(),
        policy,
        nodes: s.nodes,
        edges: s.edges,
        paths: s.paths,
        nodes_e3: s.nodes_e3,
        probability,
        brute_probability,
        label_secs,
        brute_secs,
        speedup: brute_secs.map(|b| b / label_secs.max(1e-9)),
        entries_retained,
    })
}

impl BenchReport {
    /// Aligned text table, one row per case.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>3} {:>3} {:<4} {:<7} {:>7} {:>7} {:>12} {:>8} {:>14} {:>12} {:>12} {:>10}",
            "m",
            "i",
            "goal",
            "policy",
            "nodes",
            "edges",
            "paths",
            "nodes^3",
            "probability",
            "label(s)",
            "brute(s)",
            "speedup"
        );
        for r in &self.records {
            let brute = r
                .brute_secs
                .map_or_else(|| "capped".to_string(), |t| format!("{t:.6}"));
            let speedup = r
                .speedup
                .map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
            let _ = writeln!(
                out,
                "{:>3} {:>3} {:<4} {:<7} {:>7} {:>7} {:>12} {:>8} {:>14.10} {:>12.6} {:>12} {:>10}",
                r.m,
                r.i,
                r.goal,
                r.policy.map_or("-", MergePolicy::name),
                r.nodes,
                r.edges,
                r.paths,
                r.nodes_e3,
                r.probability,
                r.label_secs,
                brute,
                speedup
            );
        }
        out
    }

    /// One JSON object per line, one line per case.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    /// Writes `report.txt`, `report.jsonl`, `structure.csv`, `runtime.csv`
    /// and `speedup.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.to_table())?;
        fs::write(dir.join("report.jsonl"), self.to_jsonl())?;

        let mut csv = String::from("m,i,trace_len,nodes,edges,paths,nodes_e3\n");
        for s in &self.structures {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                s.m, s.i, s.trace_len, s.nodes, s.edges, s.paths, s.nodes_e3
            );
        }
        fs::write(dir.join("structure.csv"), csv)?;

        let mut runtime = String::from("m,i,goal,policy,label_secs,brute_secs\n");
        let mut speedup = String::from("m,i,goal,policy,speedup\n");
        for r in &self.records {
            let policy = r.policy.map_or("", MergePolicy::name);
            let brute = r
                .brute_secs
                .map_or_else(|| "capped".into(), |t| t.to_string());
            let _ = writeln!(
                runtime,
                "{},{},{},{},{},{}",
                r.m, r.i, r.goal, policy, r.label_secs, brute
            );
            if let Some(x) = r.speedup {
                let _ = writeln!(speedup, "{},{},{},{},{}", r.m, r.i, r.goal, policy, x);
            }
        }
        fs::write(dir.join("runtime.csv"), runtime)?;
        fs::write(dir.join("speedup.csv"), speedup)?;
        Ok(())
    }
}
