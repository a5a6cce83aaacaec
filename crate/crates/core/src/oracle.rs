//! Reference evaluators: the coverage relation applied to individual
//! executions, exhaustive path enumeration and Monte-Carlo sampling.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{ExecModel, NodeId, NodeLabel};
use crate::goal::{Clause, Goal};

pub const DEFAULT_PATH_CAP: u128 = 10_000_000;

/// Whether the state sequence `seq` covers `goal`.
pub fn covers<S: AsRef<str>>(seq: &[S], goal: &Goal) -> bool {
    if seq.is_empty() {
        return false;
    }
    match goal {
        Goal::Aggregate { k, n } => {
            let distinct: HashSet<Vec<&str>> = seq
                .windows(*k)
                .map(|w| w.iter().map(AsRef::as_ref).collect())
                .collect();
            distinct.len() >= *n
        }
        Goal::Sentence(clauses) => covers_sentence(seq, clauses),
    }
}

fn covers_sentence<S: AsRef<str>>(mut seq: &[S], mut clauses: &[Clause]) -> bool {
    loop {
        if seq.is_empty() {
            return false;
        }
        let (clause, rest) = clauses.split_first().expect("non-empty sentence");
        if rest.is_empty() {
            return (0..seq.len()).any(|i| prefix_matches(&seq[i..], clause));
        }
        if prefix_matches(seq, clause) {
            clauses = rest;
        } else {
            seq = &seq[1..];
        }
    }
}

fn prefix_matches<S: AsRef<str>>(seq: &[S], clause: &Clause) -> bool {
    clause.words().iter().any(|w| {
        w.len() <= seq.len()
            && w.states()
                .iter()
                .zip(seq)
                .all(|(a, b)| a.as_str() == b.as_ref())
    })
}

/// The state sequence visited by a root-to-terminal path, without `#`. For an
/// expanded model each window contributes its first state.
pub fn path_states<'a>(e: &'a ExecModel, path: &[NodeId]) -> Vec<&'a str> {
    let names = e.state_names();
    path.iter()
        .filter_map(|&u| match &e.node(u).label {
            NodeLabel::Sharp => None,
            NodeLabel::State(s) => Some(names[s.index()].as_str()),
            NodeLabel::Window(w) => w[0].map(|s| names[s.index()].as_str()),
        })
        .collect()
}

/// Calls `visit(path, probability)` for every root-to-terminal path, in
/// depth-first order following edge order.
pub fn for_each_path<F>(e: &ExecModel, cap: u128, mut visit: F) -> Result<()>
where
    F: FnMut(&[NodeId], f64),
{
    let paths = e.count_paths();
    if paths > cap {
        return Err(Error::PathCapExceeded { paths, cap });
    }
    let mut path = vec![e.root()];
    let mut probs = vec![1.0];
    // next edge index to try for each node on the current path
    let mut cursor = vec![0usize];
    while let Some(&u) = path.last() {
        let i = *cursor.last().unwrap();
        let next = &e.node(u).next;
        if next.is_empty() {
            visit(&path, *probs.last().unwrap());
        }
        if i < next.len() {
            *cursor.last_mut().unwrap() += 1;
            let (p, v) = next[i];
            let q = probs.last().unwrap() * p;
            path.push(v);
            probs.push(q);
            cursor.push(0);
        } else {
            path.pop();
            probs.pop();
            cursor.pop();
        }
    }
    Ok(())
}

/// A goal resolved to state indices of one execution model, for checking
/// many executions without allocating.
pub struct CompiledGoal {
    kind: Compiled,
    // start offsets of the windows of the current sequence
    scratch: Vec<usize>,
}

enum Compiled {
    // clauses of words; words naming unknown states are dropped
    Sentence(Vec<Vec<Vec<u32>>>),
    Aggregate { k: usize, n: usize },
}

impl CompiledGoal {
    pub fn new(e: &ExecModel, goal: &Goal) -> Self {
        let index: HashMap<&str, u32> = e
            .state_names()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as u32))
            .collect();
        let kind = match goal {
            Goal::Aggregate { k, n } => Compiled::Aggregate { k: *k, n: *n },
            Goal::Sentence(clauses) => Compiled::Sentence(
                clauses
                    .iter()
                    .map(|c| {
                        c.words()
                            .iter()
                            .filter_map(|w| {
                                w.states()
                                    .iter()
                                    .map(|s| index.get(s.as_str()).copied())
                                    .collect::<Option<Vec<u32>>>()
                            })
                            .collect()
                    })
                    .collect(),
            ),
        };
        CompiledGoal {
            kind,
            scratch: Vec::new(),
        }
    }

    /// Same relation as [`covers`], on state indices.
    pub fn covers(&mut self, seq: &[u32]) -> bool {
        if seq.is_empty() {
            return false;
        }
        match &self.kind {
            Compiled::Aggregate { k, n } => {
                let (k, n) = (*k, *n);
                if seq.len() < k {
                    return n == 0;
                }
                self.scratch.clear();
                self.scratch.extend(0..=seq.len() - k);
                self.scratch
                    .sort_unstable_by(|&a, &b| seq[a..a + k].cmp(&seq[b..b + k]));
                self.scratch
                    .dedup_by(|a, b| seq[*a..*a + k] == seq[*b..*b + k]);
                self.scratch.len() >= n
            }
            Compiled::Sentence(clauses) => {
                let starts =
                    |s: &[u32], clause: &[Vec<u32>]| clause.iter().any(|w| s.starts_with(w));
                let (last, init) = clauses.split_last().expect("non-empty sentence");
                let mut at = 0;
                for clause in init {
                    while at < seq.len() && !starts(&seq[at..], clause) {
                        at += 1;
                    }
                    if at == seq.len() {
                        return false;
                    }
                }
                (at..seq.len()).any(|i| starts(&seq[i..], last))
            }
        }
    }
}

fn node_state(e: &ExecModel, u: NodeId) -> Option<u32> {
    match &e.node(u).label {
        NodeLabel::Sharp => None,
        NodeLabel::State(s) => Some(s.0),
        NodeLabel::Window(w) => w[0].map(|s| s.0),
    }
}

/// Exact `P(goal | E)` by enumerating every path of `e`.
pub fn brute_force_prob(e: &ExecModel, goal: &Goal, cap: u128) -> Result<f64> {
    let mut check = CompiledGoal::new(e, goal);
    let mut seq = Vec::new();
    let mut total = 0.0;
    for_each_path(e, cap, |path, p| {
        seq.clear();
        seq.extend(path.iter().filter_map(|&u| node_state(e, u)));
        if check.covers(&seq) {
            total += p;
        }
    })?;
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    /// Binomial standard error of the estimate.
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates `P(goal | E)` from `samples` random paths.
pub fn monte_carlo_prob(e: &ExecModel, goal: &Goal, samples: u64, seed: u64) -> Estimate {
    assert!(samples >= 1, "at least one sample is required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = CompiledGoal::new(e, goal);
    let mut hits = 0u64;
    let mut seq = Vec::with_capacity(e.len());
    for _ in 0..samples {
        seq.clear();
        let mut u = e.root();
        seq.extend(node_state(e, u));
        while let Some(v) = step(e, u, &mut rng) {
            seq.extend(node_state(e, v));
            u = v;
        }
        if check.covers(&seq) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Estimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

fn step(e: &ExecModel, u: NodeId, rng: &mut ChaCha8Rng) -> Option<NodeId> {
    let next = &e.node(u).next;
    let (_, last) = *next.last()?;
    let mut r: f64 = rng.gen();
    for &(p, v) in next {
        if r < p {
            return Some(v);
        }
        r -= p;
    }
    Some(last)
}
