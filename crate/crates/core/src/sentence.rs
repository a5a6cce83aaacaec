//! Probability of sentence goals by bottom-up node labelling.
//!
//! For a sentence `C0 ; C1 ; ... ; Cn-1` every node `u` receives, for each
//! suffix `Cj ; ... ; Cn-1`, the probability that the executions starting at
//! `u` cover that suffix. Suffixes are labelled from the shortest one up, each
//! with a single reverse-topological sweep.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec::{ExecModel, NodeId, NodeLabel, Trace};
use crate::expand::expand;
use crate::goal::{Clause, Goal};
use crate::model::{MdpModel, StateIx};

#[derive(Debug, Clone)]
pub struct LabelTable {
    suffixes: usize,
    values: Vec<f64>,
    root: NodeId,
    /// Edges traversed while summing successor labels.
    pub edge_visits: usize,
}

impl LabelTable {
    /// `P(Cj ; ... | E@node)`.
    pub fn get(&self, node: NodeId, suffix: usize) -> f64 {
        self.values[node * self.suffixes + suffix]
    }

    pub fn suffixes(&self) -> usize {
        self.suffixes
    }

    /// Probability of the whole sentence from the root.
    pub fn root_value(&self) -> f64 {
        self.get(self.root, 0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One line per (node, suffix): `u<id> <st> <suffix> <probability>`.
    pub fn dump(&self, e: &ExecModel, clauses: &[Clause]) -> String {
        let mut out = String::new();
        for u in 0..e.len() {
            for j in 0..self.suffixes {
                let suffix: Vec<String> = clauses[j..].iter().map(ToString::to_string).collect();
                let _ = writeln!(
                    out,
                    "u{u} {} {} {:.12}",
                    e.label_text(u),
                    suffix.join(" ; "),
                    self.get(u, j)
                );
            }
        }
        out
    }
}

/// A clause resolved against the state table of an execution model.
pub(crate) struct ClauseMatcher {
    words: HashSet<Vec<StateIx>>,
}

impl ClauseMatcher {
    pub(crate) fn new(e: &ExecModel, clause: &Clause) -> Result<Self> {
        let index: HashMap<&str, StateIx> = e
            .state_names()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), StateIx(i as u32)))
            .collect();
        let mut words = HashSet::new();
        for w in clause.words() {
            if w.len() != e.word_length() {
                return Err(Error::WordLengthMismatch {
                    goal: w.len(),
                    model: e.word_length(),
                });
            }
            // words naming unknown states can never match
            let resolved: Option<Vec<StateIx>> = w
                .states()
                .iter()
                .map(|s| index.get(s.as_str()).copied())
                .collect();
            if let Some(r) = resolved {
                words.insert(r);
            }
        }
        Ok(Self { words })
    }

    pub(crate) fn matches(&self, label: &NodeLabel) -> bool {
        match label {
            NodeLabel::Sharp => false,
            NodeLabel::State(s) => self.words.contains(std::slice::from_ref(s)),
            NodeLabel::Window(w) => {
                let full: Option<Vec<StateIx>> = w.iter().copied().collect();
                full.is_some_and(|f| self.words.contains(&f))
            }
        }
    }
}

/// True iff the node's state label equals one of the clause's words.
pub fn check_clause(e: &ExecModel, node: NodeId, clause: &Clause) -> Result<bool> {
    Ok(ClauseMatcher::new(e, clause)?.matches(&e.node(node).label))
}

/// Labels every node of `e` with the coverage probability of every suffix of
/// the sentence. Word length must equal the model's word length.
pub fn label_sentence(e: &ExecModel, clauses: &[Clause]) -> Result<LabelTable> {
    let n = clauses.len();
    assert!(n > 0, "sentence must have at least one clause");
    let matchers = clauses
        .iter()
        .map(|c| ClauseMatcher::new(e, c))
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![0.0; e.len() * n];
    let mut edge_visits = 0;
    let terminal = e.terminal();
    for j in (0..n).rev() {
        for &u in e.topo_order().iter().rev() {
            if u == terminal {
                continue;
            }
            let node = e.node(u);
            let q = if matchers[j].matches(&node.label) {
                if j + 1 == n {
                    1.0
                } else {
                    values[u * n + j + 1]
                }
            } else {
                edge_visits += node.next.len();
                node.next.iter().map(|&(p, v)| p * values[v * n + j]).sum()
            };
            values[u * n + j] = q;
        }
    }
    Ok(LabelTable {
        suffixes: n,
        values,
        root: e.root(),
        edge_visits,
    })
}

/// `P(goal | E)` for a sentence goal, expanding `e` first when the goal's
/// words are longer than one state.
pub fn sentence_prob_on(e: &ExecModel, goal: &Goal) -> Result<f64> {
    let Some(clauses) = goal.clauses() else {
        return Err(Error::InvalidAggregate(
            "aggregate goal given where a sentence was expected".into(),
        ));
    };
    let k = goal.word_length();
    if k == e.word_length() {
        return Ok(label_sentence(e, clauses)?.root_value());
    }
    if e.word_length() == 1 {
        let expanded = expand(e, k)?;
        return Ok(label_sentence(&expanded, clauses)?.root_value());
    }
    Err(Error::WordLengthMismatch {
        goal: k,
        model: e.word_length(),
    })
}

/// `P(goal | trace)` on `model` for a sentence goal.
pub fn sentence_prob(model: &MdpModel, trace: &Trace, goal: &Goal) -> Result<f64> {
    let e = ExecModel::build(model, trace)?;
    sentence_prob_on(&e, goal)
}
