//! One entry point for all evaluation methods.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::aggregate::{aggregate_with_expansion, AggregateCounters, MergePolicy};
use crate::error::Result;
use crate::exec::{ExecModel, Trace};
use crate::goal::Goal;
use crate::model::MdpModel;
use crate::oracle::{brute_force_prob, monte_carlo_prob, DEFAULT_PATH_CAP};
use crate::sentence::sentence_prob_on;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Bottom-up labelling.
    Label,
    /// Full path enumeration.
    Brute,
    /// Monte-Carlo sampling.
    Mc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Label => "label",
            Method::Brute => "brute",
            Method::Mc => "mc",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "label" => Ok(Method::Label),
            "brute" => Ok(Method::Brute),
            "mc" => Ok(Method::Mc),
            other => Err(format!("unknown method `{other}` (label|brute|mc)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub method: Method,
    pub policy: MergePolicy,
    pub samples: u64,
    pub seed: u64,
    pub paths_cap: u128,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            method: Method::Label,
            policy: MergePolicy::Bridge,
            samples: 100_000,
            seed: 0,
            paths_cap: DEFAULT_PATH_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub probability: f64,
    /// Standard error, for sampled estimates.
    pub std_error: Option<f64>,
    /// Aggregate counters, for labelled aggregate goals.
    pub counters: Option<AggregateCounters>,
}

/// `P(goal | E)` by the method selected in `opts`.
pub fn evaluate(e: &ExecModel, goal: &Goal, opts: &Options) -> Result<Outcome> {
    let mut out = Outcome {
        probability: 0.0,
        std_error: None,
        counters: None,
    };
    match (opts.method, goal) {
        (Method::Label, Goal::Aggregate { k, n }) => {
            let r = aggregate_with_expansion(e, *k, *n, opts.policy)?;
            out.probability = r.probability;
            out.counters = Some(r.counters);
        }
        (Method::Label, Goal::Sentence(_)) => out.probability = sentence_prob_on(e, goal)?,
        (Method::Brute, _) => out.probability = brute_force_prob(e, goal, opts.paths_cap)?,
        (Method::Mc, _) => {
            let est = monte_carlo_prob(e, goal, opts.samples, opts.seed);
            out.probability = est.estimate;
            out.std_error = Some(est.std_error);
        }
    }
    Ok(out)
}

/// Builds the execution model of `trace` and evaluates `goal` on it.
pub fn coverage(model: &MdpModel, trace: &Trace, goal: &Goal, opts: &Options) -> Result<Outcome> {
    evaluate(&ExecModel::build(model, trace)?, goal, opts)
}
