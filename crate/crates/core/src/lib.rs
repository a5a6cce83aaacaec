//! Probabilistic coverage of test executions on non-deterministic systems.
//!
//! A system under test is modelled as a Markov decision process whose actions
//! are the observable inputs and outputs. Given an observed trace, the set of
//! executions that could have produced it forms an acyclic Markov chain, the
//! execution model. Coverage goals (sequences of state words, or "at least N
//! distinct k-windows") are evaluated on that chain:
//!
//! ```
//! use probcov::{coverage, fixtures, Goal, MdpModel, Options, Trace};
//!
//! let model = MdpModel::parse(fixtures::EX1).unwrap();
//! let trace = Trace::parse("a b a").unwrap();
//! let goal = Goal::parse("<1>").unwrap();
//! let p = coverage(&model, &trace, &goal, &Options::default()).unwrap().probability;
//! assert!((p - 0.75).abs() < 1e-9);
//! ```

pub mod aggregate;
pub mod bench;
pub mod coverage;
pub mod error;
pub mod exec;
pub mod expand;
pub mod goal;
pub mod model;
pub mod oracle;
pub mod sentence;

pub use aggregate::{aggregate_prob, AggregateCounters, AggregateMap, CoverSet, MergePolicy};
pub use coverage::{coverage, evaluate, Method, Options, Outcome};
pub use error::{Error, Result};
pub use exec::{ExecModel, ExecStats, NodeId, NodeLabel, Trace};
pub use expand::expand;
pub use goal::{Clause, Goal, Word};
pub use model::{MdpModel, Rule, ValidationReport};
pub use oracle::{brute_force_prob, covers, monte_carlo_prob, DEFAULT_PATH_CAP};
pub use sentence::{label_sentence, sentence_prob};

/// Bundled example models.
pub mod fixtures {
    /// A small model with a probabilistic branch, a lossy `b` step and an
    /// internal choice.
    pub const EX1: &str = include_str!("../data/ex1.model");
}
