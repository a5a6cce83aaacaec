//! Probability of aggregate goals `^k>=N`.
//!
//! Each node `u` carries a map `V -> p`: with probability `p` the executions
//! starting at `u` cover exactly the items in `V` (states for k = 1, length-k
//! windows otherwise). Maps are built bottom-up; entries with equal `V` may be
//! merged by summing their probabilities, which changes cost but never the
//! result.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exec::{ExecModel, NodeId, NodeLabel, Trace};
use crate::expand::expand;
use crate::model::{MdpModel, StateIx};

/// A set of covered items, as a bitset over item indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CoverSet(SmallVec<[u64; 4]>);

impl CoverSet {
    pub fn with_capacity(items: usize) -> Self {
        let words = items.div_ceil(64).max(1);
        CoverSet(SmallVec::from_elem(0, words))
    }

    pub fn insert(&mut self, item: usize) {
        let (w, b) = (item / 64, item % 64);
        if w >= self.0.len() {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0
            .get(item / 64)
            .is_some_and(|w| w & (1 << (item % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            (0..64)
                .filter(move |b| w & (1 << b) != 0)
                .map(move |b| i * 64 + b)
        })
    }
}

impl FromIterator<usize> for CoverSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = CoverSet::with_capacity(0);
        for i in iter {
            s.insert(i);
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct AggregateMap {
    pub entries: Vec<(CoverSet, f64)>,
    /// True when every `V` occurs at most once.
    pub merged: bool,
}

impl AggregateMap {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mass of the entries covering at least `n` items.
    pub fn mass_at_least(&self, n: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(v, _)| v.len() >= n)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Sums the probabilities of entries with equal sets. First occurrence order
/// is kept.
pub fn merge<I>(entries: I) -> AggregateMap
where
    I: IntoIterator<Item = (CoverSet, f64)>,
{
    let mut slot: HashMap<CoverSet, usize> = HashMap::new();
    let mut out: Vec<(CoverSet, f64)> = Vec::new();
    for (v, p) in entries {
        match slot.get(&v) {
            Some(&i) => out[i].1 += p,
            None => {
                slot.insert(v.clone(), out.len());
                out.push((v, p));
            }
        }
    }
    AggregateMap {
        entries: out,
        merged: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MergePolicy {
    Always,
    Never,
    /// Merge only at the branching node ending a chain of single-successor
    /// nodes.
    Bridge,
}

impl MergePolicy {
    pub const ALL: [MergePolicy; 3] =
        [MergePolicy::Always, MergePolicy::Never, MergePolicy::Bridge];

    pub fn name(self) -> &'static str {
        match self {
            MergePolicy::Always => "always",
            MergePolicy::Never => "never",
            MergePolicy::Bridge => "bridge",
        }
    }
}

impl fmt::Display for MergePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MergePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "always" => Ok(MergePolicy::Always),
            "never" => Ok(MergePolicy::Never),
            "bridge" => Ok(MergePolicy::Bridge),
            other => Err(format!(
                "unknown merge policy `{other}` (always|never|bridge)"
            )),
        }
    }
}

/// Nodes ending a bridge: nodes with more than one successor that are entered
/// from at least one single-successor node.
pub fn detect_bridges(e: &ExecModel) -> Vec<NodeId> {
    let mut eligible = vec![false; e.len()];
    for u in e.nodes() {
        if let [(_, v)] = u.next.as_slice() {
            if e.node(*v).next.len() > 1 {
                eligible[*v] = true;
            }
        }
    }
    (0..e.len()).filter(|&v| eligible[v]).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AggregateCounters {
    /// Entries produced before merging, summed over nodes.
    pub entries_created: u64,
    /// Entries kept in node labels after merging, summed over nodes.
    pub entries_retained: u64,
    /// Number of nodes at which a merge ran.
    pub merges_performed: u64,
    /// Largest number of entries held at once across all live labels.
    pub peak_live_entries: u64,
    /// Distinct sets at the root.
    pub root_entries: u64,
}

#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub probability: f64,
    /// The merged root label.
    pub root: AggregateMap,
    /// Item names, indexed as in the cover sets.
    pub items: Vec<String>,
    pub counters: AggregateCounters,
}

/// Computes `P(^k>=n | E)` where `k` is the word length of `e`.
pub fn aggregate_on(e: &ExecModel, n: usize, policy: MergePolicy) -> AggregateResult {
    let (item_of, items) = item_table(e);
    let width = items.len();

    let merge_here: Vec<bool> = match policy {
        MergePolicy::Always => vec![true; e.len()],
        MergePolicy::Never => vec![false; e.len()],
        MergePolicy::Bridge => {
            let mut m = vec![false; e.len()];
            for v in detect_bridges(e) {
                m[v] = true;
            }
            m
        }
    };

    let mut pending = vec![0usize; e.len()];
    for u in e.nodes() {
        for &(_, v) in &u.next {
            pending[v] += 1;
        }
    }
    let mut labels: Vec<Option<Vec<(CoverSet, f64)>>> = vec![None; e.len()];
    labels[e.terminal()] = Some(vec![(CoverSet::with_capacity(width), 1.0)]);
    let mut counters = AggregateCounters::default();
    let mut live: u64 = 1;

    for &u in e.topo_order().iter().rev() {
        if u == e.terminal() {
            continue;
        }
        let item = item_of[u];
        let mut acc: Vec<(CoverSet, f64)> = Vec::new();
        for &(p, v) in &e.node(u).next {
            pending[v] -= 1;
            if pending[v] == 0 {
                let owned = labels[v].take().expect("successor labelled");
                live -= owned.len() as u64;
                acc.extend(owned.into_iter().map(|(mut set, q)| {
                    if let Some(i) = item {
                        set.insert(i);
                    }
                    (set, q * p)
                }));
            } else {
                let shared = labels[v].as_ref().expect("successor labelled");
                acc.extend(shared.iter().map(|(set, q)| {
                    let mut set = set.clone();
                    if let Some(i) = item {
                        set.insert(i);
                    }
                    (set, q * p)
                }));
            }
        }
        counters.entries_created += acc.len() as u64;
        if merge_here[u] {
            acc = merge(acc).entries;
            counters.merges_performed += 1;
        }
        counters.entries_retained += acc.len() as u64;
        live += acc.len() as u64;
        counters.peak_live_entries = counters.peak_live_entries.max(live);
        labels[u] = Some(acc);
    }

    let root_entries = labels[e.root()].take().unwrap_or_default();
    let root = merge(root_entries);
    counters.root_entries = root.len() as u64;
    AggregateResult {
        probability: root.mass_at_least(n),
        root,
        items,
        counters,
    }
}

/// Per-node item index (None for `#` and padded windows) and item names.
fn item_table(e: &ExecModel) -> (Vec<Option<usize>>, Vec<String>) {
    let mut index: HashMap<Vec<StateIx>, usize> = HashMap::new();
    let mut names = Vec::new();
    let item_of = e
        .nodes()
        .iter()
        .map(|u| {
            let key: Vec<StateIx> = match &u.label {
                NodeLabel::Sharp => return None,
                NodeLabel::State(s) => vec![*s],
                NodeLabel::Window(w) => w.iter().copied().collect::<Option<Vec<_>>>()?,
            };
            let next = index.len();
            let id = *index.entry(key).or_insert_with(|| {
                names.push(e.label_text(u.id));
                next
            });
            Some(id)
        })
        .collect();
    (item_of, names)
}

/// `P(^k>=n | trace)` on `model`.
pub fn aggregate_prob(
    model: &MdpModel,
    trace: &Trace,
    k: usize,
    n: usize,
    policy: MergePolicy,
) -> Result<AggregateResult> {
    if k < 1 {
        return Err(Error::InvalidAggregate("k must be at least 1".into()));
    }
    let e = ExecModel::build(model, trace)?;
    aggregate_with_expansion(&e, k, n, policy)
}

/// Expands `e` to word length `k` when needed and evaluates `^k>=n`.
pub fn aggregate_with_expansion(
    e: &ExecModel,
    k: usize,
    n: usize,
    policy: MergePolicy,
) -> Result<AggregateResult> {
    if k == e.word_length() {
        Ok(aggregate_on(e, n, policy))
    } else if e.word_length() == 1 {
        Ok(aggregate_on(&expand(e, k)?, n, policy))
    } else {
        Err(Error::WordLengthMismatch {
            goal: k,
            model: e.word_length(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EX1;

    fn aba() -> ExecModel {
        let m = MdpModel::parse(EX1).unwrap();
        ExecModel::build(&m, &Trace::parse("a b a").unwrap()).unwrap()
    }

    #[test]
    fn merge_sums_duplicates() {
        let v: CoverSet = [1, 3].into_iter().collect();
        let m = merge([(v.clone(), 0.1), (v.clone(), 0.2)]);
        assert_eq!(m.len(), 1);
        assert!((m.entries[0].1 - 0.3).abs() < 1e-15);

        let a: CoverSet = [0].into_iter().collect();
        let b: CoverSet = [1].into_iter().collect();
        let m = merge([(a.clone(), 0.5), (b.clone(), 0.5)]);
        assert_eq!(m.entries, vec![(a, 0.5), (b, 0.5)]);

        let twice = merge(m.entries.clone());
        assert_eq!(twice.entries, m.entries);
    }

    #[test]
    fn cover_set_ops() {
        let mut s = CoverSet::with_capacity(10);
        assert!(s.is_empty());
        s.insert(3);
        s.insert(130);
        s.insert(3);
        assert_eq!(s.len(), 2);
        assert!(s.contains(130) && !s.contains(4));
        assert_eq!(s.items().collect::<Vec<_>>(), vec![3, 130]);
    }

    #[test]
    fn bridges() {
        // chain a -> b -> c, c branches
        let m =
            MdpModel::parse("init: a\na x b\nb x c\nc x 0.5 d\nc x 0.5 e\nd y f\ne y f\n").unwrap();
        let e = ExecModel::build(&m, &Trace::parse("x x x").unwrap()).unwrap();
        let c = e.find(2, "c").unwrap();
        assert_eq!(detect_bridges(&e), vec![c]);

        let e = aba();
        assert_eq!(detect_bridges(&e), vec![4]);

        // binary tree: every node branches
        let m = MdpModel::parse(
            "init: r\nr x 0.5 a\nr x 0.5 b\na x 0.5 c\na x 0.5 d\nb x 0.5 e\nb x 0.5 f\n",
        )
        .unwrap();
        let e = ExecModel::build(&m, &Trace::parse("x x").unwrap()).unwrap();
        assert!(detect_bridges(&e).is_empty());
    }

    #[test]
    fn running_example_values() {
        let m = MdpModel::parse(EX1).unwrap();
        let t = Trace::parse("a b a").unwrap();
        for policy in MergePolicy::ALL {
            let p = |n| aggregate_prob(&m, &t, 1, n, policy).unwrap().probability;
            assert!((p(4) - 0.05).abs() < 1e-9);
            assert!((p(0) - 1.0).abs() < 1e-9);
            assert!((p(3) - 0.525).abs() < 1e-9);
            assert!(p(5).abs() < 1e-12);
        }
    }

    #[test]
    fn root_mass_is_one() {
        let e = aba();
        for policy in MergePolicy::ALL {
            let r = aggregate_on(&e, 0, policy);
            assert!((r.root.total() - 1.0).abs() < 1e-9);
            assert!(r.root.entries.iter().all(|(_, p)| *p > 0.0));
        }
        let e3 = expand(&e, 3).unwrap();
        let r = aggregate_on(&e3, 0, MergePolicy::Bridge);
        assert!((r.root.total() - 1.0).abs() < 1e-9);
        assert!(r.items.iter().all(|i| !i.contains('#')));
    }

    #[test]
    fn counters_reflect_policy() {
        let e = aba();
        let never = aggregate_on(&e, 1, MergePolicy::Never).counters;
        let always = aggregate_on(&e, 1, MergePolicy::Always).counters;
        let bridge = aggregate_on(&e, 1, MergePolicy::Bridge).counters;
        assert_eq!(never.merges_performed, 0);
        assert_eq!(bridge.merges_performed, 1);
        assert_eq!(always.merges_performed, e.len() as u64 - 1);
        assert!(always.entries_retained <= bridge.entries_retained);
        assert!(bridge.entries_retained <= never.entries_retained);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in MergePolicy::ALL {
            assert_eq!(p.name().parse::<MergePolicy>().unwrap(), p);
        }
        assert!("sometimes".parse::<MergePolicy>().is_err());
    }
}
