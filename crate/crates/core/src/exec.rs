//! Execution models: the acyclic Markov chain of all tau-maximal executions
//! of a trace, conditioned on the trace having been observed.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ActionIx, MdpModel, StateIx, TAU};

pub type NodeId = usize;

/// Tolerance used when checking that outgoing probabilities sum to one.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    actions: Vec<String>,
}

impl Trace {
    pub fn new<I, S>(actions: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        if actions.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if actions.iter().any(|a| a == TAU) {
            return Err(Error::TauInTrace);
        }
        Ok(Self { actions })
    }

    /// Whitespace-separated action tokens, e.g. `a b a`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.split_whitespace())
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.actions.join(" "))
    }
}

/// State label of an execution-model node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    State(StateIx),
    /// A length-k window of states; `None` entries are trailing `#` padding.
    Window(Box<[Option<StateIx>]>),
    /// The artificial entry/exit mark `#`.
    Sharp,
}

impl NodeLabel {
    pub fn is_sharp(&self) -> bool {
        matches!(self, NodeLabel::Sharp)
    }

    /// True for windows carrying `#` padding.
    pub fn is_padded(&self) -> bool {
        match self {
            NodeLabel::Window(w) => w.iter().any(Option::is_none),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecNode {
    pub id: NodeId,
    pub label: NodeLabel,
    /// Successors with their conditional probabilities.
    pub next: Vec<(f64, NodeId)>,
    /// Length of the longest root path to this node.
    pub depth: usize,
    /// Number of trace symbols consumed on reaching this node (first node of
    /// the window for expanded models).
    pub position: usize,
    /// Action labelling all outgoing edges; `None` on edges into `#` and in
    /// expanded models.
    pub action: Option<ActionIx>,
}

#[derive(Debug, Clone)]
pub struct ExecModel {
    nodes: Vec<ExecNode>,
    root: NodeId,
    terminal: NodeId,
    trace: Trace,
    word_length: usize,
    topo: Vec<NodeId>,
    states: Arc<[String]>,
    actions: Arc<[String]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExecStats {
    pub nodes: usize,
    pub nodes_excluding_sharp: usize,
    pub edges: usize,
    pub paths: u128,
    pub max_depth: usize,
}

impl fmt::Display for ExecStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nodes={} nodes_excl_sharp={} edges={} paths={} max_depth={}",
            self.nodes, self.nodes_excluding_sharp, self.edges, self.paths, self.max_depth
        )
    }
}

struct RawNode {
    position: usize,
    state: StateIx,
    action: Option<ActionIx>,
    next: Vec<(f64, usize)>,
    maximal: bool,
}

impl ExecModel {
    /// Builds `E(trace)` on `model`.
    ///
    /// Nodes are identified by (consumed trace prefix, model state), so
    /// executions that reach the same state after the same prefix share their
    /// future. Branches that cannot complete the trace are pruned and the
    /// surviving edges of each node renormalized.
    pub fn build(model: &MdpModel, trace: &Trace) -> Result<Self> {
        let report = model.validate();
        if !report.ok {
            return Err(Error::InvalidModel(report));
        }
        let symbols: Vec<Option<ActionIx>> =
            trace.actions().iter().map(|a| model.action(a)).collect();
        let tau = model.tau();
        let n = symbols.len();

        let mut raw: Vec<RawNode> = Vec::new();
        let mut index: HashMap<(usize, StateIx), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let root_key = (0, model.init());
        index.insert(root_key, 0);
        raw.push(RawNode {
            position: 0,
            state: model.init(),
            action: None,
            next: Vec::new(),
            maximal: false,
        });
        queue.push_back(0usize);

        while let Some(i) = queue.pop_front() {
            let (pos, s) = (raw[i].position, raw[i].state);
            let has_tau = tau.is_some_and(|t| model.outgoing(s).any(|tr| tr.action == t));
            let (action, next_pos) = if has_tau {
                (tau, pos)
            } else if pos < n {
                (symbols[pos], pos + 1)
            } else {
                raw[i].maximal = true;
                continue;
            };
            let Some(action) = action else { continue };
            raw[i].action = Some(action);
            let mut next = Vec::new();
            for tr in model.outgoing(s).filter(|tr| tr.action == action) {
                let key = (next_pos, tr.dst);
                let j = *index.entry(key).or_insert_with(|| {
                    raw.push(RawNode {
                        position: next_pos,
                        state: tr.dst,
                        action: None,
                        next: Vec::new(),
                        maximal: false,
                    });
                    queue.push_back(raw.len() - 1);
                    raw.len() - 1
                });
                next.push((tr.prob, j));
            }
            raw[i].next = next;
        }

        if !raw.iter().any(|r| r.maximal) {
            let reached = raw.iter().map(|r| r.position).max().unwrap_or(0);
            return Err(Error::IllegalTrace {
                prefix: trace.actions()[..reached].to_vec(),
            });
        }

        // backward prune: keep nodes from which a maximal node is reachable
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); raw.len()];
        for (i, r) in raw.iter().enumerate() {
            for &(_, j) in &r.next {
                preds[j].push(i);
            }
        }
        let mut alive = vec![false; raw.len()];
        let mut stack: Vec<usize> = (0..raw.len()).filter(|&i| raw[i].maximal).collect();
        for &i in &stack {
            alive[i] = true;
        }
        while let Some(j) = stack.pop() {
            for &i in &preds[j] {
                if !alive[i] {
                    alive[i] = true;
                    stack.push(i);
                }
            }
        }
        debug_assert!(alive[0]);

        // renumber live nodes in BFS order, terminal last
        let mut new_id = vec![usize::MAX; raw.len()];
        let mut order = vec![0usize];
        new_id[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for &(_, j) in &raw[i].next {
                if alive[j] && new_id[j] == usize::MAX {
                    new_id[j] = order.len();
                    order.push(j);
                }
            }
        }
        let terminal = order.len();
        let mut nodes: Vec<ExecNode> = order
            .iter()
            .enumerate()
            .map(|(id, &i)| {
                let r = &raw[i];
                let next = if r.maximal {
                    vec![(1.0, terminal)]
                } else {
                    let live: Vec<(f64, usize)> =
                        r.next.iter().copied().filter(|&(_, j)| alive[j]).collect();
                    let total: f64 = live.iter().map(|&(p, _)| p).sum();
                    assert!(total > 0.0, "live node without live successors");
                    live.into_iter()
                        .map(|(p, j)| (p / total, new_id[j]))
                        .collect()
                };
                ExecNode {
                    id,
                    label: NodeLabel::State(r.state),
                    next,
                    depth: 0,
                    position: r.position,
                    action: if r.maximal { None } else { r.action },
                }
            })
            .collect();
        nodes.push(ExecNode {
            id: terminal,
            label: NodeLabel::Sharp,
            next: Vec::new(),
            depth: 0,
            position: n,
            action: None,
        });

        Ok(Self::assemble(
            nodes,
            0,
            terminal,
            trace.clone(),
            1,
            model.state_names().into(),
            model.action_names().into(),
        ))
    }

    /// Computes topological order and depths; ids must already be final.
    pub(crate) fn assemble(
        mut nodes: Vec<ExecNode>,
        root: NodeId,
        terminal: NodeId,
        trace: Trace,
        word_length: usize,
        states: Arc<[String]>,
        actions: Arc<[String]>,
    ) -> Self {
        let mut indegree = vec![0usize; nodes.len()];
        for u in &nodes {
            for &(_, v) in &u.next {
                indegree[v] += 1;
            }
        }
        let mut topo = Vec::with_capacity(nodes.len());
        let mut ready: VecDeque<NodeId> = (0..nodes.len()).filter(|&u| indegree[u] == 0).collect();
        while let Some(u) = ready.pop_front() {
            topo.push(u);
            for k in 0..nodes[u].next.len() {
                let v = nodes[u].next[k].1;
                let d = nodes[u].depth + 1;
                if nodes[v].depth < d {
                    nodes[v].depth = d;
                }
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push_back(v);
                }
            }
        }
        assert_eq!(topo.len(), nodes.len(), "execution model must be acyclic");
        Self {
            nodes,
            root,
            terminal,
            trace,
            word_length,
            topo,
            states,
            actions,
        }
    }

    pub fn nodes(&self) -> &[ExecNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ExecNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn terminal(&self) -> NodeId {
        self.terminal
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// 1 for plain execution models, k after k-word expansion.
    pub fn word_length(&self) -> usize {
        self.word_length
    }

    /// Node ids with every node before all of its successors.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn state_names(&self) -> &Arc<[String]> {
        &self.states
    }

    pub(crate) fn action_names(&self) -> &Arc<[String]> {
        &self.actions
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(|u| u.next.len()).sum()
    }

    /// The plain node with the given state after `position` trace symbols.
    pub fn find(&self, position: usize, state: &str) -> Option<NodeId> {
        self.nodes.iter().position(|u| {
            u.position == position
                && matches!(u.label, NodeLabel::State(s) if self.states[s.index()] == state)
        })
    }

    pub fn label_text(&self, id: NodeId) -> String {
        match &self.nodes[id].label {
            NodeLabel::State(s) => self.states[s.index()].clone(),
            NodeLabel::Sharp => "#".to_string(),
            NodeLabel::Window(w) => {
                let parts: Vec<&str> = w
                    .iter()
                    .map(|x| x.map_or("#", |s| self.states[s.index()].as_str()))
                    .collect();
                format!("[{}]", parts.join(","))
            }
        }
    }

    pub fn edge_prob(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.nodes
            .get(from)?
            .next
            .iter()
            .find(|&&(_, v)| v == to)
            .map(|&(p, _)| p)
    }

    /// Product of edge probabilities along a full root-to-terminal path.
    pub fn path_prob(&self, path: &[NodeId]) -> Result<f64> {
        if path.first() != Some(&self.root) || path.last() != Some(&self.terminal) {
            return Err(Error::PathNotInModel);
        }
        path.windows(2).try_fold(1.0, |acc, w| {
            self.edge_prob(w[0], w[1])
                .map(|p| acc * p)
                .ok_or(Error::PathNotInModel)
        })
    }

    /// Number of full paths, by dynamic programming over the topological order.
    pub fn count_paths(&self) -> u128 {
        let mut count = vec![0u128; self.nodes.len()];
        count[self.terminal] = 1;
        for &u in self.topo.iter().rev() {
            if u == self.terminal {
                continue;
            }
            count[u] = self.nodes[u]
                .next
                .iter()
                .fold(0u128, |acc, &(_, v)| acc.saturating_add(count[v]));
        }
        count[self.root]
    }

    pub fn stats(&self) -> ExecStats {
        ExecStats {
            nodes: self.nodes.len(),
            nodes_excluding_sharp: self.nodes.iter().filter(|u| !u.label.is_sharp()).count(),
            edges: self.num_edges(),
            paths: self.count_paths(),
            max_depth: self.nodes.iter().map(|u| u.depth).max().unwrap_or(0),
        }
    }

    /// Graphviz dump with 12-significant-digit edge probabilities.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "digraph exec {{\n  // trace=\"{}\" word_length={}",
            self.trace, self.word_length
        );
        for u in &self.nodes {
            let _ = writeln!(out, "  u{} [label=\"{}\"];", u.id, self.label_text(u.id));
        }
        for u in &self.nodes {
            let action = u.action.map(|a| self.actions[a.index()].as_str());
            for &(p, v) in &u.next {
                let label = match action {
                    Some(a) => format!("{a} {p:.12}"),
                    None => format!("{p:.12}"),
                };
                let _ = writeln!(out, "  u{} -> u{} [label=\"{label}\"];", u.id, v);
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EX1;

    fn ex1() -> MdpModel {
        MdpModel::parse(EX1).unwrap()
    }

    fn aba() -> ExecModel {
        ExecModel::build(&ex1(), &Trace::parse("a b a").unwrap()).unwrap()
    }

    #[test]
    fn trace_rejects_tau_and_empty() {
        assert_eq!(Trace::parse("").unwrap_err(), Error::EmptyTrace);
        assert_eq!(Trace::parse("a tau").unwrap_err(), Error::TauInTrace);
        assert_eq!(Trace::parse(" a  b a ").unwrap().to_string(), "a b a");
    }

    #[test]
    fn running_example_structure() {
        let e = aba();
        let labels: Vec<String> = (0..e.len()).map(|u| e.label_text(u)).collect();
        // node ids u0..u8 in BFS order
        assert_eq!(labels, ["0", "1", "2", "3", "0", "4", "1", "2", "#"]);
        assert_eq!(e.len(), 9);
        assert_eq!(e.num_edges(), 11);
        assert_eq!(e.count_paths(), 5);
        assert_eq!(e.terminal(), 8);
        assert_eq!(e.edge_prob(3, 5), Some(1.0));
        assert_eq!(e.edge_prob(1, 3), Some(0.1));
        assert_eq!(e.edge_prob(1, 4), Some(0.9));
        assert_eq!(e.find(2, "0"), Some(4));
    }

    #[test]
    fn path_probabilities() {
        let e = aba();
        assert!((e.path_prob(&[0, 1, 3, 5, 6, 8]).unwrap() - 0.05).abs() < 1e-12);
        assert!((e.path_prob(&[0, 2, 4, 7, 8]).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(e.path_prob(&[0, 2, 4, 8]), Err(Error::PathNotInModel));
        assert_eq!(e.path_prob(&[1, 3, 5, 6, 8]), Err(Error::PathNotInModel));
    }

    #[test]
    fn illegal_trace_reports_prefix() {
        let err = ExecModel::build(&ex1(), &Trace::parse("a b c b").unwrap()).unwrap_err();
        assert_eq!(
            err,
            Error::IllegalTrace {
                prefix: vec!["a".into(), "b".into(), "c".into()]
            }
        );
        let err = ExecModel::build(&ex1(), &Trace::parse("z").unwrap()).unwrap_err();
        assert_eq!(err, Error::IllegalTrace { prefix: vec![] });
    }

    #[test]
    fn rejects_invalid_model() {
        let m = MdpModel::parse("init: s\ns tau 1 t\ns a 1 u\nt b u\n").unwrap();
        let err = ExecModel::build(&m, &Trace::parse("a").unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn single_path_chain() {
        let m = MdpModel::parse("init: 0\n0 a 1\n1 a 2\n2 a 0\n").unwrap();
        let e = ExecModel::build(&m, &Trace::parse("a a a a a").unwrap()).unwrap();
        let s = e.stats();
        assert_eq!(s.paths, 1);
        assert_eq!(s.nodes, 7);
        assert_eq!(s.nodes_excluding_sharp, 6);
        assert_eq!(s.max_depth, 6);
        let path: Vec<NodeId> = (0..7).collect();
        assert_eq!(e.path_prob(&path).unwrap(), 1.0);
    }

    #[test]
    fn closing_tau_steps_are_followed() {
        // after the last `a`, state 1 must still take its internal step
        let m =
            MdpModel::parse("init: 0\n0 a 1\n1 tau 0.4 2\n1 tau 0.6 3\n2 b 0\n3 c 0\n").unwrap();
        let e = ExecModel::build(&m, &Trace::parse("a").unwrap()).unwrap();
        assert_eq!(e.count_paths(), 2);
        assert_eq!(e.len(), 5);
        let e = ExecModel::build(&m, &Trace::parse("a b").unwrap()).unwrap();
        assert_eq!(e.count_paths(), 1);
        assert_eq!(e.edge_prob(1, 2), Some(1.0));
    }

    #[test]
    fn deterministic_rebuild() {
        let a = aba();
        let b = aba();
        assert_eq!(a.to_dot(), b.to_dot());
        assert!(a
            .to_dot()
            .contains("u3 -> u5 [label=\"tau 1.000000000000\"]"));
    }
}
