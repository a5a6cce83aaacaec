//! k-word expansion.
//!
//! Every node of the expanded model stands for a window of `k` consecutive
//! nodes along some path of the source model, so that a word of length `k`
//! can be checked against a single node. Windows running past the end are
//! padded with `#`. An artificial `#` root leads to every initial window and
//! every final window leads to an artificial `#` terminal.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::exec::{ExecModel, ExecNode, NodeId, NodeLabel};

pub fn expand(e: &ExecModel, k: usize) -> Result<ExecModel> {
    if k < 2 {
        return Err(Error::InvalidExpansion(format!(
            "window length must be at least 2, got {k}"
        )));
    }
    if e.word_length() != 1 {
        return Err(Error::InvalidExpansion(format!(
            "model is already expanded to word length {}",
            e.word_length()
        )));
    }
    let end = e.terminal();

    let mut windows: Vec<Box<[NodeId]>> = Vec::new();
    let mut ids: HashMap<Box<[NodeId]>, usize> = HashMap::new();
    // edges use `usize::MAX` for the expanded terminal until its id is known
    let mut edges: Vec<Vec<(f64, usize)>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |w: Box<[NodeId]>,
                      windows: &mut Vec<Box<[NodeId]>>,
                      edges: &mut Vec<Vec<(f64, usize)>>,
                      queue: &mut VecDeque<usize>| {
        if let Some(&id) = ids.get(&w) {
            return id;
        }
        // id 0 is the artificial root
        let id = windows.len() + 1;
        ids.insert(w.clone(), id);
        windows.push(w);
        edges.push(Vec::new());
        queue.push_back(id);
        id
    };

    // initial windows: all k-node path prefixes from the root
    let mut root_edges = Vec::new();
    let mut stack: Vec<(Vec<NodeId>, f64)> = vec![(vec![e.root()], 1.0)];
    while let Some((seq, p)) = stack.pop() {
        if seq.len() == k {
            root_edges.push((p, seq));
            continue;
        }
        let last = *seq.last().unwrap();
        if last == end {
            let mut s = seq;
            s.push(end);
            stack.push((s, p));
            continue;
        }
        for &(q, v) in e.node(last).next.iter().rev() {
            let mut s = seq.clone();
            s.push(v);
            stack.push((s, p * q));
        }
    }
    let root_next: Vec<(f64, usize)> = root_edges
        .into_iter()
        .map(|(p, seq)| {
            (
                p,
                intern(seq.into_boxed_slice(), &mut windows, &mut edges, &mut queue),
            )
        })
        .collect();

    while let Some(id) = queue.pop_front() {
        let w = windows[id - 1].clone();
        let mut next = Vec::new();
        if w[1] == end {
            next.push((1.0, usize::MAX));
        } else {
            let last = w[k - 1];
            let shift = |x: NodeId| -> Box<[NodeId]> {
                w[1..].iter().copied().chain(std::iter::once(x)).collect()
            };
            if last == end {
                next.push((
                    1.0,
                    intern(shift(end), &mut windows, &mut edges, &mut queue),
                ));
            } else {
                for &(p, x) in &e.node(last).next {
                    next.push((p, intern(shift(x), &mut windows, &mut edges, &mut queue)));
                }
            }
        }
        edges[id - 1] = next;
    }

    let terminal = windows.len() + 1;
    let fix = |list: Vec<(f64, usize)>| -> Vec<(f64, usize)> {
        list.into_iter()
            .map(|(p, v)| (p, if v == usize::MAX { terminal } else { v }))
            .collect()
    };
    let mut nodes = Vec::with_capacity(terminal + 1);
    nodes.push(ExecNode {
        id: 0,
        label: NodeLabel::Sharp,
        next: root_next,
        depth: 0,
        position: 0,
        action: None,
    });
    for (i, (w, next)) in windows.iter().zip(edges).enumerate() {
        let label: Box<[_]> = w
            .iter()
            .map(|&u| match e.node(u).label {
                NodeLabel::State(s) => Some(s),
                _ => None,
            })
            .collect();
        nodes.push(ExecNode {
            id: i + 1,
            label: NodeLabel::Window(label),
            next: fix(next),
            depth: 0,
            position: e.node(w[0]).position,
            action: None,
        });
    }
    nodes.push(ExecNode {
        id: terminal,
        label: NodeLabel::Sharp,
        next: Vec::new(),
        depth: 0,
        position: e.trace().len(),
        action: None,
    });

    Ok(ExecModel::assemble(
        nodes,
        0,
        terminal,
        e.trace().clone(),
        k,
        e.state_names().clone(),
        e.action_names().clone(),
    ))
}
