#![allow(dead_code)]

use probcov::bench::{expected_paths, make_model, make_trace};
use probcov::model::ModelBuilder;
use probcov::{Clause, ExecModel, Goal, MdpModel, NodeLabel, Trace, Word};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EQUIVALENCE_PATH_LIMIT: u128 = 50_000;

/// Every benchmark instance `E(i, m)` with at most `limit` paths, over the
/// parameter ranges used by the benchmark tables.
pub fn bench_suite(limit: u128) -> Vec<(usize, usize, ExecModel)> {
    let mut out = Vec::new();
    for m in [0, 2, 8] {
        for i in 5..=12 {
            if expected_paths(i, m) <= limit {
                let e = ExecModel::build(&make_model(m), &make_trace(i)).unwrap();
                out.push((i, m, e));
            }
        }
    }
    out
}

/// A random valid model with at most `max_states` states and a trace of at
/// most `max_trace` actions that it can perform.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_trace: usize,
) -> (MdpModel, Trace) {
    loop {
        let Some(model) = random_model(rng, max_states) else {
            continue;
        };
        if let Some(trace) = random_trace(rng, &model, max_trace) {
            return (model, trace);
        }
    }
}

fn random_model<R: Rng>(rng: &mut R, max_states: usize) -> Option<MdpModel> {
    let n = rng.gen_range(2..=max_states);
    let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut b = ModelBuilder::new("0");
    for src in &names {
        let roll: f64 = rng.gen();
        let actions: Vec<&str> = if roll < 0.15 {
            continue;
        } else if roll < 0.3 {
            vec!["tau"]
        } else {
            let mut visible = vec!["a", "b", "c"];
            visible.shuffle(rng);
            visible.truncate(rng.gen_range(1..=2));
            visible
        };
        for action in actions {
            let fanout = rng.gen_range(1..=3);
            let mut targets = names.clone();
            targets.shuffle(rng);
            targets.truncate(fanout);
            let weights: Vec<u32> = targets.iter().map(|_| rng.gen_range(1..=4)).collect();
            let total: u32 = weights.iter().sum();
            for (dst, w) in targets.iter().zip(&weights) {
                b.try_transition(src, action, f64::from(*w) / f64::from(total), dst)
                    .ok()?;
            }
        }
    }
    let model = b.build().ok()?;
    model.validate().ok.then_some(model)
}

fn random_trace<R: Rng>(rng: &mut R, model: &MdpModel, max_len: usize) -> Option<Trace> {
    let len = rng.gen_range(1..=max_len);
    let mut actions = Vec::new();
    let mut s = model.init();
    for _ in 0..4 * max_len {
        if actions.len() == len {
            break;
        }
        let out: Vec<_> = model.outgoing(s).collect();
        let Some(t) = out.choose(rng) else {
            break;
        };
        // follow the distribution of the chosen action
        let same: Vec<_> = out.iter().filter(|u| u.action == t.action).collect();
        let mut r: f64 = rng.gen();
        let mut next = same.last().unwrap().dst;
        for u in &same {
            if r < u.prob {
                next = u.dst;
                break;
            }
            r -= u.prob;
        }
        if !model.is_tau(t.action) {
            actions.push(model.action_name(t.action).to_string());
        }
        s = next;
    }
    Trace::new(actions).ok()
}

/// A random sentence or aggregate goal for `e`, with words of length at most
/// `max_k`. Words are mostly segments of sampled executions; a few use
/// arbitrary or unknown states.
pub fn random_goal<R: Rng>(rng: &mut R, e: &ExecModel, max_k: usize) -> Goal {
    let k = rng.gen_range(1..=max_k);
    if rng.gen_bool(0.4) {
        return Goal::aggregate(k, rng.gen_range(0..=6)).unwrap();
    }
    let names = e.state_names();
    let word = |rng: &mut R| -> Vec<String> {
        let run = sample_states(rng, e);
        if rng.gen_bool(0.8) && run.len() >= k {
            let at = rng.gen_range(0..=run.len() - k);
            return run[at..at + k].to_vec();
        }
        (0..k)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    "zz".to_string()
                } else {
                    names.choose(rng).unwrap().clone()
                }
            })
            .collect()
    };
    let clauses = (0..rng.gen_range(1..=3))
        .map(|_| {
            let words = (0..rng.gen_range(1..=2))
                .map(|_| Word::new(word(rng)))
                .collect();
            Clause::new(words)
        })
        .collect();
    Goal::sentence(clauses).unwrap()
}

/// States along one random execution of `e`.
fn sample_states<R: Rng>(rng: &mut R, e: &ExecModel) -> Vec<String> {
    let mut out = Vec::new();
    let mut u = e.root();
    loop {
        if let NodeLabel::State(s) = &e.node(u).label {
            out.push(e.state_names()[s.index()].clone());
        }
        let next = &e.node(u).next;
        let Some(&(_, v)) = next.choose_weighted(rng, |&(p, _)| p).ok() else {
            return out;
        };
        u = v;
    }
}
