//! Probabilistic labelled transition systems (MDP models).
//!
//! A model is a finite set of states, a single initial state, and transitions
//! `src --action--> dst` annotated with the probability of taking that
//! transition when the system synchronizes on `action` in `src`. The internal
//! action is spelled `tau`.
//!
//! Text format, one item per line:
//!
//! ```text
//! # comment
//! init: 0
//! 0 a 0.5 1
//! 0 a 1/2 2
//! 2 b 0          # probability omitted: 1.0
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// The reserved internal action.
pub const TAU: &str = "tau";

/// Tolerance on the per-(state, action) probability sum.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIx(pub u32);

impl StateIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionIx(pub u32);

impl ActionIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub src: StateIx,
    pub action: ActionIx,
    pub prob: f64,
    pub dst: StateIx,
}

#[derive(Debug, Clone)]
pub struct MdpModel {
    states: Vec<String>,
    state_index: HashMap<String, StateIx>,
    actions: Vec<String>,
    action_index: HashMap<String, ActionIx>,
    init: StateIx,
    transitions: Vec<Transition>,
    // per source state, indices into `transitions` in insertion order
    outgoing: Vec<Vec<usize>>,
}

impl MdpModel {
    pub fn builder(init: &str) -> ModelBuilder {
        ModelBuilder::new(init)
    }

    /// Parses the line-oriented model format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut builder: Option<ModelBuilder> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("init:") {
                if builder.is_some() {
                    return Err(syntax(line, "`init:` given more than once"));
                }
                let id = rest.trim();
                if id.is_empty() || id.split_whitespace().count() != 1 {
                    return Err(syntax(line, "`init:` expects exactly one state id"));
                }
                builder = Some(ModelBuilder::new(id));
                continue;
            }
            let Some(b) = builder.as_mut() else {
                return Err(syntax(line, "transition before `init:` line"));
            };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let (src, action, prob, dst) = match tokens.as_slice() {
                [src, action, dst] => (*src, *action, 1.0, *dst),
                [src, action, prob, dst] => {
                    let p = parse_probability(prob)
                        .ok_or_else(|| syntax(line, format!("bad probability `{prob}`")))?;
                    (*src, *action, p, *dst)
                }
                _ => return Err(syntax(line, "expected `<src> <action> [<prob>] <dst>`")),
            };
            b.push(line, src, action, prob, dst)?;
        }
        builder.ok_or(Error::MissingInit)?.build()
    }

    /// Canonical text: transitions sorted by (src, action, dst), probabilities
    /// rounded to 12 significant digits.
    pub fn render(&self) -> String {
        let mut rows: Vec<&Transition> = self.transitions.iter().collect();
        rows.sort_by(|a, b| {
            (
                self.state_name(a.src),
                self.action_name(a.action),
                self.state_name(a.dst),
            )
                .cmp(&(
                    self.state_name(b.src),
                    self.action_name(b.action),
                    self.state_name(b.dst),
                ))
        });
        let mut out = format!("init: {}\n", self.state_name(self.init));
        for t in rows {
            out.push_str(&format!(
                "{} {} {} {}\n",
                self.state_name(t.src),
                self.action_name(t.action),
                format_probability(t.prob),
                self.state_name(t.dst)
            ));
        }
        out
    }

    pub fn init(&self) -> StateIx {
        self.init
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateIx) -> &str {
        &self.states[s.index()]
    }

    pub fn state(&self, name: &str) -> Option<StateIx> {
        self.state_index.get(name).copied()
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, a: ActionIx) -> &str {
        &self.actions[a.index()]
    }

    pub fn action(&self, name: &str) -> Option<ActionIx> {
        self.action_index.get(name).copied()
    }

    pub fn tau(&self) -> Option<ActionIx> {
        self.action(TAU)
    }

    pub fn is_tau(&self, a: ActionIx) -> bool {
        self.actions[a.index()] == TAU
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Outgoing transitions of `s` in insertion order.
    pub fn outgoing(&self, s: StateIx) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[s.index()]
            .iter()
            .map(move |&i| &self.transitions[i])
    }

    /// `P_M(src --action--> dst)`, zero if the transition is absent.
    pub fn transition_prob(&self, src: &str, action: &str, dst: &str) -> f64 {
        let (Some(s), Some(a), Some(d)) = (self.state(src), self.action(action), self.state(dst))
        else {
            return 0.0;
        };
        self.outgoing(s)
            .find(|t| t.action == a && t.dst == d)
            .map_or(0.0, |t| t.prob)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::ModelSyntax {
        line,
        message: message.into(),
    }
}

/// Accepts a decimal literal or a fraction `p/q` in (0, 1].
pub fn parse_probability(tok: &str) -> Option<f64> {
    let value = match tok.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.parse().ok()?;
            let den: f64 = den.parse().ok()?;
            if den == 0.0 {
                return None;
            }
            num / den
        }
        None => tok.parse().ok()?,
    };
    (value.is_finite() && value > 0.0 && value <= 1.0).then_some(value)
}

/// Formats with 12 significant digits and no trailing zeros.
pub fn format_probability(p: f64) -> String {
    let rounded: f64 = format!("{p:.11e}").parse().unwrap_or(p);
    format!("{rounded}")
}

fn valid_id(tok: &str) -> bool {
    !tok.is_empty() && !tok.contains('#') && !tok.chars().any(char::is_whitespace)
}

pub struct ModelBuilder {
    init: String,
    states: Vec<String>,
    state_index: HashMap<String, StateIx>,
    actions: Vec<String>,
    action_index: HashMap<String, ActionIx>,
    transitions: Vec<Transition>,
    seen: HashSet<(StateIx, ActionIx, StateIx)>,
    init_seen: bool,
}

impl ModelBuilder {
    pub fn new(init: &str) -> Self {
        Self {
            init: init.to_string(),
            states: Vec::new(),
            state_index: HashMap::new(),
            actions: Vec::new(),
            action_index: HashMap::new(),
            transitions: Vec::new(),
            seen: HashSet::new(),
            init_seen: false,
        }
    }

    fn intern_state(&mut self, name: &str) -> StateIx {
        if let Some(&ix) = self.state_index.get(name) {
            return ix;
        }
        let ix = StateIx(self.states.len() as u32);
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), ix);
        ix
    }

    fn intern_action(&mut self, name: &str) -> ActionIx {
        if let Some(&ix) = self.action_index.get(name) {
            return ix;
        }
        let ix = ActionIx(self.actions.len() as u32);
        self.actions.push(name.to_string());
        self.action_index.insert(name.to_string(), ix);
        ix
    }

    /// Adds a transition; panics on malformed input. Use [`ModelBuilder::try_transition`]
    /// for fallible insertion.
    pub fn transition(mut self, src: &str, action: &str, prob: f64, dst: &str) -> Self {
        let line = self.transitions.len() + 1;
        if let Err(e) = self.push(line, src, action, prob, dst) {
            panic!("invalid transition: {e}");
        }
        self
    }

    pub fn try_transition(&mut self, src: &str, action: &str, prob: f64, dst: &str) -> Result<()> {
        let line = self.transitions.len() + 1;
        self.push(line, src, action, prob, dst)
    }

    fn push(&mut self, line: usize, src: &str, action: &str, prob: f64, dst: &str) -> Result<()> {
        for (what, tok) in [("state", src), ("action", action), ("state", dst)] {
            if !valid_id(tok) {
                return Err(syntax(line, format!("invalid {what} id `{tok}`")));
            }
        }
        if !(prob.is_finite() && prob > 0.0 && prob <= 1.0) {
            return Err(syntax(line, format!("probability {prob} outside (0, 1]")));
        }
        // keep the initial state first in the state table
        if !self.init_seen {
            self.intern_state(&self.init.clone());
            self.init_seen = true;
        }
        let s = self.intern_state(src);
        let a = self.intern_action(action);
        let d = self.intern_state(dst);
        if !self.seen.insert((s, a, d)) {
            return Err(Error::DuplicateTransition {
                line,
                src: src.to_string(),
                action: action.to_string(),
                dst: dst.to_string(),
            });
        }
        self.transitions.push(Transition {
            src: s,
            action: a,
            prob,
            dst: d,
        });
        Ok(())
    }

    pub fn build(self) -> Result<MdpModel> {
        if !valid_id(&self.init) {
            return Err(syntax(0, format!("invalid state id `{}`", self.init)));
        }
        let init = match self.state_index.get(&self.init) {
            Some(&ix) => ix,
            None => return Err(Error::UnknownInit(self.init)),
        };
        let mentioned = self
            .transitions
            .iter()
            .any(|t| t.src == init || t.dst == init);
        if !mentioned {
            return Err(Error::UnknownInit(self.init));
        }
        let mut outgoing = vec![Vec::new(); self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            outgoing[t.src.index()].push(i);
        }
        Ok(MdpModel {
            states: self.states,
            state_index: self.state_index,
            actions: self.actions,
            action_index: self.action_index,
            init,
            transitions: self.transitions,
            outgoing,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// Probabilities of one (state, action) distribution must sum to 1.
    #[serde(rename = "prob-sum")]
    ProbabilitySum,
    /// A state mixes `tau` and visible outgoing transitions.
    #[serde(rename = "tau-mix")]
    TauMix,
    /// All incoming and outgoing transitions of a state are `tau`.
    #[serde(rename = "tau-only")]
    TauOnlyState,
    #[serde(rename = "tau-cycle")]
    TauCycle,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::ProbabilitySum => "prob-sum",
            Rule::TauMix => "tau-mix",
            Rule::TauOnlyState => "tau-only",
            Rule::TauCycle => "tau-cycle",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
    /// Offending state, or `src action` for distribution errors.
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "[{}] {}", v.rule, v.message)?;
        }
        Ok(())
    }
}

fn validate(model: &MdpModel) -> ValidationReport {
    let mut violations = Vec::new();
    let n = model.num_states();

    // distributions
    let mut sums: Vec<((StateIx, ActionIx), f64)> = Vec::new();
    let mut slot: HashMap<(StateIx, ActionIx), usize> = HashMap::new();
    for t in model.transitions() {
        let key = (t.src, t.action);
        match slot.get(&key) {
            Some(&i) => sums[i].1 += t.prob,
            None => {
                slot.insert(key, sums.len());
                sums.push((key, t.prob));
            }
        }
    }
    for ((s, a), total) in sums {
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            violations.push(Violation {
                rule: Rule::ProbabilitySum,
                message: format!(
                    "probabilities of {} --{}--> sum to {total}",
                    model.state_name(s),
                    model.action_name(a)
                ),
                subject: format!("{} {}", model.state_name(s), model.action_name(a)),
            });
        }
    }

    let mut out_tau = vec![0usize; n];
    let mut out_visible = vec![0usize; n];
    let mut in_tau = vec![0usize; n];
    let mut in_visible = vec![0usize; n];
    for t in model.transitions() {
        if model.is_tau(t.action) {
            out_tau[t.src.index()] += 1;
            in_tau[t.dst.index()] += 1;
        } else {
            out_visible[t.src.index()] += 1;
            in_visible[t.dst.index()] += 1;
        }
    }
    for s in 0..n {
        let name = &model.state_names()[s];
        if out_tau[s] > 0 && out_visible[s] > 0 {
            violations.push(Violation {
                rule: Rule::TauMix,
                message: format!("state {name} has both tau and visible outgoing transitions"),
                subject: name.clone(),
            });
        }
        let incident = out_tau[s] + out_visible[s] + in_tau[s] + in_visible[s];
        if incident > 0 && out_visible[s] == 0 && in_visible[s] == 0 {
            violations.push(Violation {
                rule: Rule::TauOnlyState,
                message: format!("all transitions of state {name} are tau"),
                subject: name.clone(),
            });
        }
    }

    for s in tau_cycle_states(model) {
        let name = model.state_name(s).to_string();
        violations.push(Violation {
            rule: Rule::TauCycle,
            message: format!("state {name} lies on a cycle of tau transitions"),
            subject: name,
        });
    }

    ValidationReport::from_violations(violations)
}

/// One representative state per tau-cycle found by depth-first search.
fn tau_cycle_states(model: &MdpModel) -> Vec<StateIx> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let Some(tau) = model.tau() else {
        return Vec::new();
    };
    let n = model.num_states();
    let succ: Vec<Vec<StateIx>> = (0..n)
        .map(|s| {
            model
                .outgoing(StateIx(s as u32))
                .filter(|t| t.action == tau)
                .map(|t| t.dst)
                .collect()
        })
        .collect();
    let mut color = vec![Color::White; n];
    let mut found = Vec::new();
    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Grey;
        while let Some((s, i)) = stack.last_mut() {
            let s = *s;
            if let Some(&next) = succ[s].get(*i) {
                *i += 1;
                match color[next.index()] {
                    Color::White => {
                        color[next.index()] = Color::Grey;
                        stack.push((next.index(), 0));
                    }
                    Color::Grey => found.push(next),
                    Color::Black => {}
                }
            } else {
                color[s] = Color::Black;
                stack.pop();
            }
        }
    }
    found.sort();
    found.dedup();
    found
}
