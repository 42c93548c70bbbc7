//! Explicit-state models: MDPs, DTMCs, observation tables and label rules.

mod labels;
mod observation;

pub use labels::{apply_label_rules, Comparator, LabelRule, LabelRuleSet, Labeler, Threshold};
pub use observation::ObservationTable;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// Label name to the set of states carrying it.
pub type Labels = BTreeMap<String, BTreeSet<StateId>>;

/// Tolerance on the sum of an input distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// One nondeterministic choice: an action and its successor distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: ActionId,
    pub successors: Vec<(StateId, f64)>,
}

/// Sparse explicit-state Markov decision process.
///
/// `choices[s]` lists the enabled actions of state `s` in ascending action id.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp {
    pub n_states: usize,
    pub initial_state: StateId,
    /// Action names; the index is the action id.
    pub actions: Vec<String>,
    pub choices: Vec<Vec<Choice>>,
    pub labels: Labels,
    pub terminal_reward: BTreeMap<StateId, f64>,
}

/// Sparse explicit-state discrete-time Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitDtmc {
    pub n_states: usize,
    pub initial_state: StateId,
    pub transitions: Vec<Vec<(StateId, f64)>>,
    pub labels: Labels,
}

/// Read access shared by both model kinds, used to resolve state formulas.
pub trait LabelledModel {
    fn n_states(&self) -> usize;
    fn initial_state(&self) -> StateId;
    fn labels(&self) -> &Labels;
}

impl LabelledModel for ExplicitMdp {
    fn n_states(&self) -> usize {
        self.n_states
    }
    fn initial_state(&self) -> StateId {
        self.initial_state
    }
    fn labels(&self) -> &Labels {
        &self.labels
    }
}

impl LabelledModel for ExplicitDtmc {
    fn n_states(&self) -> usize {
        self.n_states
    }
    fn initial_state(&self) -> StateId {
        self.initial_state
    }
    fn labels(&self) -> &Labels {
        &self.labels
    }
}

impl ExplicitMdp {
    pub fn choice(&self, state: StateId, action: ActionId) -> Option<&Choice> {
        self.choices.get(state)?.iter().find(|c| c.action == action)
    }

    pub fn enabled_actions(&self, state: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn transition_count(&self) -> usize {
        self.choices
            .iter()
            .flat_map(|cs| cs.iter())
            .map(|c| c.successors.len())
            .sum()
    }

    /// Views a model with exactly one choice per state as a chain.
    pub fn to_dtmc(&self) -> Result<ExplicitDtmc> {
        let mut transitions = Vec::with_capacity(self.n_states);
        for (s, cs) in self.choices.iter().enumerate() {
            match cs.as_slice() {
                [only] => transitions.push(only.successors.clone()),
                _ => {
                    return Err(Error::input(format!(
                        "state {s} has {} choices; a chain needs exactly one",
                        cs.len()
                    )))
                }
            }
        }
        Ok(ExplicitDtmc {
            n_states: self.n_states,
            initial_state: self.initial_state,
            transitions,
            labels: self.labels.clone(),
        })
    }
}

impl ExplicitDtmc {
    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Chain as a one-action MDP, so MDP-level tooling applies unchanged.
    pub fn to_mdp(&self, action_name: &str) -> ExplicitMdp {
        ExplicitMdp {
            n_states: self.n_states,
            initial_state: self.initial_state,
            actions: vec![action_name.to_string()],
            choices: self
                .transitions
                .iter()
                .map(|t| {
                    vec![Choice {
                        action: 0,
                        successors: t.clone(),
                    }]
                })
                .collect(),
            labels: self.labels.clone(),
            terminal_reward: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InitialOutOfRange {
        initial: StateId,
        n_states: usize,
    },
    StateCountMismatch {
        declared: usize,
        rows: usize,
    },
    NoEnabledAction {
        state: StateId,
    },
    UnknownAction {
        state: StateId,
        action: ActionId,
    },
    DuplicateAction {
        state: StateId,
        action: ActionId,
    },
    ProbabilityOutOfRange {
        state: StateId,
        action: ActionId,
        successor: StateId,
        probability: f64,
    },
    SuccessorOutOfRange {
        state: StateId,
        action: ActionId,
        successor: StateId,
    },
    DistributionSum {
        state: StateId,
        action: ActionId,
        sum: f64,
    },
    LabelStateOutOfRange {
        label: String,
        state: StateId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialOutOfRange { initial, n_states } => {
                write!(f, "initial state {initial} out of range (n_states = {n_states})")
            }
            Violation::StateCountMismatch { declared, rows } => {
                write!(f, "declared {declared} states but {rows} choice rows")
            }
            Violation::NoEnabledAction { state } => write!(f, "state {state}: no enabled action"),
            Violation::UnknownAction { state, action } => {
                write!(f, "state {state}: action id {action} not in action table")
            }
            Violation::DuplicateAction { state, action } => {
                write!(f, "state {state}: action {action} enabled twice")
            }
            Violation::ProbabilityOutOfRange {
                state,
                action,
                successor,
                probability,
            } => write!(
                f,
                "state {state}, action {action}: probability {probability} to {successor} outside [0,1]"
            ),
            Violation::SuccessorOutOfRange {
                state,
                action,
                successor,
            } => {
                write!(f, "state {state}, action {action}: successor {successor} out of range")
            }
            Violation::DistributionSum { state, action, sum } => {
                let shown = (sum * 1e14).round() / 1e14;
                write!(f, "state {state}, action {action}: distribution sums to {shown}")
            }
            Violation::LabelStateOutOfRange { label, state } => {
                write!(f, "label \"{label}\" names out-of-range state {state}")
            }
        }
    }
}

/// Collects every invariant violation of `m`; an empty vector means the model is valid.
pub fn validate_mdp(m: &ExplicitMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.initial_state >= m.n_states {
        out.push(Violation::InitialOutOfRange {
            initial: m.initial_state,
            n_states: m.n_states,
        });
    }
    if m.choices.len() != m.n_states {
        out.push(Violation::StateCountMismatch {
            declared: m.n_states,
            rows: m.choices.len(),
        });
    }
    for (state, cs) in m.choices.iter().enumerate() {
        if cs.is_empty() {
            out.push(Violation::NoEnabledAction { state });
        }
        let mut seen = BTreeSet::new();
        for c in cs {
            let action = c.action;
            if action >= m.actions.len() {
                out.push(Violation::UnknownAction { state, action });
            }
            if !seen.insert(action) {
                out.push(Violation::DuplicateAction { state, action });
            }
            check_distribution(state, action, &c.successors, m.n_states, &mut out);
        }
    }
    check_labels(&m.labels, m.n_states, &mut out);
    out
}

/// Same checks as [`validate_mdp`] for chains; violations report action 0.
pub fn validate_dtmc(d: &ExplicitDtmc) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.initial_state >= d.n_states {
        out.push(Violation::InitialOutOfRange {
            initial: d.initial_state,
            n_states: d.n_states,
        });
    }
    if d.transitions.len() != d.n_states {
        out.push(Violation::StateCountMismatch {
            declared: d.n_states,
            rows: d.transitions.len(),
        });
    }
    for (state, t) in d.transitions.iter().enumerate() {
        if t.is_empty() {
            out.push(Violation::NoEnabledAction { state });
        }
        check_distribution(state, 0, t, d.n_states, &mut out);
    }
    check_labels(&d.labels, d.n_states, &mut out);
    out
}

fn check_distribution(
    state: StateId,
    action: ActionId,
    successors: &[(StateId, f64)],
    n_states: usize,
    out: &mut Vec<Violation>,
) {
    let mut sum = 0.0;
    for &(successor, probability) in successors {
        if !(0.0..=1.0).contains(&probability) {
            out.push(Violation::ProbabilityOutOfRange {
                state,
                action,
                successor,
                probability,
            });
        }
        if successor >= n_states {
            out.push(Violation::SuccessorOutOfRange {
                state,
                action,
                successor,
            });
        }
        sum += probability;
    }
    if !successors.is_empty() && (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        out.push(Violation::DistributionSum { state, action, sum });
    }
}

fn check_labels(labels: &Labels, n_states: usize, out: &mut Vec<Violation>) {
    for (label, states) in labels {
        if let Some(&state) = states.range(n_states..).next() {
            out.push(Violation::LabelStateOutOfRange {
                label: label.clone(),
                state,
            });
        }
    }
}
