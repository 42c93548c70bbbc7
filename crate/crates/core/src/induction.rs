//! Reachable-only construction of the Markov chain induced by a policy.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{ActionId, ExplicitDtmc, ExplicitMdp, Labeler, Labels, ObservationTable, StateId};
use crate::policy::{ImportanceReport, StatePolicy};
use crate::prism::print::fmt_decimal;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InduceOptions {
    /// States carrying any of these labels become absorbing without
    /// consulting the policy (property-directed truncation). Empty by default.
    pub stop_labels: Vec<String>,
    pub model_name: String,
    pub policy_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductionStats {
    pub mdp_states: usize,
    pub mdp_transitions: usize,
    pub reachable_states: usize,
    pub transitions: usize,
    /// Reachable states with a single enabled action (policy not consulted).
    pub forced_states: usize,
    pub truncated_states: usize,
}

/// A policy-induced chain. Chain states are the reachable MDP states
/// renumbered in ascending order of their original ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedDtmc {
    pub dtmc: ExplicitDtmc,
    /// MDP state of each chain state.
    pub original_ids: Vec<StateId>,
    /// Action executed in each chain state.
    pub chosen_actions: Vec<ActionId>,
    pub model_name: String,
    pub policy_name: String,
    pub stats: InductionStats,
}

/// Builds the chain induced by `policy` from the initial state by
/// depth-first exploration (lowest successor id first).
///
/// States with exactly one enabled action take it without consulting the
/// policy, so tabular policies need only cover real decision points. Labels:
/// the MDP's own labels restricted to reachable states, plus the labeler's
/// labels for every state that has an observation row.
pub fn induce(
    m: &ExplicitMdp,
    policy: &dyn StatePolicy,
    obs: &ObservationTable,
    labeler: Option<&Labeler>,
    options: &InduceOptions,
) -> Result<InducedDtmc> {
    let n = m.n_states;
    if m.initial_state >= n {
        return Err(Error::input(format!("initial state {} out of range", m.initial_state)));
    }
    let stop: Vec<bool> = {
        let mut v = vec![false; n];
        for l in &options.stop_labels {
            let set = m.labels.get(l).ok_or_else(|| Error::UnknownLabel(l.clone()))?;
            for &s in set.range(..n) {
                v[s] = true;
            }
        }
        v
    };

    // Per visited MDP state: chosen action, or None for truncated states.
    let mut decision: Vec<Option<Option<ActionId>>> = vec![None; n];
    let mut stack = vec![m.initial_state];
    let mut forced = 0;
    let mut truncated = 0;
    while let Some(s) = stack.pop() {
        if decision[s].is_some() {
            continue;
        }
        if stop[s] {
            decision[s] = Some(None);
            truncated += 1;
            continue;
        }
        let choices = &m.choices[s];
        let action = if let [only] = choices.as_slice() {
            forced += 1;
            only.action
        } else {
            let o = obs.observe(s);
            let a = policy.decide(s, &o)?.ok_or(Error::PolicyUndefined(s))?;
            if m.choice(s, a).is_none() {
                return Err(Error::ActionNotEnabled { state: s, action: a });
            }
            a
        };
        decision[s] = Some(Some(action));
        let succ = &m.choice(s, action).expect("checked above").successors;
        for &(t, p) in succ.iter().rev() {
            if p > 0.0 && decision[t].is_none() {
                stack.push(t);
            }
        }
    }

    let original_ids: Vec<StateId> = (0..n).filter(|&s| decision[s].is_some()).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in original_ids.iter().enumerate() {
        index[s] = i;
    }
    let mut transitions = Vec::with_capacity(original_ids.len());
    let mut chosen_actions = Vec::with_capacity(original_ids.len());
    for (i, &s) in original_ids.iter().enumerate() {
        match decision[s].unwrap() {
            Some(a) => {
                let row: Vec<(StateId, f64)> = m
                    .choice(s, a)
                    .unwrap()
                    .successors
                    .iter()
                    .filter(|e| e.1 > 0.0)
                    .map(|&(t, p)| (index[t], p))
                    .collect();
                transitions.push(row);
                chosen_actions.push(a);
            }
            None => {
                transitions.push(vec![(i, 1.0)]);
                chosen_actions.push(m.choices[s].first().map_or(0, |c| c.action));
            }
        }
    }

    let mut labels = Labels::new();
    for (name, set) in &m.labels {
        labels.insert(
            name.clone(),
            set.iter()
                .filter(|&&s| s < n && index[s] != usize::MAX)
                .map(|&s| index[s])
                .collect(),
        );
    }
    if let Some(lab) = labeler {
        for name in lab.label_names() {
            labels.entry(name.to_string()).or_default();
        }
        for (i, &s) in original_ids.iter().enumerate() {
            if let Some(row) = obs.rows.get(&s) {
                for name in lab.labels_for(row) {
                    labels.get_mut(name).unwrap().insert(i);
                }
            }
        }
    }

    let n_chain = original_ids.len();
    let dtmc = ExplicitDtmc {
        n_states: n_chain,
        initial_state: index[m.initial_state],
        transitions,
        labels,
    };
    let stats = InductionStats {
        mdp_states: n,
        mdp_transitions: m.transition_count(),
        reachable_states: n_chain,
        transitions: dtmc.transition_count(),
        forced_states: forced,
        truncated_states: truncated,
    };
    Ok(InducedDtmc {
        dtmc,
        original_ids,
        chosen_actions,
        model_name: options.model_name.clone(),
        policy_name: options.policy_name.clone(),
        stats,
    })
}

impl InducedDtmc {
    /// Labels every state with the name of its executed action.
    pub fn label_actions(&mut self, action_names: &[String]) -> Result<()> {
        for (i, &a) in self.chosen_actions.iter().enumerate() {
            let name = action_names
                .get(a)
                .ok_or_else(|| Error::input(format!("no name for action id {a}")))?;
            self.dtmc.labels.entry(name.clone()).or_default().insert(i);
        }
        Ok(())
    }

    /// Labels each state covered by `report` with `imp_<top feature>`.
    pub fn label_top_feature(&mut self, report: &ImportanceReport) {
        for name in &report.feature_names {
            self.dtmc.labels.entry(format!("imp_{name}")).or_default();
        }
        for (i, &s) in self.original_ids.iter().enumerate() {
            if let Some(name) = report.top_feature_name(s) {
                self.dtmc.labels.get_mut(&format!("imp_{name}")).unwrap().insert(i);
            }
        }
    }

    /// Transition list: header `<states> <transitions>`, then `src dst prob`.
    pub fn write_tra<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<transitions>", e);
        writeln!(w, "{} {}", self.dtmc.n_states, self.dtmc.transition_count()).map_err(io)?;
        for (s, row) in self.dtmc.transitions.iter().enumerate() {
            let mut row = row.clone();
            row.sort_by_key(|e| e.0);
            for (t, p) in row {
                writeln!(w, "{s} {t} {}", fmt_decimal(p)).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    /// One line per state: `<state>: <label> <label> ...` (names sorted).
    pub fn write_lab<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<labels>", e);
        let mut per_state: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); self.dtmc.n_states];
        for (name, set) in &self.dtmc.labels {
            for &s in set {
                per_state[s].insert(name);
            }
        }
        for (s, names) in per_state.iter().enumerate() {
            let joined: Vec<&str> = names.iter().copied().collect();
            if joined.is_empty() {
                writeln!(w, "{s}:").map_err(io)?;
            } else {
                writeln!(w, "{s}: {}", joined.join(" ")).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    /// `key=value` construction report.
    pub fn write_stats<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<stats>", e);
        let s = &self.stats;
        let n_labels = self.dtmc.labels.len();
        for (k, v) in [
            ("model", self.model_name.clone()),
            ("policy", self.policy_name.clone()),
            ("mdp_states", s.mdp_states.to_string()),
            ("mdp_transitions", s.mdp_transitions.to_string()),
            ("reachable_states", s.reachable_states.to_string()),
            ("transitions", s.transitions.to_string()),
            ("forced_states", s.forced_states.to_string()),
            ("truncated_states", s.truncated_states.to_string()),
            ("labels", n_labels.to_string()),
            ("initial_state", self.original_ids[self.dtmc.initial_state].to_string()),
        ] {
            writeln!(w, "{k}={v}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// `chain_state,mdp_state,action_id`
    pub fn write_map<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["chain_state", "mdp_state", "action_id"])?;
        for (i, (&s, &a)) in self.original_ids.iter().zip(&self.chosen_actions).enumerate() {
            out.write_record([i.to_string(), s.to_string(), a.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<state map>", e))?;
        Ok(())
    }
}
