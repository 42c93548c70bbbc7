//! Graph-based precomputation of the states with probability exactly 0 or 1.

use std::collections::VecDeque;

use crate::model::{ExplicitDtmc, ExplicitMdp, StateId};

use super::formula::Direction;

/// Successor lists per state and choice; probabilities are ignored except
/// that zero-probability entries do not count as edges.
pub(crate) struct ChoiceGraph<'a> {
    rows: Vec<Vec<&'a [(StateId, f64)]>>,
    /// `(predecessor state, choice index)` per state.
    preds: Vec<Vec<(StateId, usize)>>,
}

impl<'a> ChoiceGraph<'a> {
    pub fn from_mdp(m: &'a ExplicitMdp) -> Self {
        Self::new(
            m.choices
                .iter()
                .map(|cs| cs.iter().map(|c| c.successors.as_slice()).collect())
                .collect(),
        )
    }

    pub fn from_dtmc(d: &'a ExplicitDtmc) -> Self {
        Self::new(d.transitions.iter().map(|t| vec![t.as_slice()]).collect())
    }

    fn new(rows: Vec<Vec<&'a [(StateId, f64)]>>) -> Self {
        let mut preds = vec![Vec::new(); rows.len()];
        for (s, cs) in rows.iter().enumerate() {
            for (c, succ) in cs.iter().enumerate() {
                for &(t, p) in succ.iter() {
                    if p > 0.0 {
                        preds[t].push((s, c));
                    }
                }
            }
        }
        for p in &mut preds {
            p.dedup();
        }
        ChoiceGraph { rows, preds }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn edges(&self, s: StateId, c: usize) -> impl Iterator<Item = StateId> + '_ {
        self.rows[s][c].iter().filter(|e| e.1 > 0.0).map(|e| e.0)
    }

    /// States reaching `target` through `through` states under some choice.
    fn exists_reach(&self, through: &[bool], target: &[bool]) -> Vec<bool> {
        let mut seen = target.to_vec();
        let mut queue: VecDeque<StateId> = (0..self.n()).filter(|&s| target[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &(s, _) in &self.preds[t] {
                if !seen[s] && through[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    /// States reaching `target` with positive probability under every choice
    /// resolution, moving only through `through` states.
    fn forall_reach(&self, through: &[bool], target: &[bool]) -> Vec<bool> {
        let n = self.n();
        let mut seen = target.to_vec();
        // Per state: number of choices not yet known to hit `seen`.
        let mut pending: Vec<usize> = self.rows.iter().map(Vec::len).collect();
        let mut hit: Vec<Vec<bool>> = self.rows.iter().map(|cs| vec![false; cs.len()]).collect();
        let mut queue: VecDeque<StateId> = (0..n).filter(|&s| target[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &(s, c) in &self.preds[t] {
                if seen[s] || !through[s] || hit[s][c] {
                    continue;
                }
                hit[s][c] = true;
                pending[s] -= 1;
                if pending[s] == 0 {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    /// Max-probability-one states given the max-probability-zero set.
    fn prob1e(&self, phi1: &[bool], phi2: &[bool], no: &[bool]) -> Vec<bool> {
        let n = self.n();
        let mut u: Vec<bool> = (0..n).map(|s| !no[s]).collect();
        loop {
            // Choices staying inside `u` almost surely.
            let inside: Vec<Vec<bool>> = (0..n)
                .map(|s| {
                    (0..self.rows[s].len())
                        .map(|c| self.edges(s, c).all(|t| u[t]))
                        .collect()
                })
                .collect();
            let mut r: Vec<bool> = (0..n).map(|s| u[s] && phi2[s]).collect();
            let mut queue: VecDeque<StateId> = (0..n).filter(|&s| r[s]).collect();
            while let Some(t) = queue.pop_front() {
                for &(s, c) in &self.preds[t] {
                    if !r[s] && u[s] && phi1[s] && inside[s][c] {
                        r[s] = true;
                        queue.push_back(s);
                    }
                }
            }
            if r == u {
                return u;
            }
            u = r;
        }
    }
}

/// States whose (optimal) probability is exactly one or exactly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prob01 {
    pub yes: Vec<bool>,
    pub no: Vec<bool>,
}

impl Prob01 {
    pub fn yes_states(&self) -> Vec<StateId> {
        (0..self.yes.len()).filter(|&s| self.yes[s]).collect()
    }

    pub fn no_states(&self) -> Vec<StateId> {
        (0..self.no.len()).filter(|&s| self.no[s]).collect()
    }

    pub fn is_unknown(&self, s: StateId) -> bool {
        !self.yes[s] && !self.no[s]
    }
}

/// Qualitative sets for `phi1 U phi2`; `direction` is `None` for chains.
pub(crate) fn prob01(g: &ChoiceGraph<'_>, phi1: &[bool], phi2: &[bool], direction: Option<Direction>) -> Prob01 {
    let n = g.n();
    let stay: Vec<bool> = (0..n).map(|s| phi1[s] && !phi2[s]).collect();
    match direction {
        Some(Direction::Max) | None => {
            let reach = g.exists_reach(&stay, phi2);
            let no: Vec<bool> = reach.iter().map(|r| !r).collect();
            let yes = g.prob1e(phi1, phi2, &no);
            Prob01 { yes, no }
        }
        Some(Direction::Min) => {
            let reach = g.forall_reach(&stay, phi2);
            let no: Vec<bool> = reach.iter().map(|r| !r).collect();
            // Min-probability-one: cannot be steered into `no` at all.
            let escape = g.exists_reach(&stay, &no);
            let yes = escape.iter().map(|e| !e).collect();
            Prob01 { yes, no }
        }
    }
}
