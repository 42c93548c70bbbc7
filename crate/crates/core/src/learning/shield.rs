use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ActionId, ExplicitMdp, ObservationTable, StateId};
use crate::pctl::{admissible_action_sets, check_mdp, PctlFormula};
use crate::policy::{StatePolicy, TabularPolicy};

use super::config::Correction;

/// Post-shield: per state, the actions allowed to execute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shield {
    /// Ascending admissible action ids per state.
    pub admissible: Vec<Vec<ActionId>>,
    pub correction: Correction,
    pub seed: u64,
}

/// Shield admitting the `epsilon`-optimal actions of `f` in every state.
///
/// For `Pmax`, choices that could idle forever in a value-preserving loop are
/// excluded, so every combination of admissible actions is optimal.
pub fn build_shield(
    m: &ExplicitMdp,
    f: &PctlFormula,
    epsilon: f64,
    correction: Correction,
    seed: u64,
) -> Result<Shield> {
    let result = check_mdp(m, f)?;
    let admissible = admissible_action_sets(m, f, &result, epsilon)?;
    for (s, set) in admissible.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Internal(format!("empty admissible set at state {s}")));
        }
        if let Some(&a) = set.iter().find(|&&a| m.choice(s, a).is_none()) {
            return Err(Error::Internal(format!(
                "shield admits disabled action {a} at state {s}"
            )));
        }
    }
    Ok(Shield {
        admissible,
        correction,
        seed,
    })
}

impl Shield {
    pub fn is_admissible(&self, s: StateId, a: ActionId) -> bool {
        self.admissible[s].binary_search(&a).is_ok()
    }

    /// Eq. (1): keep `proposed` if admissible, otherwise substitute one.
    /// Returns the executed action and whether the shield intervened.
    pub fn correct<R: Rng>(&self, s: StateId, proposed: ActionId, rng: &mut R) -> (ActionId, bool) {
        if self.is_admissible(s, proposed) {
            return (proposed, false);
        }
        let set = &self.admissible[s];
        let a = match self.correction {
            Correction::LowestId => set[0],
            Correction::Random => set[rng.gen_range(0..set.len())],
        };
        (a, true)
    }

    /// The shielded policy as a table over every decision state, using the
    /// lowest admissible action as correction.
    pub fn safe_policy(
        &self,
        base: &dyn StatePolicy,
        m: &ExplicitMdp,
        obs: &ObservationTable,
    ) -> Result<TabularPolicy> {
        let mut out = TabularPolicy::default();
        for s in 0..m.n_states {
            if m.choices[s].len() < 2 {
                continue;
            }
            let a = match base.decide(s, &obs.observe(s))? {
                Some(a) if self.is_admissible(s, a) => a,
                _ => self.admissible[s][0],
            };
            out.actions.insert(s, a);
        }
        Ok(out)
    }

    /// `state,admissible_action_ids` with ids separated by `;`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "admissible_action_ids"])?;
        for (s, set) in self.admissible.iter().enumerate() {
            let ids: Vec<String> = set.iter().map(|a| a.to_string()).collect();
            out.write_record([s.to_string(), ids.join(";")])?;
        }
        out.flush().map_err(|e| Error::io("<shield>", e))?;
        Ok(())
    }
}
