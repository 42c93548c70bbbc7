//! Policies: tabular schedulers and MLPs over observations, plus pruning
//! and permutation importance.

mod importance;
mod mlp;
mod tabular;

pub use importance::{permutation_importance, ImportanceReport, StateImportance, DEFAULT_IMPORTANCE_SAMPLES};
pub use mlp::{Activation, Layer, MlpPolicy};
pub use tabular::TabularPolicy;

pub(crate) use mlp::argmax;

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ActionId, StateId};
use crate::pctl::Scheduler;

/// Memoryless deterministic decision rule over states and their observations.
pub trait StatePolicy {
    /// `None` when the policy has no decision for this state.
    fn decide(&self, state: StateId, observation: &[f64]) -> Result<Option<ActionId>>;
}

impl StatePolicy for MlpPolicy {
    fn decide(&self, _state: StateId, observation: &[f64]) -> Result<Option<ActionId>> {
        self.action_of(observation).map(Some)
    }
}

impl StatePolicy for TabularPolicy {
    fn decide(&self, state: StateId, _observation: &[f64]) -> Result<Option<ActionId>> {
        Ok(self.get(state))
    }
}

impl StatePolicy for Scheduler {
    fn decide(&self, state: StateId, _observation: &[f64]) -> Result<Option<ActionId>> {
        Ok(self.actions.get(state).copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Mlp(MlpPolicy),
    Tabular(TabularPolicy),
}

impl StatePolicy for Policy {
    fn decide(&self, state: StateId, observation: &[f64]) -> Result<Option<ActionId>> {
        match self {
            Policy::Mlp(p) => p.decide(state, observation),
            Policy::Tabular(p) => p.decide(state, observation),
        }
    }
}

impl<P: StatePolicy + ?Sized> StatePolicy for &P {
    fn decide(&self, state: StateId, observation: &[f64]) -> Result<Option<ActionId>> {
        (**self).decide(state, observation)
    }
}

/// Loads an `MLPNET` file or a `state,action_id` CSV, by content.
pub fn load_policy(path: &Path) -> Result<Policy> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with("MLPNET") {
        Ok(Policy::Mlp(MlpPolicy::from_text(&text)?))
    } else {
        Ok(Policy::Tabular(TabularPolicy::from_csv_reader(text.as_bytes())?))
    }
}

pub fn save_policy(policy: &Policy, path: &Path) -> Result<()> {
    match policy {
        Policy::Mlp(p) => p.save(path),
        Policy::Tabular(p) => p.save(path),
    }
}
