use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ObservationTable, StateId};
use crate::random::derive_seed;

use super::mlp::{argmax, MlpPolicy};

/// Default number of replacement draws per (state, feature).
pub const DEFAULT_IMPORTANCE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct StateImportance {
    pub state: StateId,
    /// Fraction of draws that changed the chosen action, per feature.
    pub scores: Vec<f64>,
    /// Highest score; ties resolved to the lowest feature index.
    pub top_feature: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    /// One entry per observation row, in ascending state order.
    pub states: Vec<StateImportance>,
}

impl ImportanceReport {
    pub fn top_feature_name(&self, state: StateId) -> Option<&str> {
        self.states
            .binary_search_by_key(&state, |s| s.state)
            .ok()
            .map(|i| self.feature_names[self.states[i].top_feature].as_str())
    }

    /// Per feature, the fraction of states where it ranks first.
    pub fn rank1_fractions(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.feature_names.len()];
        for s in &self.states {
            counts[s.top_feature] += 1;
        }
        let n = self.states.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    /// `state,top_feature,<score per feature>`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["state".to_string(), "top_feature".to_string()];
        header.extend(self.feature_names.iter().cloned());
        out.write_record(&header)?;
        for s in &self.states {
            let mut rec = vec![s.state.to_string(), self.feature_names[s.top_feature].clone()];
            rec.extend(s.scores.iter().map(|v| format!("{v:.6}")));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<importance>", e))?;
        Ok(())
    }

    /// `feature,fraction_rank1`
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["feature", "fraction_rank1"])?;
        for (name, f) in self.feature_names.iter().zip(self.rank1_fractions()) {
            out.write_record([name.clone(), format!("{f:.6}")])?;
        }
        out.flush().map_err(|e| Error::io("<importance summary>", e))?;
        Ok(())
    }
}

/// Per-state permutation importance: for every row and feature, replace the
/// feature by `k` values drawn with replacement from its empirical column and
/// count how often the chosen action changes.
///
/// Each (state, feature) pair draws from its own stream derived from `seed`,
/// so the report is independent of thread count.
pub fn permutation_importance(
    policy: &MlpPolicy,
    obs: &ObservationTable,
    k: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if obs.rows.is_empty() {
        return Err(Error::input("observation table is empty"));
    }
    if k == 0 {
        return Err(Error::input("importance needs at least one sample per feature"));
    }
    if obs.dim() != policy.input_dim() {
        return Err(Error::Dimension {
            expected: policy.input_dim(),
            found: obs.dim(),
        });
    }
    let d = obs.dim();
    let columns: Vec<Vec<f64>> = (0..d).map(|i| obs.column(i)).collect();
    let rows: Vec<(&StateId, &Vec<f64>)> = obs.rows.iter().collect();
    let states = rows
        .par_iter()
        .map(|&(&state, row)| {
            let base = argmax(&policy.forward(row)?);
            let mut probe = row.clone();
            let scores = (0..d)
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, state as u64, i as u64));
                    let col = &columns[i];
                    let mut changed = 0usize;
                    for _ in 0..k {
                        probe[i] = col[rng.gen_range(0..col.len())];
                        if argmax(&policy.forward(&probe)?) != base {
                            changed += 1;
                        }
                    }
                    probe[i] = row[i];
                    Ok(changed as f64 / k as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let top_feature = first_max(&scores);
            Ok(StateImportance {
                state,
                scores,
                top_feature,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImportanceReport {
        feature_names: obs.feature_names.clone(),
        states,
    })
}

fn first_max(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
