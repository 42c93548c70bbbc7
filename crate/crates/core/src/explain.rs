//! Analysis drivers: feature-pruning sweeps and property batteries.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::induction::{induce, InduceOptions};
use crate::model::{ExplicitDtmc, ExplicitMdp, Labeler, LabelledModel, ObservationTable};
use crate::pctl::{check_dtmc, check_mdp, PctlFormula, PropertyEntry, Query};
use crate::policy::MlpPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct PruneRow {
    pub feature: usize,
    pub name: String,
    pub base_prob: f64,
    pub pruned_prob: f64,
    /// `base_prob - pruned_prob`.
    pub delta: f64,
}

/// For each input feature, re-induces the chain under the policy with that
/// feature pruned and re-checks `f`. Rows are sorted by `|delta|`
/// descending, ties by feature index.
pub fn pruning_sweep(
    policy: &MlpPolicy,
    m: &ExplicitMdp,
    obs: &ObservationTable,
    labeler: Option<&Labeler>,
    f: &PctlFormula,
) -> Result<Vec<PruneRow>> {
    if f.query != Query::Compute {
        return Err(Error::input("a pruning sweep needs a `=?` property"));
    }
    if obs.dim() != policy.input_dim() {
        return Err(Error::Dimension {
            expected: policy.input_dim(),
            found: obs.dim(),
        });
    }
    let evaluate = |p: &MlpPolicy| -> Result<f64> {
        let chain = induce(m, p, obs, labeler, &InduceOptions::default())?;
        Ok(check_dtmc(&chain.dtmc, f)?.value)
    };
    let base = evaluate(policy)?;
    let mut rows = (0..policy.input_dim())
        .into_par_iter()
        .map(|i| {
            let pruned = evaluate(&policy.prune_feature(i)?)?;
            Ok(PruneRow {
                feature: i,
                name: obs.feature_names[i].clone(),
                base_prob: base,
                pruned_prob: pruned,
                delta: base - pruned,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then(a.feature.cmp(&b.feature)));
    Ok(rows)
}

/// `feature,base_prob,pruned_prob,delta`
pub fn write_ranking_csv<W: Write>(w: W, rows: &[PruneRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["feature", "base_prob", "pruned_prob", "delta"])?;
    for r in rows {
        out.write_record([
            r.name.clone(),
            format!("{:.6}", r.base_prob),
            format!("{:.6}", r.pruned_prob),
            format!("{:.6}", r.delta),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<ranking>", e))?;
    Ok(())
}

/// Model a battery runs against.
#[derive(Debug, Clone, Copy)]
pub enum BatteryTarget<'a> {
    Mdp(&'a ExplicitMdp),
    Dtmc(&'a ExplicitDtmc),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryRow {
    pub id: String,
    pub property: String,
    pub probability: f64,
    pub verdict: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatteryReport {
    pub rows: Vec<BatteryRow>,
}

impl BatteryReport {
    /// True iff some threshold property does not hold.
    pub fn any_violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Some(false))
    }

    /// `id,property,probability,verdict`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["id", "property", "probability", "verdict"])?;
        for r in &self.rows {
            out.write_record([
                r.id.clone(),
                r.property.clone(),
                format!("{:.6}", r.probability),
                r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<battery>", e))?;
        Ok(())
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let id_w = self.rows.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
        let mut s = String::new();
        for r in &self.rows {
            let verdict = match r.verdict {
                Some(true) => "  holds",
                Some(false) => "  VIOLATED",
                None => "",
            };
            writeln!(s, "{:<id_w$}  {:.6}  {}{verdict}", r.id, r.probability, r.property).unwrap();
        }
        s
    }
}

/// Checks every property in order. All label references are resolved up
/// front; missing ones are reported together, per property.
pub fn run_property_battery(target: BatteryTarget<'_>, props: &[PropertyEntry]) -> Result<BatteryReport> {
    let labels = match target {
        BatteryTarget::Mdp(m) => m.labels(),
        BatteryTarget::Dtmc(d) => d.labels(),
    };
    let mut missing = Vec::new();
    for p in props {
        let unknown: Vec<String> = p
            .formula
            .labels()
            .into_iter()
            .filter(|l| !labels.contains_key(*l))
            .map(|l| format!("\"{l}\""))
            .collect();
        if !unknown.is_empty() {
            missing.push(format!("property {}: unknown label {}", p.id, unknown.join(", ")));
        }
    }
    if !missing.is_empty() {
        return Err(Error::input(missing.join("\n")));
    }
    let rows = props
        .iter()
        .map(|p| {
            let r = match target {
                BatteryTarget::Mdp(m) => check_mdp(m, &p.formula)?,
                BatteryTarget::Dtmc(d) => check_dtmc(d, &p.formula)?,
            };
            Ok(BatteryRow {
                id: p.id.clone(),
                property: p.text.clone(),
                probability: r.value,
                verdict: r.verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatteryReport { rows })
}
