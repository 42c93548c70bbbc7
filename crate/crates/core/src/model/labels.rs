//! Feature-threshold state labeling.

use std::fmt;
use std::str::FromStr;

use super::{Labels, ObservationTable};
use crate::error::{Error, Location, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

impl FromStr for Comparator {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "<" => Comparator::Lt,
            "<=" | "≤" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" | "≥" => Comparator::Ge,
            "=" | "==" => Comparator::Eq,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Value(f64),
    /// Percentile in `[0, 100]` of the feature over all table rows.
    Percentile(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRule {
    pub label: String,
    pub feature: String,
    pub comparator: Comparator,
    pub threshold: Threshold,
}

impl fmt::Display for LabelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "label {} := {} {} ",
            self.label,
            self.feature,
            self.comparator.symbol()
        )?;
        match self.threshold {
            Threshold::Value(v) => write!(f, "{v}"),
            Threshold::Percentile(p) => write!(f, "p{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelRuleSet {
    pub rules: Vec<LabelRule>,
}

impl LabelRuleSet {
    /// Parses `label <name> := <feature> <op> <value|pNN>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let loc = Location {
                line: idx + 1,
                column: raw.len() - raw.trim_start().len() + 1,
            };
            rules.push(parse_rule(line, loc)?);
        }
        Ok(LabelRuleSet { rules })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text)?)
    }

    /// Resolves feature names and percentile thresholds against `obs`.
    pub fn resolve(&self, obs: &ObservationTable) -> Result<Labeler> {
        let mut resolved = Vec::with_capacity(self.rules.len());
        for rule in &self.rules {
            let feature = obs
                .feature_index(&rule.feature)
                .ok_or_else(|| Error::UnknownFeature(rule.feature.clone()))?;
            let threshold = match rule.threshold {
                Threshold::Value(v) => v,
                Threshold::Percentile(p) => {
                    if !(0.0..=100.0).contains(&p) {
                        return Err(Error::input(format!("percentile p{p} outside [0,100]")));
                    }
                    percentile(&obs.column(feature), p).ok_or_else(|| {
                        Error::input(format!(
                            "percentile of `{}` over an empty observation table",
                            rule.feature
                        ))
                    })?
                }
            };
            resolved.push(ResolvedRule {
                label: rule.label.clone(),
                feature,
                comparator: rule.comparator,
                threshold,
            });
        }
        Ok(Labeler { rules: resolved })
    }
}

fn parse_rule(line: &str, loc: Location) -> Result<LabelRule, ParseError> {
    let err = |msg: &str| ParseError::syntax(loc, format!("{msg} in `{line}`"));
    let rest = line
        .strip_prefix("label")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| err("expected `label`"))?;
    let (name, rhs) = rest.split_once(":=").ok_or_else(|| err("expected `:=`"))?;
    let name = name.trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(err("label name must be a single word"));
    }
    let tokens: Vec<&str> = rhs.split_whitespace().collect();
    let [feature, op, value] = tokens.as_slice() else {
        return Err(err("expected `<feature> <op> <value>`"));
    };
    let comparator = op.parse().map_err(|_| err("unknown comparator"))?;
    let threshold = if let Some(p) = value.strip_prefix('p') {
        let p: f64 = p.parse().map_err(|_| err("malformed percentile"))?;
        if !(0.0..=100.0).contains(&p) {
            return Err(err("percentile outside [0,100]"));
        }
        Threshold::Percentile(p)
    } else {
        Threshold::Value(value.parse().map_err(|_| err("malformed threshold"))?)
    };
    Ok(LabelRule {
        label: name.to_string(),
        feature: feature.to_string(),
        comparator,
        threshold,
    })
}

/// Linear interpolation between order statistics: rank `1 + (k-1)·p/100`.
pub(crate) fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (v.len() - 1) as f64 * p / 100.0;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - lo as f64;
    Some(v[lo] + frac * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, PartialEq)]
struct ResolvedRule {
    label: String,
    feature: usize,
    comparator: Comparator,
    threshold: f64,
}

/// Label rules with concrete thresholds, applicable to single observations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labeler {
    rules: Vec<ResolvedRule>,
}

impl Labeler {
    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.label.as_str())
    }

    /// Labels whose rule is satisfied by `observation`.
    pub fn labels_for<'a>(&'a self, observation: &'a [f64]) -> impl Iterator<Item = &'a str> + 'a {
        self.rules
            .iter()
            .filter(|r| r.comparator.holds(observation[r.feature], r.threshold))
            .map(|r| r.label.as_str())
    }

    pub fn thresholds(&self) -> impl Iterator<Item = (&str, f64)> {
        self.rules.iter().map(|r| (r.label.as_str(), r.threshold))
    }
}

/// Adds rule labels to every state with an observation row; existing labels are kept.
///
/// Rows for states `>= n_states` are ignored.
pub fn apply_label_rules(
    labels: &Labels,
    n_states: usize,
    obs: &ObservationTable,
    rules: &LabelRuleSet,
) -> Result<Labels> {
    let labeler = rules.resolve(obs)?;
    let mut out = labels.clone();
    for name in labeler.label_names() {
        out.entry(name.to_string()).or_default();
    }
    for (&state, row) in obs.rows.range(..n_states) {
        for name in labeler.labels_for(row) {
            out.get_mut(name).expect("label inserted above").insert(state);
        }
    }
    Ok(out)
}
