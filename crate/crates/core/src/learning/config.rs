use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the shield replaces an inadmissible action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    /// Uniformly random admissible action from a seeded stream.
    Random,
    LowestId,
}

impl FromStr for Correction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Correction::Random),
            "lowest-id" | "lowest_id" => Ok(Correction::LowestId),
            other => Err(Error::input(format!(
                "unknown correction rule `{other}` (expected `random` or `lowest-id`)"
            ))),
        }
    }
}

impl Correction {
    pub fn name(self) -> &'static str {
        match self {
            Correction::Random => "random",
            Correction::LowestId => "lowest-id",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub bc_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Total fine-tuning episode budget.
    pub finetune_episodes: usize,
    /// Episodes simulated between retraining steps.
    pub episodes_per_round: usize,
    /// Training epochs over the aggregate per retraining step.
    pub finetune_epochs: usize,
    pub eval_episodes: usize,
    pub step_cap: usize,
    pub correction: Correction,
    /// Recorded for provenance; results do not depend on it.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            bc_epochs: 65,
            learning_rate: 3e-4,
            batch_size: 32,
            seed: 0,
            hidden: vec![64, 64],
            finetune_episodes: 2_000,
            episodes_per_round: 100,
            finetune_epochs: 20,
            eval_episodes: 200,
            step_cap: 500,
            correction: Correction::Random,
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// Network size and episode budget of the full-size clinical experiment.
    pub fn full_scale() -> Self {
        TrainConfig {
            hidden: vec![512; 4],
            finetune_episodes: 25_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bc_epochs", self.bc_epochs),
            ("batch_size", self.batch_size),
            ("episodes_per_round", self.episodes_per_round),
            ("finetune_epochs", self.finetune_epochs),
            ("eval_episodes", self.eval_episodes),
            ("step_cap", self.step_cap),
            ("workers", self.workers),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::input(format!("`{k}` must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::input("`learning_rate` must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::input("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// Applies `key = value` lines (`#` comments) on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::input(format!("config line {}: {e}", i + 1)))?;
        }
        self.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one field by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::input(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "bc_epochs" => self.bc_epochs = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "hidden" => {
                self.hidden = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|h| num(key, h.trim())).collect::<Result<_>>()?
                }
            }
            "finetune_episodes" => self.finetune_episodes = num(key, value)?,
            "episodes_per_round" => self.episodes_per_round = num(key, value)?,
            "finetune_epochs" => self.finetune_epochs = num(key, value)?,
            "eval_episodes" => self.eval_episodes = num(key, value)?,
            "step_cap" => self.step_cap = num(key, value)?,
            "correction" => self.correction = value.parse()?,
            "workers" => self.workers = num(key, value)?,
            "scale" => match value {
                "full" => {
                    let p = Self::full_scale();
                    self.hidden = p.hidden;
                    self.finetune_episodes = p.finetune_episodes;
                }
                "desk" => {
                    let d = Self::default();
                    self.hidden = d.hidden;
                    self.finetune_episodes = d.finetune_episodes;
                }
                other => return Err(Error::input(format!("unknown scale `{other}`"))),
            },
            other => return Err(Error::input(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical `key = value` text; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        for (k, v) in [
            ("bc_epochs", self.bc_epochs.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("hidden", hidden.join(",")),
            ("finetune_episodes", self.finetune_episodes.to_string()),
            ("episodes_per_round", self.episodes_per_round.to_string()),
            ("finetune_epochs", self.finetune_epochs.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("step_cap", self.step_cap.to_string()),
            ("correction", self.correction.name().to_string()),
            ("workers", self.workers.to_string()),
        ] {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = TrainConfig::default();
        assert_eq!(TrainConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.hidden, vec![64, 64]);
        assert_eq!(c.learning_rate, 3e-4);
    }

    #[test]
    fn overrides_and_errors() {
        let c = TrainConfig::parse("# comment\nhidden = 8, 4\nseed=9\ncorrection = lowest-id\n").unwrap();
        assert_eq!(c.hidden, vec![8, 4]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.correction, Correction::LowestId);
        assert_eq!(TrainConfig::parse("scale = full").unwrap().hidden, vec![512; 4]);
        assert!(TrainConfig::parse("bogus = 1").is_err());
        assert!(TrainConfig::parse("step_cap = 0").is_err());
        assert!(TrainConfig::parse("learning_rate = -1").is_err());
        let e = TrainConfig::parse("\nbatch_size").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }
}
