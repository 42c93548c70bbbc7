use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::induction::{induce, InduceOptions};
use crate::model::{ExplicitMdp, ObservationTable, StateId};
use crate::policy::MlpPolicy;
use crate::random::derive_seed;

use super::config::TrainConfig;
use super::shield::Shield;
use super::train::{accuracy, train_epochs, Adam, Demo, EpochLog};

/// Stream tags keeping training, evaluation and coverage randomness apart.
const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;
const COVER_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneReport {
    /// One entry per retraining round; entry 0 evaluates the input policy.
    pub log: Vec<EpochLog>,
    pub episodes: usize,
    /// Episodes that hit the step cap; excluded from aggregation.
    pub censored: usize,
    /// Corrections added for reachable states that sampling missed.
    pub coverage_corrections: usize,
    pub final_intervention_rate: f64,
    /// Whether the returned policy picks an admissible action in every
    /// decision state of its own induced chain.
    pub compliant: bool,
}

struct Episode {
    pairs: Vec<Demo>,
    decisions: usize,
    interventions: usize,
    censored: bool,
}

fn run_episode(
    net: &MlpPolicy,
    m: &ExplicitMdp,
    obs: &ObservationTable,
    shield: &Shield,
    step_cap: usize,
    seed: u64,
) -> Result<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = m.initial_state;
    let mut ep = Episode {
        pairs: Vec::new(),
        decisions: 0,
        interventions: 0,
        censored: true,
    };
    for _ in 0..step_cap {
        let choices = &m.choices[s];
        let action = if let [only] = choices.as_slice() {
            only.action
        } else {
            let o = obs.observe(s);
            let proposed = net.action_of(&o)?;
            let (a, intervened) = shield.correct(s, proposed, &mut rng);
            if !shield.is_admissible(s, a) {
                return Err(Error::Internal(format!(
                    "shield executed inadmissible action {a} at state {s}"
                )));
            }
            ep.decisions += 1;
            ep.interventions += usize::from(intervened);
            ep.pairs.push(Demo {
                observation: o.into_owned(),
                action: a,
            });
            a
        };
        let succ = &m
            .choice(s, action)
            .ok_or(Error::ActionNotEnabled { state: s, action })?
            .successors;
        if succ.iter().all(|&(t, p)| t == s || p == 0.0) {
            ep.censored = false;
            break;
        }
        s = sample(succ, &mut rng);
    }
    Ok(ep)
}

fn sample<R: Rng>(succ: &[(StateId, f64)], rng: &mut R) -> StateId {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(t, p) in succ {
        acc += p;
        if u < acc {
            return t;
        }
    }
    succ.iter().rev().find(|e| e.1 > 0.0).map_or(succ[0].0, |e| e.0)
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    net: &MlpPolicy,
    m: &ExplicitMdp,
    obs: &ObservationTable,
    shield: &Shield,
    cfg: &TrainConfig,
    stream: u64,
    round: u64,
    count: usize,
) -> Result<Vec<Episode>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed ^ shield.seed.rotate_left(32), stream << 32 | round, i as u64);
            run_episode(net, m, obs, shield, cfg.step_cap, seed)
        })
        .collect()
}

fn intervention_rate(eps: &[Episode]) -> f64 {
    let decisions: usize = eps.iter().map(|e| e.decisions).sum();
    let interventions: usize = eps.iter().map(|e| e.interventions).sum();
    if decisions == 0 {
        0.0
    } else {
        interventions as f64 / decisions as f64
    }
}

/// Decision states of the policy's own induced chain where the shield would
/// intervene, with the corrected action.
fn uncovered(
    net: &MlpPolicy,
    m: &ExplicitMdp,
    obs: &ObservationTable,
    shield: &Shield,
    round: u64,
) -> Result<Vec<Demo>> {
    let chain = induce(m, net, obs, None, &InduceOptions::default())?;
    let mut out = Vec::new();
    for (&s, &a) in chain.original_ids.iter().zip(&chain.chosen_actions) {
        if m.choices[s].len() > 1 && !shield.is_admissible(s, a) {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(shield.seed, COVER_STREAM << 32 | round, s as u64));
            out.push(Demo {
                observation: obs.observe(s).into_owned(),
                action: shield.correct(s, a, &mut rng).0,
            });
        }
    }
    Ok(out)
}

/// Shield-corrected action aggregation: simulate shielded episodes, add the
/// executed (observation, action) pairs to an aggregate and retrain the
/// network on it (warm start), round after round.
///
/// Each round also adds corrections for decision states that the current
/// policy reaches with positive probability but the sampled episodes missed.
/// Training stops early once the fixed-seed evaluation sees no
/// interventions and the policy is compliant on its whole induced chain.
pub fn shielded_finetune(
    policy: &MlpPolicy,
    m: &ExplicitMdp,
    obs: &ObservationTable,
    shield: &Shield,
    cfg: &TrainConfig,
) -> Result<(MlpPolicy, FinetuneReport)> {
    cfg.validate()?;
    if shield.admissible.len() != m.n_states {
        return Err(Error::input(format!(
            "shield covers {} states, model has {}",
            shield.admissible.len(),
            m.n_states
        )));
    }
    if obs.dim() != policy.input_dim() {
        return Err(Error::Dimension {
            expected: policy.input_dim(),
            found: obs.dim(),
        });
    }
    let mut net = policy.clone();
    let mut opt = Adam::new(&net, cfg.learning_rate);
    let mut aggregate: Vec<Demo> = Vec::new();
    let mut report = FinetuneReport {
        log: Vec::new(),
        episodes: 0,
        censored: 0,
        coverage_corrections: 0,
        final_intervention_rate: 0.0,
        compliant: false,
    };

    let evaluate = |net: &MlpPolicy| -> Result<(f64, Vec<Demo>)> {
        let eval = run_batch(net, m, obs, shield, cfg, EVAL_STREAM, 0, cfg.eval_episodes)?;
        Ok((intervention_rate(&eval), uncovered(net, m, obs, shield, 0)?))
    };
    let (mut rate, mut missing) = evaluate(&net)?;
    report.log.push(EpochLog {
        epoch: 0,
        loss: 0.0,
        accuracy: 1.0,
        intervention_rate: Some(rate),
    });
    let rounds = cfg.finetune_episodes.div_ceil(cfg.episodes_per_round);
    let mut round = 0;
    while round < rounds && !(rate == 0.0 && missing.is_empty()) {
        round += 1;
        let count = cfg
            .episodes_per_round
            .min(cfg.finetune_episodes - (round - 1) * cfg.episodes_per_round);
        let episodes = run_batch(&net, m, obs, shield, cfg, TRAIN_STREAM, round as u64, count)?;
        report.episodes += episodes.len();
        for ep in episodes {
            if ep.censored {
                report.censored += 1;
            } else {
                aggregate.extend(ep.pairs);
            }
        }
        let extra = uncovered(&net, m, obs, shield, round as u64)?;
        report.coverage_corrections += extra.len();
        aggregate.extend(extra);
        if aggregate.is_empty() {
            continue;
        }
        let logs = train_epochs(
            &mut net,
            &mut opt,
            &aggregate,
            cfg.finetune_epochs,
            cfg,
            round as u64,
            round,
        )?;
        (rate, missing) = evaluate(&net)?;
        let last = logs.last().unwrap();
        report.log.push(EpochLog {
            epoch: round,
            loss: last.loss,
            accuracy: accuracy(&net, &aggregate)?,
            intervention_rate: Some(rate),
        });
    }
    report.final_intervention_rate = rate;
    report.compliant = missing.is_empty();
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{build_shield, clone_behavior, Correction};
    use crate::model::tests::listing_one;
    use crate::pctl::{check_dtmc, parse_property};

    fn listing_obs() -> ObservationTable {
        ObservationTable::one_hot(4)
    }

    fn fast_cfg() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.02,
            hidden: vec![8],
            finetune_episodes: 100,
            episodes_per_round: 20,
            finetune_epochs: 30,
            eval_episodes: 50,
            ..Default::default()
        }
    }

    #[test]
    fn random_policy_is_repaired() {
        let m = listing_one();
        let f = parse_property(r#"Pmax=? [ F "survival" ]"#).unwrap();
        let shield = build_shield(&m, &f, 1e-6, Correction::Random, 5).unwrap();
        // A net that prefers a1 everywhere.
        let mut layers = MlpPolicy::glorot(&[4, 8, 3], &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap()
            .layers()
            .to_vec();
        layers[1].bias = vec![0.0, 5.0, 0.0];
        let bad = MlpPolicy::new(layers).unwrap();
        assert_eq!(bad.action_of(&listing_obs().observe(0)).unwrap(), 1);
        let (net, report) = shielded_finetune(&bad, &m, &listing_obs(), &shield, &fast_cfg()).unwrap();
        assert!(report.log[0].intervention_rate.unwrap() > 0.0);
        assert_eq!(report.final_intervention_rate, 0.0);
        assert!(report.compliant);
        assert_eq!(net.action_of(&listing_obs().observe(0)).unwrap(), 0);
        let chain = induce(&m, &net, &listing_obs(), None, &Default::default()).unwrap();
        let v = check_dtmc(&chain.dtmc, &parse_property(r#"P=? [ F "survival" ]"#).unwrap()).unwrap();
        assert!((v.value - 0.86).abs() < 1e-9);
    }

    #[test]
    fn compliant_policy_is_a_fixed_point() {
        let m = listing_one();
        let f = parse_property(r#"Pmax=? [ F "survival" ]"#).unwrap();
        let shield = build_shield(&m, &f, 1e-6, Correction::Random, 0).unwrap();
        let demos: Vec<Demo> = (0..2)
            .map(|s| Demo {
                observation: listing_obs().observe(s).into_owned(),
                action: 0,
            })
            .collect();
        let (net, _) = clone_behavior(
            &demos,
            3,
            &TrainConfig {
                bc_epochs: 100,
                ..fast_cfg()
            },
        )
        .unwrap();
        let (tuned, report) = shielded_finetune(&net, &m, &listing_obs(), &shield, &fast_cfg()).unwrap();
        assert_eq!(report.log.len(), 1);
        assert_eq!(report.episodes, 0);
        assert_eq!(tuned, net);
    }

    #[test]
    fn reproducible() {
        let m = listing_one();
        let f = parse_property(r#"Pmax=? [ F "survival" ]"#).unwrap();
        let shield = build_shield(&m, &f, 1e-6, Correction::Random, 1).unwrap();
        let start = MlpPolicy::glorot(&[4, 8, 3], &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let a = shielded_finetune(&start, &m, &listing_obs(), &shield, &fast_cfg()).unwrap();
        let b = shielded_finetune(&start, &m, &listing_obs(), &shield, &fast_cfg()).unwrap();
        assert_eq!(a.0.to_text(), b.0.to_text());
        assert_eq!(a.1, b.1);
    }
}
