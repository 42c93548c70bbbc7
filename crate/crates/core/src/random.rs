//! Seed derivation and seeded random model generation for tests and benches.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::model::{Choice, ExplicitMdp, Labels};

/// Mixes a master seed with stream coordinates (splitmix64 finalizer), so
/// independent streams never depend on scheduling order.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomMdpShape {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_successors: usize,
}

impl Default for RandomMdpShape {
    fn default() -> Self {
        RandomMdpShape {
            max_states: 6,
            max_actions: 3,
            max_successors: 3,
        }
    }
}

/// Random MDP with labels `goal` (one state), `safe` (a random subset) and
/// `init`. About one choice in six is a pure self-loop, so end components are
/// common.
pub fn random_mdp<R: Rng>(rng: &mut R, shape: RandomMdpShape) -> ExplicitMdp {
    let n = rng.gen_range(2..=shape.max_states.max(2));
    let n_actions = rng.gen_range(1..=shape.max_actions.max(1));
    let choices = (0..n)
        .map(|s| {
            let k = rng.gen_range(1..=n_actions);
            let mut acts: Vec<usize> = sample(rng, n_actions, k).into_vec();
            acts.sort_unstable();
            acts.into_iter()
                .map(|action| Choice {
                    action,
                    successors: random_distribution(rng, s, n, shape.max_successors),
                })
                .collect()
        })
        .collect();
    let goal = rng.gen_range(0..n);
    let safe: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
    let mut labels = Labels::new();
    labels.insert("goal".into(), [goal].into());
    labels.insert("safe".into(), safe);
    labels.insert("init".into(), [0].into());
    ExplicitMdp {
        n_states: n,
        initial_state: 0,
        actions: (0..n_actions).map(|a| format!("a{a}")).collect(),
        choices,
        labels,
        terminal_reward: Default::default(),
    }
}

fn random_distribution<R: Rng>(rng: &mut R, s: usize, n: usize, max_succ: usize) -> Vec<(usize, f64)> {
    if rng.gen_ratio(1, 6) {
        return vec![(s, 1.0)];
    }
    let m = rng.gen_range(1..=max_succ.max(1).min(n));
    let mut targets: Vec<usize> = sample(rng, n, m).into_vec();
    targets.sort_unstable();
    let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut out: Vec<(usize, f64)> = targets.into_iter().zip(weights.iter().map(|w| w / total)).collect();
    // Put the rounding slack on the last entry so the row sums to 1.
    let head: f64 = out[..m - 1].iter().map(|e| e.1).sum();
    out[m - 1].1 = 1.0 - head;
    out
}
