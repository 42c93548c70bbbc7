//! Deterministic model generators for the benchmarks.

use mdpcheck_core::{Choice, ExplicitMdp, Labels};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse random MDP with `n` transient states, `k` actions each and
/// `successors` targets per choice. State `n` is the absorbing goal and
/// `n + 1` the absorbing sink; every choice leaks a little into both.
pub fn sparse_mdp(n: usize, k: usize, successors: usize, seed: u64) -> ExplicitMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices = Vec::with_capacity(n + 2);
    for _ in 0..n {
        choices.push(
            (0..k)
                .map(|action| {
                    let mut targets: Vec<(usize, f64)> = (0..successors)
                        .map(|_| (rng.gen_range(0..n), rng.gen_range(0.1..1.0)))
                        .collect();
                    targets.push((n, rng.gen_range(0.0..0.1)));
                    targets.push((n + 1, rng.gen_range(0.0..0.1)));
                    targets.sort_by_key(|t| t.0);
                    targets.dedup_by(|b, a| {
                        let same = a.0 == b.0;
                        if same {
                            a.1 += b.1;
                        }
                        same
                    });
                    let total: f64 = targets.iter().map(|t| t.1).sum();
                    targets.iter_mut().for_each(|t| t.1 /= total);
                    Choice {
                        action,
                        successors: targets,
                    }
                })
                .collect(),
        );
    }
    for s in [n, n + 1] {
        choices.push(vec![Choice {
            action: 0,
            successors: vec![(s, 1.0)],
        }]);
    }
    let mut labels = Labels::new();
    labels.insert("goal".into(), [n].into());
    ExplicitMdp {
        n_states: n + 2,
        initial_state: 0,
        actions: (0..k).map(|a| format!("a{a}")).collect(),
        choices,
        labels,
        terminal_reward: Default::default(),
    }
}
