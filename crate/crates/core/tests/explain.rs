//! Pruning sweeps, permutation importance and property batteries.

mod common;

use mdpcheck_core::explain::{pruning_sweep, run_property_battery, BatteryTarget};
use mdpcheck_core::induction::{induce, InduceOptions};
use mdpcheck_core::pctl::{check_dtmc, parse_property_file, PctlFormula};
use mdpcheck_core::policy::{permutation_importance, Activation, Layer, MlpPolicy};
use mdpcheck_core::ObservationTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prop(text: &str) -> PctlFormula {
    text.parse().unwrap()
}

/// Linear policy over `dim` features whose scores depend only on feature `j`:
/// action 1 iff `x_j > 0`.
fn single_feature_policy(dim: usize, j: usize) -> MlpPolicy {
    let mut weights = vec![0.0; 2 * dim];
    weights[dim + j] = 1.0;
    MlpPolicy::new(vec![Layer {
        inputs: dim,
        outputs: 2,
        weights,
        bias: vec![0.0, 0.0],
        activation: Activation::Identity,
    }])
    .unwrap()
}

#[test]
fn single_feature_policy_ranks_first_everywhere() {
    let (dim, j, rows) = (5, 3, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let names = (0..dim).map(|i| format!("x{i}")).collect();
    let table = (0..rows)
        .map(|s| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // Half the rows on each side of the decision boundary.
            v[j] = if s % 2 == 0 {
                0.5 + v[j].abs()
            } else {
                -0.5 - v[j].abs()
            };
            (s, v)
        })
        .collect();
    let obs = ObservationTable::new(names, table).unwrap();
    let p = single_feature_policy(dim, j);

    // Exhaustive enumeration of single-value replacements: only feature j can
    // change the action, and it does for half of the column in every state.
    for row in obs.rows.values() {
        let base = p.action_of(row).unwrap();
        for i in 0..dim {
            let flips = obs
                .column(i)
                .iter()
                .filter(|&&v| {
                    let mut x = row.clone();
                    x[i] = v;
                    p.action_of(&x).unwrap() != base
                })
                .count();
            if i == j {
                assert_eq!(flips, rows / 2);
            } else {
                assert_eq!(flips, 0);
            }
        }
    }

    let report = permutation_importance(&p, &obs, 64, 7).unwrap();
    for st in &report.states {
        assert_eq!(st.top_feature, j);
        for i in (0..dim).filter(|&i| i != j) {
            assert_eq!(st.scores[i], 0.0);
        }
    }
    assert_eq!(report.rank1_fractions()[j], 1.0);
}

#[test]
fn sweep_rows_cover_every_feature_with_one_base() {
    let mut checked = 0;
    for (k, m) in common::random_models(8, 30).iter().enumerate() {
        let n = m.n_states;
        let net = MlpPolicy::glorot(&[n, 6, m.actions.len()], &mut ChaCha8Rng::seed_from_u64(k as u64)).unwrap();
        let obs = ObservationTable::one_hot(n);
        let f = prop(r#"P=? [ F "goal" ]"#);
        // The network may choose actions a state does not enable.
        let Ok(rows) = pruning_sweep(&net, m, &obs, None, &f) else {
            continue;
        };
        checked += 1;
        assert_eq!(rows.len(), n);
        let chain = induce(m, &net, &obs, None, &InduceOptions::default()).unwrap();
        let base = check_dtmc(&chain.dtmc, &f).unwrap().value;
        for w in rows.windows(2) {
            assert!(w[0].delta.abs() >= w[1].delta.abs());
            if w[0].delta.abs() == w[1].delta.abs() {
                assert!(w[0].feature < w[1].feature);
            }
        }
        for r in &rows {
            assert_eq!(r.base_prob, base);
            assert_eq!(r.delta, r.base_prob - r.pruned_prob);
        }
    }
    assert!(checked >= 10, "only {checked} sweeps ran");
}

#[test]
fn pruning_a_zero_column_changes_nothing() {
    let m = &common::random_models(12, 1)[0];
    let n = m.n_states;
    let mut layers = MlpPolicy::glorot(&[n, 4, m.actions.len()], &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap()
        .layers()
        .to_vec();
    for r in 0..4 {
        layers[0].weights[r * n] = 0.0;
    }
    let net = MlpPolicy::new(layers).unwrap();
    assert_eq!(net.prune_feature(0).unwrap(), net);
}

#[test]
fn battery_preserves_order_and_is_stable() {
    let m = &common::random_models(3, 1)[0];
    let props = parse_property_file(
        "z: Pmin=? [ F \"goal\" ]\n# comment\na: Pmax=? [ \"safe\" U \"goal\" ]\nm: Pmax>=0 [ F \"goal\" ]\n",
    )
    .unwrap();
    let r = run_property_battery(BatteryTarget::Mdp(m), &props).unwrap();
    let ids: Vec<&str> = r.rows.iter().map(|x| x.id.as_str()).collect();
    assert_eq!(ids, ["z", "a", "m"]);
    assert!(!r.any_violated());
    let render = || {
        let mut buf = Vec::new();
        run_property_battery(BatteryTarget::Mdp(m), &props)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        buf
    };
    assert_eq!(render(), render());
}
