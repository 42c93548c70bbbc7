//! Reference implementations used as test oracles. They share no code with
//! the checker: schedulers are enumerated exhaustively and each induced chain
//! is solved with a dense Gauss-Jordan elimination written here.

#![allow(dead_code)]

use mdpcheck_core::{ExplicitDtmc, ExplicitMdp, StateId};

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-14, "oracle system is singular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for i in 0..n {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    b
}

/// Probability of `stay U goal` from every state of a chain.
pub fn chain_until(rows: &[Vec<(StateId, f64)>], stay: &[bool], goal: &[bool]) -> Vec<f64> {
    let n = rows.len();
    // States that reach `goal` along positive edges through `stay` states.
    let mut can = goal.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && stay[s] && rows[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<StateId> = (0..n).filter(|&s| can[s] && !goal[s]).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    let k = unknown.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += 1.0;
        for &(t, p) in &rows[s] {
            if goal[t] {
                b[i] += p;
            } else if can[t] {
                a[i][index[t]] -= p;
            }
        }
    }
    let x = if k == 0 { Vec::new() } else { gauss_jordan(a, b) };
    (0..n)
        .map(|s| {
            if goal[s] {
                1.0
            } else if can[s] {
                x[index[s]]
            } else {
                0.0
            }
        })
        .collect()
}

/// Transition rows of the chain obtained by fixing choice index `pick[s]`.
pub fn induced_rows(m: &ExplicitMdp, pick: &[usize]) -> Vec<Vec<(StateId, f64)>> {
    (0..m.n_states)
        .map(|s| m.choices[s][pick[s]].successors.clone())
        .collect()
}

/// Every deterministic memoryless scheduler, as choice indices per state.
pub fn all_schedulers(m: &ExplicitMdp) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for s in 0..m.n_states {
        let k = m.choices[s].len();
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// Per-state max and min of `stay U goal` over all deterministic schedulers.
pub fn brute_force_until(m: &ExplicitMdp, stay: &[bool], goal: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut max = vec![f64::NEG_INFINITY; m.n_states];
    let mut min = vec![f64::INFINITY; m.n_states];
    for pick in all_schedulers(m) {
        let v = chain_until(&induced_rows(m, &pick), stay, goal);
        for s in 0..m.n_states {
            max[s] = max[s].max(v[s]);
            min[s] = min[s].min(v[s]);
        }
    }
    (max, min)
}

pub fn mask(m_labels: &mdpcheck_core::Labels, name: &str, n: usize) -> Vec<bool> {
    let set = m_labels.get(name).cloned().unwrap_or_default();
    (0..n).map(|s| set.contains(&s)).collect()
}

pub fn dtmc_until(d: &ExplicitDtmc, stay: &str, goal: &str) -> Vec<f64> {
    let n = d.n_states;
    let stay = if stay == "true" {
        vec![true; n]
    } else {
        mask(&d.labels, stay, n)
    };
    chain_until(&d.transitions, &stay, &mask(&d.labels, goal, n))
}

/// The seeded random MDPs shared by the equivalence tests.
pub fn random_models(seed: u64, count: usize) -> Vec<ExplicitMdp> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| mdpcheck_core::random::random_mdp(&mut rng, Default::default()))
        .collect()
}
