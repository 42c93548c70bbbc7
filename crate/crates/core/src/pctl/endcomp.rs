//! End-component elimination for maximizing action sets.

use crate::model::{ExplicitMdp, StateId};

/// Removes, from `allowed[s][c]`, choices that let a scheduler circulate
/// forever among `eligible` states.
///
/// Repeatedly computes the maximal end components of the sub-MDP formed by
/// the allowed choices on eligible states; in every component, states that
/// have an allowed choice leaving it lose their internal choices. A
/// component with no exit at all is left untouched (it cannot occur when the
/// allowed sets contain an optimal choice and the states have positive
/// value). Every state keeps at least one allowed choice.
pub(crate) fn break_end_components(m: &ExplicitMdp, eligible: &[bool], allowed: &mut [Vec<bool>]) {
    loop {
        let internal = maximal_end_components(m, eligible, allowed);
        let mut changed = false;
        for comp in &internal {
            for &(s, ref inside) in comp {
                let has_exit = (0..allowed[s].len()).any(|c| allowed[s][c] && !inside[c]);
                if has_exit {
                    for c in 0..allowed[s].len() {
                        if inside[c] && allowed[s][c] {
                            allowed[s][c] = false;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Per component: member states with a mask of their internal choices.
fn maximal_end_components(m: &ExplicitMdp, eligible: &[bool], allowed: &[Vec<bool>]) -> Vec<Vec<(StateId, Vec<bool>)>> {
    let n = m.n_states;
    let mut alive: Vec<bool> = (0..n).map(|s| eligible[s] && allowed[s].iter().any(|&a| a)).collect();
    let mut usable: Vec<Vec<bool>> = (0..n)
        .map(|s| allowed[s].iter().map(|&a| a && alive[s]).collect())
        .collect();
    let mut comp;
    loop {
        // Choices must stay among alive states.
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (c, ch) in m.choices[s].iter().enumerate() {
                if usable[s][c] && ch.successors.iter().any(|&(t, p)| p > 0.0 && !alive[t]) {
                    usable[s][c] = false;
                }
            }
        }
        comp = scc(n, &alive, |s, out| {
            for (c, ch) in m.choices[s].iter().enumerate() {
                if usable[s][c] {
                    out.extend(ch.successors.iter().filter(|e| e.1 > 0.0).map(|e| e.0));
                }
            }
        });
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (c, ch) in m.choices[s].iter().enumerate() {
                if usable[s][c] && ch.successors.iter().any(|&(t, p)| p > 0.0 && comp[t] != comp[s]) {
                    usable[s][c] = false;
                    changed = true;
                }
            }
            if !usable[s].iter().any(|&u| u) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(StateId, Vec<bool>)>> = Default::default();
    for s in 0..n {
        if alive[s] {
            groups.entry(comp[s]).or_default().push((s, usable[s].clone()));
        }
    }
    groups.into_values().collect()
}

/// Iterative Tarjan over the `alive` states; returns a component id per
/// state (`usize::MAX` for dead states).
fn scc(n: usize, alive: &[bool], succ: impl Fn(StateId, &mut Vec<StateId>)) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    let adj: Vec<Vec<StateId>> = (0..n)
        .map(|s| {
            let mut v = Vec::new();
            if alive[s] {
                succ(s, &mut v);
                v.retain(|&t| alive[t]);
            }
            v
        })
        .collect();
    for root in 0..n {
        if !alive[root] || index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(StateId, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}
