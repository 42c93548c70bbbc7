use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ActionId, Choice, ExplicitDtmc, ExplicitMdp, StateId};

use super::endcomp::break_end_components;
use super::formula::{Direction, PctlFormula};
use super::linear::ReachSystem;
use super::qualitative::{prob01, ChoiceGraph, Prob01};

/// Tolerance used when matching one-step backups against state values.
pub const SCHEDULER_TOLERANCE: f64 = 1e-9;

/// Default epsilon for [`optimal_action_sets`].
pub const DEFAULT_OPTIMALITY_EPSILON: f64 = 1e-6;

/// Policy-improvement rounds allowed after value iteration.
const MAX_POLISH_ROUNDS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the sup-norm between sweeps.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest number of unknown states solved by direct elimination (cubic
    /// cost); larger systems use iteration only.
    pub exact_limit: usize,
    /// Refine value-iteration results with exact policy evaluation.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-9,
            max_iterations: 1_000_000,
            exact_limit: 2_000,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Every state was decided by graph analysis.
    Qualitative,
    Elimination,
    GaussSeidel,
    ValueIteration,
    /// Value iteration followed by exact evaluation of the extracted scheduler.
    ValueIterationPolished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub method: SolveMethod,
    pub iterations: usize,
    /// Last sup-norm update (iterative methods) or equation residual.
    pub residual: f64,
    pub polish_rounds: usize,
    pub n_yes: usize,
    pub n_no: usize,
    pub n_unknown: usize,
}

/// Memoryless deterministic scheduler: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduler {
    pub actions: Vec<ActionId>,
}

impl Scheduler {
    pub fn action(&self, s: StateId) -> ActionId {
        self.actions[s]
    }

    /// `state,action_id,action_name`
    pub fn write_csv<W: Write>(&self, w: W, mdp: &ExplicitMdp) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "action_id", "action_name"])?;
        for (s, &a) in self.actions.iter().enumerate() {
            out.write_record([s.to_string(), a.to_string(), mdp.actions[a].clone()])?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<scheduler>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// The chain obtained by fixing this scheduler's choices.
    pub fn induced_dtmc(&self, mdp: &ExplicitMdp) -> Result<ExplicitDtmc> {
        let transitions = (0..mdp.n_states)
            .map(|s| {
                mdp.choice(s, self.actions[s])
                    .map(|c| c.successors.clone())
                    .ok_or(Error::ActionNotEnabled {
                        state: s,
                        action: self.actions[s],
                    })
            })
            .collect::<Result<_>>()?;
        Ok(ExplicitDtmc {
            n_states: mdp.n_states,
            initial_state: mdp.initial_state,
            transitions,
            labels: mdp.labels.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub formula: PctlFormula,
    /// Probability at the initial state.
    pub value: f64,
    /// Probability per state.
    pub values: Vec<f64>,
    pub verdict: Option<bool>,
    pub qualitative: Prob01,
    pub stats: SolverStats,
    /// Optimal scheduler (MDPs only).
    pub scheduler: Option<Scheduler>,
}

impl CheckResult {
    /// `state,value`
    pub fn write_values_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "value"])?;
        for (s, v) in self.values.iter().enumerate() {
            out.write_record([s.to_string(), format!("{v:.12}")])?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<values>".into(),
            source: e,
        })?;
        Ok(())
    }
}

struct Sets {
    phi1: Vec<bool>,
    phi2: Vec<bool>,
}

fn state_sets<M: crate::model::LabelledModel>(m: &M, f: &PctlFormula) -> Result<Sets> {
    let (stay, goal) = f.path.as_until();
    Ok(Sets {
        phi1: stay.satisfying(m)?,
        phi2: goal.satisfying(m)?,
    })
}

fn mdp_direction(f: &PctlFormula) -> Result<Direction> {
    f.direction
        .ok_or_else(|| Error::input("properties of an MDP must use Pmax or Pmin to resolve nondeterminism"))
}

fn backup(c: &Choice, x: &[f64]) -> f64 {
    c.successors.iter().map(|&(t, p)| p * x[t]).sum()
}

fn better(dir: Direction, a: f64, b: f64) -> bool {
    match dir {
        Direction::Max => a > b,
        Direction::Min => a < b,
    }
}

fn best_backup(dir: Direction, cs: &[Choice], x: &[f64]) -> f64 {
    let it = cs.iter().map(|c| backup(c, x));
    match dir {
        Direction::Max => it.fold(f64::NEG_INFINITY, f64::max),
        Direction::Min => it.fold(f64::INFINITY, f64::min),
    }
}

fn within(dir: Direction, candidate: f64, value: f64, eps: f64) -> bool {
    match dir {
        Direction::Max => candidate >= value - eps,
        Direction::Min => candidate <= value + eps,
    }
}

fn clamp_probabilities(values: &mut [f64]) -> Result<()> {
    for (s, v) in values.iter_mut().enumerate() {
        if !(-1e-6..=1.0 + 1e-6).contains(v) || v.is_nan() {
            return Err(Error::Internal(format!(
                "solver produced probability {v} for state {s}"
            )));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Checks a property on a chain. `Pmax`/`Pmin` coincide with `P` here.
pub fn check_dtmc(d: &ExplicitDtmc, f: &PctlFormula) -> Result<CheckResult> {
    check_dtmc_with(d, f, &SolverOptions::default())
}

pub fn check_dtmc_with(d: &ExplicitDtmc, f: &PctlFormula, opts: &SolverOptions) -> Result<CheckResult> {
    check_initial(d.n_states, d.initial_state)?;
    let sets = state_sets(d, f)?;
    let g = ChoiceGraph::from_dtmc(d);
    let q = prob01(&g, &sets.phi1, &sets.phi2, None);
    let (index, unknown) = unknown_index(&q);
    let mut values: Vec<f64> = q.yes.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let system = reach_system(&unknown, &index, &q, |s| d.transitions[s].as_slice());
    let (method, iterations, residual) = if unknown.is_empty() {
        (SolveMethod::Qualitative, 0, 0.0)
    } else if unknown.len() <= opts.exact_limit {
        let x = system
            .solve_dense()
            .ok_or_else(|| Error::Internal("singular reachability system".into()))?;
        let r = system.residual(&x);
        scatter(&mut values, &unknown, &x);
        (SolveMethod::Elimination, 0, r)
    } else {
        let (x, it, r) = system.solve_iterative(opts.tolerance, opts.max_iterations)?;
        scatter(&mut values, &unknown, &x);
        (SolveMethod::GaussSeidel, it, r)
    };
    clamp_probabilities(&mut values)?;
    let value = values[d.initial_state];
    Ok(CheckResult {
        formula: f.clone(),
        value,
        verdict: f.verdict(value),
        stats: SolverStats {
            method,
            iterations,
            residual,
            polish_rounds: 0,
            n_yes: q.yes.iter().filter(|&&b| b).count(),
            n_no: q.no.iter().filter(|&&b| b).count(),
            n_unknown: unknown.len(),
        },
        qualitative: q,
        values,
        scheduler: None,
    })
}

fn check_initial(n: usize, init: StateId) -> Result<()> {
    if init >= n {
        return Err(Error::input(format!("initial state {init} out of range")));
    }
    Ok(())
}

fn unknown_index(q: &Prob01) -> (Vec<usize>, Vec<StateId>) {
    let mut index = vec![usize::MAX; q.yes.len()];
    let mut unknown = Vec::new();
    for (s, slot) in index.iter_mut().enumerate() {
        if q.is_unknown(s) {
            *slot = unknown.len();
            unknown.push(s);
        }
    }
    (index, unknown)
}

fn reach_system<'a>(
    unknown: &[StateId],
    index: &[usize],
    q: &Prob01,
    row: impl Fn(StateId) -> &'a [(StateId, f64)],
) -> ReachSystem {
    let mut sys = ReachSystem::default();
    for &s in unknown {
        let mut r = Vec::new();
        let mut b = 0.0;
        for &(t, p) in row(s) {
            if q.yes[t] {
                b += p;
            } else if index[t] != usize::MAX {
                r.push((index[t], p));
            }
        }
        sys.rows.push(r);
        sys.rhs.push(b);
    }
    sys
}

fn scatter(values: &mut [f64], unknown: &[StateId], x: &[f64]) {
    for (&s, &v) in unknown.iter().zip(x) {
        values[s] = v;
    }
}

/// Checks `Pmax`/`Pmin` properties on an MDP and synthesizes an optimal
/// memoryless scheduler.
pub fn check_mdp(m: &ExplicitMdp, f: &PctlFormula) -> Result<CheckResult> {
    check_mdp_with(m, f, &SolverOptions::default())
}

pub fn check_mdp_with(m: &ExplicitMdp, f: &PctlFormula, opts: &SolverOptions) -> Result<CheckResult> {
    check_initial(m.n_states, m.initial_state)?;
    let dir = mdp_direction(f)?;
    let sets = state_sets(m, f)?;
    let g = ChoiceGraph::from_mdp(m);
    let q = prob01(&g, &sets.phi1, &sets.phi2, Some(dir));
    let (index, unknown) = unknown_index(&q);
    let mut values: Vec<f64> = q.yes.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();

    let mut stats = SolverStats {
        method: SolveMethod::Qualitative,
        iterations: 0,
        residual: 0.0,
        polish_rounds: 0,
        n_yes: q.yes.iter().filter(|&&b| b).count(),
        n_no: q.no.iter().filter(|&&b| b).count(),
        n_unknown: unknown.len(),
    };
    if !unknown.is_empty() {
        let (it, res) = value_iteration(m, dir, &unknown, &mut values, opts)?;
        stats.method = SolveMethod::ValueIteration;
        stats.iterations = it;
        stats.residual = res;
        if opts.polish && unknown.len() <= opts.exact_limit {
            if let Some(rounds) = polish(m, dir, &sets, &q, &g, &unknown, &index, &mut values) {
                stats.method = SolveMethod::ValueIterationPolished;
                stats.polish_rounds = rounds;
            }
        }
    }
    clamp_probabilities(&mut values)?;
    let value = values[m.initial_state];
    let mut result = CheckResult {
        formula: f.clone(),
        value,
        verdict: f.verdict(value),
        qualitative: q,
        values,
        stats,
        scheduler: None,
    };
    result.scheduler = Some(extract_scheduler(m, f, &result)?);
    Ok(result)
}

/// Jacobi value iteration from 0 on the unknown states.
fn value_iteration(
    m: &ExplicitMdp,
    dir: Direction,
    unknown: &[StateId],
    values: &mut [f64],
    opts: &SolverOptions,
) -> Result<(usize, f64)> {
    let mut delta = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let next: Vec<f64> = unknown
            .par_iter()
            .map(|&s| best_backup(dir, &m.choices[s], values))
            .collect();
        delta = 0.0;
        for (&s, v) in unknown.iter().zip(next) {
            delta = f64::max(delta, (v - values[s]).abs());
            values[s] = v;
        }
        if delta < opts.tolerance {
            return Ok((it, delta));
        }
    }
    Err(Error::IterationLimit {
        iterations: opts.max_iterations,
        residual: delta,
    })
}

/// Policy iteration seeded with the scheduler extracted from value-iteration
/// output; each round evaluates the current scheduler exactly. Returns the
/// number of rounds, or `None` (leaving `values` untouched) if evaluation
/// fails numerically.
#[allow(clippy::too_many_arguments)]
fn polish(
    m: &ExplicitMdp,
    dir: Direction,
    sets: &Sets,
    q: &Prob01,
    g: &ChoiceGraph<'_>,
    unknown: &[StateId],
    index: &[usize],
    values: &mut [f64],
) -> Option<usize> {
    // Choice index (not action id) per state.
    let mut sched = select_choices(m, dir, sets, q, g, values, SCHEDULER_TOLERANCE);
    let mut y = values.to_vec();
    for round in 1..=MAX_POLISH_ROUNDS {
        let sys = reach_system(unknown, index, q, |s| m.choices[s][sched[s]].successors.as_slice());
        let x = sys.solve_dense()?;
        scatter(&mut y, unknown, &x);
        let mut changed = false;
        for &s in unknown {
            let cs = &m.choices[s];
            let current = backup(&cs[sched[s]], &y);
            let best = best_backup(dir, cs, &y);
            if better(dir, best, current) && (best - current).abs() > 1e-12 {
                sched[s] = cs.iter().position(|c| within(dir, backup(c, &y), best, 1e-12)).unwrap();
                changed = true;
            }
        }
        if !changed {
            if y.iter().any(|v| !v.is_finite()) {
                return None;
            }
            values.copy_from_slice(&y);
            return Some(round);
        }
    }
    None
}

/// States where the choice still matters for a maximizing scheduler.
fn max_eligible(sets: &Sets, q: &Prob01) -> Vec<bool> {
    (0..q.no.len())
        .map(|s| sets.phi1[s] && !sets.phi2[s] && !q.no[s])
        .collect()
}

/// Choice index per state realizing the optimal values: the lowest action
/// id among the choices within `tol` of the optimal backup.
///
/// For maximization, choices that let the scheduler circulate forever in a
/// value-preserving end component are excluded first, so every selection is
/// optimal rather than merely locally greedy.
fn select_choices(
    m: &ExplicitMdp,
    dir: Direction,
    sets: &Sets,
    q: &Prob01,
    g: &ChoiceGraph<'_>,
    values: &[f64],
    tol: f64,
) -> Vec<usize> {
    let n = m.n_states;
    let undecided: Vec<bool> = (0..n).map(|s| sets.phi1[s] && !sets.phi2[s]).collect();
    let mut allowed: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            (0..m.choices[s].len())
                .map(|c| match dir {
                    _ if !undecided[s] => true,
                    Direction::Max if q.no[s] => true,
                    Direction::Max if q.yes[s] => g.edges(s, c).all(|t| q.yes[t]),
                    Direction::Min if q.no[s] => g.edges(s, c).all(|t| q.no[t]),
                    _ => within(dir, backup(&m.choices[s][c], values), values[s], tol),
                })
                .collect()
        })
        .collect();
    if dir == Direction::Max {
        break_end_components(m, &max_eligible(sets, q), &mut allowed);
    }
    allowed.iter().map(|a| a.iter().position(|&x| x).unwrap_or(0)).collect()
}

/// Optimal memoryless scheduler for the values in `result`: per state the
/// lowest action id attaining the optimal backup within
/// [`SCHEDULER_TOLERANCE`], excluding (for `Pmax`) choices that could idle
/// in an end component.
pub fn extract_scheduler(m: &ExplicitMdp, f: &PctlFormula, result: &CheckResult) -> Result<Scheduler> {
    let (dir, sets, g) = prepare(m, f, result)?;
    let choices = select_choices(
        m,
        dir,
        &sets,
        &result.qualitative,
        &g,
        &result.values,
        SCHEDULER_TOLERANCE,
    );
    Ok(Scheduler {
        actions: choices
            .into_iter()
            .enumerate()
            .map(|(s, c)| m.choices[s][c].action)
            .collect(),
    })
}

fn prepare<'a>(
    m: &'a ExplicitMdp,
    f: &PctlFormula,
    result: &CheckResult,
) -> Result<(Direction, Sets, ChoiceGraph<'a>)> {
    if result.values.len() != m.n_states || result.qualitative.yes.len() != m.n_states {
        return Err(Error::Internal(
            "scheduler requested before state values were computed for this model".into(),
        ));
    }
    Ok((mdp_direction(f)?, state_sets(m, f)?, ChoiceGraph::from_mdp(m)))
}

/// Per state, every enabled action whose one-step backup is within
/// `epsilon` of the optimal value. States where the property is already
/// decided (goal reached or `phi1` violated) admit all actions.
pub fn optimal_action_sets(
    m: &ExplicitMdp,
    f: &PctlFormula,
    result: &CheckResult,
    epsilon: f64,
) -> Result<Vec<Vec<ActionId>>> {
    let (dir, sets, _) = prepare(m, f, result)?;
    Ok(raw_optimal_sets(m, dir, &sets, &result.values, epsilon))
}

fn raw_optimal_sets(m: &ExplicitMdp, dir: Direction, sets: &Sets, values: &[f64], eps: f64) -> Vec<Vec<ActionId>> {
    (0..m.n_states)
        .map(|s| {
            let cs = &m.choices[s];
            if !sets.phi1[s] || sets.phi2[s] {
                return cs.iter().map(|c| c.action).collect();
            }
            let mut out: Vec<ActionId> = cs
                .iter()
                .filter(|c| within(dir, backup(c, values), values[s], eps))
                .map(|c| c.action)
                .collect();
            if out.is_empty() {
                let best = best_backup(dir, cs, values);
                out.extend(
                    cs.iter()
                        .filter(|c| backup(c, values) == best)
                        .map(|c| c.action)
                        .take(1),
                );
            }
            out
        })
        .collect()
}

/// [`optimal_action_sets`] with, for `Pmax`, the choices removed that would
/// let a scheduler idle forever in an end component. Any selection from
/// these sets attains the optimum (up to `epsilon`), which is not true of
/// the raw sets when the model has value-preserving loops.
pub fn admissible_action_sets(
    m: &ExplicitMdp,
    f: &PctlFormula,
    result: &CheckResult,
    epsilon: f64,
) -> Result<Vec<Vec<ActionId>>> {
    let (dir, sets, _) = prepare(m, f, result)?;
    let raw = raw_optimal_sets(m, dir, &sets, &result.values, epsilon);
    if dir == Direction::Min {
        return Ok(raw);
    }
    let mut allowed: Vec<Vec<bool>> = (0..m.n_states)
        .map(|s| {
            m.choices[s]
                .iter()
                .map(|c| raw[s].binary_search(&c.action).is_ok())
                .collect()
        })
        .collect();
    break_end_components(m, &max_eligible(&sets, &result.qualitative), &mut allowed);
    Ok((0..m.n_states)
        .map(|s| {
            m.choices[s]
                .iter()
                .zip(&allowed[s])
                .filter(|(_, &a)| a)
                .map(|(c, _)| c.action)
                .collect()
        })
        .collect())
}
