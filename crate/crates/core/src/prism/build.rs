use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{ModelKind, PrismModel};
use crate::error::{Error, Result};
use crate::model::{Choice, ExplicitMdp, Labels};

/// Expands the AST into an explicit model, one state per variable value.
///
/// Action ids follow the order in which action names first appear in the
/// command list. Unlabelled commands are named `__cmd<k>`; a second command
/// with the same name enabled in the same state becomes `<name>__cmd<k>`.
pub fn build_explicit(ast: &PrismModel) -> Result<ExplicitMdp> {
    let var = &ast.variable;
    let n_states = (var.upper - var.lower + 1) as usize;
    let index = |v: i64| (v - var.lower) as usize;

    let base_names: Vec<String> = ast
        .commands
        .iter()
        .enumerate()
        .map(|(k, c)| c.action.clone().unwrap_or_else(|| format!("__cmd{k}")))
        .collect();
    let mut actions: Vec<String> = Vec::new();
    let mut action_ids: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str, actions: &mut Vec<String>| -> usize {
        *action_ids.entry(name.to_string()).or_insert_with(|| {
            actions.push(name.to_string());
            actions.len() - 1
        })
    };
    for name in &base_names {
        intern(name, &mut actions);
    }

    let mut choices = Vec::with_capacity(n_states);
    for state in 0..n_states {
        let value = var.lower + state as i64;
        let mut here: Vec<Choice> = Vec::new();
        let mut used = BTreeSet::new();
        for (k, cmd) in ast.commands.iter().enumerate() {
            if !cmd.guard.eval(value) {
                continue;
            }
            let name = if used.insert(base_names[k].clone()) {
                base_names[k].clone()
            } else {
                format!("{}__cmd{k}", base_names[k])
            };
            let action = intern(&name, &mut actions);
            // updates to the same target merge
            let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
            for u in &cmd.updates {
                *dist.entry(index(u.target)).or_insert(0.0) += u.probability;
            }
            here.push(Choice {
                action,
                successors: dist.into_iter().collect(),
            });
        }
        if here.is_empty() {
            return Err(Error::input(format!(
                "state {state} ({}={value}) has no enabled command",
                var.name
            )));
        }
        if ast.kind == ModelKind::Dtmc && here.len() > 1 {
            return Err(Error::input(format!(
                "dtmc state {state} ({}={value}) has {} enabled commands",
                var.name,
                here.len()
            )));
        }
        here.sort_by_key(|c| c.action);
        choices.push(here);
    }

    let mut labels = Labels::new();
    labels.insert("init".into(), [index(var.init)].into());
    for decl in &ast.labels {
        let states: BTreeSet<usize> = (0..n_states)
            .filter(|&s| decl.guard.eval(var.lower + s as i64))
            .collect();
        labels.insert(decl.name.clone(), states);
    }

    let mut terminal_reward = BTreeMap::new();
    if let Some(r) = &ast.rewards {
        for state in 0..n_states {
            let value = var.lower + state as i64;
            let total: f64 = r.items.iter().filter(|i| i.guard.eval(value)).map(|i| i.value).sum();
            if total != 0.0 {
                terminal_reward.insert(state, total);
            }
        }
    }

    Ok(ExplicitMdp {
        n_states,
        initial_state: index(var.init),
        actions,
        choices,
        labels,
        terminal_reward,
    })
}
