//! Conversion of tabular transition data (state, action, next, prob) into the PRISM subset.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use super::ast::*;
use super::build::build_explicit;
use crate::error::{Error, Result};
use crate::model::ExplicitMdp;

/// Tolerance on the per-(state, action) and admission distribution sums.
pub const TABLE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TabularMdpInput {
    /// `(state, action, next_state, probability)` rows.
    pub transitions: Vec<(usize, usize, usize, f64)>,
    /// Admission distribution over clinical states.
    pub initial: Vec<(usize, f64)>,
    pub action_names: BTreeMap<usize, String>,
    pub survived: BTreeSet<usize>,
    pub died: BTreeSet<usize>,
}

impl TabularMdpInput {
    /// Reads `transitions.csv` (`state,action,next_state,prob`), `initial.csv`
    /// (`state,prob`) and `meta.csv` (`kind,id,name` with kinds `action`,
    /// `survived`, `died`).
    pub fn from_readers(transitions: impl Read, initial: impl Read, meta: impl Read) -> Result<Self> {
        let mut input = TabularMdpInput::default();
        for (i, row) in read_rows(transitions, &["state", "action", "next_state", "prob"])?
            .into_iter()
            .enumerate()
        {
            let at = || format!("transitions.csv row {}", i + 2);
            input.transitions.push((
                parse_id(&row[0], &at)?,
                parse_id(&row[1], &at)?,
                parse_id(&row[2], &at)?,
                parse_prob(&row[3], &at)?,
            ));
        }
        for (i, row) in read_rows(initial, &["state", "prob"])?.into_iter().enumerate() {
            let at = || format!("initial.csv row {}", i + 2);
            input.initial.push((parse_id(&row[0], &at)?, parse_prob(&row[1], &at)?));
        }
        for (i, row) in read_rows(meta, &["kind", "id", "name"])?.into_iter().enumerate() {
            let at = || format!("meta.csv row {}", i + 2);
            let id = parse_id(&row[1], &at)?;
            match row[0].as_str() {
                "action" => {
                    input.action_names.insert(id, row[2].clone());
                }
                "survived" => {
                    input.survived.insert(id);
                }
                "died" => {
                    input.died.insert(id);
                }
                other => return Err(Error::input(format!("{}: unknown kind `{other}`", at()))),
            }
        }
        Ok(input)
    }

    pub fn load(transitions: &Path, initial: &Path, meta: &Path) -> Result<Self> {
        let open = |p: &Path| std::fs::File::open(p).map_err(|e| Error::io(p, e));
        Self::from_readers(open(transitions)?, open(initial)?, open(meta)?)
    }
}

fn read_rows(reader: impl Read, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let h: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if h != header {
        return Err(Error::input(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            h.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_id(s: &str, at: &dyn Fn() -> String) -> Result<usize> {
    s.parse().map_err(|_| Error::input(format!("{}: bad id `{s}`", at())))
}

fn parse_prob(s: &str, at: &dyn Fn() -> String) -> Result<f64> {
    let p: f64 = s
        .parse()
        .map_err(|_| Error::input(format!("{}: bad probability `{s}`", at())))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::input(format!("{}: probability {p} outside [0,1]", at())));
    }
    Ok(p)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Builds the PRISM model for a tabular MDP.
///
/// Clinical states keep their ids `0..n`; state `n` is an auxiliary initial
/// state whose single `admit` command follows the admission distribution.
/// Survived and died states become `end` self-loops labelled `survived` and
/// `died`; survived states carry reward 1. Rows with probability 0 are dropped.
pub fn convert_tabular(input: &TabularMdpInput) -> Result<(PrismModel, ExplicitMdp)> {
    if input.survived.is_empty() || input.died.is_empty() {
        return Err(Error::input("meta table must name survived and died states"));
    }
    if let Some(s) = input.survived.intersection(&input.died).next() {
        return Err(Error::input(format!("state {s} is both survived and died")));
    }
    let mut known: BTreeSet<usize> = input.transitions.iter().map(|t| t.0).collect();
    known.extend(&input.survived);
    known.extend(&input.died);
    let n = known.len();
    if let Some(missing) = (0..n).find(|s| !known.contains(s)) {
        return Err(Error::input(format!(
            "state ids are not contiguous: missing state {missing}"
        )));
    }
    for &(_, action, next, _) in &input.transitions {
        if !known.contains(&next) {
            return Err(Error::input(format!("unknown state {next}")));
        }
        if !input.action_names.contains_key(&action) {
            return Err(Error::input(format!("action {action} has no name")));
        }
    }
    for name in input.action_names.values() {
        if !is_identifier(name) || name == "admit" || name == "end" {
            return Err(Error::input(format!("unusable action name `{name}`")));
        }
    }

    let terminal = |s: usize| input.survived.contains(&s) || input.died.contains(&s);
    let mut rows: BTreeMap<(usize, usize), Vec<Update>> = BTreeMap::new();
    for &(state, action, next, p) in &input.transitions {
        if terminal(state) || p == 0.0 {
            continue;
        }
        rows.entry((state, action)).or_default().push(Update {
            probability: p,
            target: next as i64,
        });
    }
    for (&(state, action), updates) in &rows {
        let sum: f64 = updates.iter().map(|u| u.probability).sum();
        if (sum - 1.0).abs() > TABLE_SUM_TOLERANCE {
            return Err(Error::input(format!(
                "state {state}, action {action}: probabilities sum to {sum}"
            )));
        }
    }
    if let Some(s) = (0..n).find(|&s| !terminal(s) && !rows.keys().any(|&(st, _)| st == s)) {
        return Err(Error::input(format!("state {s} has no transitions")));
    }

    let mut admit = Vec::new();
    for &(state, p) in &input.initial {
        if !known.contains(&state) {
            return Err(Error::input(format!("unknown state {state}")));
        }
        if p > 0.0 {
            admit.push(Update {
                probability: p,
                target: state as i64,
            });
        }
    }
    let admit_sum: f64 = admit.iter().map(|u| u.probability).sum();
    if (admit_sum - 1.0).abs() > TABLE_SUM_TOLERANCE {
        return Err(Error::input(format!("initial distribution sums to {admit_sum}")));
    }

    let aux = n as i64;
    let at = |s: usize| Guard::Cmp(CmpOp::Eq, s as i64);
    let mut commands: Vec<Command> = rows
        .into_iter()
        .map(|((state, action), updates)| Command {
            action: Some(input.action_names[&action].clone()),
            guard: at(state),
            updates,
            span: Span::default(),
        })
        .collect();
    commands.push(Command {
        action: Some("admit".into()),
        guard: Guard::Cmp(CmpOp::Eq, aux),
        updates: admit,
        span: Span::default(),
    });
    for &s in input.survived.iter().chain(&input.died) {
        commands.push(Command {
            action: Some("end".into()),
            guard: at(s),
            updates: vec![Update {
                probability: 1.0,
                target: s as i64,
            }],
            span: Span::default(),
        });
    }

    let any_of = |set: &BTreeSet<usize>| {
        set.iter()
            .map(|&s| at(s))
            .reduce(|a, b| Guard::Or(Box::new(a), Box::new(b)))
            .expect("nonempty")
    };
    let ast = PrismModel {
        kind: ModelKind::Mdp,
        module_name: "tabular".into(),
        variable: Variable {
            name: "s".into(),
            lower: 0,
            upper: aux,
            init: aux,
        },
        commands,
        labels: vec![
            LabelDecl {
                name: "survived".into(),
                guard: any_of(&input.survived),
            },
            LabelDecl {
                name: "died".into(),
                guard: any_of(&input.died),
            },
        ],
        rewards: Some(RewardStructure {
            name: None,
            items: vec![RewardItem {
                guard: any_of(&input.survived),
                value: 1.0,
            }],
        }),
    };
    let mdp = build_explicit(&ast)?;
    Ok((ast, mdp))
}
