use std::fmt::Write;

use super::ast::{ModelKind, PrismModel};

/// Canonical source text for `model`; parsing it yields an equal AST.
///
/// Probabilities are written in shortest round-trip form, so every `f64`
/// survives a print/parse cycle bit-exactly.
pub fn print_prism(model: &PrismModel) -> String {
    let mut out = String::new();
    let var = &model.variable.name;
    let kind = match model.kind {
        ModelKind::Mdp => "mdp",
        ModelKind::Dtmc => "dtmc",
    };
    writeln!(out, "{kind}\n").unwrap();
    writeln!(out, "module {}", model.module_name).unwrap();
    writeln!(
        out,
        "  {var} : [{}..{}] init {};\n",
        model.variable.lower, model.variable.upper, model.variable.init
    )
    .unwrap();
    for cmd in &model.commands {
        let updates: Vec<String> = cmd
            .updates
            .iter()
            .map(|u| format!("{}:({var}'={})", fmt_decimal(u.probability), u.target))
            .collect();
        writeln!(
            out,
            "  [{}] {} -> {};",
            cmd.action.as_deref().unwrap_or(""),
            cmd.guard.display(var),
            updates.join(" + ")
        )
        .unwrap();
    }
    writeln!(out, "\nendmodule").unwrap();
    if !model.labels.is_empty() {
        writeln!(out).unwrap();
    }
    for label in &model.labels {
        writeln!(out, "label \"{}\" = {};", label.name, label.guard.display(var)).unwrap();
    }
    if let Some(r) = &model.rewards {
        writeln!(out).unwrap();
        match &r.name {
            Some(name) => writeln!(out, "rewards \"{name}\"").unwrap(),
            None => writeln!(out, "rewards").unwrap(),
        }
        for item in &r.items {
            writeln!(out, "  {} : {};", item.guard.display(var), fmt_decimal(item.value)).unwrap();
        }
        writeln!(out, "endrewards").unwrap();
    }
    out
}

/// Shortest round-trip decimal; always contains a `.` or exponent.
pub(crate) fn fmt_decimal(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}
