use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mdpcheck_core::explain::{pruning_sweep, run_property_battery, write_ranking_csv, BatteryReport, BatteryTarget};
use mdpcheck_core::induction::{induce, InduceOptions};
use mdpcheck_core::learning::{
    build_shield, clone_behavior, demos_from_policy, load_demos, shielded_finetune, write_demos, write_training_log,
    TrainConfig,
};
use mdpcheck_core::model::{apply_label_rules, LabelRuleSet, Labeler};
use mdpcheck_core::pctl::{check_dtmc, check_mdp, load_property_file, parse_property_file, PctlFormula, PropertyEntry};
use mdpcheck_core::policy::{load_policy, permutation_importance, MlpPolicy};
use mdpcheck_core::prism::{convert_tabular, load_model, print_prism, ModelKind, TabularMdpInput};
use mdpcheck_core::{Error, ExplicitMdp, ObservationTable, Result};

use crate::{
    CheckArgs, Cli, Command, ConfigArgs, ConvertArgs, InduceArgs, ObsArgs, PermuteArgs, PruneSweepArgs, SynthesizeArgs,
    TrainBcArgs, TrainShieldedArgs,
};

/// Exit status for a violated threshold property.
const VIOLATED: u8 = 1;

pub fn run(cli: Cli) -> Result<ExitCode> {
    if cli.threads == 0 {
        return Err(Error::input("--threads must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let threads = cli.threads;
    match cli.command {
        Command::Check(a) => check(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Convert(a) => convert(a),
        Command::Induce(a) => induce_chain(a, threads),
        Command::PruneSweep(a) => prune_sweep(a),
        Command::Permute(a) => permute(a),
        Command::TrainBc(a) => train_bc(a, threads),
        Command::TrainShielded(a) => train_shielded(a, threads),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn status(violated: bool) -> ExitCode {
    if violated {
        ExitCode::from(VIOLATED)
    } else {
        ExitCode::SUCCESS
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// Properties from a file if `arg` names one, else parsed from `arg` itself.
fn load_props(arg: &str) -> Result<(Vec<PropertyEntry>, bool)> {
    let path = Path::new(arg);
    if path.is_file() {
        Ok((load_property_file(path)?, false))
    } else {
        Ok((parse_property_file(arg)?, true))
    }
}

fn single_prop(arg: &str) -> Result<PctlFormula> {
    let (mut props, _) = load_props(arg)?;
    if props.len() != 1 {
        return Err(Error::input(format!(
            "expected exactly one property, found {}",
            props.len()
        )));
    }
    Ok(props.remove(0).formula)
}

fn load_obs(path: Option<&Path>, n_states: usize) -> Result<ObservationTable> {
    match path {
        Some(p) => ObservationTable::load(p),
        None => Ok(ObservationTable::one_hot(n_states)),
    }
}

/// Observation table plus, if label rules were given, their resolved labeler.
fn load_obs_and_labeler(args: &ObsArgs, n_states: usize) -> Result<(ObservationTable, Option<Labeler>)> {
    let obs = load_obs(args.obs.as_deref(), n_states)?;
    let labeler = match &args.labels {
        Some(p) => Some(LabelRuleSet::load(p)?.resolve(&obs)?),
        None => None,
    };
    Ok((obs, labeler))
}

fn load_config(args: &ConfigArgs, threads: usize) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::input(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.workers = threads;
    cfg.validate()?;
    Ok(cfg)
}

fn print_battery(report: &BatteryReport, inline: bool) {
    if inline {
        for r in &report.rows {
            println!("{:.6}", r.probability);
        }
    } else {
        print!("{}", report.to_text());
    }
}

fn check(a: CheckArgs) -> Result<ExitCode> {
    let (ast, mut mdp) = load_model(&a.model)?;
    if let Some(rules) = &a.obs.labels {
        let obs = load_obs(a.obs.obs.as_deref(), mdp.n_states)?;
        let rules = LabelRuleSet::load(rules)?;
        mdp.labels = apply_label_rules(&mdp.labels, mdp.n_states, &obs, &rules)?;
    }
    let (props, inline) = load_props(&a.prop)?;
    let report = if ast.kind == ModelKind::Dtmc {
        let dtmc = mdp.to_dtmc()?;
        run_property_battery(BatteryTarget::Dtmc(&dtmc), &props)?
    } else {
        run_property_battery(BatteryTarget::Mdp(&mdp), &props)?
    };
    if let Some(out) = &a.out {
        report.write_csv(create(out)?)?;
    }
    print_battery(&report, inline);
    Ok(status(report.any_violated()))
}

fn synthesize(a: SynthesizeArgs) -> Result<ExitCode> {
    let (_, mdp) = load_model(&a.model)?;
    let f = single_prop(&a.prop)?;
    let result = check_mdp(&mdp, &f)?;
    let sched = result
        .scheduler
        .as_ref()
        .ok_or_else(|| Error::Internal("checker returned no scheduler".into()))?;
    sched.write_csv(create(&a.out)?, &mdp)?;
    if let Some(p) = &a.values {
        result.write_values_csv(create(p)?)?;
    }
    if let Some(p) = &a.demos {
        let obs = load_obs(a.obs.as_deref(), mdp.n_states)?;
        write_demos(create(p)?, &demos_from_policy(&mdp, sched, &obs)?)?;
    }
    println!("{:.6}", result.value);
    Ok(status(result.verdict == Some(false)))
}

fn convert(a: ConvertArgs) -> Result<ExitCode> {
    let input = TabularMdpInput::load(&a.transitions, &a.initial, &a.meta)?;
    let (ast, mdp) = convert_tabular(&input)?;
    let mut w = create(&a.out)?;
    w.write_all(print_prism(&ast).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&a.out, e))?;
    println!("states={}", mdp.n_states);
    println!("transitions={}", mdp.transition_count());
    println!("initial_state={}", mdp.initial_state);
    Ok(ExitCode::SUCCESS)
}

fn sibling(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

fn induce_chain(a: InduceArgs, threads: usize) -> Result<ExitCode> {
    let (_, mdp) = load_model(&a.model)?;
    let (obs, labeler) = load_obs_and_labeler(&a.obs, mdp.n_states)?;
    let policy = load_policy(&a.policy)?;
    let options = InduceOptions {
        stop_labels: a.stop_labels.clone(),
        model_name: file_name(&a.model),
        policy_name: file_name(&a.policy),
    };
    let mut chain = induce(&mdp, &policy, &obs, labeler.as_ref(), &options)?;
    if a.action_labels {
        chain.label_actions(&mdp.actions)?;
    }
    chain.write_tra(create(&a.out)?)?;
    chain.write_lab(create(&sibling(&a.out, "lab"))?)?;
    let stats_path = sibling(&a.out, "stats");
    let mut stats = create(&stats_path)?;
    chain.write_stats(&mut stats)?;
    writeln!(stats, "threads={threads}")
        .and_then(|_| stats.flush())
        .map_err(|e| Error::io(&stats_path, e))?;
    chain.write_map(create(&sibling(&a.out, "map.csv"))?)?;
    println!("reachable_states={}", chain.stats.reachable_states);
    println!("transitions={}", chain.stats.transitions);
    let Some(prop) = &a.prop else {
        return Ok(ExitCode::SUCCESS);
    };
    let (props, inline) = load_props(prop)?;
    let report = run_property_battery(BatteryTarget::Dtmc(&chain.dtmc), &props)?;
    if let Some(p) = &a.report {
        report.write_csv(create(p)?)?;
    }
    print_battery(&report, inline);
    Ok(status(report.any_violated()))
}

fn prune_sweep(a: PruneSweepArgs) -> Result<ExitCode> {
    let (_, mdp) = load_model(&a.model)?;
    let (obs, labeler) = load_obs_and_labeler(&a.obs, mdp.n_states)?;
    let policy = MlpPolicy::load(&a.policy)?;
    let f = single_prop(&a.prop)?;
    let rows = pruning_sweep(&policy, &mdp, &obs, labeler.as_ref(), &f)?;
    write_ranking_csv(create(&a.out)?, &rows)?;
    if let Some(r) = rows.first() {
        println!("base {:.6}", r.base_prob);
    }
    for r in &rows {
        println!("{} {:.6} {:.6}", r.name, r.pruned_prob, r.delta);
    }
    Ok(ExitCode::SUCCESS)
}

fn permute(a: PermuteArgs) -> Result<ExitCode> {
    let policy = MlpPolicy::load(&a.policy)?;
    let obs = ObservationTable::load(&a.obs)?;
    let report = permutation_importance(&policy, &obs, a.k, a.seed)?;
    report.write_csv(create(&a.out)?)?;
    if let Some(p) = &a.summary {
        report.write_summary_csv(create(p)?)?;
    }
    for (name, frac) in report.feature_names.iter().zip(report.rank1_fractions()) {
        if frac > 0.0 {
            println!("{name} {frac:.6}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn train_bc(a: TrainBcArgs, threads: usize) -> Result<ExitCode> {
    let cfg = load_config(&a.cfg, threads)?;
    let demos = load_demos(&a.demos)?;
    let max_action = demos.iter().map(|d| d.action).max();
    let n_actions = match (a.actions, max_action) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::input(format!("demo action {m} does not fit {n} outputs")));
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::input("no demonstrations")),
    };
    let (net, log) = clone_behavior(&demos, n_actions, &cfg)?;
    net.save(&a.out)?;
    if let Some(p) = &a.cfg.log {
        write_training_log(create(p)?, &log)?;
    }
    if let Some(last) = log.last() {
        println!("loss={:.6}", last.loss);
        println!("accuracy={:.6}", last.accuracy);
    }
    Ok(ExitCode::SUCCESS)
}

fn train_shielded(a: TrainShieldedArgs, threads: usize) -> Result<ExitCode> {
    let cfg = load_config(&a.cfg, threads)?;
    let (_, mdp) = load_model(&a.model)?;
    let f = single_prop(&a.prop)?;
    let policy = MlpPolicy::load(&a.policy_in)?;
    let obs = load_obs(a.obs.as_deref(), mdp.n_states)?;
    let shield = build_shield(&mdp, &f, a.epsilon, cfg.correction, cfg.seed)?;
    if let Some(p) = &a.shield {
        shield.write_csv(create(p)?)?;
    }
    let (net, report) = shielded_finetune(&policy, &mdp, &obs, &shield, &cfg)?;
    net.save(&a.out)?;
    if let Some(p) = &a.cfg.log {
        write_training_log(create(p)?, &report.log)?;
    }
    let value = induced_value(&mdp, &net, &obs, &f)?;
    println!("{value:.6}");
    println!("intervention_rate={:.6}", report.final_intervention_rate);
    println!("compliant={}", report.compliant);
    if !report.compliant {
        eprintln!("warning: the policy still takes inadmissible actions; raise finetune_episodes");
    }
    Ok(ExitCode::SUCCESS)
}

fn induced_value(m: &ExplicitMdp, net: &MlpPolicy, obs: &ObservationTable, f: &PctlFormula) -> Result<f64> {
    let chain = induce(m, net, obs, None, &InduceOptions::default())?;
    Ok(check_dtmc(&chain.dtmc, f)?.value)
}
