//! `mdpcheck`: PCTL model checking and policy analysis from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "mdpcheck",
    version,
    about = "PCTL model checking and policy analysis for MDPs"
)]
struct Cli {
    /// Worker threads for parallel stages (results do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a property (or a property file) on a model.
    Check(CheckArgs),
    /// Synthesize an optimal scheduler and print the achieved value.
    Synthesize(SynthesizeArgs),
    /// Convert tabular transition data into a PRISM model.
    Convert(ConvertArgs),
    /// Build the chain induced by a policy.
    Induce(InduceArgs),
    /// Rank features by the change in a property when each is pruned.
    PruneSweep(PruneSweepArgs),
    /// Per-state permutation importance of an MLP policy's inputs.
    Permute(PermuteArgs),
    /// Train an MLP policy on demonstrations.
    TrainBc(TrainBcArgs),
    /// Fine-tune an MLP policy under an optimality shield.
    TrainShielded(TrainShieldedArgs),
}

/// Optional observation table and label rules.
#[derive(Debug, Args)]
struct ObsArgs {
    /// Observation table `state,<features...>` (default: one-hot state encoding).
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Label rules (`label <name> := <feature> <op> <value|pNN>`), resolved against --obs.
    #[arg(long, requires = "obs")]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    /// Property text, or a file of properties.
    #[arg(long)]
    prop: String,
    #[command(flatten)]
    obs: ObsArgs,
    /// Report CSV `id,property,probability,verdict`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single `Pmax`/`Pmin` property (text or file).
    #[arg(long)]
    prop: String,
    /// Scheduler CSV `state,action_id,action_name`.
    #[arg(long)]
    out: PathBuf,
    /// Per-state values CSV `state,value`.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Demonstrations of the scheduler on its reachable decision states.
    #[arg(long)]
    demos: Option<PathBuf>,
    #[arg(long)]
    obs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    transitions: PathBuf,
    #[arg(long)]
    initial: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InduceArgs {
    #[arg(long)]
    model: PathBuf,
    /// MLPNET file or `state,action_id` CSV.
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    obs: ObsArgs,
    /// Chain transitions; `.lab`, `.stats` and `.map.csv` files are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Make states with this label absorbing (repeatable).
    #[arg(long = "stop-label")]
    stop_labels: Vec<String>,
    /// Label each state with the name of the action it executes.
    #[arg(long)]
    action_labels: bool,
    /// Check these properties on the chain.
    #[arg(long)]
    prop: Option<String>,
    /// Report CSV for --prop.
    #[arg(long, requires = "prop")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PruneSweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    obs: ObsArgs,
    /// A `P=?` property checked on each induced chain.
    #[arg(long)]
    prop: String,
    /// Ranking CSV `feature,base_prob,pruned_prob,delta`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PermuteArgs {
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    obs: PathBuf,
    /// Draws per (state, feature).
    #[arg(long, default_value_t = 64)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-state CSV `state,top_feature,<scores>`.
    #[arg(long)]
    out: PathBuf,
    /// Summary CSV `feature,fraction_rank1`.
    #[arg(long)]
    summary: Option<PathBuf>,
}

/// Training configuration file and overrides.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable), e.g. `--set hidden=32,32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-epoch (or per-round) training log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainBcArgs {
    /// Demonstrations CSV `f1,...,fd,action_id`.
    #[arg(long)]
    demos: PathBuf,
    /// Output width (default: largest action id in the demos plus one).
    #[arg(long)]
    actions: Option<usize>,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainShieldedArgs {
    #[arg(long)]
    model: PathBuf,
    /// The `Pmax`/`Pmin` property the shield preserves.
    #[arg(long)]
    prop: String,
    #[arg(long)]
    policy_in: PathBuf,
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Optimality tolerance of the shield.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Shield CSV `state,admissible_action_ids`.
    #[arg(long)]
    shield: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                eprintln!("this indicates a bug; please report it with the inputs above");
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
