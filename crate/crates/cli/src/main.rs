//! Command line runner: validate configs, run one policy, or compare
//! several under common random numbers.
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use seqpipe_core::harness::{
    aggregate_runs, export_experiment, run_all_seeds, write_curves_svg, ExperimentConfig,
    PolicyCurves,
};
use seqpipe_core::policies::PolicyName;

#[derive(Parser)]
#[command(
    name = "seqpipe",
    about = "Cost-aware sequential bandit selection over simulated model pipelines",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory (default: the config's out_dir, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Policies to compare; every run shares the environment seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policy over all seeds and export artifacts.
    Run(RunArgs),
    /// Run several policies on identical queries and noise, side by side.
    Compare(CompareArgs),
    /// List the selectable policies.
    ListPolicies,
    /// Parse and validate a config without executing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 1;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::Compare(args) => compare_command(args),
        Command::ListPolicies => {
            for (name, blurb) in [
                ("seqbandits", "per-(subtask, arm) networks with UCB exploration minus cost"),
                ("ca_neuralucb", "one network per subtask, same cost-aware UCB rule"),
                ("ca_neurallinucb", "shared representation per subtask, ridge head"),
                ("random", "seeded uniform arm choice, no learning"),
                ("fixed", "constant configured arm per subtask"),
            ] {
                println!("{name:16} {blurb}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(_) => {
                println!("ok: {}", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid config: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), ExitCode> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| {
        eprintln!("invalid config: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
        config.validate().map_err(|e| {
            eprintln!("invalid config: {e}");
            ExitCode::from(EXIT_CONFIG)
        })?;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn execute(config: &ExperimentConfig, dir: &Path) -> Result<PolicyCurves, ExitCode> {
    let started = Instant::now();
    let outputs = run_all_seeds(config).map_err(|e| {
        eprintln!("run failed: {e}");
        ExitCode::from(EXIT_RUNTIME)
    })?;
    export_experiment(config, &outputs, dir, started.elapsed().as_secs_f64()).map_err(|e| {
        eprintln!("cannot write outputs: {e}");
        ExitCode::from(EXIT_RUNTIME)
    })?;
    Ok(PolicyCurves {
        name: config.policy.name.as_str().into(),
        aggregates: aggregate_runs(&outputs),
    })
}

fn run_command(args: RunArgs) -> ExitCode {
    let (config, out) = match load(&args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    match execute(&config, &out) {
        Ok(_) => {
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn compare_command(args: CompareArgs) -> ExitCode {
    let (base, out) = match load(&args.run) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut names = Vec::new();
    for raw in &args.policies {
        match PolicyName::parse(raw) {
            Some(name) => names.push(name),
            None => {
                eprintln!(
                    "invalid config field `policies`: unknown policy `{raw}` \
                     (try `seqpipe list-policies`)"
                );
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let mut curves = Vec::new();
    for name in names {
        let mut config = base.clone();
        config.policy.name = name;
        if let Err(e) = config.validate() {
            eprintln!("invalid config for policy `{name}`: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        match execute(&config, &out.join(name.as_str())) {
            Ok(c) => curves.push(c),
            Err(code) => return code,
        }
    }
    if let Err(e) = write_curves_svg(&out.join("curves.svg"), &curves) {
        eprintln!("cannot write curves: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    println!("wrote {}", out.display());
    ExitCode::SUCCESS
}
