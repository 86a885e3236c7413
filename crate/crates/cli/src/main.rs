use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use lso_core::harness::{
    read_results_csv, run_experiment, ExperimentConfig, ExperimentKind, RunOptions, Verdict,
};

/// Monte Carlo checks of eigenvalue concentration bounds for random lattice operators.
#[derive(Debug, Parser)]
#[command(name = "lsolab", version)]
struct Cli {
    /// JSON experiment config; the built-in default for the subcommand otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-particle operator with an i.i.d. potential.
    Wegner,
    /// N-particle operator with an i.i.d. one-body potential.
    Multiparticle,
    /// Stationary Gaussian potential.
    Gaussian,
    /// Gibbs potential sampled by heat bath.
    Gibbs,
    /// Level-set and monotonicity oracle cases.
    Oracle,
    /// Integrated density of states on growing boxes.
    Ids,
    /// Summarize an existing results.csv.
    Report {
        /// Path to results.csv; `<out>/results.csv` by default.
        results: Option<PathBuf>,
    },
    /// Print the built-in config for an experiment kind.
    DefaultConfig {
        #[arg(value_parser = parse_kind)]
        kind: ExperimentKind,
    },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown experiment kind {s}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(violated) => {
            if violated {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default_for(kind),
    };
    if config.kind() != kind {
        bail!(
            "config describes a {} experiment, not {}",
            config.kind().as_str(),
            kind.as_str()
        );
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

/// Returns whether any verdict was `violated`.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let kind = match &cli.command {
        Command::Wegner => ExperimentKind::Wegner,
        Command::Multiparticle => ExperimentKind::Multiparticle,
        Command::Gaussian => ExperimentKind::Gaussian,
        Command::Gibbs => ExperimentKind::Gibbs,
        Command::Oracle => ExperimentKind::Oracle,
        Command::Ids => ExperimentKind::Ids,
        Command::Report { results } => {
            let path = match results {
                Some(p) => p.clone(),
                None => cli
                    .out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("results"))
                    .join("results.csv"),
            };
            return report(&path);
        }
        Command::DefaultConfig { kind } => {
            println!("{}", serde_json::to_string_pretty(&ExperimentConfig::default_for(*kind))?);
            return Ok(false);
        }
    };
    let config = load_config(&cli, kind)?;
    let outcome = run_experiment(&config, &RunOptions { threads: cli.threads })?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.any_violated {
        println!("at least one bound is violated");
    }
    Ok(outcome.any_violated)
}

fn report(path: &PathBuf) -> anyhow::Result<bool> {
    let rows = read_results_csv(path).with_context(|| format!("reading {}", path.display()))?;
    let mut violated = false;
    println!(
        "{:<14} {:<10} {:>10} {:>8} {:>10} {:>12} {:>12}  verdict",
        "experiment", "dims", "epsilon", "trials", "p_hat", "ci_high", "bound_2eps"
    );
    for r in &rows {
        violated |= r.verdict == Verdict::Violated;
        println!(
            "{:<14} {:<10} {:>10} {:>8} {:>10.6} {:>12.6} {:>12.6}  {}",
            r.experiment,
            r.l_or_dims,
            r.epsilon,
            r.trials,
            r.p_hat,
            r.ci_high,
            r.bound_2eps,
            r.verdict.as_str()
        );
    }
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    println!(
        "{} rows: {} holds, {} vacuous, {} violated",
        rows.len(),
        count(Verdict::Holds),
        count(Verdict::Vacuous),
        count(Verdict::Violated)
    );
    Ok(violated)
}
