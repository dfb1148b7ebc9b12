// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qoc_core::GradientStrategy;

use qoc_cli::bench::{run_row, Experiment, RowSpec};
use qoc_cli::commands;
use qoc_cli::{CliError, CliResult, ExperimentConfig, Overrides};

/// Pulse optimization for lattice gauge theory slices on transmon arrays.
///
/// Exit codes: 0 success, 1 i/o failure, 2 configuration error, 3 numeric
/// failure, 4 gradient check failure. Failures print a JSON error object on
/// stderr.
#[derive(Debug, Parser)]
#[command(name = "qoc", version)]
struct Cli {
    /// JSON experiment configuration; omitted fields take defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Gradient strategy: store-all, checkpoint:C, reverse or checkpoint-reverse:C.
    #[arg(long, global = true, value_name = "STR")]
    strategy: Option<GradientStrategy>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for initial-condition noise and grad-check amplitudes.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run ADAM and write the convergence log and schedules.
    Optimize,
    /// Runtime and memory sweeps.
    Bench {
        #[arg(value_enum)]
        experiment: BenchKind,
        /// Run every row in its own worker process.
        #[arg(long)]
        isolate: bool,
    },
    /// Compare every strategy against finite differences on a small problem.
    GradCheck,
    /// Lattice geometry and operators.
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Worker entry point for `bench --isolate`.
    #[command(hide = true)]
    BenchRow {
        #[arg(long)]
        row: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchKind {
    VaryQubits,
    VarySteps,
    VaryCheckpoints,
}

impl From<BenchKind> for Experiment {
    fn from(k: BenchKind) -> Self {
        match k {
            BenchKind::VaryQubits => Experiment::VaryQubits,
            BenchKind::VarySteps => Experiment::VarySteps,
            BenchKind::VaryCheckpoints => Experiment::VaryCheckpoints,
        }
    }
}

#[derive(Debug, Subcommand)]
enum LatticeAction {
    /// Print edges, plaquettes, corner pairs and couplings as JSON.
    Describe {
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
        /// Also write every operator as sparse CSV into the output directory.
        #[arg(long)]
        dump_operators: bool,
    },
}

/// Prints to stdout, tolerating a closed pipe (`qoc ... | head`).
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn run(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        strategy: cli.strategy,
        output_dir: cli.out,
        seed: cli.seed,
    };
    let config = ExperimentConfig::resolve(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Optimize => {
            let summary = commands::optimize(&config, |r| {
                if r.iteration % 50 == 0 {
                    eprintln!("iter {:>5}  loss {:.6e}  |grad| {:.3e}", r.iteration, r.loss, r.grad_inf_norm);
                }
            })?;
            emit(&(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"));
        }
        Command::Bench { experiment, isolate } => {
            let exe = if isolate {
                Some(std::env::current_exe().map_err(|e| CliError::io("current executable", e))?)
            } else {
                None
            };
            let rows = commands::bench(&config, experiment.into(), exe.as_deref(), |r| {
                eprintln!(
                    "{} {}x{} N={} {}: {}",
                    r.experiment, r.width, r.length, r.steps, r.strategy, r.status
                );
            })?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            emit(&format!(
                "{} rows ({} failed) written to {}\n",
                rows.len(),
                failed,
                config.output_dir.join(Experiment::from(experiment).file_name()).display()
            ));
        }
        Command::GradCheck => {
            let report = commands::grad_check(&config)?;
            emit(&report.table());
            report.check()?;
        }
        Command::Lattice { action: LatticeAction::Describe { width, length, dump_operators } } => {
            let mut config = config;
            config.lattice.width = width.unwrap_or(config.lattice.width);
            config.lattice.length = length.unwrap_or(config.lattice.length);
            let lattice = config.lattice.build()?;
            emit(&(commands::describe(&lattice) + "\n"));
            if dump_operators {
                for path in commands::dump_operators(&config, &lattice, &config.output_dir)? {
                    eprintln!("wrote {}", path.display());
                }
            }
        }
        Command::BenchRow { row } => {
            let spec: RowSpec =
                serde_json::from_str(&row).map_err(|e| CliError::Config(e.to_string()))?;
            let record = run_row(&config, &spec);
            emit(&(serde_json::to_string(&record).expect("record serializes") + "\n"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            emit(&e.to_string());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let err = CliError::Config(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
