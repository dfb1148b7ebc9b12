// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use qoc_core::operators::{corner_hamiltonian, device_hamiltonians, plaquette_hamiltonian};
use qoc_core::{
    finite_difference_gradient, gradient, max_relative_error, optimize_with, ConvergenceRecord,
    GradientStrategy, InitialCondition, Lattice, MemoryStats, Operator,
};
use serde::Serialize;

use crate::bench::{run_sweep, Experiment};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, write_atomic, BenchRecord, BenchSink};

pub const CONFIG_FILE: &str = "config.json";

fn echo_config(config: &ExperimentConfig) -> CliResult<PathBuf> {
    let path = config.output_dir.join(CONFIG_FILE);
    write_atomic(&path, config.to_json().as_bytes())?;
    Ok(path)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeSummary {
    pub strategy: String,
    pub iterations_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub best_loss: f64,
    pub wall_ms: f64,
    pub stats: Option<MemoryStats>,
    #[serde(skip)]
    pub history: Vec<ConvergenceRecord>,
}

/// Writes `config.json`, `convergence.csv`, `schedule.csv` (final iterate),
/// `best_schedule.csv` and `summary.json` into the output directory.
pub fn optimize(
    config: &ExperimentConfig,
    progress: impl FnMut(&ConvergenceRecord),
) -> CliResult<OptimizeSummary> {
    config.validate()?;
    let lattice = config.lattice.build()?;
    let problem = config.problem_for(&lattice)?;
    let initial = config.initial_schedule(&lattice, config.time.grid()?)?;
    echo_config(config)?;

    let options = config.optimize_options(config.optimizer.iterations, config.strategy);
    let result = optimize_with(&problem, &initial, &options, progress)?;

    let dir = &config.output_dir;
    output::write_convergence(&dir.join("convergence.csv"), &result.history)?;
    output::write_schedule(&dir.join("schedule.csv"), &result.final_schedule)?;
    output::write_schedule(&dir.join("best_schedule.csv"), &result.best)?;
    let summary = OptimizeSummary {
        strategy: config.strategy.to_string(),
        iterations_run: result.history.len(),
        initial_loss: result.history[0].loss,
        final_loss: result.final_loss,
        best_loss: result.best_loss,
        wall_ms: result.history.last().map_or(0.0, |r| r.wall_ms),
        stats: result.stats,
        history: result.history,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs a sweep into `<out>/<experiment>.csv`. With `worker` set, each row
/// runs in a child process of that executable.
pub fn bench(
    config: &ExperimentConfig,
    experiment: Experiment,
    worker: Option<&Path>,
    progress: impl FnMut(&BenchRecord),
) -> CliResult<Vec<BenchRecord>> {
    config.validate_bench()?;
    let config_path = echo_config(config)?;
    let mut sink = BenchSink::create(&config.output_dir.join(experiment.file_name()))?;
    let worker = worker.map(|exe| (exe, config_path.as_path()));
    run_sweep(config, experiment, &mut sink, worker, progress)
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyCheck {
    pub strategy: String,
    pub loss: f64,
    pub max_relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub width: usize,
    pub length: usize,
    pub dim: usize,
    pub steps: usize,
    pub eps: f64,
    pub tolerance: f64,
    pub strategies: Vec<StrategyCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.strategies.iter().all(|s| s.passed)
    }

    pub fn worst(&self) -> f64 {
        self.strategies
            .iter()
            .fold(0.0f64, |m, s| m.max(s.max_relative_error))
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "grad-check: {}x{} lattice, D = {}, N = {}, eps = {:e}, tolerance = {:e}\n",
            self.width, self.length, self.dim, self.steps, self.eps, self.tolerance
        );
        for s in &self.strategies {
            out.push_str(&format!(
                "{:<24} max_relative_error = {:.3e}  {}\n",
                s.strategy,
                s.max_relative_error,
                if s.passed { "ok" } else { "FAILED" }
            ));
        }
        out
    }

    /// Exit-code view of the report.
    pub fn check(&self) -> CliResult<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(CliError::GradCheck(format!(
                "max relative error {:.3e} exceeds {:e}",
                self.worst(),
                self.tolerance
            )))
        }
    }
}

/// Compares every strategy against central finite differences on the small
/// problem in `config.grad_check`, with amplitudes drawn from `config.seed`.
pub fn grad_check(config: &ExperimentConfig) -> CliResult<GradCheckReport> {
    config.validate_grad_check()?;
    let g = &config.grad_check;
    let lattice = g.lattice.build()?;
    let problem = config.problem_for(&lattice)?;
    let init = InitialCondition {
        constant: 0.0,
        noise: g.amplitude.abs(),
        ..InitialCondition::default()
    };
    let schedule = init.schedule(&lattice, g.time.grid()?, config.seed)?;
    let fd = finite_difference_gradient(&problem, &schedule, g.eps)?;

    let strategies = GradientStrategy::all(g.period)
        .into_iter()
        .map(|strategy| {
            let r = gradient(&problem, &schedule, strategy)?;
            let err = max_relative_error(&r.grad, &fd);
            Ok(StrategyCheck {
                strategy: strategy.to_string(),
                loss: r.loss,
                max_relative_error: err,
                passed: err <= g.tolerance,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = GradCheckReport {
        width: lattice.width(),
        length: lattice.length(),
        dim: lattice.dim(),
        steps: g.time.steps,
        eps: g.eps,
        tolerance: g.tolerance,
        strategies,
    };
    write_json(&config.output_dir.join("grad_check.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeDescription<'a> {
    pub width: usize,
    pub length: usize,
    pub qubits: usize,
    pub dim: usize,
    pub edges: &'a [qoc_core::Edge],
    pub plaquettes: &'a [[usize; 4]],
    pub corner_pairs: &'a [(usize, usize)],
    pub device_couplings: &'a [(usize, usize)],
}

pub fn describe(lattice: &Lattice) -> String {
    let d = LatticeDescription {
        width: lattice.width(),
        length: lattice.length(),
        qubits: lattice.qubits(),
        dim: lattice.dim(),
        edges: lattice.edges(),
        plaquettes: lattice.plaquettes(),
        corner_pairs: lattice.corner_pairs(),
        device_couplings: lattice.device_couplings(),
    };
    serde_json::to_string_pretty(&d).expect("description serializes")
}

/// Nonzero entries as `row,col,re,im`.
pub fn sparse_csv(op: &Operator) -> String {
    let mut out = String::from("row,col,re,im\n");
    for ((r, c), z) in op.indexed_iter() {
        if z.norm() != 0.0 {
            out.push_str(&format!("{r},{c},{},{}\n", z.re, z.im));
        }
    }
    out
}

/// Writes the lattice-model and device operators of `lattice` into `dir`.
/// Returns the written paths.
pub fn dump_operators(config: &ExperimentConfig, lattice: &Lattice, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let device = device_hamiltonians(lattice, config.coupling);
    let mut ops = vec![
        ("h_plaquette.csv".to_string(), plaquette_hamiltonian(lattice)),
        ("h_corner.csv".to_string(), corner_hamiltonian(lattice)),
        ("drift.csv".to_string(), device.drift),
    ];
    ops.extend(
        device
            .controls
            .into_iter()
            .enumerate()
            .map(|(i, h)| (format!("control_{i}.csv"), h)),
    );
    ops.push(("target.csv".to_string(), config.target.unitary(lattice)?));
    ops.into_iter()
        .map(|(name, op)| {
            let path = dir.join(name);
            write_atomic(&path, sparse_csv(&op).as_bytes())?;
            Ok(path)
        })
        .collect()
}
