// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Runtime and memory sweeps. Each row times a short optimization and records
//! the gradient counters. A row never takes the sweep down: errors, panics,
//! rows predicted to exceed the memory budget and crashed workers all become
//! failure rows.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use qoc_core::gradient::{matrix_bytes, SCRATCH_MATRICES};
use qoc_core::{optimize, GradientStrategy, Lattice, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{BenchRecord, BenchSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VaryQubits,
    VarySteps,
    VaryCheckpoints,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::VaryQubits => "vary-qubits",
            Self::VarySteps => "vary-steps",
            Self::VaryCheckpoints => "vary-checkpoints",
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name().replace('-', "_"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub experiment: Experiment,
    pub width: usize,
    pub length: usize,
    pub steps: usize,
    pub strategy: GradientStrategy,
}

/// `floor(sqrt(n))`, the period used when sweeping other parameters.
pub fn default_period(steps: usize) -> usize {
    (steps as f64).sqrt().floor().max(1.0) as usize
}

pub fn plan(config: &ExperimentConfig, experiment: Experiment) -> Vec<RowSpec> {
    let b = &config.bench;
    let row = |width, length, steps, strategy| RowSpec {
        experiment,
        width,
        length,
        steps,
        strategy,
    };
    match experiment {
        Experiment::VaryQubits => {
            let n = config.time.steps;
            b.lengths
                .iter()
                .flat_map(|&l| {
                    GradientStrategy::all(default_period(n)).map(|s| row(b.width, l, n, s))
                })
                .collect()
        }
        Experiment::VarySteps => b
            .steps
            .iter()
            .flat_map(|&n| {
                GradientStrategy::all(default_period(n))
                    .map(|s| row(b.lattice.width, b.lattice.length, n, s))
            })
            .collect(),
        Experiment::VaryCheckpoints => {
            let n = config.time.steps;
            b.periods
                .iter()
                .flat_map(|&c| {
                    [
                        GradientStrategy::PeriodicCheckpointing(c),
                        GradientStrategy::CheckpointedReversibility(c),
                    ]
                    .map(|s| row(b.lattice.width, b.lattice.length, n, s))
                })
                .collect()
        }
    }
}

fn blank(config: &ExperimentConfig, spec: &RowSpec) -> BenchRecord {
    let (qubits, dim) = Lattice::new(spec.width, spec.length)
        .map(|l| (l.qubits(), l.dim()))
        .unwrap_or((0, 0));
    BenchRecord {
        experiment: spec.experiment.name().to_string(),
        width: spec.width,
        length: spec.length,
        qubits,
        dim,
        steps: spec.steps,
        period: spec.strategy.period(),
        strategy: spec.strategy.to_string(),
        iterations: config.bench.iterations,
        seed: config.seed,
        status: "ok".into(),
        total_ms: None,
        forward_ms: None,
        backward_ms: None,
        ms_per_iteration: None,
        peak_matrices: None,
        checkpoints: None,
        workspace_matrices: None,
        scratch_matrices: None,
        step_recomputations: None,
        linearizations: None,
        peak_bytes_estimate: None,
        rss_peak_bytes: None,
        loss_first: None,
        loss_last: None,
        loss_best: None,
        error: None,
    }
}

fn failed(mut record: BenchRecord, status: &str, error: String) -> BenchRecord {
    record.status = status.into();
    record.error = Some(error);
    record
}

/// Bytes a row needs: retained and scratch matrices plus the problem's own
/// drift, controls and target.
pub fn predicted_row_bytes(spec: &RowSpec, lattice: &Lattice) -> CliResult<u64> {
    let stats = spec.strategy.predicted_stats(spec.steps, lattice.dim())?;
    let extra = (SCRATCH_MATRICES + lattice.qubits() + 2) as u64 * matrix_bytes(lattice.dim());
    Ok(stats.peak_bytes_estimate + extra)
}

/// Runs one row in this process.
pub fn run_row(config: &ExperimentConfig, spec: &RowSpec) -> BenchRecord {
    let record = blank(config, spec);
    let lattice = match Lattice::new(spec.width, spec.length) {
        Ok(l) => l,
        Err(e) => return failed(record, "error", e.to_string()),
    };
    match predicted_row_bytes(spec, &lattice) {
        Err(e) => return failed(record, "error", e.to_string()),
        Ok(bytes) if bytes > config.bench.memory_budget_bytes => {
            return failed(
                record,
                "over-budget",
                format!(
                    "predicted {bytes} bytes exceeds budget of {} bytes",
                    config.bench.memory_budget_bytes
                ),
            )
        }
        Ok(_) => {}
    }

    let outcome = panic::catch_unwind(AssertUnwindSafe(|| timed_row(config, spec, &lattice)));
    match outcome {
        Ok(Ok(mut r)) => {
            r.rss_peak_bytes = peak_rss_bytes();
            r
        }
        Ok(Err(e)) => failed(record, "error", e.to_string()),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            failed(record, "panic", msg)
        }
    }
}

fn timed_row(config: &ExperimentConfig, spec: &RowSpec, lattice: &Lattice) -> CliResult<BenchRecord> {
    let grid = TimeGrid::from_total(config.time.total_ns, spec.steps)?;
    let problem = config.problem_for(lattice)?;
    let initial = config.initial_schedule(lattice, grid)?;
    let mut options = config.optimize_options(config.bench.iterations, spec.strategy);
    options.target_loss = None;
    let result = optimize(&problem, &initial, &options)?;

    let history = &result.history;
    let last = history.last().expect("at least one iteration");
    let stats = result.stats.expect("at least one gradient");
    let mut r = blank(config, spec);
    r.total_ms = Some(last.wall_ms);
    r.forward_ms = Some(history.iter().map(|h| h.forward_ms).sum());
    r.backward_ms = Some(history.iter().map(|h| h.backward_ms).sum());
    r.ms_per_iteration = Some(last.wall_ms / history.len() as f64);
    r.peak_matrices = Some(stats.peak_matrices);
    r.checkpoints = Some(stats.checkpoints);
    r.workspace_matrices = Some(stats.workspace_matrices);
    r.scratch_matrices = Some(stats.scratch_matrices);
    r.step_recomputations = Some(stats.step_recomputations);
    r.linearizations = Some(stats.linearizations);
    r.peak_bytes_estimate = Some(stats.peak_bytes_estimate);
    r.loss_first = Some(history[0].loss);
    r.loss_last = Some(result.final_loss);
    r.loss_best = Some(result.best_loss);
    Ok(r)
}

/// Runs one row in a child `qoc bench-row` process, so a crash or an
/// out-of-memory kill only loses that row and the reported resident set is
/// the row's own.
pub fn run_row_isolated(
    worker: &Path,
    config_path: &Path,
    config: &ExperimentConfig,
    spec: &RowSpec,
) -> BenchRecord {
    let row = serde_json::to_string(spec).expect("row spec serializes");
    let output = Command::new(worker)
        .arg("--config")
        .arg(config_path)
        .args(["bench-row", "--row", &row])
        .output();
    let record = blank(config, spec);
    match output {
        Err(e) => failed(record, "crashed", format!("could not start worker: {e}")),
        Ok(out) => match serde_json::from_slice::<BenchRecord>(&out.stdout) {
            Ok(r) if out.status.success() => r,
            _ => {
                let stderr = String::from_utf8_lossy(&out.stderr);
                let tail: String = stderr.lines().last().unwrap_or("").chars().take(300).collect();
                failed(record, "crashed", format!("worker exited with {}: {tail}", out.status))
            }
        },
    }
}

/// Runs every planned row, appending each to `sink` as it completes.
/// `worker` selects process isolation, with `config_path` the resolved
/// configuration the worker reads.
pub fn run_sweep(
    config: &ExperimentConfig,
    experiment: Experiment,
    sink: &mut BenchSink,
    worker: Option<(&Path, &Path)>,
    mut progress: impl FnMut(&BenchRecord),
) -> CliResult<Vec<BenchRecord>> {
    config.validate_bench()?;
    let mut rows = Vec::new();
    for spec in plan(config, experiment) {
        let record = match worker {
            Some((exe, cfg)) => run_row_isolated(exe, cfg, config, &spec),
            None => run_row(config, &spec),
        };
        sink.append(&record)?;
        progress(&record);
        rows.push(record);
    }
    Ok(rows)
}

/// Peak resident set size of this process from `/proc/self/status`.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
