// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: a JSON file with every field optional, plus
//! command-line overrides. The resolved configuration is echoed next to the
//! outputs and parses back to the identical run.

use std::fs;
use std::path::{Path, PathBuf};

use qoc_core::{
    lattice_problem, AdamConfig, ControlProblem, ControlSchedule, GradientStrategy,
    InitialCondition, Lattice, OptimizeOptions, TargetSpec, TimeGrid, TRANSMON_COUPLING,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub width: usize,
    pub length: usize,
}

impl LatticeConfig {
    pub fn build(&self) -> CliResult<Lattice> {
        Ok(Lattice::new(self.width, self.length)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub total_ns: f64,
    pub steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            total_ns: 100.0,
            steps: 500,
        }
    }
}

impl TimeConfig {
    pub fn grid(&self) -> CliResult<TimeGrid> {
        Ok(TimeGrid::from_total(self.total_ns, self.steps)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Stop early once the loss reaches this value.
    pub target_loss: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            iterations: 1000,
            target_loss: None,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Optimizer iterations timed per row.
    pub iterations: usize,
    /// Lattice width for `vary-qubits`.
    pub width: usize,
    /// Lattice lengths for `vary-qubits`.
    pub lengths: Vec<usize>,
    /// Fixed lattice for `vary-steps` and `vary-checkpoints`.
    pub lattice: LatticeConfig,
    /// Step counts for `vary-steps`; the duration stays `time.total_ns`.
    pub steps: Vec<usize>,
    /// Checkpoint periods for `vary-checkpoints` at `time.steps` steps.
    pub periods: Vec<usize>,
    /// Rows whose predicted peak exceeds this are recorded as failures
    /// without running.
    pub memory_budget_bytes: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            width: 2,
            lengths: vec![2, 3, 4],
            lattice: LatticeConfig {
                width: 2,
                length: 3,
            },
            steps: vec![100, 200, 300, 400, 500],
            periods: vec![1, 2, 5, 10, 15, 20, 22, 23, 25, 30, 50, 100, 250, 500],
            memory_budget_bytes: 4 << 30,
        }
    }
}

/// Problem used by `grad-check`, kept small enough for finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub lattice: LatticeConfig,
    pub time: TimeConfig,
    /// Period used by the two checkpointing strategies.
    pub period: usize,
    /// Amplitudes are drawn uniformly from `[-amplitude, amplitude]`.
    pub amplitude: f64,
    /// Relative finite-difference step.
    pub eps: f64,
    /// Largest accepted max relative error.
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig {
                width: 2,
                length: 2,
            },
            time: TimeConfig {
                total_ns: 4.0,
                steps: 20,
            },
            period: 5,
            amplitude: 0.5,
            eps: 1e-6,
            tolerance: 1e-5,
        }
    }
}

pub const GRAD_CHECK_MAX_DIM: usize = 16;
pub const GRAD_CHECK_MAX_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub target: TargetSpec,
    /// Transmon exchange coupling, rad/ns.
    pub coupling: f64,
    pub time: TimeConfig,
    pub strategy: GradientStrategy,
    pub optimizer: OptimizerConfig,
    pub initial: InitialCondition,
    pub bench: BenchConfig,
    pub grad_check: GradCheckConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig {
                width: 2,
                length: 2,
            },
            target: TargetSpec::default(),
            coupling: TRANSMON_COUPLING,
            time: TimeConfig::default(),
            strategy: GradientStrategy::StoreAll,
            optimizer: OptimizerConfig::default(),
            initial: InitialCondition::default(),
            bench: BenchConfig::default(),
            grad_check: GradCheckConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Command-line values that replace configuration fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategy: Option<GradientStrategy>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Defaults, then the file at `path` if any, then `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut config = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = overrides.strategy {
            config.strategy = s;
        }
        if let Some(dir) = &overrides.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks everything the optimize command consumes, before any compute.
    pub fn validate(&self) -> CliResult<()> {
        let lattice = self.lattice.build()?;
        self.time.grid()?;
        self.strategy.validate(self.time.steps)?;
        for (name, value) in [
            ("target.j", self.target.j),
            ("target.v", self.target.v),
            ("target.tau_ns", self.target.tau_ns),
            ("coupling", self.coupling),
        ] {
            if !value.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        if self.optimizer.iterations == 0 {
            return Err(CliError::Config("optimizer.iterations must be at least 1".into()));
        }
        if let Some(t) = self.optimizer.target_loss {
            if !t.is_finite() {
                return Err(CliError::Config("optimizer.target_loss must be finite".into()));
            }
        }
        self.optimizer.adam().validate()?;
        self.initial.channel_amplitudes(&lattice)?;
        Ok(())
    }

    pub fn validate_bench(&self) -> CliResult<()> {
        let b = &self.bench;
        if b.iterations == 0 {
            return Err(CliError::Config("bench.iterations must be at least 1".into()));
        }
        if b.lengths.is_empty() || b.steps.is_empty() || b.periods.is_empty() {
            return Err(CliError::Config(
                "bench.lengths, bench.steps and bench.periods must be non-empty".into(),
            ));
        }
        if b.steps.contains(&0) {
            return Err(CliError::Config("bench.steps entries must be positive".into()));
        }
        if b.memory_budget_bytes == 0 {
            return Err(CliError::Config("bench.memory_budget_bytes must be positive".into()));
        }
        b.lattice.build()?;
        self.time.grid()?;
        self.optimizer.adam().validate()?;
        Ok(())
    }

    pub fn validate_grad_check(&self) -> CliResult<()> {
        let g = &self.grad_check;
        let lattice = g.lattice.build()?;
        g.time.grid()?;
        if lattice.dim() > GRAD_CHECK_MAX_DIM || g.time.steps > GRAD_CHECK_MAX_STEPS {
            return Err(CliError::Config(format!(
                "grad-check needs D <= {GRAD_CHECK_MAX_DIM} and N <= {GRAD_CHECK_MAX_STEPS}, got D = {} and N = {}",
                lattice.dim(),
                g.time.steps
            )));
        }
        GradientStrategy::PeriodicCheckpointing(g.period).validate(g.time.steps)?;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(g.eps) && positive(g.tolerance) && g.amplitude.is_finite()) {
            return Err(CliError::Config(
                "grad_check.eps and grad_check.tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn problem_for(&self, lattice: &Lattice) -> CliResult<ControlProblem> {
        Ok(lattice_problem(lattice, self.coupling, &self.target)?)
    }

    pub fn initial_schedule(&self, lattice: &Lattice, grid: TimeGrid) -> CliResult<ControlSchedule> {
        Ok(self.initial.schedule(lattice, grid, self.seed)?)
    }

    pub fn optimize_options(&self, iterations: usize, strategy: GradientStrategy) -> OptimizeOptions {
        OptimizeOptions {
            iterations,
            strategy,
            adam: self.optimizer.adam(),
            target_loss: self.optimizer.target_loss,
            audit_unitarity: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        c.validate_bench().unwrap();
        c.validate_grad_check().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"lattice": {"width": 2, "length": 3}, "strategy": "checkpoint:22",
                "target": {"kind": "UC"}, "optimizer": {"iterations": 5}}"#,
        )
        .unwrap();
        assert_eq!(c.lattice.length, 3);
        assert_eq!(c.strategy, GradientStrategy::PeriodicCheckpointing(22));
        assert_eq!(c.target.tau_ns, 0.01);
        assert_eq!(c.optimizer.iterations, 5);
        assert_eq!(c.optimizer.learning_rate, 1e-3);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"strategy": "checkpoint:0"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"unknown": 1}"#).is_err());
        let mut c = ExperimentConfig::default();
        c.optimizer.iterations = 0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let mut c = ExperimentConfig::default();
        c.strategy = GradientStrategy::CheckpointedReversibility(501);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.grad_check.time.steps = 21;
        assert!(c.validate_grad_check().is_err());
        let mut c = ExperimentConfig::default();
        c.grad_check.lattice.length = 3;
        assert!(c.validate_grad_check().is_err());
    }

    #[test]
    fn resolved_json_round_trips() {
        let mut c = ExperimentConfig::default();
        c.initial = InitialCondition::staggered(0.0, -1.0, 0.05);
        c.optimizer.target_loss = Some(1e-4);
        c.coupling = -0.04 * std::f64::consts::PI;
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            strategy: Some(GradientStrategy::Reversibility),
            output_dir: Some("elsewhere".into()),
            seed: Some(9),
        };
        let c = ExperimentConfig::resolve(None, &o).unwrap();
        assert_eq!(c.strategy, GradientStrategy::Reversibility);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(c.seed, 9);
    }
}
