// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! ADAM over control amplitudes.

use std::time::Instant;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QocError, Result};
use crate::gradient::{gradient_with, loss, GradientOptions, GradientStrategy, MemoryStats};
use crate::lattice::Lattice;
use crate::propagation::{ControlProblem, ControlSchedule, TimeGrid};

/// `2 pi * 5 MHz` in rad/ns.
pub const DEFAULT_INITIAL_AMPLITUDE: f64 = 2.0 * std::f64::consts::PI * 0.005;

/// Starting amplitudes: a constant per channel plus optional seeded noise.
///
/// A constant shared by every channel respects the lattice symmetries and the
/// `g -> -g` symmetry of the loss, and can stall in a symmetric stationary
/// point. Orientation-dependent constants and a little noise avoid that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCondition {
    /// Amplitude of every channel, rad/ns.
    pub constant: f64,
    /// Per-channel amplitudes replacing `constant`.
    pub channel_constants: Option<Vec<f64>>,
    /// `[horizontal, vertical]`: amplitudes of qubits on horizontal and on
    /// vertical edges, replacing `constant`.
    pub staggered: Option<[f64; 2]>,
    /// Half-width of uniform noise added to each amplitude, rad/ns.
    pub noise: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            constant: DEFAULT_INITIAL_AMPLITUDE,
            channel_constants: None,
            staggered: None,
            noise: 0.0,
        }
    }
}

impl InitialCondition {
    /// Horizontal-edge qubits at `horizontal`, vertical-edge qubits at
    /// `vertical`, so qubits meeting at a corner rotate at different rates.
    pub fn staggered(horizontal: f64, vertical: f64, noise: f64) -> Self {
        Self {
            constant: 0.0,
            channel_constants: None,
            staggered: Some([horizontal, vertical]),
            noise,
        }
    }

    /// Per-channel constants for the device controls of `lattice`.
    pub fn channel_amplitudes(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        let channels = lattice.qubits();
        let values = match (&self.channel_constants, self.staggered) {
            (Some(_), Some(_)) => {
                return Err(QocError::InvalidArgument(
                    "set at most one of channel_constants and staggered".into(),
                ))
            }
            (Some(c), None) if c.len() != channels => {
                return Err(QocError::DimensionMismatch {
                    expected: channels,
                    actual: c.len(),
                })
            }
            (Some(c), None) => c.clone(),
            (None, Some([h, v])) => lattice
                .edges()
                .iter()
                .map(|e| if e.is_horizontal() { h } else { v })
                .collect(),
            (None, None) => vec![self.constant; channels],
        };
        if !(values.iter().all(|g| g.is_finite()) && self.noise.is_finite() && self.noise >= 0.0) {
            return Err(QocError::InvalidArgument(
                "initial amplitudes must be finite and noise non-negative".into(),
            ));
        }
        Ok(values)
    }

    /// Initial schedule over the device controls of `lattice`. The noise is
    /// drawn from a ChaCha8 stream seeded with `seed`.
    pub fn schedule(&self, lattice: &Lattice, grid: TimeGrid, seed: u64) -> Result<ControlSchedule> {
        let constants = self.channel_amplitudes(lattice)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = self.noise;
        let g = Array2::from_shape_fn((constants.len(), grid.steps()), |(i, _)| {
            if noise > 0.0 {
                constants[i] + rng.random_range(-noise..=noise)
            } else {
                constants[i]
            }
        });
        ControlSchedule::new(g, grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(QocError::InvalidArgument(format!(
                "invalid ADAM settings {self:?}"
            )))
        }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Array2<f64>,
    v: Array2<f64>,
    step: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, shape: (usize, usize)) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: Array2::zeros(shape),
            v: Array2::zeros(shape),
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// One bias-corrected update of `params` against `grad`.
    pub fn step(&mut self, params: &mut Array2<f64>, grad: &Array2<f64>) -> Result<()> {
        if params.dim() != self.m.dim() || grad.dim() != self.m.dim() {
            return Err(QocError::DimensionMismatch {
                expected: self.m.len(),
                actual: grad.len(),
            });
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(QocError::NonFinite("gradient"));
        }
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        self.step += 1;
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        Zip::from(params)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub loss: f64,
    pub grad_inf_norm: f64,
    /// Elapsed since the run started, at the end of this iteration.
    pub wall_ms: f64,
    pub forward_ms: f64,
    pub backward_ms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    /// Gradient evaluations (and ADAM updates) to perform.
    pub iterations: usize,
    pub strategy: GradientStrategy,
    pub adam: AdamConfig,
    /// Stop once an evaluated loss reaches this value.
    pub target_loss: Option<f64>,
    /// Track unitarity of every propagator used by every gradient.
    pub audit_unitarity: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            iterations: 1000,
            strategy: GradientStrategy::StoreAll,
            adam: AdamConfig::default(),
            target_loss: None,
            audit_unitarity: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Lowest-loss schedule seen, including the one after the last update.
    pub best: ControlSchedule,
    pub best_loss: f64,
    /// Schedule after the last update.
    pub final_schedule: ControlSchedule,
    pub final_loss: f64,
    pub history: Vec<ConvergenceRecord>,
    /// Counters of the last gradient evaluation.
    pub stats: Option<MemoryStats>,
    /// Worst unitarity deviation over the run, when audited.
    pub unitarity_audit: Option<f64>,
}

pub fn optimize(
    problem: &ControlProblem,
    initial: &ControlSchedule,
    options: &OptimizeOptions,
) -> Result<OptimizationResult> {
    optimize_with(problem, initial, options, |_| {})
}

/// Runs ADAM, calling `progress` after every iteration.
///
/// Iteration `k` evaluates loss and gradient at the current amplitudes and
/// then updates them; the loss recorded for iteration `k` is the loss before
/// its update. The schedule after the final update is evaluated once more.
pub fn optimize_with(
    problem: &ControlProblem,
    initial: &ControlSchedule,
    options: &OptimizeOptions,
    mut progress: impl FnMut(&ConvergenceRecord),
) -> Result<OptimizationResult> {
    if options.iterations == 0 {
        return Err(QocError::InvalidArgument(
            "iterations must be at least 1".into(),
        ));
    }
    options.strategy.validate(initial.steps())?;
    let mut adam = Adam::new(options.adam, initial.amplitudes().dim())?;

    let start = Instant::now();
    let mut params = initial.amplitudes().clone();
    let mut best = (f64::INFINITY, initial.clone());
    let mut history = Vec::with_capacity(options.iterations);
    let mut stats = None;
    let mut reached = false;
    let mut last_loss = f64::NAN;
    let mut audit: Option<f64> = None;
    let grad_options = GradientOptions {
        audit_unitarity: options.audit_unitarity,
    };

    for iteration in 0..options.iterations {
        let schedule = initial.with_amplitudes(params.clone())?;
        let r = gradient_with(problem, &schedule, options.strategy, grad_options)?;
        if let Some(a) = r.unitarity_audit {
            audit = Some(audit.map_or(a, |w: f64| w.max(a)));
        }
        if r.loss < best.0 {
            best = (r.loss, schedule);
        }
        let record = ConvergenceRecord {
            iteration,
            loss: r.loss,
            grad_inf_norm: r.grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
            wall_ms: 0.0,
            forward_ms: r.timings.forward.as_secs_f64() * 1e3,
            backward_ms: r.timings.backward.as_secs_f64() * 1e3,
        };
        stats = Some(r.stats);
        last_loss = r.loss;
        reached = options.target_loss.is_some_and(|target| r.loss <= target);
        if !reached {
            adam.step(&mut params, &r.grad)?;
        }
        let record = ConvergenceRecord {
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            ..record
        };
        progress(&record);
        history.push(record);
        if reached {
            break;
        }
    }

    let final_schedule = initial.with_amplitudes(params)?;
    let final_loss = if reached {
        last_loss
    } else {
        loss(problem, &final_schedule)?
    };
    if !final_loss.is_finite() {
        return Err(QocError::NonFinite("loss"));
    }
    if final_loss < best.0 {
        best = (final_loss, final_schedule.clone());
    }
    Ok(OptimizationResult {
        best: best.1,
        best_loss: best.0,
        final_schedule,
        final_loss,
        history,
        stats,
        unitarity_audit: audit,
    })
}
