// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact loss gradients with respect to every control amplitude, under four
//! strategies for restoring the forward trajectory during the backward sweep.
//!
//! # Adjoint recursion
//!
//! Write the final propagator as `K = P_t U_t K_{t-1}` with
//! `P_t = U_{N-1} ... U_{t+1}`. For a loss with seed `A` (`dF = 2 Re Tr(A^H dK)`)
//! the adjoint on `U_t` is `Lambda_t = mu_t K_{t-1}^H` where `mu_t = P_t^H A`.
//! Sweeping backwards, `mu_{N-1} = A` and `mu_{t-1} = U_t^H mu_t`. Each
//! `Lambda_t` is pulled back through the exponential to an adjoint `Hbar_t` on
//! `H_t`, and since `dH_t / dg[i, t] = H_i`,
//!
//! ```text
//! dF / dg[i, t] = 2 Re Tr(Hbar_t^H H_i)
//! ```
//!
//! The backward step at `t` therefore needs `K_{t-1}` and the
//! eigendecomposition of `H_t`. The eigendecomposition is rebuilt from the
//! controls by every strategy (counted as a *linearization*). The strategies
//! differ only in where `K_{t-1}` comes from:
//!
//! | strategy | retained | `K_{t-1}` from |
//! |---|---|---|
//! | store-all | every `K_t` | the store |
//! | checkpoint:C | `K` entering each segment | segment recomputed forward into a buffer |
//! | reverse | nothing | `U_t^H K_t` |
//! | checkpoint-reverse:C | `K` at each segment end | `U_t^H K_t` within the segment |
//!
//! # Memory accounting
//!
//! [`MemoryStats::peak_matrices`] is the peak number of `D x D` matrices held
//! in checkpoints and segment buffers, plus [`ADJOINT_WORKSPACE`] (the adjoint
//! `mu` and the propagator cursor). Per-step temporaries are a fixed
//! [`SCRATCH_MATRICES`] and are reported separately. With `S = ceil(N / C)`:
//!
//! | strategy | peak_matrices | step_recomputations |
//! |---|---|---|
//! | store-all | `N + 2` | 0 |
//! | checkpoint:C | `S + C + 2` | `N - S` |
//! | reverse | `2` | `N` |
//! | checkpoint-reverse:C | `S + 2` | `N` |
//!
//! A step recomputation is a step unitary built to restore a trajectory
//! propagator, either by recomputing a segment or by reversal.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{QocError, Result};
use crate::linalg::{
    adjoint_dot, dagger, identity, real_inner, unitarity_error, EigenDecomposition,
    Operator,
};
use crate::objective::{infidelity, infidelity_adjoint_seed, overlap};
use crate::propagation::{
    forward_propagate, step_decomposition, sweep, ControlProblem, ControlSchedule,
    StoragePolicy,
};

/// Matrices live for the whole backward sweep in every strategy: the adjoint
/// `mu` and the propagator cursor.
pub const ADJOINT_WORKSPACE: usize = 2;

/// Per-step temporaries: `H_t`, its eigenvectors, `U_t`, `Lambda_t`, `Hbar_t`.
pub const SCRATCH_MATRICES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GradientStrategy {
    StoreAll,
    PeriodicCheckpointing(usize),
    Reversibility,
    CheckpointedReversibility(usize),
}

impl GradientStrategy {
    pub const fn all(period: usize) -> [GradientStrategy; 4] {
        [
            Self::StoreAll,
            Self::PeriodicCheckpointing(period),
            Self::Reversibility,
            Self::CheckpointedReversibility(period),
        ]
    }

    pub fn period(&self) -> Option<usize> {
        match *self {
            Self::PeriodicCheckpointing(c) | Self::CheckpointedReversibility(c) => Some(c),
            Self::StoreAll | Self::Reversibility => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StoreAll => "store-all",
            Self::PeriodicCheckpointing(_) => "checkpoint",
            Self::Reversibility => "reverse",
            Self::CheckpointedReversibility(_) => "checkpoint-reverse",
        }
    }

    pub fn validate(&self, steps: usize) -> Result<()> {
        match self.period() {
            Some(c) if c == 0 || c > steps => Err(QocError::InvalidPeriod { period: c, steps }),
            _ => Ok(()),
        }
    }

    fn segments(&self, steps: usize) -> usize {
        self.period().map_or(1, |c| steps.div_ceil(c))
    }

    /// Closed-form counters for a trajectory of `steps` steps in dimension `dim`.
    pub fn predicted_stats(&self, steps: usize, dim: usize) -> Result<MemoryStats> {
        self.validate(steps)?;
        let s = self.segments(steps);
        let (retained, checkpoints, recomputations) = match *self {
            Self::StoreAll => (steps, 0, 0),
            Self::PeriodicCheckpointing(c) => (s + c, s, steps - s),
            Self::Reversibility => (0, 0, steps),
            Self::CheckpointedReversibility(_) => (s, s, steps),
        };
        Ok(MemoryStats::new(retained, checkpoints, recomputations, steps, dim))
    }
}

impl fmt::Display for GradientStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.period() {
            Some(c) => write!(f, "{}:{c}", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for GradientStrategy {
    type Err = QocError;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || QocError::InvalidStrategy(s.to_string());
        let period = |p: &str| -> Result<usize> {
            match p.trim().parse::<usize>() {
                Ok(0) | Err(_) => Err(invalid()),
                Ok(c) => Ok(c),
            }
        };
        match s.trim().split_once(':') {
            None => match s.trim() {
                "store-all" => Ok(Self::StoreAll),
                "reverse" => Ok(Self::Reversibility),
                _ => Err(invalid()),
            },
            Some(("checkpoint", p)) => Ok(Self::PeriodicCheckpointing(period(p)?)),
            Some(("checkpoint-reverse", p)) => Ok(Self::CheckpointedReversibility(period(p)?)),
            Some(_) => Err(invalid()),
        }
    }
}

impl TryFrom<String> for GradientStrategy {
    type Error = QocError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GradientStrategy> for String {
    fn from(s: GradientStrategy) -> String {
        s.to_string()
    }
}

/// Deterministic memory and recomputation counters of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryStats {
    /// Peak retained `D x D` matrices, including [`ADJOINT_WORKSPACE`].
    pub peak_matrices: usize,
    /// Checkpoints held by the strategy.
    pub checkpoints: usize,
    pub workspace_matrices: usize,
    /// Reported separately; not part of `peak_matrices`.
    pub scratch_matrices: usize,
    /// Step unitaries built to restore trajectory propagators.
    pub step_recomputations: usize,
    /// Per-step eigendecompositions performed by the backward sweep.
    pub linearizations: usize,
    /// `peak_matrices * 16 * D^2`.
    pub peak_bytes_estimate: u64,
}

impl MemoryStats {
    fn new(
        retained: usize,
        checkpoints: usize,
        step_recomputations: usize,
        linearizations: usize,
        dim: usize,
    ) -> Self {
        let peak_matrices = retained + ADJOINT_WORKSPACE;
        Self {
            peak_matrices,
            checkpoints,
            workspace_matrices: ADJOINT_WORKSPACE,
            scratch_matrices: SCRATCH_MATRICES,
            step_recomputations,
            linearizations,
            peak_bytes_estimate: matrix_bytes(dim) * peak_matrices as u64,
        }
    }
}

/// Bytes of one dense complex `dim x dim` matrix.
pub fn matrix_bytes(dim: usize) -> u64 {
    16 * (dim as u64) * (dim as u64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub forward: Duration,
    pub backward: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.forward + self.backward
    }
}

#[derive(Debug, Clone)]
pub struct GradientResult {
    pub loss: f64,
    /// `dF / dg[i, t]`, same shape as the schedule.
    pub grad: Array2<f64>,
    pub stats: MemoryStats,
    pub timings: PhaseTimings,
    /// Largest `max |K^H K - I|` over the final propagator and every
    /// propagator the backward sweep used, when requested through
    /// [`GradientOptions`].
    pub unitarity_audit: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradientOptions {
    /// Check unitarity of every restored propagator. Costs one extra matrix
    /// product per step.
    pub audit_unitarity: bool,
}

/// Loss and gradient of the infidelity `1 - |Tr(K_T^H K)|^2 / D^2`.
pub fn gradient(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    strategy: GradientStrategy,
) -> Result<GradientResult> {
    gradient_with(problem, schedule, strategy, GradientOptions::default())
}

pub fn gradient_with(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    strategy: GradientStrategy,
    options: GradientOptions,
) -> Result<GradientResult> {
    problem.check_schedule(schedule)?;
    strategy.validate(schedule.steps())?;

    let mut sweep_state = Backward::new(problem, schedule, options);
    let result = match strategy {
        GradientStrategy::StoreAll => sweep_state.store_all(),
        GradientStrategy::PeriodicCheckpointing(c) => sweep_state.periodic(c),
        GradientStrategy::Reversibility => sweep_state.reversible(),
        GradientStrategy::CheckpointedReversibility(c) => sweep_state.checkpoint_reversible(c),
    };
    result?;
    sweep_state.finish()
}

/// Counts retained matrices while a strategy runs.
#[derive(Debug, Default)]
struct Ledger {
    live: usize,
    peak: usize,
    checkpoints: usize,
    recomputations: usize,
    linearizations: usize,
}

impl Ledger {
    fn hold(&mut self, n: usize) {
        self.live += n;
        self.peak = self.peak.max(self.live);
    }

    fn release(&mut self, n: usize) {
        self.live -= n;
    }
}

struct Backward<'a> {
    problem: &'a ControlProblem,
    schedule: &'a ControlSchedule,
    dt: f64,
    mu: Operator,
    grad: Array2<f64>,
    loss: f64,
    ledger: Ledger,
    timings: PhaseTimings,
    audit: Option<f64>,
}

impl<'a> Backward<'a> {
    fn new(
        problem: &'a ControlProblem,
        schedule: &'a ControlSchedule,
        options: GradientOptions,
    ) -> Self {
        Self {
            problem,
            schedule,
            dt: schedule.grid().dt(),
            mu: Array2::zeros((0, 0)),
            grad: Array2::zeros((schedule.channels(), schedule.steps())),
            loss: f64::NAN,
            ledger: Ledger::default(),
            timings: PhaseTimings::default(),
            audit: options.audit_unitarity.then_some(0.0),
        }
    }

    fn steps(&self) -> usize {
        self.schedule.steps()
    }

    /// Runs the forward sweep, calling `keep(t, K_t)` after every step, then
    /// seeds the adjoint from the final propagator.
    fn forward(&mut self, mut keep: impl FnMut(usize, &Operator)) -> Result<Operator> {
        let start = Instant::now();
        let k = sweep(
            self.problem,
            self.schedule,
            0..self.steps(),
            identity(self.problem.dim()),
            &mut keep,
        )?;
        if let Some(worst) = self.audit.as_mut() {
            *worst = worst.max(unitarity_error(&k));
        }
        let o = overlap(&k, self.problem.target())?;
        self.loss = o.loss;
        self.mu = infidelity_adjoint_seed(&k, self.problem.target())?;
        self.timings.forward = start.elapsed();
        Ok(k)
    }

    fn linearize(&mut self, t: usize) -> Result<(EigenDecomposition, Operator)> {
        self.ledger.linearizations += 1;
        let dec = step_decomposition(self.problem, self.schedule, t)?;
        let u = dec.exp_unitary(self.dt);
        Ok((dec, u))
    }

    /// Backward step `t` given `K_{t-1}`.
    fn accumulate(&mut self, t: usize, dec: &EigenDecomposition, u: &Operator, k_prev: &Operator) {
        if let Some(worst) = self.audit.as_mut() {
            *worst = worst.max(unitarity_error(k_prev));
        }
        let lambda = self.mu.dot(&dagger(k_prev));
        let hbar = dec.exp_vjp(self.dt, &lambda);
        for (i, control) in self.problem.controls().iter().enumerate() {
            self.grad[[i, t]] = 2.0 * real_inner(&hbar, control);
        }
        self.mu = adjoint_dot(u, &self.mu);
    }

    fn store_all(&mut self) -> Result<()> {
        let n = self.steps();
        let mut entries = Vec::with_capacity(n);
        entries.push(identity(self.problem.dim()));
        let mut held = 1;
        self.forward(|t, k| {
            if t + 1 < n {
                entries.push(k.clone());
                held += 1;
            }
        })?;
        self.ledger.hold(held);

        let start = Instant::now();
        for t in (0..n).rev() {
            let (dec, u) = self.linearize(t)?;
            let k_prev = entries.pop().expect("one stored propagator per step");
            self.accumulate(t, &dec, &u, &k_prev);
            self.ledger.release(1);
        }
        self.timings.backward = start.elapsed();
        Ok(())
    }

    fn periodic(&mut self, period: usize) -> Result<()> {
        let n = self.steps();
        let mut checkpoints = vec![identity(self.problem.dim())];
        self.forward(|t, k| {
            if (t + 1) % period == 0 && t + 1 < n {
                checkpoints.push(k.clone());
            }
        })?;
        self.ledger.checkpoints = checkpoints.len();
        self.ledger.hold(checkpoints.len());

        let start = Instant::now();
        let mut buffer: Vec<Operator> = Vec::with_capacity(period);
        for (seg, entry) in checkpoints.iter().enumerate().rev() {
            let first = seg * period;
            let end = (first + period).min(n);

            buffer.push(entry.clone());
            self.ledger.hold(1);
            let mut recomputed = 0;
            sweep(
                self.problem,
                self.schedule,
                first..end - 1,
                entry.clone(),
                |_, k| {
                    buffer.push(k.clone());
                    recomputed += 1;
                },
            )?;
            self.ledger.recomputations += recomputed;
            self.ledger.hold(recomputed);

            for t in (first..end).rev() {
                let (dec, u) = self.linearize(t)?;
                let k_prev = buffer.pop().expect("segment buffer covers every step");
                self.accumulate(t, &dec, &u, &k_prev);
                self.ledger.release(1);
            }
        }
        self.timings.backward = start.elapsed();
        Ok(())
    }

    fn reversible(&mut self) -> Result<()> {
        let mut cursor = self.forward(|_, _| {})?;
        let start = Instant::now();
        for t in (0..self.steps()).rev() {
            let (dec, u) = self.linearize(t)?;
            let k_prev = adjoint_dot(&u, &cursor);
            self.ledger.recomputations += 1;
            self.accumulate(t, &dec, &u, &k_prev);
            cursor = k_prev;
        }
        self.timings.backward = start.elapsed();
        Ok(())
    }

    fn checkpoint_reversible(&mut self, period: usize) -> Result<()> {
        let n = self.steps();
        let mut checkpoints = Vec::with_capacity(n.div_ceil(period));
        self.forward(|t, k| {
            if (t + 1) % period == 0 || t + 1 == n {
                checkpoints.push(k.clone());
            }
        })?;
        self.ledger.checkpoints = checkpoints.len();
        self.ledger.hold(checkpoints.len());

        let start = Instant::now();
        for (seg, exit) in checkpoints.iter().enumerate().rev() {
            let first = seg * period;
            let end = (first + period).min(n);
            let mut cursor = exit.clone();
            for t in (first..end).rev() {
                let (dec, u) = self.linearize(t)?;
                let k_prev = adjoint_dot(&u, &cursor);
                self.ledger.recomputations += 1;
                self.accumulate(t, &dec, &u, &k_prev);
                cursor = k_prev;
            }
        }
        self.timings.backward = start.elapsed();
        Ok(())
    }

    fn finish(self) -> Result<GradientResult> {
        if !self.loss.is_finite() {
            return Err(QocError::NonFinite("loss"));
        }
        if !self.grad.iter().all(|g| g.is_finite()) {
            return Err(QocError::NonFinite("gradient"));
        }
        let l = &self.ledger;
        let stats = MemoryStats::new(
            l.peak,
            l.checkpoints,
            l.recomputations,
            l.linearizations,
            self.problem.dim(),
        );
        Ok(GradientResult {
            loss: self.loss,
            grad: self.grad,
            stats,
            timings: self.timings,
            unitarity_audit: self.audit,
        })
    }
}

/// Loss of a schedule, forward pass only.
pub fn loss(problem: &ControlProblem, schedule: &ControlSchedule) -> Result<f64> {
    let k = forward_propagate(problem, schedule, StoragePolicy::None)?.final_propagator;
    infidelity(&k, problem.target())
}

/// Central differences of the loss with step `eps * max(1, |g|)` per
/// amplitude. Costs `2 m N` forward passes.
pub fn finite_difference_gradient(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    eps: f64,
) -> Result<Array2<f64>> {
    if !(eps.is_finite() && eps != 0.0) {
        return Err(QocError::InvalidArgument(format!(
            "finite-difference step must be nonzero, got {eps}"
        )));
    }
    problem.check_schedule(schedule)?;
    let base = schedule.amplitudes();
    let mut grad = Array2::zeros(base.dim());
    for ((i, t), &g) in base.indexed_iter() {
        let h = eps * g.abs().max(1.0);
        let mut shifted = base.clone();
        shifted[[i, t]] = g + h;
        let plus = loss(problem, &schedule.with_amplitudes(shifted.clone())?)?;
        shifted[[i, t]] = g - h;
        let minus = loss(problem, &schedule.with_amplitudes(shifted)?)?;
        grad[[i, t]] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// `max |a - b| / max |b|`, the norm-wise relative deviation of `a` from `b`.
pub fn max_relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
