// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant evolution under drift plus controls.
//!
//! Steps are 0-based. Step `t` applies `U_t = exp(-i H_t dt)` with
//! `H_t = H_0 + sum_i g[i, t] H_i`, and the propagator after step `t` is
//! `K_t = U_t ... U_0`. The propagator before step 0 is the identity, so a
//! trajectory of `N` steps ends at `K_{N-1}`, the final propagator.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QocError, Result};
use crate::linalg::{
    self, adjoint_dot, check_same_dim, dagger, hermiticity_error, identity, max_abs,
    unitarity_error, EigenDecomposition, Operator, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, dt: f64) -> Result<Self> {
        if steps == 0 {
            return Err(QocError::InvalidGrid("at least one step is required".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(QocError::InvalidGrid(format!(
                "step duration must be positive, got {dt}"
            )));
        }
        Ok(Self { steps, dt })
    }

    /// Splits a total duration `total` (ns) into `steps` equal steps.
    pub fn from_total(total: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(QocError::InvalidGrid("at least one step is required".into()));
        }
        Self::new(steps, total / steps as f64)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn total(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Control amplitudes `g[i, t]` in rad/ns; row `i` is channel `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    amplitudes: Array2<f64>,
    grid: TimeGrid,
}

impl ControlSchedule {
    pub fn new(amplitudes: Array2<f64>, grid: TimeGrid) -> Result<Self> {
        if amplitudes.ncols() != grid.steps() {
            return Err(QocError::DimensionMismatch {
                expected: grid.steps(),
                actual: amplitudes.ncols(),
            });
        }
        if !amplitudes.iter().all(|g| g.is_finite()) {
            return Err(QocError::NonFinite("control amplitudes"));
        }
        Ok(Self { amplitudes, grid })
    }

    pub fn constant(channels: usize, grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem((channels, grid.steps()), value), grid)
    }

    pub fn amplitudes(&self) -> &Array2<f64> {
        &self.amplitudes
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// Replaces the amplitudes, keeping the grid. Shape must not change.
    pub fn with_amplitudes(&self, amplitudes: Array2<f64>) -> Result<Self> {
        if amplitudes.dim() != self.amplitudes.dim() {
            return Err(QocError::DimensionMismatch {
                expected: self.amplitudes.len(),
                actual: amplitudes.len(),
            });
        }
        Self::new(amplitudes, self.grid)
    }
}

/// Everything a gradient evaluation needs besides the schedule.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    drift: Operator,
    controls: Vec<Operator>,
    target: Operator,
}

impl ControlProblem {
    pub fn new(drift: Operator, controls: Vec<Operator>, target: Operator) -> Result<Self> {
        let dim = check_same_dim(&drift, &target)?;
        for h in &controls {
            check_same_dim(&drift, h)?;
        }
        for h in std::iter::once(&drift).chain(&controls) {
            if !linalg::is_finite(h) {
                return Err(QocError::NonFinite("Hamiltonian"));
            }
            let dev = hermiticity_error(h);
            if dev > 1e-12 * max_abs(h.view()).max(1.0) {
                return Err(QocError::NotStructured {
                    property: "Hermitian",
                    deviation: dev,
                });
            }
        }
        let dev = unitarity_error(&target);
        if !(dev <= 1e-12) {
            return Err(QocError::NotStructured {
                property: "unitary",
                deviation: dev,
            });
        }
        debug_assert_eq!(dim, target.nrows());
        Ok(Self {
            drift,
            controls,
            target,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn drift(&self) -> &Operator {
        &self.drift
    }

    pub fn controls(&self) -> &[Operator] {
        &self.controls
    }

    pub fn target(&self) -> &Operator {
        &self.target
    }

    pub fn channels(&self) -> usize {
        self.controls.len()
    }

    pub(crate) fn check_schedule(&self, schedule: &ControlSchedule) -> Result<()> {
        if schedule.channels() != self.channels() {
            return Err(QocError::DimensionMismatch {
                expected: self.channels(),
                actual: schedule.channels(),
            });
        }
        Ok(())
    }
}

/// `H_t = H_0 + sum_i g[i, t] H_i`.
pub fn step_hamiltonian(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    t: usize,
) -> Result<Operator> {
    problem.check_schedule(schedule)?;
    if t >= schedule.steps() {
        return Err(QocError::StepOutOfRange {
            index: t,
            steps: schedule.steps(),
        });
    }
    let mut h = problem.drift.clone();
    for (control, &g) in problem.controls.iter().zip(schedule.amplitudes.column(t)) {
        if g != 0.0 {
            h.scaled_add(Complex64::new(g, 0.0), control);
        }
    }
    Ok(h)
}

/// Eigendecomposition of `H_t`, from which both `U_t` and the exponential's
/// derivative at step `t` follow.
pub(crate) fn step_decomposition(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    t: usize,
) -> Result<EigenDecomposition> {
    linalg::eigh(&step_hamiltonian(problem, schedule, t)?)
}

pub fn step_unitary(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    t: usize,
) -> Result<Operator> {
    Ok(step_decomposition(problem, schedule, t)?.exp_unitary(schedule.grid().dt()))
}

/// Advances `k` across steps `range`, calling `visit(t, &K_t)` after each.
pub(crate) fn sweep(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    range: std::ops::Range<usize>,
    mut k: Operator,
    mut visit: impl FnMut(usize, &Operator),
) -> Result<Operator> {
    for t in range {
        let u = step_unitary(problem, schedule, t)?;
        k = u.dot(&k);
        visit(t, &k);
    }
    Ok(k)
}

/// Which propagators a forward pass keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoragePolicy {
    None,
    EveryStep,
    /// Keep `K_t` whenever `t + 1` is a multiple of the period.
    Periodic(usize),
}

#[derive(Debug, Clone)]
pub struct Propagation {
    /// `K_{N-1}`, the full evolution.
    pub final_propagator: Operator,
    /// Retained `(t, K_t)` pairs in ascending `t`.
    pub stored: Vec<(usize, Operator)>,
}

pub fn forward_propagate(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    policy: StoragePolicy,
) -> Result<Propagation> {
    problem.check_schedule(schedule)?;
    if let StoragePolicy::Periodic(0) = policy {
        return Err(QocError::InvalidPeriod {
            period: 0,
            steps: schedule.steps(),
        });
    }
    let mut stored = Vec::new();
    let final_propagator = sweep(
        problem,
        schedule,
        0..schedule.steps(),
        identity(problem.dim()),
        |t, k| {
            let keep = match policy {
                StoragePolicy::None => false,
                StoragePolicy::EveryStep => true,
                StoragePolicy::Periodic(c) => (t + 1) % c == 0,
            };
            if keep {
                stored.push((t, k.clone()));
            }
        },
    )?;
    Ok(Propagation {
        final_propagator,
        stored,
    })
}

/// `psi_N = K_{N-1} psi_0`, propagated as a vector.
pub fn evolve_state(
    problem: &ControlProblem,
    schedule: &ControlSchedule,
    psi0: &StateVector,
) -> Result<StateVector> {
    problem.check_schedule(schedule)?;
    if psi0.len() != problem.dim() {
        return Err(QocError::DimensionMismatch {
            expected: problem.dim(),
            actual: psi0.len(),
        });
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(QocError::InvalidArgument(format!(
            "initial state must be normalized, |psi0| = {norm}"
        )));
    }
    let mut psi: Array1<Complex64> = psi0.clone();
    for t in 0..schedule.steps() {
        psi = step_unitary(problem, schedule, t)?.dot(&psi);
    }
    Ok(psi)
}

/// `K_{t-1} = U_t^H K_t`.
pub fn reverse_step(k_t: &Operator, u_t: &Operator) -> Result<Operator> {
    check_same_dim(u_t, k_t)?;
    Ok(adjoint_dot(u_t, k_t))
}

/// `psi_{t-1} = U_t^H psi_t`.
pub fn reverse_state(psi_t: &StateVector, u_t: &Operator) -> Result<StateVector> {
    linalg::check_square(u_t)?;
    if psi_t.len() != u_t.nrows() {
        return Err(QocError::DimensionMismatch {
            expected: u_t.nrows(),
            actual: psi_t.len(),
        });
    }
    Ok(dagger(u_t).dot(psi_t))
}
