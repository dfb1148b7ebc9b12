// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse synthesis for lattice gauge theory time-evolution slices on
//! transmon arrays.
//!
//! The pipeline runs from [`lattice`] geometry through the model and device
//! Hamiltonians in [`operators`], piecewise-constant evolution in
//! [`propagation`], the infidelity in [`objective`], exact gradients under
//! several memory strategies in [`gradient`], and ADAM in [`optimizer`].
//!
//! Units: `hbar = 1`, time in ns, energies and control amplitudes in rad/ns.

pub mod error;
pub mod gradient;
pub mod lattice;
pub mod linalg;
pub mod objective;
pub mod operators;
pub mod optimizer;
pub mod propagation;

pub use error::{QocError, Result};
pub use gradient::{
    finite_difference_gradient, gradient, gradient_with, loss, max_relative_error,
    GradientOptions, GradientResult, GradientStrategy, MemoryStats, PhaseTimings,
};
pub use lattice::{Edge, Lattice};
pub use linalg::{EigenDecomposition, Operator, StateVector};
pub use objective::{default_lattice_problem, lattice_problem, TargetKind, TargetSpec};
pub use operators::{device_hamiltonians, DeviceHamiltonians, SpinOperators, TRANSMON_COUPLING};
pub use optimizer::{
    optimize, optimize_with, Adam, AdamConfig, ConvergenceRecord, InitialCondition,
    OptimizationResult, OptimizeOptions, DEFAULT_INITIAL_AMPLITUDE,
};
pub use propagation::{ControlProblem, ControlSchedule, StoragePolicy, TimeGrid};
