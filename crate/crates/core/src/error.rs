// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the control engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QocError {
    #[error("invalid lattice {width}x{length}: {reason}")]
    InvalidLattice {
        width: usize,
        length: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("qubit {0} appears more than once")]
    DuplicateQubit(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("step index {index} out of range for {steps} steps")]
    StepOutOfRange { index: usize, steps: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid gradient strategy '{0}'")]
    InvalidStrategy(String),

    #[error("checkpoint period {period} must lie in 1..={steps}")]
    InvalidPeriod { period: usize, steps: usize },

    #[error("operator is not {property} (deviation {deviation:e})")]
    NotStructured {
        property: &'static str,
        deviation: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition failed to converge")]
    EigenFailure,
}

pub type Result<T> = std::result::Result<T, QocError>;
