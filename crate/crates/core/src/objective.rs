// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Gate infidelity, its reverse-mode seed, and lattice-model targets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::Lattice;
use crate::linalg::{self, check_same_dim, frobenius_norm, Operator};
use crate::operators::{self, corner_hamiltonian, device_hamiltonians, plaquette_hamiltonian};
use crate::propagation::ControlProblem;

/// Normalized overlap `z = Tr(K_T^H K) / D` and the loss `1 - |z|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub z: Complex64,
    pub loss: f64,
}

pub fn overlap(propagator: &Operator, target: &Operator) -> Result<Overlap> {
    let dim = check_same_dim(target, propagator)?;
    let tr = linalg::real_inner(target, propagator);
    // Im Tr(A^H B) = sum (a.re b.im - a.im b.re)
    let im: f64 = target
        .iter()
        .zip(propagator)
        .map(|(a, b)| a.re * b.im - a.im * b.re)
        .sum();
    let z = Complex64::new(tr, im) / dim as f64;
    Ok(Overlap {
        z,
        loss: 1.0 - z.norm_sqr(),
    })
}

/// `1 - |Tr(K_T^H K)|^2 / D^2`; invariant under global phase of either argument.
pub fn infidelity(propagator: &Operator, target: &Operator) -> Result<f64> {
    Ok(overlap(propagator, target)?.loss)
}

/// Adjoint `A` of the loss with respect to the final propagator, in the
/// convention `dF = 2 Re Tr(A^H dK)`. Equals `-(z / D) K_T`.
pub fn infidelity_adjoint_seed(propagator: &Operator, target: &Operator) -> Result<Operator> {
    let o = overlap(propagator, target)?;
    let scale = -o.z / target.nrows() as f64;
    Ok(target.mapv(|t| t * scale))
}

/// `U_P(tau) = exp(+i tau J H_P)`, i.e. `exp(-i H tau)` with `H = -J H_P`.
pub fn target_plaquette_unitary(lattice: &Lattice, j: f64, tau: f64) -> Result<Operator> {
    let h = plaquette_hamiltonian(lattice).mapv(|z| z * -j);
    linalg::expm_unitary(&h, tau)
}

/// `U_C(tau) = exp(-i tau V H_C)`. Diagonal.
pub fn target_corner_unitary(lattice: &Lattice, v: f64, tau: f64) -> Result<Operator> {
    let h = corner_hamiltonian(lattice).mapv(|z| z * v);
    linalg::expm_unitary(&h, tau)
}

/// Frobenius distance between `exp(-i t (A + B))` and the first-order product
/// formula `[exp(-i t A / q) exp(-i t B / q)]^q`.
pub fn product_formula_error(a: &Operator, b: &Operator, t: f64, q: u32) -> Result<f64> {
    check_same_dim(a, b)?;
    let q = q.max(1);
    let exact = linalg::expm_unitary(&(a + b), t)?;
    let slice = t / q as f64;
    let step = linalg::expm_unitary(a, slice)?.dot(&linalg::expm_unitary(b, slice)?);
    let mut product = linalg::identity(a.nrows());
    for _ in 0..q {
        product = step.dot(&product);
    }
    Ok(frobenius_norm(&(exact - product)))
}

/// Error of the `q`-slice split of the model evolution into plaquette and
/// corner factors, `|| exp(-i t H_model) - [U_P(t/q) U_C(t/q)]^q ||_F`.
pub fn trotter_error(lattice: &Lattice, j: f64, v: f64, t: f64, q: u32) -> Result<f64> {
    let plaquette = plaquette_hamiltonian(lattice).mapv(|z| z * -j);
    let corner = corner_hamiltonian(lattice).mapv(|z| z * v);
    product_formula_error(&plaquette, &corner, t, q)
}

/// Which single Trotter-slice unitary to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    /// Plaquette slice `U_P`.
    #[serde(rename = "UP")]
    Plaquette,
    /// Corner slice `U_C`.
    #[serde(rename = "UC")]
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub j: f64,
    pub v: f64,
    /// Slice duration `t / q` in ns.
    pub tau_ns: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            kind: TargetKind::Plaquette,
            j: 1.0,
            v: 1.0,
            tau_ns: 0.01,
        }
    }
}

impl TargetSpec {
    pub fn unitary(&self, lattice: &Lattice) -> Result<Operator> {
        match self.kind {
            TargetKind::Plaquette => target_plaquette_unitary(lattice, self.j, self.tau_ns),
            TargetKind::Corner => target_corner_unitary(lattice, self.v, self.tau_ns),
        }
    }
}

/// Transmon-array control problem whose target is a lattice-model slice.
pub fn lattice_problem(
    lattice: &Lattice,
    coupling: f64,
    target: &TargetSpec,
) -> Result<ControlProblem> {
    let dev = device_hamiltonians(lattice, coupling);
    ControlProblem::new(dev.drift, dev.controls, target.unitary(lattice)?)
}

/// [`lattice_problem`] with the default transmon coupling.
pub fn default_lattice_problem(lattice: &Lattice, target: &TargetSpec) -> Result<ControlProblem> {
    lattice_problem(lattice, operators::TRANSMON_COUPLING, target)
}

/// Loss of doing nothing (`K = I`) against `target`.
pub fn identity_loss(target: &Operator) -> Result<f64> {
    infidelity(&linalg::identity(target.nrows()), target)
}
