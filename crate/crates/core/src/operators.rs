// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Many-qubit operators on the edge qubits of a [`Lattice`].
//!
//! Spin matrices are half the Pauli matrices, so `S+ = Sx + i Sy` has a unit
//! off-diagonal entry. Units are hbar = 1 with time in ns and energies in
//! rad/ns. Qubit 0 is the most significant Kronecker factor.

use ndarray::{array, Array2};
use num_complex::Complex64;

use crate::error::{QocError, Result};
use crate::lattice::Lattice;
use crate::linalg::Operator;

/// Typical transmon-transmon coupling, `-20 x 2 pi` MHz in rad/ns.
pub const TRANSMON_COUPLING: f64 = -0.04 * std::f64::consts::PI;

/// Single-qubit spin operators.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    pub plus: Operator,
    pub minus: Operator,
}

impl SpinOperators {
    pub fn new() -> Self {
        let o = Complex64::new(0.0, 0.0);
        let h = Complex64::new(0.5, 0.0);
        let ih = Complex64::new(0.0, 0.5);
        let x = array![[o, h], [h, o]];
        let y = array![[o, -ih], [ih, o]];
        let z = array![[h, o], [o, -h]];
        let i = Complex64::new(0.0, 1.0);
        let plus = &x + &y.mapv(|v| v * i);
        let minus = &x - &y.mapv(|v| v * i);
        Self {
            x,
            y,
            z,
            plus,
            minus,
        }
    }
}

impl Default for SpinOperators {
    fn default() -> Self {
        Self::new()
    }
}

/// Embeds a product of single-qubit operators into an `n`-qubit space,
/// acting as identity on the remaining qubits.
pub fn embed(locals: &[&Operator], qubits: &[usize], n: usize) -> Result<Operator> {
    if locals.len() != qubits.len() {
        return Err(QocError::InvalidArgument(format!(
            "{} local operators for {} qubits",
            locals.len(),
            qubits.len()
        )));
    }
    let mut factor: Vec<Option<&Operator>> = vec![None; n];
    for (&q, &op) in qubits.iter().zip(locals) {
        if q >= n {
            return Err(QocError::QubitOutOfRange {
                index: q,
                qubits: n,
            });
        }
        if factor[q].is_some() {
            return Err(QocError::DuplicateQubit(q));
        }
        if op.dim() != (2, 2) {
            return Err(QocError::DimensionMismatch {
                expected: 2,
                actual: op.nrows(),
            });
        }
        factor[q] = Some(op);
    }

    // Entry (a, b) is the product of local entries on the acted qubits and
    // requires the spectator bits of a and b to agree.
    let dim = 1usize << n;
    let acted: Vec<(usize, &Operator)> = factor
        .iter()
        .enumerate()
        .filter_map(|(q, op)| op.map(|op| (n - 1 - q, op)))
        .collect();
    let mask: usize = acted.iter().map(|&(shift, _)| 1 << shift).sum();

    let mut out = Array2::zeros((dim, dim));
    for a in 0..dim {
        let spectators = a & !mask;
        for sub in 0..(1usize << acted.len()) {
            let mut b = spectators;
            let mut value = Complex64::new(1.0, 0.0);
            for (k, &(shift, op)) in acted.iter().enumerate() {
                let bit_b = (sub >> k) & 1;
                let bit_a = (a >> shift) & 1;
                b |= bit_b << shift;
                value *= op[[bit_a, bit_b]];
                if value == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            if value != Complex64::new(0.0, 0.0) {
                out[[a, b]] += value;
            }
        }
    }
    Ok(out)
}

/// Ring-exchange term `sum (S+ S- S+ S- + h.c.)` over all plaquettes, with the
/// raising/lowering pattern applied in counterclockwise edge order.
pub fn plaquette_hamiltonian(lattice: &Lattice) -> Operator {
    let s = SpinOperators::new();
    let n = lattice.qubits();
    let mut h = Array2::zeros((lattice.dim(), lattice.dim()));
    for p in lattice.plaquettes() {
        let term = embed(&[&s.plus, &s.minus, &s.plus, &s.minus], p, n)
            .expect("plaquette edges are distinct lattice qubits");
        h = h + &term + &crate::linalg::dagger(&term);
    }
    h
}

/// `sum Sz Sz` over every pair of edges sharing a vertex. Diagonal.
pub fn corner_hamiltonian(lattice: &Lattice) -> Operator {
    let s = SpinOperators::new();
    let n = lattice.qubits();
    let mut h = Array2::zeros((lattice.dim(), lattice.dim()));
    for &(a, b) in lattice.corner_pairs() {
        h += &embed(&[&s.z, &s.z], &[a, b], n).expect("corner pair qubits are distinct");
    }
    h
}

/// `-J H_P + V H_C`.
pub fn model_hamiltonian(lattice: &Lattice, j: f64, v: f64) -> Operator {
    let hp = plaquette_hamiltonian(lattice);
    let hc = corner_hamiltonian(lattice);
    hp.mapv(|z| z * -j) + hc.mapv(|z| z * v)
}

/// Drift and control Hamiltonians of a resonant transmon array.
#[derive(Debug, Clone)]
pub struct DeviceHamiltonians {
    /// `sum g (Sx Sx + Sy Sy)` over the coupling graph.
    pub drift: Operator,
    /// One `Sx` drive per qubit.
    pub controls: Vec<Operator>,
}

pub fn device_hamiltonians(lattice: &Lattice, coupling: f64) -> DeviceHamiltonians {
    let s = SpinOperators::new();
    let n = lattice.qubits();
    let dim = lattice.dim();
    let mut drift = Array2::zeros((dim, dim));
    for &(a, b) in lattice.device_couplings() {
        let xx = embed(&[&s.x, &s.x], &[a, b], n).expect("coupled qubits are distinct");
        let yy = embed(&[&s.y, &s.y], &[a, b], n).expect("coupled qubits are distinct");
        drift = drift + (xx + yy).mapv(|z| z * coupling);
    }
    let controls = (0..n)
        .map(|q| embed(&[&s.x], &[q], n).expect("qubit index in range"))
        .collect();
    DeviceHamiltonians { drift, controls }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_error, max_abs};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Kronecker product by nested loops.
    fn kron(a: &Operator, b: &Operator) -> Operator {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        let mut out = Array2::zeros((ra * rb, ca * cb));
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        out[[i * rb + k, j * cb + l]] = a[[i, j]] * b[[k, l]];
                    }
                }
            }
        }
        out
    }

    fn eye2() -> Operator {
        crate::linalg::identity(2)
    }

    fn kron_chain(ops: &[Operator]) -> Operator {
        ops.iter()
            .skip(1)
            .fold(ops[0].clone(), |acc, op| kron(&acc, op))
    }

    fn bits(state: usize, n: usize) -> Vec<usize> {
        (0..n).map(|q| (state >> (n - 1 - q)) & 1).collect()
    }

    #[test]
    fn spin_algebra() {
        let s = SpinOperators::new();
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(s.plus, &s.x + &s.y.mapv(|v| v * i));
        assert_eq!(s.plus, array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]]);
        let comm = s.x.dot(&s.y) - s.y.dot(&s.x);
        assert!(max_abs((comm - s.z.mapv(|v| v * i)).view()) < 1e-16);
    }

    #[test]
    fn embed_identity_and_kron() {
        let s = SpinOperators::new();
        assert_eq!(embed(&[&s.z], &[0], 1).unwrap(), s.z);

        let iz = embed(&[&s.z], &[1], 2).unwrap();
        let diag: Vec<f64> = iz.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![0.5, -0.5, 0.5, -0.5]);
        assert_eq!(iz, kron(&eye2(), &s.z));

        assert_eq!(embed(&[&s.x, &s.x], &[0, 1], 2).unwrap(), kron(&s.x, &s.x));
        let mixed = embed(&[&s.y, &s.plus], &[2, 0], 3).unwrap();
        assert_eq!(mixed, kron_chain(&[s.plus.clone(), eye2(), s.y.clone()]));
    }

    #[test]
    fn embed_rejects_bad_indices() {
        let s = SpinOperators::new();
        assert_eq!(
            embed(&[&s.x, &s.x], &[1, 1], 3).unwrap_err(),
            QocError::DuplicateQubit(1)
        );
        assert!(matches!(
            embed(&[&s.x], &[3], 3),
            Err(QocError::QubitOutOfRange { index: 3, qubits: 3 })
        ));
        assert!(embed(&[&s.x], &[0, 1], 3).is_err());
    }

    #[test]
    fn empty_lattice_terms_are_zero() {
        let l = Lattice::new(1, 2).unwrap();
        assert!(max_abs(plaquette_hamiltonian(&l).view()) == 0.0);
        assert!(max_abs(corner_hamiltonian(&l).view()) == 0.0);
        let dev = device_hamiltonians(&l, TRANSMON_COUPLING);
        assert!(max_abs(dev.drift.view()) == 0.0);
        assert_eq!(dev.controls, vec![SpinOperators::new().x]);
    }

    #[test]
    fn plaquette_on_square_is_single_ring_exchange() {
        let l = Lattice::new(2, 2).unwrap();
        let hp = plaquette_hamiltonian(&l);
        // S+ (bottom) S- (right) S+ (top) S- (left): |1010> -> |0101> with
        // qubits ordered by edge index (bottom=0, top=1, left=2, right=3).
        let nonzero: Vec<_> = hp
            .indexed_iter()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|((a, b), z)| (a, b, *z))
            .collect();
        assert_eq!(nonzero.len(), 2);
        for &(a, b, z) in &nonzero {
            assert_eq!(z, c(1.0));
            let (ba, bb) = (bits(a, 4), bits(b, 4));
            assert!(ba.iter().zip(&bb).all(|(x, y)| x != y));
        }
        let [bottom, right, top, left] = l.plaquettes()[0];
        let flipped = |s: [usize; 4]| {
            let mut state = 0;
            for (q, bit) in [bottom, right, top, left].iter().zip(s) {
                state |= bit << (3 - q);
            }
            state
        };
        let from = flipped([1, 0, 1, 0]);
        let to = flipped([0, 1, 0, 1]);
        assert_eq!(hp[[to, from]], c(1.0));
        assert_eq!(hp[[from, to]], c(1.0));
    }

    #[test]
    fn corner_diagonal_oracle() {
        let l = Lattice::new(2, 2).unwrap();
        let hc = corner_hamiltonian(&l);
        for a in 0..16 {
            for b in 0..16 {
                if a != b {
                    assert_eq!(hc[[a, b]], c(0.0));
                }
            }
            let spins: Vec<f64> = bits(a, 4)
                .iter()
                .map(|&bit| if bit == 0 { 0.5 } else { -0.5 })
                .collect();
            let expected: f64 = l
                .corner_pairs()
                .iter()
                .map(|&(p, q)| spins[p] * spins[q])
                .sum();
            assert_eq!(hc[[a, a]], c(expected));
        }
        assert_eq!(hc[[0, 0]], c(1.0));
    }

    #[test]
    fn model_is_linear_combination() {
        let l = Lattice::new(2, 2).unwrap();
        assert!(max_abs(model_hamiltonian(&l, 0.0, 0.0).view()) == 0.0);
        let hp = plaquette_hamiltonian(&l);
        let hc = corner_hamiltonian(&l);
        assert_eq!(model_hamiltonian(&l, 1.0, 0.0), hp.mapv(|z| -z));
        let (j, v) = (0.7, -1.3);
        let expected = hp.mapv(|z| z * -j) + hc.mapv(|z| z * v);
        assert!(max_abs((model_hamiltonian(&l, j, v) - expected).view()) < 1e-15);
    }

    #[test]
    fn device_drift_matches_kron_oracle() {
        let l = Lattice::new(2, 2).unwrap();
        let s = SpinOperators::new();
        let g = TRANSMON_COUPLING;
        assert!((g - (-20.0 * 2.0 * std::f64::consts::PI / 1000.0)).abs() < 1e-15);
        let dev = device_hamiltonians(&l, g);
        let mut oracle = Array2::<Complex64>::zeros((16, 16));
        for &(a, b) in l.device_couplings() {
            for op in [&s.x, &s.y] {
                let factors: Vec<Operator> = (0..4)
                    .map(|q| if q == a || q == b { op.clone() } else { eye2() })
                    .collect();
                oracle = oracle + kron_chain(&factors).mapv(|z| z * g);
            }
        }
        assert!(max_abs((&dev.drift - &oracle).view()) < 1e-15);
        assert!(dev.drift.diag().iter().all(|z| *z == c(0.0)));
        assert_eq!(dev.controls.len(), 4);
        // The device is real in the computational basis.
        assert!(dev.drift.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn hamiltonians_are_hermitian_and_conserve_sz() {
        for (w, len) in [(2, 2), (2, 3), (1, 4)] {
            let l = Lattice::new(w, len).unwrap();
            let hp = plaquette_hamiltonian(&l);
            let hc = corner_hamiltonian(&l);
            let dev = device_hamiltonians(&l, TRANSMON_COUPLING);
            for h in [&hp, &hc, &dev.drift]
                .into_iter()
                .chain(dev.controls.iter())
            {
                assert!(hermiticity_error(h) <= 1e-12 * max_abs(h.view()).max(1.0));
            }
            if l.qubits() <= 6 {
                for ((a, b), z) in hp.indexed_iter() {
                    if a.count_ones() != b.count_ones() {
                        assert_eq!(*z, c(0.0));
                    }
                }
            }
            let s = SpinOperators::new();
            for q in 0..l.qubits() {
                let z = embed(&[&s.z], &[q], l.qubits()).unwrap();
                let comm = hc.dot(&z) - z.dot(&hc);
                assert!(max_abs(comm.view()) == 0.0);
            }
        }
    }
}
