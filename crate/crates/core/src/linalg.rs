// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra: Hermitian eigendecomposition, the unitary
//! exponential `exp(-i H dt)` and its vector-Jacobian product.
//!
//! The exponential is evaluated in the eigenbasis, so the result is unitary up
//! to the orthogonality of the eigenvectors. Its derivative follows from the
//! divided differences of `f(x) = exp(-i x dt)` over pairs of eigenvalues
//! (the Daleckii-Krein formula). With `H = V diag(l) V^H` and a perturbation
//! `E`, the Frechet derivative is `V (Phi o (V^H E V)) V^H` where
//!
//! ```text
//! Phi_ab = (f(l_a) - f(l_b)) / (l_a - l_b)
//!        = -i dt exp(-i (l_a + l_b) dt / 2) sinc((l_a - l_b) dt / 2)
//! ```
//!
//! The sinc form is used for every pair; it has no cancellation as the gap
//! closes, and the diagonal reduces to `f'(l_a)`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Zip};
use num_complex::Complex64;

use crate::error::{QocError, Result};

/// Dense `D x D` complex operator.
pub type Operator = Array2<Complex64>;

/// Complex column vector.
pub type StateVector = Array1<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(dim: usize) -> Operator {
    Array2::from_diag_elem(dim, ONE)
}

/// Conjugate transpose.
pub fn dagger(a: &Operator) -> Operator {
    a.t().mapv(|z| z.conj())
}

/// `A^H B` without materializing `A^H`.
pub fn adjoint_dot(a: &Operator, b: &Operator) -> Operator {
    a.t().mapv(|z| z.conj()).dot(b)
}

pub fn trace(a: &Operator) -> Complex64 {
    a.diag().sum()
}

/// `Re Tr(A^H B)`, the real inner product on operators.
pub fn real_inner(a: &Operator, b: &Operator) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, x, y| acc + x.re * y.re + x.im * y.im)
}

pub fn frobenius_norm(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: ArrayView2<'_, Complex64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest elementwise deviation `max |A - A^H|`.
pub fn hermiticity_error(a: &Operator) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Largest elementwise deviation `max |U^H U - I|`.
pub fn unitarity_error(u: &Operator) -> f64 {
    let mut gram = adjoint_dot(u, u);
    for i in 0..gram.nrows() {
        gram[[i, i]] -= ONE;
    }
    max_abs(gram.view())
}

pub fn is_finite(a: &Operator) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn check_square(a: &Operator) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(QocError::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub(crate) fn check_same_dim(a: &Operator, b: &Operator) -> Result<usize> {
    let n = check_square(a)?;
    if b.dim() != (n, n) {
        return Err(QocError::DimensionMismatch {
            expected: n,
            actual: b.nrows().max(b.ncols()),
        });
    }
    Ok(n)
}

/// Eigenpairs of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Array1<f64>,
    /// Eigenvectors stored as columns; unitary.
    pub vectors: Operator,
}

/// Hermitian eigendecomposition of `(H + H^H) / 2`.
///
/// Real symmetric input (every imaginary part exactly zero) is routed through
/// the real solver, which is several times faster at the sizes used here.
pub fn eigh(h: &Operator) -> Result<EigenDecomposition> {
    let n = check_square(h)?;
    if !is_finite(h) {
        return Err(QocError::NonFinite("eigh input"));
    }

    let real = h.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, Operator) = if real {
        let m = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (h[[i, j]].re + h[[j, i]].re));
        let eig = m
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(QocError::EigenFailure)?;
        let vecs = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new(eig.eigenvectors[(i, j)], 0.0)
        });
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| 0.5 * (h[[i, j]] + h[[j, i]].conj()));
        let eig = m
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(QocError::EigenFailure)?;
        let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = Array1::from_iter(order.iter().map(|&k| values[k]));
    let mut sorted_vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        sorted_vectors.column_mut(dst).assign(&vectors.column(src));
    }

    Ok(EigenDecomposition {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

#[inline]
fn phase(x: f64) -> Complex64 {
    // exp(-i x)
    Complex64::new(x.cos(), -x.sin())
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Eigenvalue gaps at or below this are treated as degenerate.
fn degeneracy_threshold(values: &Array1<f64>) -> f64 {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    1e-12 * scale
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(exp(-i l dt)) V^H`.
    pub fn exp_unitary(&self, dt: f64) -> Operator {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (mut col, &l) in scaled.columns_mut().into_iter().zip(self.values.iter()) {
            let p = phase(l * dt);
            col.mapv_inplace(|z| z * p);
        }
        scaled.dot(&dagger(v))
    }

    /// Divided-difference kernel `Phi` of `exp(-i x dt)` over eigenvalue pairs.
    pub fn divided_differences(&self, dt: f64) -> Operator {
        let n = self.dim();
        let tau = degeneracy_threshold(&self.values);
        let lam = &self.values;
        Array2::from_shape_fn((n, n), |(a, b)| {
            let mid = 0.5 * (lam[a] + lam[b]);
            let gap = lam[a] - lam[b];
            let kernel = if gap.abs() <= tau {
                1.0
            } else {
                sinc(0.5 * gap * dt)
            };
            Complex64::new(0.0, -dt) * phase(mid * dt) * kernel
        })
    }

    /// Pulls an adjoint `seed` on `exp(-i H dt)` back to an adjoint on `H`.
    ///
    /// The result satisfies `Re Tr(seed^H dU) = Re Tr(Hbar^H dH)` for every
    /// Hermitian perturbation `dH`.
    pub fn exp_vjp(&self, dt: f64, seed: &Operator) -> Operator {
        let v = &self.vectors;
        let mut inner = adjoint_dot(v, &seed.dot(v));
        let phi = self.divided_differences(dt);
        Zip::from(&mut inner).and(&phi).for_each(|y, p| *y *= p.conj());
        v.dot(&inner).dot(&dagger(v))
    }
}

/// `exp(-i H dt)` for Hermitian `H`.
pub fn expm_unitary(h: &Operator, dt: f64) -> Result<Operator> {
    if !dt.is_finite() {
        return Err(QocError::NonFinite("time step"));
    }
    Ok(eigh(h)?.exp_unitary(dt))
}

/// Vector-Jacobian product of `H -> exp(-i H dt)` at `H` with adjoint `seed`.
pub fn expm_vjp(h: &Operator, dt: f64, seed: &Operator) -> Result<Operator> {
    check_same_dim(h, seed)?;
    if !dt.is_finite() {
        return Err(QocError::NonFinite("time step"));
    }
    if !is_finite(seed) {
        return Err(QocError::NonFinite("adjoint seed"));
    }
    Ok(eigh(h)?.exp_vjp(dt, seed))
}

#[allow(dead_code)]
pub(crate) fn zeros(dim: usize) -> Operator {
    Array2::from_elem((dim, dim), ZERO)
}
