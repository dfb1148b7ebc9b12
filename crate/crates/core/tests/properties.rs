// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use qoc_core::linalg::{dagger, expm_unitary, unitarity_error, Operator};
use qoc_core::objective::product_formula_error;
use qoc_core::propagation::{forward_propagate, reverse_step, step_unitary};
use qoc_core::{
    default_lattice_problem, finite_difference_gradient, gradient, max_relative_error,
    ControlProblem, ControlSchedule, GradientStrategy, Lattice, StoragePolicy, TargetSpec,
    TimeGrid,
};

fn hermitian(dim: usize, values: &[f64]) -> Operator {
    let a = Array2::from_shape_fn((dim, dim), |(r, c)| {
        let k = 2 * (r * dim + c);
        Complex64::new(values[k], values[k + 1])
    });
    (&a + &dagger(&a)).mapv(|z| z * 0.5)
}

/// A random dense problem of dimension `dim` with `m` controls and `steps`
/// slices of width 0.1.
fn random_problem() -> impl Strategy<Value = (ControlProblem, ControlSchedule)> {
    (1usize..=3, 1usize..=3, 2usize..=10).prop_flat_map(|(qubits, m, steps)| {
        let dim = 1 << qubits;
        let n = 2 * dim * dim;
        (
            prop::collection::vec(-1.0f64..1.0, n * (m + 2)),
            prop::collection::vec(-1.0f64..1.0, m * steps),
        )
            .prop_map(move |(ops, amps)| {
                let mut chunks = ops.chunks(n).map(|c| hermitian(dim, c));
                let drift = chunks.next().unwrap();
                let target = expm_unitary(&chunks.next().unwrap(), 1.0).unwrap();
                let controls = chunks.collect();
                let problem = ControlProblem::new(drift, controls, target).unwrap();
                let g = Array2::from_shape_vec((m, steps), amps).unwrap();
                let schedule =
                    ControlSchedule::new(g, TimeGrid::new(steps, 0.1).unwrap()).unwrap();
                (problem, schedule)
            })
    })
}

fn small_lattice_schedule(steps: usize, seed: u64) -> (ControlProblem, ControlSchedule) {
    let lattice = Lattice::new(1, 3).unwrap();
    let problem = default_lattice_problem(&lattice, &TargetSpec::default()).unwrap();
    let g = Array2::from_shape_fn((lattice.qubits(), steps), |(i, t)| {
        ((seed as f64 + 1.0) * 0.37 * (i + 1) as f64 + 0.11 * t as f64).sin()
    });
    let schedule = ControlSchedule::new(g, TimeGrid::new(steps, 0.2).unwrap()).unwrap();
    (problem, schedule)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_strategy_matches_finite_differences((problem, schedule) in random_problem(), c in 1usize..=10) {
        let fd = finite_difference_gradient(&problem, &schedule, 1e-6).unwrap();
        let period = c.min(schedule.steps());
        for strategy in GradientStrategy::all(period) {
            let r = gradient(&problem, &schedule, strategy).unwrap();
            let err = max_relative_error(&r.grad, &fd);
            prop_assert!(err <= 1e-6, "{strategy}: {err:e}");
        }
    }

    #[test]
    fn counters_follow_closed_forms(steps in 1usize..=40, c in 1usize..=40, seed in 0u64..100) {
        let period = c.min(steps);
        let (problem, schedule) = small_lattice_schedule(steps, seed);
        for strategy in GradientStrategy::all(period) {
            let r = gradient(&problem, &schedule, strategy).unwrap();
            let predicted = strategy.predicted_stats(steps, problem.dim()).unwrap();
            prop_assert_eq!(r.stats, predicted);
            prop_assert_eq!(r.stats.linearizations, steps);
        }
        let peak = |s: GradientStrategy| s.predicted_stats(steps, 8).unwrap().peak_matrices;
        let blocks = steps.div_ceil(period);
        prop_assert_eq!(peak(GradientStrategy::StoreAll), steps + 2);
        prop_assert_eq!(peak(GradientStrategy::PeriodicCheckpointing(period)), blocks + period + 2);
        prop_assert_eq!(peak(GradientStrategy::Reversibility), 2);
        prop_assert_eq!(peak(GradientStrategy::CheckpointedReversibility(period)), blocks + 2);
    }

    #[test]
    fn periodic_checkpointing_is_bitwise_store_all(steps in 1usize..=30, c in 1usize..=30, seed in 0u64..100) {
        let (problem, schedule) = small_lattice_schedule(steps, seed);
        let all = gradient(&problem, &schedule, GradientStrategy::StoreAll).unwrap();
        let periodic =
            gradient(&problem, &schedule, GradientStrategy::PeriodicCheckpointing(c.min(steps))).unwrap();
        prop_assert_eq!(all.loss.to_bits(), periodic.loss.to_bits());
        prop_assert!(all.grad.iter().zip(&periodic.grad).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn propagators_stay_unitary_and_reverse(steps in 1usize..=30, seed in 0u64..100) {
        let (problem, schedule) = small_lattice_schedule(steps, seed);
        let fwd = forward_propagate(&problem, &schedule, StoragePolicy::EveryStep).unwrap();
        prop_assert!(unitarity_error(&fwd.final_propagator) <= 1e-12);
        let mut k = fwd.final_propagator.clone();
        for t in (1..steps).rev() {
            k = reverse_step(&k, &step_unitary(&problem, &schedule, t).unwrap()).unwrap();
            let d = (&k - &fwd.stored[t - 1].1).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            prop_assert!(d <= 1e-12, "step {t}: {d:e}");
        }
    }

    #[test]
    fn product_formula_error_shrinks_with_slices(a in prop::collection::vec(-1.0f64..1.0, 32), b in prop::collection::vec(-1.0f64..1.0, 32)) {
        let (a, b) = (hermitian(4, &a), hermitian(4, &b));
        let coarse = product_formula_error(&a, &b, 0.3, 4).unwrap();
        let fine = product_formula_error(&a, &b, 0.3, 8).unwrap();
        prop_assert!(fine <= coarse * 0.6 + 1e-13, "{coarse:e} -> {fine:e}");
        prop_assert!(product_formula_error(&a, &a, 0.3, 1).unwrap() <= 1e-13);
    }
}

#[test]
fn lattice_dimensions() {
    for (w, l) in [(1, 2), (2, 2), (2, 3), (3, 3)] {
        let lattice = Lattice::new(w, l).unwrap();
        assert_eq!(lattice.dim(), 1 << lattice.qubits());
        assert_eq!(lattice.edges().len(), lattice.qubits());
    }
}
