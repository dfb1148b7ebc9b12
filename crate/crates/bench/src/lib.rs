// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use qoc_core::{
    default_lattice_problem, ControlProblem, ControlSchedule, InitialCondition, Lattice,
    TargetSpec, TimeGrid,
};

/// Device problem on a `width x length` lattice with `steps` steps over
/// 100 ns, started from the staggered initial condition.
pub fn lattice_fixture(width: usize, length: usize, steps: usize) -> (ControlProblem, ControlSchedule) {
    let lattice = Lattice::new(width, length).expect("valid lattice");
    let problem = default_lattice_problem(&lattice, &TargetSpec::default()).expect("valid problem");
    let grid = TimeGrid::from_total(100.0, steps).expect("valid grid");
    let schedule = InitialCondition::staggered(0.0, -1.0, 0.05)
        .schedule(&lattice, grid, 0)
        .expect("valid schedule");
    (problem, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let (p, s) = lattice_fixture(2, 2, 10);
        assert_eq!(p.dim(), 16);
        assert_eq!(s.channels(), 4);
        assert_eq!(s.steps(), 10);
    }
}
