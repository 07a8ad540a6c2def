//! Shared fixtures for the benchmarks.

use levelreg::harness::ExperimentSpec;
use levelreg::harness::experiment::{initial_level_set, measure};
use levelreg::{BoundaryTrace, ReconstructionConfig, ScalarField};

/// The exact-data preset shrunk to an `n`-node inversion grid.
pub fn preset_fixture(n: usize) -> (ReconstructionConfig, BoundaryTrace, ScalarField) {
    let mut spec = ExperimentSpec::preset("exact_two_squares").expect("bundled preset");
    spec.inversion_grid_n = n;
    spec.forward_grid_n = 2 * n - 1;
    let data = measure(&spec).expect("valid spec").noisy;
    let phi0 = initial_level_set(&spec).expect("valid spec");
    (spec.reconstruction, data, phi0)
}
