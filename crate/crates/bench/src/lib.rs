//! Shared fixtures for the benchmarks.

use pnr_core::synth::SeededRng;
use pnr_core::{Matrix, RegressionProblem};

/// Uniform `[-1, 1]` problem with `n` rows, `d` pose and `big_d` appearance columns.
pub fn random_problem(seed: u64, n: usize, d: usize, big_d: usize) -> RegressionProblem {
    let mut rng = SeededRng::new(seed);
    let p = Matrix::from_fn(n, d, |_, _| rng.uniform(-1.0, 1.0));
    let h = Matrix::from_fn(n, big_d, |_, _| rng.uniform(-1.0, 1.0));
    RegressionProblem::new(h, p).expect("shapes agree")
}
