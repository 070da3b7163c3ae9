use pnr_core::layer::{pnr_forward, pnr_forward_weighted};
use pnr_core::solver::{solve, solve_masked};
use pnr_core::synth::SeededRng;
use pnr_core::{Matrix, PnrConfig, RegressionProblem, Tape};
use proptest::prelude::*;

fn uniform(rng: &mut SeededRng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), a in 1usize..12, b in 1usize..12, c in 1usize..12, d in 1usize..12) {
        let mut rng = SeededRng::new(seed);
        let (x, y, z) = (uniform(&mut rng, a, b), uniform(&mut rng, b, c), uniform(&mut rng, c, d));
        let left = x.matmul(&y).unwrap().matmul(&z).unwrap();
        let right = x.matmul(&y.matmul(&z).unwrap()).unwrap();
        let scale = 1.0 + left.max_abs();
        prop_assert!(left.sub(&right).unwrap().max_abs() <= 1e-9 * scale);
    }

    /// The layer's forward value is the solver's output, bit for bit.
    #[test]
    fn layer_forward_is_the_solver(seed in any::<u64>(), n in 4usize..16, d in 1usize..4, big_d in 1usize..5, lad in any::<bool>()) {
        let mut rng = SeededRng::new(seed);
        let (h, p, p_t) = (uniform(&mut rng, n, big_d), uniform(&mut rng, n, d), uniform(&mut rng, 6, d));
        let cfg = if lad { PnrConfig::lad() } else { PnrConfig::lse() };
        let mut tape = Tape::new();
        let (hs, ps, pt) = (tape.leaf(h.clone()), tape.leaf(p.clone()), tape.leaf(p_t.clone()));
        let out = pnr_forward(&mut tape, hs, ps, pt, &cfg).unwrap();
        let direct = solve(&RegressionProblem::new(h.clone(), p.clone()).unwrap(), &cfg).unwrap();
        prop_assert_eq!(tape.value(out.f), &direct.f);
        prop_assert_eq!(tape.value(out.h_t), &p_t.matmul(&direct.f).unwrap());

        let mask: Vec<bool> = (0..n).map(|j| j % 3 != 1).collect();
        let w: Vec<f64> = mask.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        let mut tape = Tape::new();
        let (hs, ps, pt) = (tape.leaf(h.clone()), tape.leaf(p.clone()), tape.leaf(p_t));
        let masked = pnr_forward_weighted(&mut tape, hs, ps, pt, &w, &cfg).unwrap();
        let direct = solve_masked(&RegressionProblem::new(h, p).unwrap(), &mask, &cfg).unwrap();
        prop_assert_eq!(tape.value(masked.f), &direct.f);
    }
}
