//! Exact LAD reference solver for small problems, used to check IRLS.
//!
//! Each column `i` is the linear program
//!
//! ```text
//! minimize   Σⱼ wⱼ (uⱼ + vⱼ)
//! subject to P·(f⁺ − f⁻) + u − v = Hᵢ,   f⁺, f⁻, u, v ≥ 0
//! ```
//!
//! solved by a dense primal simplex with Bland's rule. Choosing `uⱼ` or `vⱼ`
//! by the sign of `Hⱼᵢ` gives a feasible starting basis, so no phase one is
//! needed.

use crate::error::{Error, Result};
use crate::solver::{objective, Norm, RegressionProblem, RegressionSolution};
use crate::tensor::Matrix;

pub const ORACLE_MAX_ROWS: usize = 64;
pub const ORACLE_MAX_D: usize = 8;

const PIVOT_TOL: f64 = 1e-12;

pub fn lad_oracle(prob: &RegressionProblem) -> Result<RegressionSolution> {
    if prob.n() > ORACLE_MAX_ROWS || prob.d() > ORACLE_MAX_D {
        return Err(Error::contract(format!(
            "lad_oracle supports n <= {ORACLE_MAX_ROWS}, d <= {ORACLE_MAX_D}; got n = {}, d = {}",
            prob.n(),
            prob.d()
        )));
    }
    let w = prob.weights_or_ones();
    let mut f = Matrix::zeros(prob.d(), prob.appearance_dim());
    for i in 0..prob.appearance_dim() {
        let col = simplex_lad(prob.p(), &prob.h().column(i), &w)?;
        f.set_column(i, &col);
    }
    let objective = objective(prob, &f, Norm::L1)?;
    Ok(RegressionSolution {
        f,
        objective,
        iterations_used: 0,
        final_weights: None,
    })
}

fn simplex_lad(p: &Matrix, h: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = (p.rows(), p.cols());
    let nv = 2 * d + 2 * n;
    let width = nv + 1;
    let u = |j: usize| 2 * d + j;
    let v = |j: usize| 2 * d + n + j;

    let mut cost = vec![0.0; nv];
    for j in 0..n {
        cost[u(j)] = w[j];
        cost[v(j)] = w[j];
    }

    let mut t = vec![0.0; n * width];
    let mut basis = vec![0usize; n];
    for j in 0..n {
        let sign = if h[j] >= 0.0 { 1.0 } else { -1.0 };
        let row = &mut t[j * width..(j + 1) * width];
        for k in 0..d {
            row[k] = sign * p.get(j, k);
            row[d + k] = -sign * p.get(j, k);
        }
        row[u(j)] = sign;
        row[v(j)] = -sign;
        row[nv] = sign * h[j];
        basis[j] = if sign > 0.0 { u(j) } else { v(j) };
    }

    let max_iters = 50 * (n + nv) * (n + nv);
    for _ in 0..max_iters {
        // Bland: lowest-index column with a negative reduced cost.
        let entering = (0..nv).find(|&k| {
            let reduced = cost[k] - (0..n).map(|j| cost[basis[j]] * t[j * width + k]).sum::<f64>();
            reduced < -1e-11
        });
        let Some(k) = entering else {
            let mut x = vec![0.0; nv];
            for j in 0..n {
                x[basis[j]] = t[j * width + nv];
            }
            return Ok((0..d).map(|c| x[c] - x[d + c]).collect());
        };

        // Ratio test, ties broken by the lowest basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for j in 0..n {
            let a = t[j * width + k];
            if a > PIVOT_TOL {
                let ratio = t[j * width + nv] / a;
                leave = match leave {
                    None => Some((j, ratio)),
                    Some((lj, lr)) => {
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[j] < basis[lj]) {
                            Some((j, ratio))
                        } else {
                            Some((lj, lr))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::contract("LAD linear program reported unbounded"));
        };

        let piv = t[r * width + k];
        for c in 0..width {
            t[r * width + c] /= piv;
        }
        let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
        for j in 0..n {
            if j == r {
                continue;
            }
            let factor = t[j * width + k];
            if factor != 0.0 {
                for c in 0..width {
                    t[j * width + c] -= factor * pivot_row[c];
                }
            }
        }
        basis[r] = k;
    }
    Err(Error::contract("LAD simplex did not terminate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SeededRng;

    /// Exhaustive search over fits interpolating `d` rows; LAD always has an
    /// optimum of that form when `P` has full column rank.
    fn brute_force_lad(p: &Matrix, h: &[f64]) -> f64 {
        let (n, d) = (p.rows(), p.cols());
        let mut best = f64::INFINITY;
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let sub = Matrix::from_fn(d, d, |a, b| p.get(idx[a], b));
            let rhs = Matrix::from_fn(d, 1, |a, _| h[idx[a]]);
            let gram = sub.t_matmul(&sub).unwrap();
            if let Ok(f) = crate::tensor::cholesky_solve_spd(&gram, &sub.t_matmul(&rhs).unwrap()) {
                let fit = p.matmul(&f).unwrap();
                let obj: f64 = (0..n).map(|j| (h[j] - fit.get(j, 0)).abs()).sum();
                best = best.min(obj);
            }
            // next combination
            let mut i = d;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] < n - d + i {
                    idx[i] += 1;
                    for k in i + 1..d {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn consistent_system_has_zero_objective() {
        let mut rng = SeededRng::new(2);
        let p = Matrix::from_fn(10, 3, |_, _| rng.uniform(-1.0, 1.0));
        let f = Matrix::from_fn(3, 2, |_, _| rng.uniform(-1.0, 1.0));
        let prob = RegressionProblem::new(p.matmul(&f).unwrap(), p).unwrap();
        let sol = lad_oracle(&prob).unwrap();
        assert!(sol.objective < 1e-10);
        assert!(sol.f.sub(&f).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn matches_exhaustive_vertex_search() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            let p = Matrix::from_fn(9, 2, |_, _| rng.uniform(-1.0, 1.0));
            let h = Matrix::from_fn(9, 1, |_, _| rng.normal());
            let brute = brute_force_lad(&p, &h.column(0));
            let sol = lad_oracle(&RegressionProblem::new(h, p).unwrap()).unwrap();
            assert!((sol.objective - brute).abs() <= 1e-9 * (1.0 + brute), "seed {seed}");
        }
    }

    #[test]
    fn size_limit_is_enforced() {
        let prob = RegressionProblem::new(Matrix::zeros(65, 1), Matrix::ones(65, 1)).unwrap();
        assert!(matches!(lad_oracle(&prob), Err(Error::Contract(_))));
    }

    #[test]
    fn small_instance_cross_check_with_irls() {
        let mut rng = SeededRng::new(12);
        let p = Matrix::from_fn(8, 2, |_, _| rng.uniform(-1.0, 1.0));
        let h = Matrix::from_fn(8, 1, |_, _| rng.uniform(-1.0, 1.0));
        let prob = RegressionProblem::new(h, p).unwrap();
        let oracle = lad_oracle(&prob).unwrap();
        let irls = crate::solver::solve_lad_irls(&prob, &crate::solver::PnrConfig::lad().with_iters(10)).unwrap();
        assert!(oracle.objective <= irls.objective + 1e-6);
        assert!(irls.objective <= 1.01 * oracle.objective);
    }
}
