use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors the symmetric part `(A + Aᵀ)/2` of a square matrix.
    ///
    /// A pivot is rejected when it is not above `n·ε·max|Aᵢᵢ|`, so exactly
    /// rank-deficient Gram matrices fail instead of producing a factor built
    /// on round-off.
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim("cholesky", a.shape(), a.shape()));
        }
        let sym = Matrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(sym.get(i, i).abs()));
        let tol = n as f64 * f64::EPSILON * max_diag;

        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = sym.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > tol) || !d.is_finite() {
                return Err(Error::Singular {
                    pivot: j,
                    hint: "design is rank deficient; use ridge > 0",
                });
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in j + 1..n {
                let mut s = sym.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / djj);
            }
        }
        Ok(Self { l })
    }

    pub fn factor_matrix(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `A·X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::dim("cholesky_solve", (n, n), b.shape()));
        }
        let mut x = b.clone();
        for c in 0..b.cols() {
            let mut col = b.column(c);
            self.solve_in_place(&mut col);
            x.set_column(c, &col);
        }
        Ok(x)
    }

    /// Solves `A·x = b` for a single right-hand side, overwriting `b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let l = &self.l;
        // L·y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l.get(i, k) * b[k];
            }
            b[i] = s / l.get(i, i);
        }
        // Lᵀ·x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l.get(k, i) * b[k];
            }
            b[i] = s / l.get(i, i);
        }
    }
}

/// Solves `A·X = B` for symmetric positive definite `A`.
pub fn cholesky_solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::dim("cholesky_solve_spd", a.shape(), b.shape()));
    }
    Cholesky::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn diagonal_system() {
        let a = Matrix::from_rows(&[[4.0, 0.0], [0.0, 9.0]]);
        let b = Matrix::from_rows(&[[8.0], [9.0]]);
        assert_eq!(cholesky_solve_spd(&a, &b).unwrap(), Matrix::from_rows(&[[2.0], [1.0]]));
    }

    #[test]
    fn coupled_system() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let b = Matrix::from_rows(&[[3.0], [3.0]]);
        let x = cholesky_solve_spd(&a, &b).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((x.get(1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_singular_at_first_pivot() {
        let err = cholesky_solve_spd(&Matrix::zeros(2, 2), &Matrix::ones(2, 1)).unwrap_err();
        assert!(matches!(err, Error::Singular { pivot: 0, .. }));
    }

    #[test]
    fn duplicated_column_gram_is_singular() {
        let p = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let g = p.t_matmul(&p).unwrap();
        assert!(matches!(Cholesky::factor(&g), Err(Error::Singular { pivot: 1, .. })));
    }

    #[test]
    fn residual_bound_on_well_conditioned_system() {
        let mut rng = SeededRng::new(7);
        let m = Matrix::from_fn(12, 12, |_, _| rng.uniform(-1.0, 1.0));
        let a = m.t_matmul(&m).unwrap().add(&Matrix::identity(12)).unwrap();
        let b = Matrix::from_fn(12, 3, |_, _| rng.uniform(-5.0, 5.0));
        let x = cholesky_solve_spd(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.max_abs() <= 1e-10 * (1.0 + b.max_abs()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn recovers_planted_solution(seed in any::<u64>(), n in 1usize..=64) {
            let mut rng = SeededRng::new(seed);
            let m = Matrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
            let a = m.t_matmul(&m).unwrap().add(&Matrix::identity(n)).unwrap();
            let x0 = Matrix::from_fn(n, 2, |_, _| rng.uniform(-1.0, 1.0));
            let x = cholesky_solve_spd(&a, &a.matmul(&x0).unwrap()).unwrap();
            let rel = x.sub(&x0).unwrap().frobenius_norm() / x0.frobenius_norm();
            prop_assert!(rel <= 1e-8, "relative error {rel}");
        }
    }
}
