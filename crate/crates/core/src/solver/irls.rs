use crate::error::{Error, Result};
use crate::solver::{factor_weighted_gram, objective, solve_lse, Norm, PnrConfig, RegressionProblem, RegressionSolution};
use crate::tensor::Matrix;

/// Current IRLS iterate and the per-column weights derived from it.
#[derive(Clone, Debug)]
pub struct IrlsState {
    pub f: Matrix,
    /// n × D; column `i` is the diagonal of `Wᵢ`.
    pub weights: Matrix,
}

impl IrlsState {
    pub fn new(f0: Matrix, n: usize) -> Self {
        let cols = f0.cols();
        Self {
            f: f0,
            weights: Matrix::zeros(n, cols),
        }
    }

    /// `wⱼᵢ = rowⱼ / max(|Hⱼᵢ − (P·F)ⱼᵢ|, ε)`.
    pub fn reweight(&mut self, prob: &RegressionProblem, eps: f64) -> Result<()> {
        let resid = prob.h().sub(&prob.p().matmul(&self.f)?)?;
        let rw = prob.weights_or_ones();
        self.weights = Matrix::from_fn(resid.rows(), resid.cols(), |j, i| {
            rw[j] / resid.get(j, i).abs().max(eps)
        });
        Ok(())
    }

    /// One weighted least-squares solve per column with the current weights.
    pub fn update(&mut self, prob: &RegressionProblem, ridge: f64) -> Result<()> {
        self.f = solve_frozen(prob.p(), prob.h(), &self.weights, ridge)?;
        Ok(())
    }
}

/// The fixed-weight map `Fᵢ = (PᵀWᵢP + λᵢI)⁻¹ PᵀWᵢ Hᵢ`, column by column.
pub fn solve_frozen(p: &Matrix, h: &Matrix, weights: &Matrix, ridge: f64) -> Result<Matrix> {
    if weights.shape() != h.shape() || p.rows() != h.rows() {
        return Err(Error::dim("solve_frozen", weights.shape(), h.shape()));
    }
    let mut f = Matrix::zeros(p.cols(), h.cols());
    for i in 0..h.cols() {
        let w = weights.column(i);
        let chol = factor_weighted_gram(p, &w, ridge)?;
        let mut rhs = vec![0.0; p.cols()];
        for j in 0..p.rows() {
            let wh = w[j] * h.get(j, i);
            for (k, r) in rhs.iter_mut().enumerate() {
                *r += p.get(j, k) * wh;
            }
        }
        chol.solve_in_place(&mut rhs);
        f.set_column(i, &rhs);
    }
    Ok(f)
}

/// Least-absolute-deviation fit: least-squares start, then exactly
/// `cfg.irls_iters` reweighted updates. Returns the last iterate.
pub fn solve_lad_irls(prob: &RegressionProblem, cfg: &PnrConfig) -> Result<RegressionSolution> {
    cfg.validate()?;
    if cfg.norm != Norm::L1 {
        return Err(Error::contract("solve_lad_irls requires p = 1"));
    }
    let init = solve_lse(prob, cfg)?;
    let mut state = IrlsState::new(init.f, prob.n());
    for _ in 0..cfg.irls_iters {
        state.reweight(prob, cfg.irls_eps)?;
        state.update(prob, cfg.ridge)?;
    }
    let objective = objective(prob, &state.f, Norm::L1)?;
    Ok(RegressionSolution {
        f: state.f,
        objective,
        iterations_used: cfg.irls_iters,
        final_weights: Some(state.weights),
    })
}
