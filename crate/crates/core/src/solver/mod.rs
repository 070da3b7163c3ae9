//! p-norm regression `min_F ‖H − P·F‖_p` for `p ∈ {1, 2}`.
//!
//! * `p = 2` is solved in closed form through the (weighted, ridge-damped)
//!   normal equations `(PᵀWP + λI)·F = PᵀWH`.
//! * `p = 1` starts from the least-squares solution and runs a fixed number
//!   of iteratively reweighted least-squares updates, each column `i` with
//!   its own diagonal weights `1 / max(|Hᵢ − P·Fᵢ|, ε)`.
//!
//! Row weights generalize both the IRLS weights and the binary masks used for
//! self-supervised training; multi-shot problems are plain vertical stacks.

mod irls;
mod oracle;

use crate::error::{Error, Result};
use crate::synth::SeededRng;
use crate::tensor::{Cholesky, Matrix};

pub use irls::{solve_frozen, solve_lad_irls, IrlsState};
pub use oracle::{lad_oracle, ORACLE_MAX_D, ORACLE_MAX_ROWS};

/// Which p-norm the regression minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Norm {
    /// Least absolute deviation.
    L1,
    /// Least squared error.
    L2,
}

impl Norm {
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Norm::L1),
            2 => Ok(Norm::L2),
            _ => Err(Error::Config(format!("p must be 1 or 2, got {p}"))),
        }
    }

    pub fn p(self) -> u32 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnrConfig {
    pub norm: Norm,
    /// Number of IRLS updates after the least-squares start.
    pub irls_iters: usize,
    /// Floor on `|residual|` when forming IRLS weights.
    pub irls_eps: f64,
    /// Ridge strength relative to `trace(PᵀWP)/d`.
    pub ridge: f64,
}

impl Default for PnrConfig {
    fn default() -> Self {
        Self {
            norm: Norm::L2,
            irls_iters: 5,
            irls_eps: 1e-8,
            ridge: 1e-9,
        }
    }
}

impl PnrConfig {
    pub fn lse() -> Self {
        Self::default()
    }

    pub fn lad() -> Self {
        Self {
            norm: Norm::L1,
            ..Self::default()
        }
    }

    pub fn with_ridge(self, ridge: f64) -> Self {
        Self { ridge, ..self }
    }

    pub fn with_iters(self, irls_iters: usize) -> Self {
        Self { irls_iters, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.irls_iters == 0 {
            return Err(Error::Config("irls_iters must be >= 1".into()));
        }
        if !(self.irls_eps > 0.0) {
            return Err(Error::Config("irls_eps must be > 0".into()));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Config("ridge must be a finite value >= 0".into()));
        }
        Ok(())
    }
}

/// Observations `H` (n × D), design `P` (n × d) and optional row weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    h: Matrix,
    p: Matrix,
    row_weights: Option<Vec<f64>>,
}

impl RegressionProblem {
    pub fn new(h: Matrix, p: Matrix) -> Result<Self> {
        if h.rows() != p.rows() {
            return Err(Error::dim("regression_problem", h.shape(), p.shape()));
        }
        Ok(Self {
            h,
            p,
            row_weights: None,
        })
    }

    pub fn with_row_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n() {
            return Err(Error::dim("row_weights", (weights.len(), 1), self.h.shape()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract("row weights must be finite and non-negative"));
        }
        self.row_weights = Some(weights);
        Ok(self)
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn row_weights(&self) -> Option<&[f64]> {
        self.row_weights.as_deref()
    }

    /// Row weights, with absent weights read as all ones.
    pub fn weights_or_ones(&self) -> Vec<f64> {
        self.row_weights.clone().unwrap_or_else(|| vec![1.0; self.n()])
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn d(&self) -> usize {
        self.p.cols()
    }

    pub fn appearance_dim(&self) -> usize {
        self.h.cols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionSolution {
    /// Pose-invariant feature, d × D.
    pub f: Matrix,
    /// Weighted p-norm objective at `f` (sum of |r| or r², no ridge term).
    pub objective: f64,
    /// IRLS updates performed; 0 for the closed-form solve.
    pub iterations_used: usize,
    /// n × D IRLS weights that produced `f` (L1 only).
    pub final_weights: Option<Matrix>,
}

/// Ridge added to the diagonal of a Gram matrix: `ridge · trace(A) / d`.
pub(crate) fn ridge_shift(gram: &Matrix, ridge: f64) -> f64 {
    ridge * gram.trace() / gram.rows() as f64
}

/// `PᵀWP + λI` and its Cholesky factor.
pub(crate) fn factor_weighted_gram(p: &Matrix, weights: &[f64], ridge: f64) -> Result<Cholesky> {
    let pw = p.scale_rows(weights)?;
    let mut gram = pw.t_matmul(p)?;
    let shift = ridge_shift(&gram, ridge);
    if shift != 0.0 {
        for i in 0..gram.rows() {
            gram.set(i, i, gram.get(i, i) + shift);
        }
    }
    Cholesky::factor(&gram)
}

/// Closed-form weighted least squares. Returns `F` and the factor of
/// `PᵀWP + λI` for reuse by the backward pass.
pub(crate) fn lse_with_factor(p: &Matrix, h: &Matrix, weights: &[f64], ridge: f64) -> Result<(Matrix, Cholesky)> {
    let chol = factor_weighted_gram(p, weights, ridge)?;
    let rhs = p.scale_rows(weights)?.t_matmul(h)?;
    Ok((chol.solve(&rhs)?, chol))
}

/// Least-squares estimate of `F`.
pub fn solve_lse(prob: &RegressionProblem, cfg: &PnrConfig) -> Result<RegressionSolution> {
    cfg.validate()?;
    let w = prob.weights_or_ones();
    let (f, _) = lse_with_factor(prob.p(), prob.h(), &w, cfg.ridge)?;
    let objective = objective(prob, &f, Norm::L2)?;
    Ok(RegressionSolution {
        f,
        objective,
        iterations_used: 0,
        final_weights: None,
    })
}

/// Dispatches on `cfg.norm`.
pub fn solve(prob: &RegressionProblem, cfg: &PnrConfig) -> Result<RegressionSolution> {
    match cfg.norm {
        Norm::L2 => solve_lse(prob, cfg),
        Norm::L1 => solve_lad_irls(prob, cfg),
    }
}

/// Solves with rows whose mask entry is `false` removed from the objective.
pub fn solve_masked(prob: &RegressionProblem, mask: &[bool], cfg: &PnrConfig) -> Result<RegressionSolution> {
    if mask.len() != prob.n() {
        return Err(Error::dim("solve_masked", (mask.len(), 1), prob.h().shape()));
    }
    let weights = prob
        .weights_or_ones()
        .iter()
        .zip(mask)
        .map(|(w, &keep)| if keep { *w } else { 0.0 })
        .collect();
    solve(&prob.clone().with_row_weights(weights)?, cfg)
}

/// Independent Bernoulli(`keep_prob`) row mask. Panics unless
/// `keep_prob ∈ [0, 1]`.
pub fn sample_mask(n: usize, keep_prob: f64, rng: &mut SeededRng) -> Vec<bool> {
    assert!((0.0..=1.0).contains(&keep_prob), "keep_prob {keep_prob} outside [0, 1]");
    (0..n).map(|_| rng.bernoulli(keep_prob)).collect()
}

/// Vertically concatenates `(H, P)` shots, in order, into one problem.
pub fn stack_shots(shots: &[(Matrix, Matrix)]) -> Result<RegressionProblem> {
    if shots.is_empty() {
        return Err(Error::contract("stack_shots needs at least one shot"));
    }
    let hs: Vec<&Matrix> = shots.iter().map(|(h, _)| h).collect();
    let ps: Vec<&Matrix> = shots.iter().map(|(_, p)| p).collect();
    RegressionProblem::new(Matrix::vstack(&hs)?, Matrix::vstack(&ps)?)
}

/// `H_t = P_t · F`.
pub fn predict_target(f: &Matrix, p_t: &Matrix) -> Result<Matrix> {
    if p_t.cols() != f.rows() {
        return Err(Error::dim("predict_target", p_t.shape(), f.shape()));
    }
    p_t.matmul(f)
}

/// Weighted entrywise p-norm objective: `Σⱼ wⱼ Σᵢ |rⱼᵢ|^p`.
pub fn objective(prob: &RegressionProblem, f: &Matrix, norm: Norm) -> Result<f64> {
    if f.rows() != prob.d() || f.cols() != prob.appearance_dim() {
        return Err(Error::dim("objective", f.shape(), (prob.d(), prob.appearance_dim())));
    }
    let r = prob.h().sub(&prob.p().matmul(f)?)?;
    let w = prob.weights_or_ones();
    Ok((0..r.rows())
        .map(|j| {
            let row: f64 = match norm {
                Norm::L1 => r.row(j).iter().map(|x| x.abs()).sum(),
                Norm::L2 => r.row(j).iter().map(|x| x * x).sum(),
            };
            w[j] * row
        })
        .sum())
}
