//! The regression solve as a node of the autodiff tape.
//!
//! Forward: `F = argmin ‖H_s − P_s·F‖_p`, then `H_t = P_t·F` as an ordinary
//! matmul node.
//!
//! Backward for `p = 2`, with `A = PᵀWP + λI`, `X = A⁻¹·G` and
//! `R = H − P·F`:
//!
//! ```text
//! ∂H = W·P·X
//! ∂P = W·(R·Xᵀ − P·X·Fᵀ)
//! ```
//!
//! plus, because `λ = ridge·trace(PᵀWP)/d` moves with `P`,
//! `∂P −= (2·ridge/d)·⟨X, F⟩·W·P`. That term is tiny for plain least squares
//! but not under IRLS weights spanning many orders of magnitude.
//!
//! Backward for `p = 1` applies the same formula column by column with the
//! last IRLS weights held fixed. That is the derivative of the frozen-weight
//! map, not of the iteration as a whole.

mod gradcheck;
mod twofloat;

pub use twofloat::Dd;

pub use gradcheck::{frozen_loss_dd, gradcheck, gradcheck_against, l1_frozen_check, random_layer_inputs, run_suite, CheckLine, GradReport, SuiteOptions};

use crate::error::{Error, Result};
use crate::solver::{factor_weighted_gram, lse_with_factor, solve_frozen, solve_lad_irls, Norm, PnrConfig, RegressionProblem, RegressionSolution};
use crate::tensor::{Cholesky, Matrix, NodeId, Tape};

/// Node handles and the solver output behind them.
#[derive(Clone, Debug)]
pub struct PnrOutput {
    pub f: NodeId,
    pub h_t: NodeId,
    pub solution: RegressionSolution,
}

/// Everything the least-squares backward needs from the forward pass.
#[derive(Clone, Debug)]
pub struct LseCache {
    pub p: Matrix,
    pub h: Matrix,
    pub f: Matrix,
    /// Row weights; all ones when the problem is unweighted.
    pub weights: Vec<f64>,
    /// Relative ridge strength, as passed to the solver.
    pub ridge: f64,
    pub chol: Cholesky,
}

/// `(∂H_s, ∂P_s)` of the weighted least-squares map for upstream `g = ∂F`.
pub fn lse_backward(g: &Matrix, cache: &LseCache) -> Result<(Matrix, Matrix)> {
    if g.shape() != cache.f.shape() {
        return Err(Error::dim("lse_backward", g.shape(), cache.f.shape()));
    }
    let x = cache.chol.solve(g)?;
    let px = cache.p.matmul(&x)?;
    let dh = px.scale_rows(&cache.weights)?;
    let r = cache.h.sub(&cache.p.matmul(&cache.f)?)?;
    let mut dp = r.matmul_t(&x)?.sub(&px.matmul_t(&cache.f)?)?;
    if cache.ridge != 0.0 {
        let xf: f64 = x.data().iter().zip(cache.f.data()).map(|(a, b)| a * b).sum();
        let c = 2.0 * cache.ridge * xf / cache.p.cols() as f64;
        dp = dp.sub(&cache.p.scale(c))?;
    }
    Ok((dh, dp.scale_rows(&cache.weights)?))
}

/// `(∂H_s, ∂P_s)` of the frozen-weight map
/// `Fᵢ = (PᵀWᵢP + λᵢI)⁻¹·PᵀWᵢ·Hᵢ`, where column `i` of `weights` is `Wᵢ`.
/// `f` must be that map's value at `(p, h)`.
pub fn lad_backward_frozen(
    g: &Matrix,
    weights: Option<&Matrix>,
    p: &Matrix,
    h: &Matrix,
    f: &Matrix,
    ridge: f64,
) -> Result<(Matrix, Matrix)> {
    let weights = weights.ok_or_else(|| Error::contract("frozen LAD backward needs the final IRLS weights"))?;
    if weights.shape() != h.shape() {
        return Err(Error::dim("lad_backward_frozen", weights.shape(), h.shape()));
    }
    if g.shape() != f.shape() || f.shape() != (p.cols(), h.cols()) {
        return Err(Error::dim("lad_backward_frozen", g.shape(), f.shape()));
    }
    let mut dh = Matrix::zeros(h.rows(), h.cols());
    let mut dp = Matrix::zeros(p.rows(), p.cols());
    for i in 0..h.cols() {
        let w = weights.column(i);
        let cache = LseCache {
            p: p.clone(),
            h: Matrix::column_vector(&h.column(i)),
            f: Matrix::column_vector(&f.column(i)),
            chol: factor_weighted_gram(p, &w, ridge)?,
            weights: w,
            ridge,
        };
        let (dhi, dpi) = lse_backward(&Matrix::column_vector(&g.column(i)), &cache)?;
        dh.set_column(i, &dhi.column(0));
        dp.add_assign(&dpi)?;
    }
    Ok((dh, dp))
}

/// Records `F` and `H_t = P_t·F` on the tape.
pub fn pnr_forward(tape: &mut Tape, h_s: NodeId, p_s: NodeId, p_t: NodeId, cfg: &PnrConfig) -> Result<PnrOutput> {
    forward(tape, h_s, p_s, p_t, None, cfg, false)
}

/// [`pnr_forward`] with fixed, non-differentiated row weights (binary masks
/// for self-supervised training).
pub fn pnr_forward_weighted(
    tape: &mut Tape,
    h_s: NodeId,
    p_s: NodeId,
    p_t: NodeId,
    row_weights: &[f64],
    cfg: &PnrConfig,
) -> Result<PnrOutput> {
    forward(tape, h_s, p_s, p_t, Some(row_weights), cfg, false)
}

/// Negative control for gradient checking: the `∂P_s` rule is scaled by 1.5.
#[doc(hidden)]
pub fn pnr_forward_corrupted(tape: &mut Tape, h_s: NodeId, p_s: NodeId, p_t: NodeId, cfg: &PnrConfig) -> Result<PnrOutput> {
    forward(tape, h_s, p_s, p_t, None, cfg, true)
}

/// The frozen-weight map as its own node: `F = solve_frozen(P_s, H_s, W)`
/// with `W` constant, then `H_t = P_t·F`. Its finite differences are the
/// reference for the `p = 1` backward.
pub fn frozen_forward(
    tape: &mut Tape,
    h_s: NodeId,
    p_s: NodeId,
    p_t: NodeId,
    weights: &Matrix,
    ridge: f64,
) -> Result<(NodeId, NodeId)> {
    let (h, p) = (tape.value(h_s).clone(), tape.value(p_s).clone());
    let f = solve_frozen(&p, &h, weights, ridge)?;
    let rule = frozen_rule(weights.clone(), p, h, f.clone(), ridge, false);
    let f_node = tape.custom("pnr_frozen", f, &[h_s, p_s], rule);
    let h_t = tape.matmul(p_t, f_node)?;
    Ok((f_node, h_t))
}

fn forward(
    tape: &mut Tape,
    h_s: NodeId,
    p_s: NodeId,
    p_t: NodeId,
    row_weights: Option<&[f64]>,
    cfg: &PnrConfig,
    corrupt: bool,
) -> Result<PnrOutput> {
    cfg.validate()?;
    let (h, p) = (tape.value(h_s).clone(), tape.value(p_s).clone());
    if tape.value(p_t).cols() != p.cols() {
        return Err(Error::dim("pnr_forward", tape.value(p_t).shape(), p.shape()));
    }
    let mut prob = RegressionProblem::new(h.clone(), p.clone())?;
    if let Some(w) = row_weights {
        prob = prob.with_row_weights(w.to_vec())?;
    }

    let (solution, rule) = match cfg.norm {
        Norm::L2 => {
            let weights = prob.weights_or_ones();
            let (f, chol) = lse_with_factor(&p, &h, &weights, cfg.ridge)?;
            let objective = crate::solver::objective(&prob, &f, Norm::L2)?;
            let cache = LseCache {
                p,
                h,
                f: f.clone(),
                weights,
                ridge: cfg.ridge,
                chol,
            };
            let rule: crate::tensor::BackwardRule = Box::new(move |g| {
                let (dh, dp) = lse_backward(g, &cache).expect("shapes fixed at forward time");
                vec![dh, if corrupt { dp.scale(1.5) } else { dp }]
            });
            let sol = RegressionSolution {
                f,
                objective,
                iterations_used: 0,
                final_weights: None,
            };
            (sol, rule)
        }
        Norm::L1 => {
            let sol = solve_lad_irls(&prob, cfg)?;
            let weights = sol
                .final_weights
                .clone()
                .ok_or_else(|| Error::contract("IRLS returned no weights"))?;
            let rule = frozen_rule(weights, p, h, sol.f.clone(), cfg.ridge, corrupt);
            (sol, rule)
        }
    };

    let f = tape.custom("pnr", solution.f.clone(), &[h_s, p_s], rule);
    let h_t = tape.matmul(p_t, f)?;
    Ok(PnrOutput { f, h_t, solution })
}

fn frozen_rule(weights: Matrix, p: Matrix, h: Matrix, f: Matrix, ridge: f64, corrupt: bool) -> crate::tensor::BackwardRule {
    Box::new(move |g| {
        let (dh, dp) = lad_backward_frozen(g, Some(&weights), &p, &h, &f, ridge).expect("shapes fixed at forward time");
        vec![dh, if corrupt { dp.scale(1.5) } else { dp }]
    })
}
