//! Central finite-difference checks of tape gradients.

use std::fmt;

use crate::error::{Error, Result};
use crate::layer::{pnr_forward, pnr_forward_corrupted};
use crate::solver::{solve_lad_irls, Norm, PnrConfig, RegressionProblem};
use crate::synth::SeededRng;
use crate::layer::twofloat::Dd;
use crate::tensor::{Matrix, NodeId, Tape};

/// Largest entrywise relative error
/// `|a − n| / max(|a|, |n|, 1e-8)` between analytic and numeric gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub max_rel_err: f64,
    /// Per-input maxima, in input order.
    pub per_input: Vec<f64>,
    pub pass: bool,
}

/// Builds a scalar loss from leaves holding `inputs` and compares the tape
/// gradient of every input entry to a central difference with `step`.
pub fn gradcheck<F>(build: F, inputs: &[Matrix], step: f64, tol: f64) -> Result<GradReport>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
{
    let reference = |xs: &[Matrix]| -> Result<Dd> {
        let mut t = Tape::new();
        let ids: Vec<NodeId> = xs.iter().map(|m| t.leaf(m.clone())).collect();
        let out = build(&mut t, &ids)?;
        scalar(&t, out).map(Dd::from)
    };
    gradcheck_against(&build, reference, inputs, step, tol)
}

/// As [`gradcheck`], but finite differences are taken of `reference`, which
/// must agree with `analytic` in value at `inputs` and may be evaluated in
/// extended precision. The quotient divides by the exact width
/// `(x + step) − (x − step)` of the rounded perturbation.
pub fn gradcheck_against<A, R>(analytic: A, reference: R, inputs: &[Matrix], step: f64, tol: f64) -> Result<GradReport>
where
    A: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
    R: Fn(&[Matrix]) -> Result<Dd>,
{
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|m| tape.leaf(m.clone())).collect();
    let loss = analytic(&mut tape, &ids)?;
    scalar(&tape, loss)?;
    let grads = tape.backward(loss)?;

    let mut xs = inputs.to_vec();
    let mut per_input = Vec::with_capacity(inputs.len());
    for (k, id) in ids.iter().enumerate() {
        let g = grads.get(*id);
        let mut worst = 0.0f64;
        for e in 0..xs[k].data().len() {
            let orig = xs[k].data()[e];
            let (x_up, x_down) = (orig + step, orig - step);
            xs[k].data_mut()[e] = x_up;
            let up = reference(&xs)?;
            xs[k].data_mut()[e] = x_down;
            let down = reference(&xs)?;
            xs[k].data_mut()[e] = orig;
            let numeric = ((up - down) / Dd::diff(x_up, x_down)).to_f64();
            let a = g.data()[e];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
        per_input.push(worst);
    }
    let max_rel_err = per_input.iter().copied().fold(0.0, f64::max);
    Ok(GradReport {
        max_rel_err,
        per_input,
        pass: max_rel_err <= tol,
    })
}

fn scalar(tape: &Tape, id: NodeId) -> Result<f64> {
    let v = tape.value(id);
    if v.shape() != (1, 1) {
        return Err(Error::contract(format!("gradcheck needs a 1x1 loss, got {:?}", v.shape())));
    }
    Ok(v.get(0, 0))
}

pub const STEP: f64 = 1e-5;
pub const TOL_CHAIN: f64 = 1e-7;
pub const TOL_L2: f64 = 1e-5;
pub const TOL_L1_FROZEN: f64 = 1e-4;

/// Which checks [`run_suite`] performs.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub trials: usize,
    /// `None` runs both norms.
    pub norm: Option<Norm>,
    /// Swap in the corrupted backward rule everywhere; every pNR check
    /// should then fail.
    #[doc(hidden)]
    pub corrupt: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 20,
            norm: None,
            corrupt: false,
        }
    }
}

/// One line of the suite report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} max_rel_err={:.3e} tol={:.0e} {}",
            self.name,
            self.max_rel_err,
            self.tol,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

impl CheckLine {
    fn from_report(name: String, tol: f64, r: &GradReport) -> Self {
        Self {
            name,
            max_rel_err: r.max_rel_err,
            tol,
            pass: r.pass,
        }
    }
}

/// Random instance with `n ≤ 16`, `d ≤ 4`, `D ≤ 4`, entries on `[-1, 1]`:
/// `[H_s, P_s, P_t, M]` where the loss is `sum(H_t ∘ M)`.
pub fn random_layer_inputs(rng: &mut SeededRng) -> Vec<Matrix> {
    let d = 1 + rng.below(4);
    let big_d = 1 + rng.below(4);
    let n = d + 2 + rng.below(15 - d);
    let n_t = 1 + rng.below(16);
    let mut u = |r, c| Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0));
    vec![u(n, big_d), u(n, d), u(n_t, d), u(n_t, big_d)]
}

fn weighted_sum(tape: &mut Tape, h_t: NodeId, m: NodeId) -> Result<NodeId> {
    let prod = tape.mul(h_t, m)?;
    Ok(tape.sum(prod))
}

fn layer_loss(cfg: PnrConfig, corrupt: bool) -> impl Fn(&mut Tape, &[NodeId]) -> Result<NodeId> {
    move |t, x| {
        let out = if corrupt {
            pnr_forward_corrupted(t, x[0], x[1], x[2], &cfg)?
        } else {
            pnr_forward(t, x[0], x[1], x[2], &cfg)?
        };
        weighted_sum(t, out.h_t, x[3])
    }
}

/// Runs the chain self-check, the `p = 2` and/or `p = 1` layer checks over
/// `trials` seeded instances, and the corrupted-backward negative control.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let mut rng = SeededRng::new(opts.seed);

    let chain = |t: &mut Tape, x: &[NodeId]| -> Result<NodeId> {
        let ab = t.matmul(x[0], x[1])?;
        let sq = t.mul(ab, ab)?;
        Ok(t.sum(sq))
    };
    let ab = vec![
        Matrix::from_fn(3, 4, |_, _| rng.uniform(-1.0, 1.0)),
        Matrix::from_fn(4, 2, |_, _| rng.uniform(-1.0, 1.0)),
    ];
    let r = gradcheck(chain, &ab, STEP, TOL_CHAIN)?;
    lines.push(CheckLine::from_report("matmul_chain".into(), TOL_CHAIN, &r));

    let run_l2 = opts.norm != Some(Norm::L1);
    let run_l1 = opts.norm != Some(Norm::L2);

    if run_l2 {
        let mut r2 = rng.fork(2);
        for k in 0..opts.trials {
            let inputs = random_layer_inputs(&mut r2);
            let r = gradcheck(layer_loss(PnrConfig::lse(), opts.corrupt), &inputs, STEP, TOL_L2)?;
            lines.push(CheckLine::from_report(format!("pnr_l2[{k}]"), TOL_L2, &r));
        }
    }

    if run_l1 {
        let mut r1 = rng.fork(1);
        for k in 0..opts.trials {
            let inputs = random_layer_inputs(&mut r1);
            let r = l1_frozen_check(&inputs, opts.corrupt)?;
            lines.push(CheckLine::from_report(format!("pnr_l1_frozen[{k}]"), TOL_L1_FROZEN, &r));
        }
    }

    // The negative control passes when the corrupted rule is caught.
    let inputs = random_layer_inputs(&mut rng.fork(3));
    let bad = gradcheck(layer_loss(PnrConfig::lse(), true), &inputs, STEP, TOL_L2)?;
    lines.push(CheckLine {
        name: "negative_control".into(),
        max_rel_err: bad.max_rel_err,
        tol: TOL_L2,
        pass: !bad.pass,
    });
    Ok(lines)
}

/// `sum((P_t·F) ∘ M)` for the frozen-weight map
/// `Fᵢ = (PᵀWᵢP + λᵢI)⁻¹·PᵀWᵢ·Hᵢ`, all in double-double arithmetic. IRLS
/// weights can span eight orders of magnitude; in f64 the central
/// differences of this map lose most of their digits.
pub fn frozen_loss_dd(h: &Matrix, p: &Matrix, p_t: &Matrix, m: &Matrix, weights: &Matrix, ridge: f64) -> Result<Dd> {
    let (n, d) = p.shape();
    if h.rows() != n || weights.shape() != h.shape() || p_t.cols() != d || m.shape() != (p_t.rows(), h.cols()) {
        return Err(Error::dim("frozen_loss_dd", h.shape(), p.shape()));
    }
    let pd = |j: usize, k: usize| Dd::from(p.get(j, k));
    let mut loss = Dd::ZERO;
    for i in 0..h.cols() {
        let w: Vec<Dd> = weights.column(i).into_iter().map(Dd::from).collect();
        let mut a = vec![vec![Dd::ZERO; d]; d];
        let mut b = vec![Dd::ZERO; d];
        for j in 0..n {
            let hj = Dd::from(h.get(j, i));
            for r in 0..d {
                let wp = w[j] * pd(j, r);
                b[r] = b[r] + wp * hj;
                for c in 0..d {
                    a[r][c] = a[r][c] + wp * pd(j, c);
                }
            }
        }
        let trace = (0..d).fold(Dd::ZERO, |acc, r| acc + a[r][r]);
        let shift = Dd::from(ridge) * trace / Dd::from(d as f64);
        for (r, row) in a.iter_mut().enumerate() {
            row[r] = row[r] + shift;
        }
        let f = cholesky_solve_dd(a, b)?;
        for t in 0..p_t.rows() {
            let ht = (0..d).fold(Dd::ZERO, |acc, k| acc + Dd::from(p_t.get(t, k)) * f[k]);
            loss = loss + ht * Dd::from(m.get(t, i));
        }
    }
    Ok(loss)
}

fn cholesky_solve_dd(mut a: Vec<Vec<Dd>>, mut b: Vec<Dd>) -> Result<Vec<Dd>> {
    let d = b.len();
    for k in 0..d {
        let mut pivot = a[k][k];
        for l in 0..k {
            pivot = pivot - a[k][l] * a[k][l];
        }
        if !(pivot.hi > 0.0) {
            return Err(Error::Singular {
                pivot: k,
                hint: "design is rank deficient; use ridge > 0",
            });
        }
        let root = pivot.sqrt();
        a[k][k] = root;
        for r in k + 1..d {
            let mut v = a[r][k];
            for l in 0..k {
                v = v - a[r][l] * a[k][l];
            }
            a[r][k] = v / root;
        }
    }
    for r in 0..d {
        for l in 0..r {
            b[r] = b[r] - a[r][l] * b[l];
        }
        b[r] = b[r] / a[r][r];
    }
    for r in (0..d).rev() {
        for l in r + 1..d {
            b[r] = b[r] - a[l][r] * b[l];
        }
        b[r] = b[r] / a[r][r];
    }
    Ok(b)
}

/// Tape gradient of the `p = 1` layer against finite differences of the
/// frozen-weight map built from the same instance's final IRLS weights.
pub fn l1_frozen_check(inputs: &[Matrix], corrupt: bool) -> Result<GradReport> {
    let cfg = PnrConfig::lad();
    let prob = RegressionProblem::new(inputs[0].clone(), inputs[1].clone())?;
    let weights = solve_lad_irls(&prob, &cfg)?
        .final_weights
        .ok_or_else(|| Error::contract("IRLS returned no weights"))?;
    let reference = move |x: &[Matrix]| frozen_loss_dd(&x[0], &x[1], &x[2], &x[3], &weights, cfg.ridge);
    gradcheck_against(layer_loss(cfg, corrupt), reference, inputs, STEP, TOL_L1_FROZEN)
}
