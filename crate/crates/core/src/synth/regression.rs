use crate::error::{Error, Result};
use crate::solver::RegressionProblem;
use crate::synth::SeededRng;
use crate::tensor::Matrix;

/// Parameters of a planted regression instance `H = P·F* + noise`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub appearance_dim: usize,
    pub noise_sigma: f64,
    pub outlier_frac: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 32,
            d: 4,
            appearance_dim: 3,
            noise_sigma: 0.01,
            outlier_frac: 0.2,
            outlier_scale: 10.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.appearance_dim == 0 {
            return Err(Error::Config("n, d and D must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_frac) {
            return Err(Error::Config("outlier_frac must be in [0, 1)".into()));
        }
        if !(self.outlier_scale > 0.0) {
            return Err(Error::Config("outlier_scale must be > 0".into()));
        }
        Ok(())
    }

    pub fn outlier_count(&self) -> usize {
        (self.outlier_frac * self.n as f64).round() as usize
    }
}

#[derive(Clone, Debug)]
pub struct RegressionInstance {
    pub problem: RegressionProblem,
    pub f_star: Matrix,
    /// Sorted indices of the perturbed rows.
    pub outlier_rows: Vec<usize>,
}

/// `P`, `F*` uniform on `[-1, 1]`; Gaussian noise on every entry of `H`;
/// outlier rows get an extra `outlier_scale`-sized Gaussian kick.
pub fn gen_regression_instance(spec: &SynthSpec) -> Result<RegressionInstance> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let (n, d, big_d) = (spec.n, spec.d, spec.appearance_dim);
    let p = Matrix::from_fn(n, d, |_, _| rng.uniform(-1.0, 1.0));
    let f_star = Matrix::from_fn(d, big_d, |_, _| rng.uniform(-1.0, 1.0));
    let clean = p.matmul(&f_star)?;
    let mut h = clean;
    for v in h.data_mut() {
        *v += spec.noise_sigma * rng.normal();
    }
    let mut outlier_rows = rng.sample_without_replacement(n, spec.outlier_count());
    outlier_rows.sort_unstable();
    for &r in &outlier_rows {
        for c in 0..big_d {
            let v = h.get(r, c) + spec.outlier_scale * rng.normal();
            h.set(r, c, v);
        }
    }
    Ok(RegressionInstance {
        problem: RegressionProblem::new(h, p)?,
        f_star,
        outlier_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{objective, Norm};

    #[test]
    fn noiseless_instance_has_zero_objective_at_truth() {
        let spec = SynthSpec {
            noise_sigma: 0.0,
            outlier_frac: 0.0,
            ..SynthSpec::default()
        };
        let inst = gen_regression_instance(&spec).unwrap();
        assert_eq!(objective(&inst.problem, &inst.f_star, Norm::L2).unwrap(), 0.0);
        assert!(inst.outlier_rows.is_empty());
    }

    #[test]
    fn seeded_determinism() {
        let spec = SynthSpec::default();
        let a = gen_regression_instance(&spec).unwrap();
        let b = gen_regression_instance(&spec).unwrap();
        assert_eq!(a.problem.h(), b.problem.h());
        assert_eq!(a.problem.p(), b.problem.p());
        assert_eq!(a.outlier_rows, b.outlier_rows);
        assert_eq!(a.outlier_rows.len(), 6);
    }

    #[test]
    fn clean_residual_spread_matches_sigma() {
        for seed in 0..5 {
            let spec = SynthSpec {
                n: 512,
                seed,
                ..SynthSpec::default()
            };
            let inst = gen_regression_instance(&spec).unwrap();
            let r = inst
                .problem
                .h()
                .sub(&inst.problem.p().matmul(&inst.f_star).unwrap())
                .unwrap();
            let vals: Vec<f64> = (0..spec.n)
                .filter(|i| inst.outlier_rows.binary_search(i).is_err())
                .flat_map(|i| r.row(i).to_vec())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
            assert!((sd / spec.noise_sigma - 1.0).abs() < 0.2, "sd {sd}");
        }
    }
}
