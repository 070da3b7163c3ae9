//! Bias-corrected Adam.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 0.002,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("adam eps must be > 0".into()));
        }
        Ok(())
    }
}

/// First and second moments, one pair per parameter matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let m: Vec<Matrix> = params.into_iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
        }
    }

    /// One update of every parameter. Shapes are checked before anything
    /// is modified.
    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix], hp: &AdamParams) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::contract(format!(
                "adam: {} moments, {} parameters, {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::dim("adam_step", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - hp.beta1.powi(t);
        let c2 = 1.0 - hp.beta2.powi(t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let (pd, gd) = (p.data_mut(), g.data());
            let (md, vd) = (m.data_mut(), v.data_mut());
            for k in 0..pd.len() {
                md[k] = hp.beta1 * md[k] + (1.0 - hp.beta1) * gd[k];
                vd[k] = hp.beta2 * vd[k] + (1.0 - hp.beta2) * gd[k] * gd[k];
                let mh = md[k] / c1;
                let vh = vd[k] / c2;
                pd[k] -= hp.lr * mh / (vh.sqrt() + hp.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut x = Matrix::filled(1, 1, 3.0);
        let mut st = AdamState::new([&x]);
        st.step(vec![&mut x], &[Matrix::filled(1, 1, 10.0)], &AdamParams::default()).unwrap();
        assert!((x.get(0, 0) - (3.0 - 0.002)).abs() < 1e-11);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut x = Matrix::from_fn(2, 3, |i, j| (i + j) as f64);
        let before = x.clone();
        let mut st = AdamState::new([&x]);
        for _ in 0..3 {
            st.step(vec![&mut x], &[Matrix::zeros(2, 3)], &AdamParams::default()).unwrap();
        }
        assert_eq!(x, before);
        assert_eq!(st.step, 3);
    }

    #[test]
    fn descends_a_parabola() {
        let hp = AdamParams {
            lr: 0.05,
            ..AdamParams::default()
        };
        let mut x = Matrix::filled(1, 1, 1.0);
        let mut st = AdamState::new([&x]);
        for _ in 0..100 {
            let g = x.scale(2.0);
            st.step(vec![&mut x], &[g], &hp).unwrap();
        }
        assert!(x.get(0, 0).abs() < 0.2, "x = {}", x.get(0, 0));
    }

    #[test]
    fn shape_mismatch_leaves_state_alone() {
        let mut x = Matrix::zeros(2, 2);
        let mut st = AdamState::new([&x]);
        assert!(st.step(vec![&mut x], &[Matrix::zeros(1, 2)], &AdamParams::default()).is_err());
        assert_eq!(st.step, 0);
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(AdamParams::default().validate().is_ok());
        assert!(AdamParams { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(AdamParams { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(AdamParams { beta2: -0.1, ..Default::default() }.validate().is_err());
    }
}
