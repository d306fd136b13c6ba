//! First-order optimizers over flat lists of parameter matrices.

use crate::error::{Error, Result};
use crate::num::{Matrix, Scalar};

/// Update rule selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    /// Plain gradient descent; used by the gradient-check tests.
    Sgd,
    /// Adaptive moment estimation.
    Adam,
}

/// Optimizer state: learning rate, step counter, and (for Adam) per-parameter
/// moment accumulators created lazily to match parameter shapes.
pub struct Optimizer<S> {
    method: OptMethod,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    first_moment: Vec<Matrix<S>>,
    second_moment: Vec<Matrix<S>>,
}

impl<S: Scalar> Optimizer<S> {
    pub fn sgd(lr: f64) -> Self {
        Self::with_method(OptMethod::Sgd, lr)
    }

    /// Adam with the usual beta1=0.9, beta2=0.999, eps=1e-8.
    pub fn adam(lr: f64) -> Self {
        Self::with_method(OptMethod::Adam, lr)
    }

    pub fn with_method(method: OptMethod, lr: f64) -> Self {
        assert!(lr >= 0.0, "learning rate must be non-negative");
        Self {
            method,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update step in place. `params` and `grads` must align in
    /// order and shape across calls.
    pub fn step(&mut self, params: &mut [&mut Matrix<S>], grads: &[Matrix<S>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::LengthMismatch(format!(
                "optimizer got {} params but {} grads",
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads.iter()) {
            if p.shape() != g.shape() {
                return Err(Error::ShapeMismatch {
                    op: "opt_step",
                    left_rows: p.rows(),
                    left_cols: p.cols(),
                    right_rows: g.rows(),
                    right_cols: g.cols(),
                });
            }
        }
        self.step += 1;
        match self.method {
            OptMethod::Sgd => {
                let lr = S::from_f64(self.lr);
                for (p, g) in params.iter_mut().zip(grads.iter()) {
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data().iter()) {
                        *pv = *pv - lr * *gv;
                    }
                }
            }
            OptMethod::Adam => {
                if self.first_moment.is_empty() {
                    for g in grads {
                        self.first_moment.push(Matrix::zeros(g.rows(), g.cols()));
                        self.second_moment.push(Matrix::zeros(g.rows(), g.cols()));
                    }
                }
                let t = self.step as i32;
                let bias1 = 1.0 - self.beta1.powi(t);
                let bias2 = 1.0 - self.beta2.powi(t);
                let (b1, b2) = (S::from_f64(self.beta1), S::from_f64(self.beta2));
                let one = S::one();
                let lr = S::from_f64(self.lr);
                let eps = S::from_f64(self.eps);
                let (c1, c2) = (S::from_f64(1.0 / bias1), S::from_f64(1.0 / bias2));
                for (k, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
                    let m = self.first_moment[k].data_mut();
                    let v = self.second_moment[k].data_mut();
                    for ((pv, gv), (mv, vv)) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data().iter())
                        .zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *mv = b1 * *mv + (one - b1) * *gv;
                        *vv = b2 * *vv + (one - b2) * *gv * *gv;
                        let m_hat = *mv * c1;
                        let v_hat = *vv * c2;
                        *pv = *pv - lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat;

    #[test]
    fn zero_learning_rate_leaves_params_unchanged() {
        for method in [OptMethod::Sgd, OptMethod::Adam] {
            let mut p = Mat::from_rows(&[&[1.5, -2.0]]);
            let g = Mat::from_rows(&[&[10.0, -3.0]]);
            let mut opt = Optimizer::with_method(method, 0.0);
            opt.step(&mut [&mut p], &[g]).unwrap();
            assert_eq!(p, Mat::from_rows(&[&[1.5, -2.0]]));
        }
    }

    #[test]
    fn sgd_single_step_definition() {
        let mut p = Mat::from_rows(&[&[0.0]]);
        let g = Mat::from_rows(&[&[1.0]]);
        let mut opt = Optimizer::sgd(0.1);
        opt.step(&mut [&mut p], &[g]).unwrap();
        assert!((p.get(0, 0) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_lr_up_to_bias_correction() {
        // step 1: m_hat = g, v_hat = g^2, so the update is lr*g/(|g|+eps)
        // which is lr*sign(g) up to the eps term.
        let mut p = Mat::from_rows(&[&[0.0, 0.0]]);
        let g = Mat::from_rows(&[&[0.3, -7.0]]);
        let mut opt = Optimizer::adam(1e-3);
        opt.step(&mut [&mut p], &[g]).unwrap();
        assert!((p.get(0, 0) + 1e-3).abs() < 1e-6);
        assert!((p.get(0, 1) - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Mat::zeros(2, 2);
        let g = Mat::zeros(2, 3);
        let mut opt = Optimizer::sgd(0.1);
        assert!(opt.step(&mut [&mut p], &[g]).is_err());
    }

    #[test]
    fn step_counter_strictly_increases() {
        let mut p = Mat::zeros(1, 1);
        let g = Mat::zeros(1, 1);
        let mut opt = Optimizer::adam(1e-3);
        for expected in 1..=5 {
            opt.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
            assert_eq!(opt.step_count(), expected);
        }
    }
}
