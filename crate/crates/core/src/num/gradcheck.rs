//! Central-difference validation of analytic gradients.

use crate::error::{Error, Result};
use crate::num::{Matrix, Scalar};

/// Compares analytic gradients against central differences.
///
/// `f` evaluates the scalar objective at a parameter setting and returns it
/// together with the analytic gradient per parameter (same order and shapes
/// as `params`). Returns the max over all parameter entries of
/// `|analytic - fd| / (|fd| + eps)` where `fd` is the two-sided difference
/// quotient with step `eps`.
pub fn grad_check<S, F>(f: F, params: &[Matrix<S>], eps: f64) -> Result<f64>
where
    S: Scalar,
    F: Fn(&[Matrix<S>]) -> Result<(S, Vec<Matrix<S>>)>,
{
    assert!(eps > 0.0, "eps must be positive");
    let (base, analytic) = f(params)?;
    if !base.is_finite() {
        return Err(Error::NonFinite { context: "grad_check objective".into() });
    }
    if analytic.len() != params.len() {
        return Err(Error::LengthMismatch(format!(
            "grad_check: {} params but {} gradients",
            params.len(),
            analytic.len()
        )));
    }

    let mut worst = 0.0_f64;
    let mut work: Vec<Matrix<S>> = params.to_vec();
    for (k, param) in params.iter().enumerate() {
        for idx in 0..param.data().len() {
            let orig = param.data()[idx];
            work[k].data_mut()[idx] = orig + S::from_f64(eps);
            let plus = f(&work)?.0;
            work[k].data_mut()[idx] = orig - S::from_f64(eps);
            let minus = f(&work)?.0;
            work[k].data_mut()[idx] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite { context: "grad_check perturbed objective".into() });
            }
            let fd = (plus.as_f64() - minus.as_f64()) / (2.0 * eps);
            let a = analytic[k].data()[idx].as_f64();
            let rel = (a - fd).abs() / (fd.abs() + eps);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Mat, Tape};

    #[test]
    fn quadratic_matches_central_difference() {
        // f(x) = x^2 at x = 3: central difference is exact for quadratics.
        let f = |p: &[Mat]| {
            let mut tape = Tape::new();
            let x = tape.leaf(p[0].clone());
            let sq = tape.hadamard(x, x)?;
            let y = tape.mean_all(sq);
            let grads = tape.backward(y)?;
            Ok((tape.scalar(y), vec![grads.wrt(x)]))
        };
        let params = vec![Mat::from_rows(&[&[3.0]])];
        let err = grad_check(f, &params, 1e-5).unwrap();
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn constant_objective_has_zero_error() {
        let f = |p: &[Mat]| {
            let mut tape = Tape::new();
            let _x = tape.leaf(p[0].clone());
            let c = tape.leaf(Mat::from_rows(&[&[4.0]]));
            let y = tape.mean_all(c);
            let grads = tape.backward(y)?;
            Ok((tape.scalar(y), vec![grads.wrt(_x)]))
        };
        let params = vec![Mat::from_rows(&[&[1.0, 2.0]])];
        assert_eq!(grad_check(f, &params, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let f = |p: &[Mat]| {
            let mut tape = Tape::new();
            let x = tape.leaf(p[0].clone());
            let sq = tape.hadamard(x, x)?;
            let y = tape.mean_all(sq);
            let _ = tape.backward(y)?;
            // deliberately wrong analytic gradient
            Ok((tape.scalar(y), vec![Mat::from_rows(&[&[100.0]])]))
        };
        let params = vec![Mat::from_rows(&[&[3.0]])];
        let err = grad_check(f, &params, 1e-5).unwrap();
        assert!(err > 1.0);
    }
}
