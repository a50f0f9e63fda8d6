//! Central finite differences, used as the independent oracle for every
//! hand-written backward pass in the crate.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};

pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(p + h e_i) - f(p - h e_i)) / 2h` for each coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(CoreError::InvalidArgument(
            "finite-difference step must be positive",
        ));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let plus = f(&p);
        p[i] = orig - h;
        let minus = f(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(CoreError::NonFiniteValue { coordinate: i });
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}
