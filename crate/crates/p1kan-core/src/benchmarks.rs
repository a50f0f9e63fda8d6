//! Target functions on `[0, 1]^d`.
//!
//! - A: `cos(sum_i i * y_i)` with `y = 0.5 + (2x - 1) / sqrt(d)`. Smooth, and
//!   oscillates faster as `d` grows.
//! - B: `d * (prod_i y_i + 2 frac(4 prod_i x_i) - 1)` with
//!   `y = 2 frac(4x) - 1` componentwise. Discontinuous along many hyperplanes
//!   and hypersurfaces.
//!
//! Both are evaluated literally at `x_i = 1` (so `frac(4) = 0`).

use crate::domain::HyperRectangle;
use crate::error::{CoreError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetFunction {
    kind: TargetKind,
    dim: usize,
}

impl TargetFunction {
    pub fn new(kind: TargetKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidArgument(
                "target dimension must be at least 1",
            ));
        }
        Ok(TargetFunction { kind, dim })
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> HyperRectangle {
        HyperRectangle::unit(self.dim)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(CoreError::ShapeMismatch {
                what: "target input",
                expected: self.dim,
                found: x.len(),
            });
        }
        match self.kind {
            TargetKind::A => function_a(x),
            TargetKind::B => function_b(x),
        }
    }

    /// One value per row, as an `n x 1` matrix.
    pub fn eval_batch(&self, x: &Matrix) -> Result<Matrix> {
        let values = x.iter_rows().map(|r| self.eval(r)).collect::<Result<_>>()?;
        Matrix::from_vec(x.rows(), 1, values)
    }
}

fn check_unit(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(coord) => Err(CoreError::OutOfDomain {
            coord,
            value: x[coord],
        }),
        None if x.is_empty() => Err(CoreError::InvalidArgument("empty input")),
        None => Ok(()),
    }
}

#[inline]
fn frac(v: f64) -> f64 {
    v - libm::floor(v)
}

/// Smooth oscillating target; values in `[-1, 1]`.
pub fn function_a(x: &[f64]) -> Result<f64> {
    check_unit(x)?;
    let scale = 1.0 / libm::sqrt(x.len() as f64);
    let phase: f64 = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| (i + 1) as f64 * (0.5 + (2.0 * xi - 1.0) * scale))
        .sum();
    Ok(libm::cos(phase))
}

/// Irregular target; values in `[-2d, 2d]`: each `y_i` is in `[-1, 1)` so the
/// product is in `[-1, 1]`, and `2 frac(.) - 1` is in `[-1, 1)`.
pub fn function_b(x: &[f64]) -> Result<f64> {
    check_unit(x)?;
    let d = x.len() as f64;
    let prod_y: f64 = x.iter().map(|&xi| 2.0 * frac(4.0 * xi) - 1.0).product();
    let prod_x: f64 = x.iter().product();
    Ok(d * (prod_y + 2.0 * frac(4.0 * prod_x) - 1.0))
}
