use crate::benchmarks::TargetFunction;
use crate::error::{CoreError, Result};
use crate::matrix::Matrix;
use crate::model::Regressor;
use crate::rng::{sample_uniform_batch, RngState};

/// Mean squared error over all entries and its gradient w.r.t. `pred`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(CoreError::ShapeMismatch {
            what: "prediction vs target",
            expected: target.rows() * target.cols(),
            found: pred.rows() * pred.cols(),
        });
    }
    let count = pred.as_slice().len();
    if count == 0 {
        return Err(CoreError::InvalidArgument("empty batch"));
    }
    let scale = 1.0 / count as f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut sum = 0.0;
    for ((g, p), t) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice())
        .zip(target.as_slice())
    {
        let r = p - t;
        sum += r * r;
        *g = 2.0 * r * scale;
    }
    Ok((sum * scale, grad))
}

const EVAL_CHUNK: usize = 10_000;

/// Monte Carlo estimate of `E[(f(X) - model(X))^2]` with `X` uniform on the
/// target's domain, from `n` fresh samples drawn from `rng`.
pub fn evaluate<M: Regressor + ?Sized>(
    model: &M,
    target: &TargetFunction,
    n: usize,
    rng: &mut RngState,
) -> Result<f64> {
    if n == 0 {
        return Err(CoreError::InvalidArgument(
            "evaluation needs at least one sample",
        ));
    }
    let domain = target.domain();
    let mut remaining = n;
    let mut sum = 0.0;
    while remaining > 0 {
        let chunk = remaining.min(EVAL_CHUNK);
        let x = sample_uniform_batch(rng, chunk, &domain)?;
        let pred = model.predict(&x)?;
        for (row, p) in x.iter_rows().zip(pred.as_slice()) {
            let r = target.eval(row)? - p;
            sum += r * r;
        }
        remaining -= chunk;
    }
    Ok(sum / n as f64)
}
