//! The training loop.
//!
//! Three independent random streams derive from the configured seed: stream 0
//! initializes parameters, stream 1 draws training batches and stream 2 draws
//! evaluation samples. Evaluation therefore never perturbs the parameter
//! trajectory, and a `(config, seed)` pair determines the whole run.

use std::collections::VecDeque;
use std::time::Instant;

use p1kan_core::{
    evaluate, sample_uniform_batch, Adam, CoreError, Mlp, P1KanNetwork, Regressor, RngState,
    TargetFunction,
};

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::HarnessError;
use crate::metrics::{MetricRow, MetricsLog, RunStatus};
use crate::model::Model;

pub const INIT_STREAM: u64 = 0;
pub const TRAIN_STREAM: u64 = 1;
pub const EVAL_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: MetricsLog,
    pub model: Model,
}

pub fn build_model(config: &ExperimentConfig) -> Result<Model, HarnessError> {
    config.validate()?;
    let mut rng = RngState::with_stream(config.seed, INIT_STREAM);
    let target = TargetFunction::new(config.function, config.dim)?;
    let widths = config.widths();
    Ok(match config.model {
        ModelKind::P1Kan => {
            let meshes = config.meshes.expect("validated");
            Model::P1Kan(P1KanNetwork::build(
                &widths,
                meshes,
                target.domain(),
                &mut rng,
            )?)
        }
        ModelKind::Mlp => Model::Mlp(Mlp::build(&widths, &mut rng)?),
    })
}

/// Mean squared error of `model` on `n` fresh uniform samples.
pub fn evaluate_model<M: Regressor + ?Sized>(
    model: &M,
    target: &TargetFunction,
    n: usize,
    rng: &mut RngState,
) -> Result<f64, HarnessError> {
    Ok(evaluate(model, target, n, rng)?)
}

pub fn train(config: &ExperimentConfig) -> Result<TrainOutcome, HarnessError> {
    train_with_progress(config, |_| {})
}

/// Errors that mean the parameters have left the finite range.
fn is_divergence(err: &CoreError) -> bool {
    matches!(
        err,
        CoreError::NonFiniteInput { .. } | CoreError::NonFiniteGradient { .. }
    )
}

/// Like [`train`], calling `on_eval` with every evaluation row as it is produced.
pub fn train_with_progress<F>(
    config: &ExperimentConfig,
    mut on_eval: F,
) -> Result<TrainOutcome, HarnessError>
where
    F: FnMut(&MetricRow),
{
    let mut model = build_model(config)?;
    let target = TargetFunction::new(config.function, config.dim)?;
    let domain = target.domain();
    let mut train_rng = RngState::with_stream(config.seed, TRAIN_STREAM);
    let mut eval_rng = RngState::with_stream(config.seed, EVAL_STREAM);
    let mut adam = Adam::new(&model.parameter_shapes(), config.lr)?;
    let mut log = MetricsLog::default();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(config.moving_avg_window);
    let start = Instant::now();
    let elapsed = |row_time: bool| row_time.then(|| start.elapsed().as_secs_f64());

    for iter in 1..=config.iters {
        let x = sample_uniform_batch(&mut train_rng, config.batch, &domain)?;
        let y = target.eval_batch(&x)?;
        let (loss, grads) = match model.loss_and_grads(&x, &y) {
            Ok(v) => v,
            Err(e) if is_divergence(&e) => (f64::NAN, Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut row = MetricRow {
            iter,
            train_loss: loss,
            eval_mse: None,
            log10_eval_mse: None,
            mavg_log10: None,
            elapsed_s: None,
        };
        if !loss.is_finite() {
            row.elapsed_s = elapsed(config.record_time);
            log.rows.push(row);
            log.status = RunStatus::Diverged { iter };
            break;
        }
        let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
        match adam.step(&mut model.parameters_mut(), &grad_refs) {
            Ok(()) => {}
            Err(e) if is_divergence(&e) => {
                row.elapsed_s = elapsed(config.record_time);
                log.rows.push(row);
                log.status = RunStatus::Diverged { iter };
                break;
            }
            Err(e) => return Err(e.into()),
        }
        model.after_update();

        if iter % config.eval_every == 0 {
            let mse = match evaluate(&model, &target, config.eval_samples, &mut eval_rng) {
                Ok(v) => v,
                Err(e) if is_divergence(&e) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            let log10 = mse.log10();
            if window.len() == config.moving_avg_window {
                window.pop_front();
            }
            window.push_back(log10);
            row.eval_mse = Some(mse);
            row.log10_eval_mse = Some(log10);
            if window.len() == config.moving_avg_window {
                row.mavg_log10 = Some(window.iter().sum::<f64>() / window.len() as f64);
            }
            row.elapsed_s = elapsed(config.record_time);
            on_eval(&row);
            let finite = mse.is_finite();
            log.rows.push(row);
            if !finite {
                log.status = RunStatus::Diverged { iter };
                break;
            }
        } else {
            row.elapsed_s = elapsed(config.record_time);
            log.rows.push(row);
        }
    }
    Ok(TrainOutcome { log, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use p1kan_core::TargetKind;

    fn tiny(model: ModelKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(model, TargetKind::A, 2);
        c.hidden = vec![4];
        c.iters = 30;
        c.batch = 64;
        c.eval_every = 10;
        c.eval_samples = 500;
        c.moving_avg_window = 2;
        c
    }

    #[test]
    fn schedule_and_moving_average() {
        let out = train(&tiny(ModelKind::P1Kan)).unwrap();
        assert_eq!(out.log.rows.len(), 30);
        let evals: Vec<_> = out.log.eval_rows().map(|r| r.iter).collect();
        assert_eq!(evals, vec![10, 20, 30]);
        let rows: Vec<_> = out.log.eval_rows().collect();
        assert!(rows[0].mavg_log10.is_none());
        let expected = 0.5 * (rows[0].log10_eval_mse.unwrap() + rows[1].log10_eval_mse.unwrap());
        assert_eq!(rows[1].mavg_log10.unwrap(), expected);
        assert!(out.log.rows.iter().all(|r| r.elapsed_s.is_none()));
        assert_eq!(out.log.status, RunStatus::Completed);
    }

    #[test]
    fn zero_iterations() {
        let mut c = tiny(ModelKind::Mlp);
        c.iters = 0;
        let out = train(&c).unwrap();
        assert!(out.log.rows.is_empty());
        assert_eq!(out.model, build_model(&c).unwrap());
    }

    #[test]
    fn eval_stream_does_not_touch_training() {
        let a = tiny(ModelKind::P1Kan);
        let mut b = a.clone();
        b.eval_samples = 1234;
        b.eval_every = 7;
        let (ra, rb) = (train(&a).unwrap(), train(&b).unwrap());
        assert_eq!(ra.model, rb.model);
        let la: Vec<_> = ra.log.rows.iter().map(|r| r.train_loss).collect();
        let lb: Vec<_> = rb.log.rows.iter().map(|r| r.train_loss).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn divergence_is_recorded_not_raised() {
        // a huge learning rate on the MLP blows the parameters up
        let mut c = tiny(ModelKind::Mlp);
        c.lr = 1e300;
        c.iters = 200;
        let out = train(&c).unwrap();
        let RunStatus::Diverged { iter } = out.log.status else {
            panic!("expected divergence, got {:?}", out.log.status);
        };
        assert_eq!(out.log.rows.last().unwrap().iter, iter);
    }

    #[test]
    fn timing_column_is_opt_in() {
        let mut c = tiny(ModelKind::Mlp);
        c.record_time = true;
        let out = train(&c).unwrap();
        assert!(out.log.rows.iter().all(|r| r.elapsed_s.is_some()));
    }
}
