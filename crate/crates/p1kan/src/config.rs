use std::path::PathBuf;

use clap::ValueEnum;
use p1kan_core::TargetKind;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    #[value(name = "p1kan")]
    P1Kan,
    #[value(name = "mlp")]
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionArg {
    A,
    B,
}

impl From<FunctionArg> for TargetKind {
    fn from(f: FunctionArg) -> Self {
        match f {
            FunctionArg::A => TargetKind::A,
            FunctionArg::B => TargetKind::B,
        }
    }
}

pub const DEFAULT_ITERS: u64 = 10_000;
pub const DEFAULT_BATCH: usize = 1000;
pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_EVAL_EVERY: u64 = 100;
pub const DEFAULT_EVAL_SAMPLES: usize = 100_000;
pub const DEFAULT_MAVG_WINDOW: usize = 10;

/// One training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub function: TargetKind,
    pub dim: usize,
    pub hidden: Vec<usize>,
    /// Meshes per direction; P1-KAN only.
    pub meshes: Option<usize>,
    pub iters: u64,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    pub eval_every: u64,
    pub eval_samples: usize,
    pub moving_avg_window: usize,
    /// Fill the `elapsed_s` column. Off by default so that metrics files are
    /// reproducible byte for byte.
    pub record_time: bool,
    pub out_path: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for everything but the model, function and dimension.
    pub fn new(model: ModelKind, function: TargetKind, dim: usize) -> Self {
        ExperimentConfig {
            model,
            function,
            dim,
            hidden: vec![10, 10],
            meshes: match model {
                ModelKind::P1Kan => Some(5),
                ModelKind::Mlp => None,
            },
            iters: DEFAULT_ITERS,
            batch: DEFAULT_BATCH,
            lr: DEFAULT_LR,
            seed: 0,
            eval_every: DEFAULT_EVAL_EVERY,
            eval_samples: DEFAULT_EVAL_SAMPLES,
            moving_avg_window: DEFAULT_MAVG_WINDOW,
            record_time: false,
            out_path: None,
            save_model: None,
        }
    }

    /// `[dim, hidden..., 1]`
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.dim);
        w.extend(&self.hidden);
        w.push(1);
        w
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.dim == 0 {
            return fail("--dim must be positive");
        }
        if self.hidden.contains(&0) {
            return fail("hidden widths must be positive");
        }
        match (self.model, self.meshes) {
            (ModelKind::P1Kan, None) => return fail("--meshes is required for --model p1kan"),
            (ModelKind::P1Kan, Some(0)) => return fail("--meshes must be positive"),
            (ModelKind::Mlp, Some(_)) => return fail("--meshes only applies to --model p1kan"),
            _ => {}
        }
        if self.batch == 0 || self.eval_every == 0 || self.eval_samples == 0 {
            return fail("--batch, --eval-every and --eval-samples must be positive");
        }
        if self.moving_avg_window == 0 {
            return fail("moving-average window must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("--lr must be positive");
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `p1kan[2,10,10,1]M=5`.
    pub fn label(&self) -> String {
        let widths = self
            .widths()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        match (self.model, self.meshes) {
            (ModelKind::P1Kan, Some(m)) => format!("p1kan[{widths}]M={m}"),
            _ => format!("mlp[{widths}]"),
        }
    }
}
