//! MLP architecture sweep: train every listed (depth, width) and keep the one
//! whose best evaluation loss over the run is smallest.

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::HarnessError;
use crate::metrics::{MetricRow, MetricsLog};
use crate::train::{train_with_progress, TrainOutcome};

/// `(hidden layers, neurons per layer)`
pub const MLP_SWEEP: [(usize, usize); 8] = [
    (2, 10),
    (2, 20),
    (2, 40),
    (3, 10),
    (3, 20),
    (3, 40),
    (3, 80),
    (3, 160),
];

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub config: ExperimentConfig,
    pub outcome: TrainOutcome,
}

impl SweepEntry {
    pub fn status_line(&self) -> String {
        let status = match self.outcome.log.status {
            crate::RunStatus::Completed => "completed".to_string(),
            crate::RunStatus::Diverged { iter } => format!("diverged at iteration {iter}"),
        };
        match self.outcome.log.best_eval() {
            Some(best) => format!("{}: {status}, best eval MSE {best:e}", self.config.label()),
            None => format!("{}: {status}, no evaluation", self.config.label()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub entries: Vec<SweepEntry>,
    pub best: usize,
}

impl SweepOutcome {
    pub fn best_entry(&self) -> &SweepEntry {
        &self.entries[self.best]
    }
}

/// Index of the run with the smallest best-seen evaluation loss. Diverged runs
/// and runs without any evaluation are not eligible; ties go to the earlier run.
pub fn select_best<'a>(logs: impl IntoIterator<Item = &'a MetricsLog>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, log) in logs.into_iter().enumerate() {
        if log.diverged() {
            continue;
        }
        if let Some(v) = log.best_eval() {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((idx, v));
            }
        }
    }
    best.map(|(idx, _)| idx)
}

/// The sweep configurations derived from `base` (function, dimension, budget,
/// seed and evaluation settings are kept; model and widths are replaced).
pub fn sweep_configs(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    MLP_SWEEP
        .iter()
        .map(|&(layers, width)| {
            let mut c = base.clone();
            c.model = ModelKind::Mlp;
            c.meshes = None;
            c.hidden = vec![width; layers];
            c
        })
        .collect()
}

pub fn sweep_mlp(base: &ExperimentConfig) -> Result<SweepOutcome, HarnessError> {
    sweep_mlp_with_progress(base, |_, _| {})
}

pub fn sweep_mlp_with_progress<F>(
    base: &ExperimentConfig,
    mut progress: F,
) -> Result<SweepOutcome, HarnessError>
where
    F: FnMut(&ExperimentConfig, &MetricRow),
{
    let mut entries = Vec::with_capacity(MLP_SWEEP.len());
    for config in sweep_configs(base) {
        let outcome = train_with_progress(&config, |row| progress(&config, row))?;
        entries.push(SweepEntry { config, outcome });
    }
    match select_best(entries.iter().map(|e| &e.outcome.log)) {
        Some(best) => Ok(SweepOutcome { entries, best }),
        None => Err(HarnessError::AllDiverged(
            entries
                .iter()
                .map(SweepEntry::status_line)
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}
