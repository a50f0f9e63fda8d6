//! Training metrics and their CSV form.
//!
//! Header: `iter,train_loss,eval_mse,log10_eval_mse,mavg_log10,elapsed_s`.
//! One row per gradient iteration. Evaluation columns are empty except on
//! evaluation iterations, `mavg_log10` is empty until a full window of
//! evaluations exists, and `elapsed_s` is empty unless timing was requested.
//! Reals are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::HarnessError;

pub const CSV_HEADER: [&str; 6] = [
    "iter",
    "train_loss",
    "eval_mse",
    "log10_eval_mse",
    "mavg_log10",
    "elapsed_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub iter: u64,
    pub train_loss: f64,
    pub eval_mse: Option<f64>,
    pub log10_eval_mse: Option<f64>,
    pub mavg_log10: Option<f64>,
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// A non-finite loss or gradient appeared at this iteration.
    Diverged {
        iter: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricRow>,
    pub status: RunStatus,
}

impl Default for MetricsLog {
    fn default() -> Self {
        MetricsLog {
            rows: Vec::new(),
            status: RunStatus::Completed,
        }
    }
}

impl MetricsLog {
    pub fn eval_rows(&self) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(|r| r.eval_mse.is_some())
    }

    /// Smallest finite evaluation MSE seen during the run.
    pub fn best_eval(&self) -> Option<f64> {
        self.eval_rows()
            .filter_map(|r| r.eval_mse)
            .filter(|v| v.is_finite())
            .min_by(f64::total_cmp)
    }

    pub fn last_eval(&self) -> Option<f64> {
        self.eval_rows().last().and_then(|r| r.eval_mse)
    }

    /// Final moving average of log10 evaluation MSE.
    pub fn final_mavg_log10(&self) -> Option<f64> {
        self.eval_rows().last().and_then(|r| r.mavg_log10)
    }

    pub fn eval_at(&self, iter: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.iter == iter)
            .and_then(|r| r.eval_mse)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn write_metrics<W: Write>(log: &MetricsLog, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &log.rows {
        w.write_record([
            r.iter.to_string(),
            real(r.train_loss),
            opt(r.eval_mse),
            opt(r.log10_eval_mse),
            opt(r.mavg_log10),
            opt(r.elapsed_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv(log: &MetricsLog, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_metrics(log, file).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a file written by [`write_metrics_csv`]. A run is reported as
/// diverged when its last row carries a non-finite loss.
pub fn read_metrics_csv(path: &Path) -> Result<MetricsLog, HarnessError> {
    let malformed = |reason: String| HarnessError::MalformedMetrics {
        path: path.to_path_buf(),
        reason,
    };
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| -> Result<Option<f64>, HarnessError> {
            let s = &record[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| malformed(format!("row {}: bad number {s:?}", line + 1)))
        };
        let iter: u64 = record[0]
            .parse()
            .map_err(|_| malformed(format!("row {}: bad iteration", line + 1)))?;
        if rows.last().is_some_and(|r: &MetricRow| r.iter >= iter) {
            return Err(malformed(format!(
                "row {}: iterations must increase",
                line + 1
            )));
        }
        rows.push(MetricRow {
            iter,
            train_loss: field(1)?
                .ok_or_else(|| malformed(format!("row {}: missing train loss", line + 1)))?,
            eval_mse: field(2)?,
            log10_eval_mse: field(3)?,
            mavg_log10: field(4)?,
            elapsed_s: field(5)?,
        });
    }
    let status = match rows.last() {
        Some(r) if !r.train_loss.is_finite() || r.eval_mse.is_some_and(|v| !v.is_finite()) => {
            RunStatus::Diverged { iter: r.iter }
        }
        _ => RunStatus::Completed,
    };
    Ok(MetricsLog { rows, status })
}
