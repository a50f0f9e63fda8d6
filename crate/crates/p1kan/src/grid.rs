//! `x1,x2,f` samples of a 2-D target on a uniform grid, for surface plots.

use std::io::Write;
use std::path::Path;

use p1kan_core::TargetFunction;

use crate::error::HarnessError;

pub const DEFAULT_GRID_POINTS: usize = 201;

pub fn write_grid<W: Write>(
    target: &TargetFunction,
    points: usize,
    out: W,
) -> Result<(), HarnessError> {
    if target.dim() != 2 {
        return Err(HarnessError::Config(format!(
            "grid dumps need a 2-D function, got dimension {}",
            target.dim()
        )));
    }
    if points < 2 {
        return Err(HarnessError::Config(
            "a grid needs at least 2 points per side".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| HarnessError::Csv {
        path: "<grid>".into(),
        source,
    };
    w.write_record(["x1", "x2", "f"]).map_err(csv_err)?;
    let step = 1.0 / (points - 1) as f64;
    for a in 0..points {
        let x1 = if a == points - 1 {
            1.0
        } else {
            a as f64 * step
        };
        for b in 0..points {
            let x2 = if b == points - 1 {
                1.0
            } else {
                b as f64 * step
            };
            let f = target.eval(&[x1, x2])?;
            w.write_record([
                format!("{x1:.16e}"),
                format!("{x2:.16e}"),
                format!("{f:.16e}"),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| HarnessError::io("<grid>", e))?;
    Ok(())
}

pub fn dump_grid(target: &TargetFunction, points: usize, path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_grid(target, points, file).map_err(|e| match e {
        HarnessError::Csv { source, .. } => HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        },
        HarnessError::Io { source, .. } => HarnessError::io(path, source),
        other => other,
    })
}
