use std::io::Write;
use std::process::ExitCode;

use p1kan::cli::{parse_cli, CliError, Command};
use p1kan::grid::{dump_grid, write_grid};
use p1kan::metrics::write_metrics;
use p1kan::sweep::sweep_mlp_with_progress;
use p1kan::train::train_with_progress;
use p1kan::{
    save_model, write_metrics_csv, ExperimentConfig, HarnessError, MetricsLog, Model, RunStatus,
};
use p1kan_core::TargetFunction;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Io { .. }
        | HarnessError::Csv { .. }
        | HarnessError::MalformedMetrics { .. }
        | HarnessError::Checkpoint { .. } => EXIT_IO,
        HarnessError::AllDiverged(_) => EXIT_DIVERGED,
        HarnessError::Config(_) | HarnessError::Core(_) => EXIT_USAGE,
    }
}

fn emit(config: &ExperimentConfig, log: &MetricsLog, model: &Model) -> Result<(), HarnessError> {
    match &config.out_path {
        Some(path) => write_metrics_csv(log, path)?,
        None => {
            let stdout = std::io::stdout();
            write_metrics(log, stdout.lock()).map_err(|source| HarnessError::Csv {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    if let Some(path) = &config.save_model {
        save_model(model, path)?;
    }
    Ok(())
}

fn progress(label: &str, row: &p1kan::MetricRow) {
    if let Some(mse) = row.eval_mse {
        eprintln!("{label} iter {:>8}  eval mse {mse:.6e}", row.iter);
    }
}

fn finish(status: RunStatus) -> u8 {
    match status {
        RunStatus::Completed => 0,
        RunStatus::Diverged { iter } => {
            eprintln!("training diverged at iteration {iter}");
            EXIT_DIVERGED
        }
    }
}

fn run(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Train(config) => {
            let label = config.label();
            let outcome = train_with_progress(&config, |row| progress(&label, row))?;
            emit(&config, &outcome.log, &outcome.model)?;
            Ok(finish(outcome.log.status))
        }
        Command::SweepMlp(config) => {
            let outcome = sweep_mlp_with_progress(&config, |c, row| progress(&c.label(), row))?;
            for entry in &outcome.entries {
                eprintln!("{}", entry.status_line());
            }
            let best = outcome.best_entry();
            eprintln!("best: {}", best.config.label());
            emit(&config, &best.outcome.log, &best.outcome.model)?;
            Ok(0)
        }
        Command::DumpGrid {
            function,
            dim,
            points,
            out,
        } => {
            let target = TargetFunction::new(function, dim)?;
            match out {
                Some(path) => dump_grid(&target, points, &path)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    write_grid(&target, points, &mut stdout)?;
                    stdout.flush().map_err(|e| HarnessError::Io {
                        path: "<stdout>".into(),
                        source: e,
                    })?;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let command = match parse_cli(std::env::args_os()) {
        Ok(c) => c,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
