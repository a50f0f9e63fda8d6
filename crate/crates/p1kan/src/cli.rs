//! Command-line parsing. `parse_cli` turns an argv into a validated
//! [`Command`]; the binary maps the error kinds onto exit statuses.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use p1kan_core::TargetKind;

use crate::config::{
    ExperimentConfig, FunctionArg, ModelKind, DEFAULT_BATCH, DEFAULT_EVAL_EVERY,
    DEFAULT_EVAL_SAMPLES, DEFAULT_ITERS, DEFAULT_LR, DEFAULT_MAVG_WINDOW,
};
use crate::grid::DEFAULT_GRID_POINTS;

#[derive(Debug, Parser)]
#[command(
    name = "p1kan",
    version,
    about = "Train P1-KAN and MLP regressors on benchmark functions"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Train one model and write its metrics CSV.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train every MLP sweep configuration and keep the best one.
    SweepMlp {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write `x1,x2,f` samples of a 2-D target function on a uniform grid.
    DumpGrid {
        #[arg(long, value_enum, ignore_case = true)]
        function: FunctionArg,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Grid points per side.
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        points: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, ignore_case = true)]
    function: FunctionArg,
    #[arg(long)]
    dim: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,10")]
    hidden: Vec<usize>,
    /// Meshes per direction (p1kan only).
    #[arg(long)]
    meshes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    iters: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_EVERY)]
    eval_every: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_SAMPLES)]
    eval_samples: usize,
    /// Window of the log10 eval-loss moving average.
    #[arg(long, default_value_t = DEFAULT_MAVG_WINDOW)]
    mavg_window: usize,
    /// Fill the elapsed_s column (makes the CSV non-reproducible).
    #[arg(long)]
    record_time: bool,
    /// Metrics CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the trained model checkpoint here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self, model: ModelKind) -> ExperimentConfig {
        ExperimentConfig {
            model,
            function: TargetKind::from(self.function),
            dim: self.dim,
            hidden: self.hidden,
            meshes: self.meshes,
            iters: self.iters,
            batch: self.batch,
            lr: self.lr,
            seed: self.seed,
            eval_every: self.eval_every,
            eval_samples: self.eval_samples,
            moving_avg_window: self.mavg_window,
            record_time: self.record_time,
            out_path: self.out,
            save_model: self.save_model,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Train(ExperimentConfig),
    /// The config carries everything but the architecture.
    SweepMlp(ExperimentConfig),
    DumpGrid {
        function: TargetKind,
        dim: usize,
        points: usize,
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Help, version or a syntax error; clap renders the message.
    Clap(clap::Error),
    /// Well-formed flags with an invalid combination or value.
    Invalid(String),
}

impl CliError {
    /// True for `--help` and `--version`, which are not failures.
    pub fn is_informational(&self) -> bool {
        matches!(self, CliError::Clap(e) if !e.use_stderr())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Invalid(msg) => {
                write!(f, "error: {msg}\n\nFor more information, try '--help'.")
            }
        }
    }
}

impl std::error::Error for CliError {}

pub fn parse_cli<I, T>(argv: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let command = match cli.command {
        CliCommand::Train { model, run } => Command::Train(run.into_config(model)),
        CliCommand::SweepMlp { run } => Command::SweepMlp(run.into_config(ModelKind::Mlp)),
        CliCommand::DumpGrid {
            function,
            dim,
            points,
            out,
        } => {
            if dim != 2 {
                return Err(CliError::Invalid(format!(
                    "dump-grid needs --dim 2, got {dim}"
                )));
            }
            if points < 2 {
                return Err(CliError::Invalid("--points must be at least 2".into()));
            }
            return Ok(Command::DumpGrid {
                function: function.into(),
                dim,
                points,
                out,
            });
        }
    };
    if let Command::Train(c) | Command::SweepMlp(c) = &command {
        c.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    Ok(command)
}
