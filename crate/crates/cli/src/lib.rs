//! Command-line front end: calibrate and diagnose soft-label record files,
//! run distillation experiments and benchmark the solvers.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use isodistill_core::Space;

use commands::bench::{render as render_bench, run_bench, scaling_checks};
use commands::calibrate::{calibrate, CalibrateMode, CalibrateOptions};
use commands::diagnose::{diagnose, ReportFormat};
use commands::experiment::{render_table, run_experiment, summarize, write_outputs};
use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "isodistill",
    version,
    about = "Order-restricted soft labels for distillation"
)]
pub struct Cli {
    /// Offset added to every seed a command uses.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project each record's soft labels onto its order constraints.
    Calibrate(CalibrateArgs),
    /// Report order-violation statistics of a record file.
    Diagnose(DiagnoseArgs),
    /// Train teachers and students over seeds and calibration fractions.
    Experiment(ExperimentArgs),
    /// Time the projection and the penalty over label-space sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Probs,
    Logits,
}

impl From<SpaceArg> for Space {
    fn from(arg: SpaceArg) -> Self {
        match arg {
            SpaceArg::Probs => Space::Probability,
            SpaceArg::Logits => Space::Logit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Irt,
    PenaltyCheck,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportArg {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "probs")]
    pub space: SpaceArg,
    /// Temperature applied to logits before projecting.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, value_enum, default_value = "irt")]
    pub mode: ModeArg,
    /// With `--space logits`, project the logits themselves.
    #[arg(long)]
    pub calibrate_logits: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub report: ReportArg,
    #[arg(long, value_enum, default_value = "probs")]
    pub space: SpaceArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub config: PathBuf,
    /// Directory for the metric files and `summary.json`.
    #[arg(long, default_value = "experiment-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub c_values: Vec<usize>,
    /// Calls per timing trial.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Calibrate(args) => {
            let opts = CalibrateOptions {
                space: args.space.into(),
                tau: args.tau,
                mode: match args.mode {
                    ModeArg::Irt => CalibrateMode::Irt,
                    ModeArg::PenaltyCheck => CalibrateMode::PenaltyCheck,
                },
                calibrate_logits: args.calibrate_logits,
            };
            let text = calibrate(&read(&args.input)?, &opts)?;
            emit(args.out.as_deref(), &text)
        }
        Command::Diagnose(args) => {
            let format = match args.report {
                ReportArg::Json => ReportFormat::Json,
                ReportArg::Text => ReportFormat::Text,
            };
            let text = diagnose(&read(&args.input)?, args.space.into(), format)?;
            emit(args.out.as_deref(), &text)
        }
        Command::Experiment(args) => {
            let cfg = ExperimentConfig::parse(&read(&args.config)?)?;
            let runs = run_experiment(&cfg, cli.seed)?;
            let summary = summarize(&cfg, &runs);
            write_outputs(&args.out, &summary, &runs)?;
            emit(None, &render_table(&summary))
        }
        Command::Bench(args) => {
            let rows = run_bench(&args.c_values, args.reps, cli.seed)?;
            let checks = scaling_checks(&rows);
            emit(None, &render_bench(&rows, &checks))?;
            match checks.iter().find(|c| !c.passed()) {
                Some(c) => Err(CliError::Scaling(format!(
                    "{} grew {:.2}x from c={} to c={}, bound {:.2}x",
                    c.routine, c.ratio, c.from, c.to, c.bound
                ))),
                None => Ok(()),
            }
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
