//! Command-line front end for `delaystab`: reads JSON experiment documents,
//! runs the check, certify, bounds and simulate pipelines, and prints JSON
//! reports on stdout.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

pub use commands::Outcome;
pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::{CliError, EXIT_CONFIG, EXIT_FAILURE, EXIT_NEGATIVE, EXIT_OK, EXIT_UNDETERMINED};

#[derive(Debug, Parser)]
#[command(
    name = "delaystab",
    version,
    about = "Stability certificates, decay bounds and simulation for delayed positive systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural hypotheses of a system and its delays.
    Check(Common),
    /// Verify the configured certificate or search for one.
    Certify(Common),
    /// Compute decay-rate bounds.
    Bounds(Common),
    /// Simulate and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one operation over several configs concurrently.
    Batch {
        /// Config documents; repeat the flag for each.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = BatchOp::Check)]
        op: BatchOp,
        /// Output directory for `--op simulate`; one `<stem>.csv` per config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment document (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct OverrideArgs {
    /// Seed for randomised search and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integration step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Final time, or number of steps for discrete systems.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            h: a.h,
            horizon: a.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchOp {
    Check,
    Certify,
    Bounds,
    Simulate,
}

fn load(path: &Path, overrides: Overrides) -> Result<Experiment, CliError> {
    ExperimentConfig::load(path)?.resolve(overrides)
}

/// Runs one operation on one config file.
pub fn execute(
    op: BatchOp,
    config: &Path,
    overrides: Overrides,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let exp = load(config, overrides)?;
    match op {
        BatchOp::Check => commands::check(&exp),
        BatchOp::Certify => commands::certify(&exp),
        BatchOp::Bounds => commands::bounds(&exp),
        BatchOp::Simulate => {
            let out = out.ok_or_else(|| CliError::Config("simulate needs --out".into()))?;
            commands::simulate(&exp, out)
        }
    }
}

#[derive(Serialize)]
struct BatchItem {
    config: String,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn batch(
    configs: &[PathBuf],
    op: BatchOp,
    out: Option<&Path>,
    overrides: Overrides,
) -> Result<Outcome, CliError> {
    if op == BatchOp::Simulate {
        let dir = out.ok_or_else(|| CliError::Config("batch simulate needs --out DIR".into()))?;
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    let items: Vec<BatchItem> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|path| {
                s.spawn(move || {
                    let csv = out.map(|dir| {
                        let stem = path.file_stem().unwrap_or(path.as_os_str());
                        dir.join(stem).with_extension("csv")
                    });
                    let result = execute(op, path, overrides, csv.as_deref());
                    let config = path.display().to_string();
                    match result {
                        Ok(o) => BatchItem {
                            config,
                            exit_code: o.code,
                            report: Some(o.report),
                            error: None,
                        },
                        Err(e) => BatchItem {
                            config,
                            exit_code: e.exit_code(),
                            report: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("batch worker panicked"))
            .collect()
    });
    let code = items.iter().map(|i| i.exit_code).max().unwrap_or(EXIT_OK);
    let report =
        serde_json::to_value(items).map_err(|e| CliError::io("serialising report", e.into()))?;
    Ok(Outcome { code, report })
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Check(c) => execute(BatchOp::Check, &c.config, c.overrides.into(), None),
        Command::Certify(c) => execute(BatchOp::Certify, &c.config, c.overrides.into(), None),
        Command::Bounds(c) => execute(BatchOp::Bounds, &c.config, c.overrides.into(), None),
        Command::Simulate { common, out } => execute(
            BatchOp::Simulate,
            &common.config,
            common.overrides.into(),
            Some(&out),
        ),
        Command::Batch {
            configs,
            op,
            out,
            overrides,
        } => batch(&configs, op, out.as_deref(), overrides.into()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(o) => {
            let printed = serde_json::to_writer_pretty(&mut *stdout, &o.report)
                .map_err(std::io::Error::from)
                .and_then(|()| writeln!(stdout));
            match printed {
                Ok(()) => o.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: writing report: {e}");
                    EXIT_FAILURE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
