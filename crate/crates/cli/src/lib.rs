//! `idslab` command-line front end: configuration parsing, command
//! dispatch, table output and built-in verification suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use idslab_core::IdsError;
use serde_json::json;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, ExperimentConfig};

/// Environment variable that replaces `run.seed`.
pub const SEED_ENV: &str = "IDSLAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Single-particle counting function per box size.
    Ids1,
    /// Noninteracting n-particle counting function, convolution and direct.
    Idsn,
    /// Interacting n-particle counting function on an energy grid.
    Interact,
    /// Interacting vs noninteracting sweep over box sizes.
    Converge,
    /// Built-in invariant suites.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ids1 => "ids1",
            Command::Idsn => "idsn",
            Command::Interact => "interact",
            Command::Converge => "converge",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "idslab",
    version,
    about = "Integrated density of states experiments on finite-difference lattices"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Treat unknown config keys as errors.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<ConfigError>),
    #[error(transparent)]
    Ids(#[from] IdsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} verification checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            // parameters that reach the core unchecked came from the config
            CliError::Ids(IdsError::InvalidParameter { .. }) => 1,
            CliError::Ids(IdsError::SizeCap { .. }) => 3,
            CliError::Ids(_) | CliError::Io { .. } | CliError::Verification { .. } => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Ids(IdsError::SizeCap { .. }) => "size_cap",
            CliError::Ids(IdsError::InvalidParameter { .. }) => "invalid_parameter",
            CliError::Ids(IdsError::NumericalBreakdown { .. }) => "numerical_breakdown",
            CliError::Ids(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Verification { .. } => "verification",
        }
    }

    /// One-line JSON description for stderr.
    pub fn record(&self) -> serde_json::Value {
        let mut rec = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Config(errs) = self {
            rec["details"] = serde_json::to_value(errs).expect("config errors serialize");
        }
        rec
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

/// Reads and validates the configuration, applying the seed override.
/// Warnings are returned alongside.
pub fn load_config(cli: &Cli) -> Result<(ExperimentConfig, Vec<ConfigError>), CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(io_err(&cli.config))?;
    let parsed = parse_config(&text, cli.strict).map_err(CliError::Config)?;
    let mut config = parsed.config;
    if let Ok(raw) = std::env::var(SEED_ENV) {
        config.run.seed = raw.trim().parse().map_err(|_| {
            CliError::Config(vec![ConfigError {
                line: None,
                key: SEED_ENV.into(),
                reason: format!("expected an unsigned integer, got {raw:?}"),
            }])
        })?;
    }
    Ok((config, parsed.warnings))
}

pub fn run(cli: &Cli) -> Result<commands::Summary, CliError> {
    let (config, warnings) = load_config(cli)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Ids(IdsError::Usage(format!("thread pool: {e}"))))?;
    pool.install(|| commands::dispatch(cli.command, &config, &out))
}

/// Parses arguments, runs, prints a summary or an error record, and maps
/// the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
