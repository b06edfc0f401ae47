//! `mtcorr` command-line front end.
//!
//! One config file per run; `--set key=value` overrides individual keys
//! with dotted paths. Exit codes: 0 success, 2 config/validation error,
//! 1 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod csvout;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn validation(msg: String) -> Self {
        Self::Validation(msg)
    }

    pub fn numeric(msg: String) -> Self {
        Self::Numeric(msg)
    }

    pub fn numeric_from(e: mtcorr_core::Error) -> Self {
        match e {
            // bad inputs surface as validation failures
            mtcorr_core::Error::InvalidParameter(_)
            | mtcorr_core::Error::InvalidQuery(_)
            | mtcorr_core::Error::DimensionMismatch(_)
            | mtcorr_core::Error::UnsupportedOrder(_) => Self::Validation(e.to_string()),
            other => Self::Numeric(other.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "mtcorr", version, about = "Multi-time correlation functions of open quantum systems: exact oracle, regression-formula tables, and first-order corrections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override a config key by dotted path, e.g. --set model.tau=2.0
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Transition-rate ratios of a probe coupled to a thermalized qubit
    DemoThermalization(CommonArgs),
    /// One multi-time correlation value at the configured order
    Mtc(CommonArgs),
    /// The bi-probability table for the configured query
    Biprob(CommonArgs),
    /// Exact-oracle error scaling over coupling strengths
    Scaling(CommonArgs),
    /// Pointwise check of the fluctuation-dissipation identity
    FdtCheck(CommonArgs),
    /// Residue-method susceptibility against its numeric transform
    Susceptibility(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::DemoThermalization(a)
            | Command::Mtc(a)
            | Command::Biprob(a)
            | Command::Scaling(a)
            | Command::FdtCheck(a)
            | Command::Susceptibility(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let args = cli.command.common();
    let cfg = config::parse_config(&args.config, &args.set)?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let resolved = config::resolved_toml(&cfg);
    let writer = csvout::CsvWriter::new(&out_dir, cfg.output.precision, &resolved);
    match &cli.command {
        Command::DemoThermalization(_) => commands::demo_thermalization(&cfg, &writer),
        Command::Mtc(_) => commands::mtc(&cfg, &writer),
        Command::Biprob(_) => commands::biprob(&cfg, &writer),
        Command::Scaling(_) => commands::scaling(&cfg, &writer),
        Command::FdtCheck(_) => commands::fdt_check(&cfg, &writer),
        Command::Susceptibility(_) => commands::susceptibility(&cfg, &writer),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Validation(_) => ExitCode::from(2),
                CliError::Numeric(_) => ExitCode::from(1),
            }
        }
    }
}
