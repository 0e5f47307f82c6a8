//! Command-line front end: certify, simulate, sweep and oracle runs driven
//! by a JSON configuration, with reports written as JSON and CSV.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run_certify, run_oracle, run_simulate, run_sweep, CertifyReport, Outcome};
pub use config::{ModeChoice, ReportFormat, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_MISSING_CONSTANT: i32 = 2;
pub const EXIT_RESOURCE_CAP: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(hypocert::Error),
    Io(String),
    /// The run finished but its verdict is negative.
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hypocert::Error> for CliError {
    fn from(e: hypocert::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(hypocert::Error::MissingConstant { .. }) => EXIT_MISSING_CONSTANT,
            CliError::Core(hypocert::Error::ResourceCap(_) | hypocert::Error::SizeCap { .. }) => EXIT_RESOURCE_CAP,
            _ => EXIT_INTERNAL,
        }
    }

    /// Extra guidance printed after the error message.
    pub fn remedy(&self) -> Option<&str> {
        match self {
            CliError::Core(hypocert::Error::MissingConstant { remedy, .. }) => Some(remedy),
            _ => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypocert", version, about = "N-uniform hypocoercive rate certificates and particle simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a rate certificate.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeChoice>,
        /// Closed-form coefficients only, no numeric refinement.
        #[arg(long)]
        paper_literal: bool,
    },
    /// Simulate a replica ensemble and fit decay rates.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit decay rates across particle counts.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Run the lemma-level oracle checks.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, required: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None if required => return Err(CliError::Config("--config is required".into())),
        None => commands::default_oracle_config(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.clone());
    }
    Ok(cfg)
}

/// Runs a parsed command, returning the text for stdout.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Certify {
            common,
            mode,
            paper_literal,
        } => {
            let mut cfg = load(&common, true)?;
            if let Some(m) = mode {
                cfg.certify.mode = m;
            }
            if paper_literal {
                cfg.certify.refine = false;
            }
            run_certify(&cfg)
        }
        Command::Simulate { common } => run_simulate(&load(&common, true)?),
        Command::Sweep { common } => run_sweep(&load(&common, true)?),
        Command::Oracle { common } => run_oracle(&load(&common, false)?),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INTERNAL } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(out) => {
            println!("{}", out.summary);
            EXIT_OK
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            if let Some(r) = e.remedy().filter(|r| !msg.contains(r)) {
                eprintln!("remedy: {r}");
            }
            e.exit_code()
        }
    }
}
