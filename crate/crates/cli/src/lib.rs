//! Command-line driver for `graver-opt`.
//!
//! Instances are read from JSON documents (see [`doc`]); exactly one JSON
//! document is written to standard output and diagnostics go to standard
//! error. Exit codes: 0 optimal, 1 error, 2 infeasible, 3 unbounded,
//! 4 oracle search space too large.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod doc;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {0}")]
    Io(String),
    #[error("invalid document: {0}")]
    Schema(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("self-verification failed: {0}")]
    Verification(String),
    #[error("oracle search space exceeds the cap of {0} nodes")]
    SearchSpaceTooLarge(u64),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SearchSpaceTooLarge(_) => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "graver-opt", version, about = "Exact Graver and circuit augmentation for integer and linear programs")]
pub struct Cli {
    /// Worker threads for direction evaluation; 0 uses all cores. Results do
    /// not depend on this.
    #[arg(long, global = true, env = "GRAVER_OPT_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance document.
    Solve(SolveArgs),
    /// Print the circuits or Graver basis of an instance's matrix.
    Basis(BasisArgs),
    /// Minimize by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Translate a model document into an nfold document.
    Model {
        #[arg(value_enum)]
        model: ModelKind,
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ip,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Transportation,
    Table3,
    Hierarchical,
    Decode,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    pub path: PathBuf,
    /// Include the augmentation trace.
    #[arg(long)]
    pub trace: bool,
    /// Integer or continuous solve; defaults to the document kind.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Largest N tried when detecting the Graver complexity.
    #[arg(long, default_value_t = 6)]
    pub graver_cap: usize,
    /// N-fold instances with at most this many variables use a direct Graver basis.
    #[arg(long, default_value_t = 24)]
    pub direct_threshold: usize,
    /// Two-stage instances with more scenarios use stabilized building blocks.
    #[arg(long, default_value_t = 3)]
    pub block_cap: usize,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("which").required(true).args(["circuits", "graver", "composite"])))]
pub struct BasisArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub circuits: bool,
    #[arg(long)]
    pub graver: bool,
    /// G(A, C) with C the rows of the document's objective.
    #[arg(long)]
    pub composite: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    pub path: PathBuf,
    /// Restrict every variable to [lower, lower + radius].
    #[arg(long)]
    pub radius: Option<u64>,
    /// Maximum number of search nodes.
    #[arg(long, default_value_t = graver_opt::oracle::DEFAULT_CELL_CAP)]
    pub cell_cap: u64,
}

/// Exit code and the text for both output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn error(err: &CliError) -> Self {
        Outcome {
            code: err.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> Outcome {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cli.threads > 0 {
        pool = pool.num_threads(cli.threads);
    }
    match pool.build() {
        Ok(pool) => pool.install(|| commands::dispatch(&cli.command)),
        Err(e) => Outcome::error(&CliError::Solver(format!("thread pool: {e}"))),
    }
}
