//! `supermart`: check, synthesise and translate supermartingale certificates,
//! run exact oracles on finite chains, and benchmark a corpus.
//!
//! Exit codes: 0 accept / found, 1 reject / not found, 2 unknown or backend
//! failure, 3 input error.

mod bench;
mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use supermart::pqe::Backend;

pub const EXIT_ACCEPT: u8 = 0;
pub const EXIT_REJECT: u8 = 1;
pub const EXIT_UNKNOWN: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "supermart", version, about = "Supermartingale certificates for almost-sure parity and Streett properties")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// More logging on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Finite chain if the input has `states`, pCFG otherwise.
    Auto,
    Symbolic,
    Finite,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// External SMT-LIB2 solver command; `{file}` is replaced by the query
    /// path, otherwise the path is appended. Without it the built-in exact
    /// LP is used.
    #[arg(long, env = "SUPERMART_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Seconds before the external solver is killed.
    #[arg(long, default_value_t = 60)]
    solver_timeout: u64,
    /// The external solver understands `(maximize ...)`.
    #[arg(long)]
    solver_supports_opt: bool,
}

impl SolverArgs {
    pub fn backend(&self) -> Backend {
        match &self.solver_cmd {
            Some(command) => Backend::External {
                command: command.clone(),
                timeout_secs: self.solver_timeout,
                supports_opt: self.solver_supports_opt,
            },
            None => Backend::ExactLp,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Template degree.
    #[arg(long, default_value_t = 1)]
    degree: u32,
    /// Maximise the slack sum in each round (default).
    #[arg(long, overrides_with = "no_opt")]
    opt: bool,
    /// Ask for a slack sum of at least one instead of maximising.
    #[arg(long)]
    no_opt: bool,
    /// Box bound on template coefficients.
    #[arg(long)]
    coeff_bound: Option<String>,
    /// Rounds per block before giving up.
    #[arg(long)]
    max_rounds: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    /// Parity, null recurrence and expected steps per state.
    Summary,
    Expected,
    Distribution,
    NullRecurrent,
    Parity,
    /// Iterates of the expectation operator.
    Ke,
    /// Iterates of the distribution operator.
    Kp,
    Sample,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a certificate against a pCFG or a finite chain.
    Check {
        input: PathBuf,
        certificate: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Streett pair index, overriding the certificate's.
        #[arg(long)]
        pair: Option<usize>,
    },
    /// Synthesise a LexPMSM map.
    Synthesize {
        input: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
        /// Write the round-by-round trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the certificate here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact analyses and sampling on a finite chain.
    Oracle {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Analysis::Summary)]
        analysis: Analysis,
        #[arg(long, default_value_t = 64)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Number of operator iterates.
        #[arg(long, default_value_t = 16)]
        iterations: usize,
        /// Initial state label for sampling (default: the first state).
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        pair: Option<usize>,
    },
    /// Translate certificates between classes.
    Translate {
        /// The pCFG or chain the certificates belong to.
        #[arg(long)]
        model: PathBuf,
        /// Target kind, e.g. `lexgssm` or `reduced_lexpmsm`.
        #[arg(long)]
        to: String,
        #[arg(long)]
        pair: Option<usize>,
        /// One certificate, or one LexGSSM per Streett pair in pair order.
        #[arg(required = true)]
        certificates: Vec<PathBuf>,
    },
    /// Synthesise and check every entry of a corpus directory.
    Bench {
        /// Defaults to the bundled corpus.
        dir: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthArgs,
        /// Write each synthesised certificate into this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Entries run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Check { input, certificate, mode, pair } => commands::check(&input, &certificate, mode, pair, cli.format),
        Command::Synthesize { input, synth, trace, output } => {
            commands::synthesize(&input, &synth, trace.as_deref(), output.as_deref(), cli.format)
        }
        Command::Oracle { input, analysis, horizon, seed, samples, iterations, start, pair } => commands::oracle(
            &input,
            &commands::OracleArgs { analysis, horizon, seed, samples, iterations, start, pair },
            cli.format,
        ),
        Command::Translate { model, to, pair, certificates } => commands::translate(&model, &to, pair, &certificates),
        Command::Bench { dir, synth, emit, jobs } => bench::run(dir, &synth, emit.as_deref(), jobs, cli.format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
