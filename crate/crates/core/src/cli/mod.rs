//! The `rigidity-lab` command line: argument parsing, config files, exit
//! codes and report files.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::Error;

pub use config::{inject_config, parse_rational};
pub use output::{write_atomic, OutDir};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rigidity-lab", version, about = "Rigidity sequences, Birkhoff sums and exceptional sets of irrational rotations")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// golden | sqrt2 | e | cf:a0,a1,... | percf:a0;pre|period
    #[arg(long, global = true, default_value = "golden")]
    pub alpha: String,
    #[arg(long, global = true, default_value = "rigidity-out")]
    pub out_dir: PathBuf,
    /// Largest number of partial quotients ever requested.
    #[arg(long, global = true)]
    pub precision_cap: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    /// Flat `key=value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergents, certified ‖kα‖ and minimal norms.
    Cf(commands::CfArgs),
    /// Terms of a rigidity sequence with certified norms and envelope.
    Rigidity(commands::RigidityArgs),
    /// Builds and certifies the measures μ_0, …, μ_depth.
    Measure(commands::MeasureArgs),
    /// Lemma polynomials, Birkhoff cross-checks and the resonance dichotomy.
    Lemma(commands::LemmaArgs),
    /// Stage schedule, exceptional sequence and orbit diagnostics.
    Exceptional(commands::ExceptionalArgs),
    /// Largest orbit gaps along sequence prefixes.
    Density(commands::DensityArgs),
}

pub const SUBCOMMANDS: [&str; 6] = ["cf", "rigidity", "measure", "lemma", "exceptional", "density"];

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Precondition(_) | Error::Json(_) => EXIT_USAGE,
        Error::PrecisionExhausted(_)
        | Error::SequenceTooShort(_)
        | Error::RetriesExhausted { .. }
        | Error::BlockTooLarge(_)
        | Error::Io(_) => EXIT_EXHAUSTED,
        Error::VerificationFailed(_)
        | Error::CertificationFailed(_)
        | Error::ResonanceDetected(_)
        | Error::EmptyBlock(_)
        | Error::Internal(_) => EXIT_FAILED,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match inject_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cmd = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true));
    let parsed = cmd
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.global.log_level)
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
