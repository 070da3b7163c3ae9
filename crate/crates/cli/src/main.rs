//! `pnr`: gradient checks, solver runs, robustness benchmark, data
//! synthesis, training and evaluation.
//!
//! Exit codes: 0 success, 1 gradient check failure, 2 I/O or malformed
//! file, 3 dimension mismatch, 4 singular system, 5 invalid configuration
//! or usage, 6 training divergence.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pnr_core::Error;

pub const EXIT_GRADCHECK: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_DIMENSION: u8 = 3;
pub const EXIT_SINGULAR: u8 = 4;
pub const EXIT_CONFIG: u8 = 5;
pub const EXIT_DIVERGENCE: u8 = 6;

#[derive(Parser, Debug)]
#[command(name = "pnr", version, about = "p-norm regression layer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Finite-difference check of the layer's backward rules.
    Gradcheck(GradcheckArgs),
    /// Solve one regression problem stored as PNRM files.
    Solve(SolveArgs),
    /// Compare LSE and LAD recovery error on planted instances with outliers.
    BenchRobust(BenchArgs),
    /// Write a toy image dataset or a planted regression instance.
    Synth(SynthArgs),
    /// Train the toy model from a `key = value` config file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the test split.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl PArg {
    fn norm(self) -> pnr_core::Norm {
        match self {
            PArg::One => pnr_core::Norm::L1,
            PArg::Two => pnr_core::Norm::L2,
        }
    }
}

#[derive(clap::Args, Debug)]
struct GradcheckArgs {
    #[arg(long, env = "PNR_SEED", default_value_t = 0)]
    seed: u64,
    /// Random layer instances per norm.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Check one norm only; both by default.
    #[arg(long)]
    p: Option<PArg>,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use a deliberately wrong backward rule (negative control).
    #[arg(long, hide = true)]
    corrupt_backward: bool,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value = "2")]
    p: PArg,
    /// Observations, n × D.
    #[arg(long = "H")]
    h: PathBuf,
    /// Design, n × d.
    #[arg(long = "P")]
    p_file: PathBuf,
    /// Where to write F (d × D).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 1e-9)]
    ridge: f64,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long = "D", default_value_t = 3)]
    big_d: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Fraction of outlier rows.
    #[arg(long, default_value_t = 0.2)]
    frac: f64,
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
    /// IRLS iterations for LAD.
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Seed of the first trial; trial k uses seed + k.
    #[arg(long, env = "PNR_SEED", default_value_t = 0)]
    seed: u64,
    /// Per-trial CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Toy,
    Regression,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "toy")]
    kind: SynthKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "PNR_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    identities: usize,
    #[arg(long, default_value_t = 6)]
    samples_per_id: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long = "D", default_value_t = 3)]
    big_d: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0.2)]
    frac: f64,
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Add wall-clock start/end times to the manifest (breaks byte-identical
    /// reruns).
    #[arg(long)]
    record_time: bool,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset directory written by `synth`; generated with default
    /// settings when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Source counts, comma separated.
    #[arg(long = "M", value_delimiter = ',', default_values_t = vec![1usize, 3, 5])]
    m: Vec<usize>,
    /// Standard deviation of pixel noise added to source images.
    #[arg(long, default_value_t = 0.6)]
    noise: f64,
    #[arg(long, env = "PNR_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a command: a library error or a failed gradient check.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Gradcheck,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Gradcheck => EXIT_GRADCHECK,
        Failure::Core(e) => match e {
            Error::Io(_) | Error::Format(_) => EXIT_IO,
            Error::Dimension { .. } | Error::Contract(_) => EXIT_DIMENSION,
            Error::Singular { .. } => EXIT_SINGULAR,
            Error::Config(_) => EXIT_CONFIG,
            Error::Divergence(_) => EXIT_DIVERGENCE,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Solve(a) => commands::solve(a),
        Command::BenchRobust(a) => commands::bench_robust(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => run::train(a),
        Command::Eval(a) => run::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Gradcheck => eprintln!("gradient check failed"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
