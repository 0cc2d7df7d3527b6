//! `trimlevy` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use trimlevy::Error;

#[derive(Parser, Debug)]
#[command(name = "trimlevy", version, about = "Simulate trimmed Lévy processes and check their small-time limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Name {
    SampleJumps,
    SampleTrimmed,
    LimitCf,
    LimitLaplace,
    InvertCf,
    Converge,
    LaplaceCheck,
    LargeTrim,
    Pd,
    RvDiag,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ordered jumps ΔX_t^(1) >= ... >= ΔX_t^(count), one row per draw (--n rows)
    SampleJumps(Args),
    /// Draws of the r-trimmed value together with the removed jumps
    SampleTrimmed(Args),
    /// Characteristic function of the last limiting ratio coordinate
    LimitCf(Args),
    /// Laplace transform of the subordinator ratio limit
    LimitLaplace(Args),
    /// CDF of the last limiting ratio coordinate by Fourier inversion
    InvertCf(Args),
    /// Small-time convergence of trimmed ratios to the limit law
    Converge(Args),
    /// Subordinator ratio Laplace transform against its limit
    LaplaceCheck(Args),
    /// Exceedance probabilities for growing trimming depth
    LargeTrim(Args),
    /// Ratios of ordered jumps to the trimmed total
    Pd(Args),
    /// Regular-variation diagnostic of the positive tail along t -> 0
    RvDiag(Args),
}

/// Flags shared by every subcommand. Each subcommand rejects the ones it
/// does not use.
#[derive(clap::Args, Debug, Clone, Default, Serialize)]
pub struct Args {
    /// stable, tempered, atomic, gamma, or an inline JSON model description
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// weight of the positive tail, a_+ in (0, 1]
    #[arg(long = "a-plus")]
    pub a_plus: Option<f64>,
    /// comma-separated location:mass pairs
    #[arg(long, value_delimiter = ',')]
    pub atoms: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub drift: Option<f64>,
    /// time, or a comma-separated decreasing grid
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    #[arg(long)]
    pub r: Option<usize>,
    /// ratio width, or a comma-separated grid for large-trim
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// experiment configuration JSON
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output file; experiments also write a JSON summary next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// worker threads; TRIMLEVY_THREADS takes precedence
    #[arg(long)]
    pub threads: Option<usize>,
    /// evaluation points for invert-cf
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Vec<f64>,
    /// tail multiplier for rv-diag
    #[arg(long)]
    pub u: Option<f64>,
    /// tail level for rv-diag
    #[arg(long)]
    pub y: Option<f64>,
}

fn split(command: Command) -> (Name, Args) {
    match command {
        Command::SampleJumps(a) => (Name::SampleJumps, a),
        Command::SampleTrimmed(a) => (Name::SampleTrimmed, a),
        Command::LimitCf(a) => (Name::LimitCf, a),
        Command::LimitLaplace(a) => (Name::LimitLaplace, a),
        Command::InvertCf(a) => (Name::InvertCf, a),
        Command::Converge(a) => (Name::Converge, a),
        Command::LaplaceCheck(a) => (Name::LaplaceCheck, a),
        Command::LargeTrim(a) => (Name::LargeTrim, a),
        Command::Pd(a) => (Name::Pd, a),
        Command::RvDiag(a) => (Name::RvDiag, a),
    }
}

fn thread_count(args: &Args) -> Result<Option<usize>, Error> {
    match std::env::var("TRIMLEVY_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("TRIMLEVY_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => match args.threads {
            Some(0) => Err(Error::Config("--threads must be positive".into())),
            t => Ok(t),
        },
    }
}

fn run(name: Name, args: Args) -> Result<(), Error> {
    if let Some(n) = thread_count(&args)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        log::info!("using {n} worker threads");
    }
    commands::dispatch(name, args)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let (name, args) = split(cli.command);
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
