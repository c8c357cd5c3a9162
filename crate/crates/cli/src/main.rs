//! `kaplan`: hole synthesis, descriptor export, completion, denoising and evaluation.

mod commands;
mod error;
mod inputs;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{complete, denoise, descriptors, eval, gen_holes, Globals};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "kaplan", version, about = "Point cloud completion with multi-plane descriptors")]
struct Cli {
    /// Seed for every random choice of the run (overrides the configured one).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all available cores by default. Outputs do not depend on it.
    #[arg(long, global = true, env = "KAPLAN_THREADS")]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug); RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    GenHoles(gen_holes::GenHolesArgs),
    Complete(complete::CompleteArgs),
    Descriptors(descriptors::DescriptorsArgs),
    Denoise(denoise::DenoiseArgs),
    Eval(eval::EvalArgs),
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::runtime)?;
    }
    let globals = Globals { seed: cli.seed };
    match &cli.command {
        Command::GenHoles(a) => gen_holes::run(a, &globals).map(drop),
        Command::Complete(a) => complete::run(a, &globals).map(drop),
        Command::Descriptors(a) => descriptors::run(a, &globals).map(drop),
        Command::Denoise(a) => denoise::run(a, &globals).map(drop),
        Command::Eval(a) => eval::run(a, &globals).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kaplan: {e}");
            e.exit_code()
        }
    }
}
