use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logldp_cli::{report, run, CliError, Experiment, RunOptions, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "logldp",
    version,
    about = "Simulation and large-deviation experiments for the log-nonlinear stochastic heat equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: hardware parallelism).
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// SPDE ensembles with Phi-moment statistics.
    Simulate(RunArgs),
    /// One controlled skeleton solve.
    Skeleton(RunArgs),
    /// Minimal control energy to reach a target set.
    RateFunction(RunArgs),
    /// Monte Carlo rare-event probabilities against the rate function.
    McEstimate(RunArgs),
    /// Controlled SPDE against skeleton as the noise vanishes.
    ConditionA(RunArgs),
    /// Skeleton continuity under oscillating controls.
    ConditionB(RunArgs),
    /// Functional inequalities on random fields.
    VerifyInequalities(RunArgs),
    /// Step-size and Galerkin-size convergence.
    ConvergenceStudy(RunArgs),
    /// Summarize a finished run.
    Report {
        /// Output directory of a previous run.
        dir: PathBuf,
    },
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("logldp: {e}");
    exit(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Report { dir } => {
            return match report::render(&dir) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Skeleton(a) => (Experiment::Skeleton, a),
        Command::RateFunction(a) => (Experiment::RateFunction, a),
        Command::McEstimate(a) => (Experiment::McEstimate, a),
        Command::ConditionA(a) => (Experiment::ConditionA, a),
        Command::ConditionB(a) => (Experiment::ConditionB, a),
        Command::VerifyInequalities(a) => (Experiment::VerifyInequalities, a),
        Command::ConvergenceStudy(a) => (Experiment::ConvergenceStudy, a),
    };
    let opts = RunOptions {
        config: args.config,
        threads: args.threads,
        output: args.output,
        seed: args.seed,
    };
    match run(experiment, &opts) {
        Ok(r) => {
            if let Some(f) = &r.manifest.failure {
                eprintln!("logldp: {} failed ({}): {}", experiment, f.kind, f.message);
            }
            let failed = r.manifest.contracts.iter().filter(|c| !c.passed).count();
            eprintln!(
                "logldp: wrote {} files to {} ({} contracts, {failed} failed)",
                r.manifest.files.len() + 1,
                r.output_dir.display(),
                r.manifest.contracts.len()
            );
            exit(r.exit_code)
        }
        Err(e) => fail(&e),
    }
}
