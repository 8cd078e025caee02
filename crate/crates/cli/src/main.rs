//! `pdpfi`: partial dependence and permutation feature importance with
//! confidence intervals from the command line.

mod analyze;
mod common;
mod compare;
mod simulate;

use clap::{Parser, Subcommand};

use common::{invalid, CliResult};

#[derive(Parser)]
#[command(name = "pdpfi", version, about = "PD and PFI with confidence intervals")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learner-PD curves and ranked learner-PFI for a CSV dataset.
    Analyze(analyze::AnalyzeArgs),
    /// Coverage experiments on simulated data.
    Simulate(simulate::SimulateArgs),
    /// Corrected interval for the difference in test MSE of two learners.
    Compare(compare::CompareArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(invalid("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| invalid(format!("cannot start thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(s) => simulate::run(s),
        Command::Compare(c) => compare::run(c),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
