use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crane_erg::cli;

#[derive(Parser)]
#[command(name = "crane-erg", version, about = "Boom crane simulation with an explicit reference governor")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario and write log.csv, metrics.txt and plot.gp.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Apply the targets directly instead of through the governor.
        #[arg(long)]
        baseline: bool,
    },
    /// Print the feedback gain, Riccati residual and level-set certificates.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Audit the initial state and references; optionally dump obstacle hulls.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run governed and ungoverned and write a paired metrics table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(args: Args) -> crane_erg::Result<()> {
    match args.command {
        Command::Simulate { config, out, baseline } => {
            let m = cli::simulate(&config, &out, baseline)?;
            print!("{}", m.to_text());
        }
        Command::Synthesize { config } => print!("{}", cli::synthesize(&config)?),
        Command::Check { config, out } => print!("{}", cli::check(&config, out.as_deref())?),
        Command::Compare { config, out } => {
            cli::compare(&config, &out)?;
            print!("{}", std::fs::read_to_string(out.join(cli::METRICS_FILE))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
