use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mslab", version, about = "Model space and nearly invariant subspace experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites selected in a config file and write report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the grid size in the config.
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, grid } => match mslab::cli::run(&config, &out, seed, grid) {
            Ok(report) => {
                for s in &report.suites {
                    let verdict = if s.passed { "PASS" } else { "FAIL" };
                    match &s.error {
                        Some(e) => println!("{verdict} {} ({e})", s.name),
                        None => println!("{verdict} {}", s.name),
                    }
                }
                ExitCode::from(report.exit_code())
            }
            Err(e) => {
                eprintln!("mslab: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}
