use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hilbert_spde::cli::{execute, inspect, replay, resolve_output, RunConfig};

/// Experiment runner for semilinear SPDEs on periodic boxes.
#[derive(Parser)]
#[command(name = "hspde", version)]
struct Cli {
    /// Worker threads for the path farm (default: all cores). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a recorded run and compare artifact hashes.
    Replay { manifest: PathBuf },
    /// Print grid metadata and norms of a snapshot.
    Inspect { snapshot: PathBuf },
}

const EXIT_INVALID: u8 = 1;
const EXIT_FAIL: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return invalid(e),
            };
            let dir = out.unwrap_or_else(|| resolve_output(&cfg.output.dir));
            match execute(&cfg, &dir, cli.threads) {
                Ok(outcome) => {
                    let verdict = if outcome.pass() { "PASS" } else { "FAIL" };
                    println!("{} {}: {verdict}", cfg.experiment.as_str(), cfg.equation.as_str());
                    println!("artifacts in {}", outcome.dir.display());
                    if outcome.pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_FAIL)
                    }
                }
                Err(e) => invalid(e),
            }
        }
        Command::Replay { manifest } => match replay(&manifest, cli.threads) {
            Ok(r) if r.identical() => {
                println!("replay identical");
                ExitCode::SUCCESS
            }
            Ok(r) => {
                println!("replay diverged:");
                for name in &r.divergent {
                    println!("  {name}");
                }
                ExitCode::from(EXIT_FAIL)
            }
            Err(e) => invalid(e),
        },
        Command::Inspect { snapshot } => match inspect(&snapshot) {
            Ok(s) => {
                println!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => invalid(e),
        },
    }
}

fn invalid(e: hilbert_spde::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID)
}
