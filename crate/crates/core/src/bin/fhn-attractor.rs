use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fhn_attractor::config::{ExperimentName, RunConfig};
use fhn_attractor::run::{run, Overrides, RunError};

#[derive(Parser)]
#[command(
    version,
    about = "Pullback experiments for the stochastic FitzHugh-Nagumo system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or `all`) and write CSV reports plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        experiment: Option<ExperimentName>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every precondition without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let violations = cfg.validate();
            if violations.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for v in &violations {
                    eprintln!("{v}");
                }
                ExitCode::from(2)
            }
        }
        Command::Run {
            config,
            experiment,
            seed,
            out,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            Overrides {
                experiment,
                seed,
                out,
            }
            .apply(&mut cfg);
            match run(&cfg) {
                Ok(summary) => {
                    for c in &summary.checks {
                        println!(
                            "{} {} value={} threshold={}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.value,
                            c.threshold
                        );
                    }
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    let code = RunError::exit_code(&e);
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}
