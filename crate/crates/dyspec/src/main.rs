use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dyspec::{run, CliError, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "dyspec", version, about = "Dynamical spectra of WKB cocycles over steady Euler flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every task of a config and write JSON/CSV results.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `ensemble.seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (does not change results).
        #[arg(long, env = "DYSPEC_THREADS")]
        threads: Option<usize>,
    },
    /// Check a config and print it with all defaults resolved.
    Validate { config: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match RunConfig::load(&config).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => {
                let body = serde_json::to_string_pretty(&c.normalized()).expect("config serializes");
                // a closed pipe (e.g. `| head`) is not an error worth reporting
                let _ = writeln!(std::io::stdout().lock(), "OK\n{body}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { config, output_dir, seed, threads } => {
            let opts = RunOptions { output_dir, seed, threads };
            match RunConfig::load(&config).and_then(|c| run(&c, &opts)) {
                Ok(summary) => {
                    let mut out = std::io::stdout().lock();
                    for f in &summary.files {
                        let _ = writeln!(out, "{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
