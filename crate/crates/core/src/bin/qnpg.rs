use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qnpg::cli::{self, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "qnpg", version, about = "Quantum natural policy gradient experiments")]
struct Args {
    /// Base output directory (falls back to $QNPG_OUT_DIR, then ./runs).
    #[arg(long, global = true, env = "QNPG_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write curves, diagnostics and a summary.
    Run {
        config: PathBuf,
        /// Comma-separated seeds overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Episode budget overriding the config.
        #[arg(long)]
        episodes: Option<usize>,
        /// Seeds trained in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Merge the summaries of finished runs into one CSV.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the numerical property checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Run {
            config,
            seeds,
            episodes,
            jobs,
        } => {
            let opts = RunOptions {
                seeds,
                episodes,
                out_dir: args.out_dir.clone(),
                jobs: Some(jobs),
            };
            let summary = cli::run(&config, &opts)?;
            println!(
                "{}: {} seeds, {} episodes -> {}",
                summary.label,
                summary.seeds.len(),
                summary.mean.len(),
                cli::run_dir(&config, args.out_dir.as_deref()).display()
            );
            for (seed, m) in summary.seeds.iter().zip(&summary.final_50_mean) {
                println!("  seed {seed}: final-50 mean return {m:.2}");
            }
            Ok(())
        }
        Command::Compare { configs, output } => {
            let csv = cli::compare(&configs, args.out_dir.as_deref())?;
            std::fs::write(&output, csv).map_err(|source| CliError::Io {
                path: output.display().to_string(),
                source,
            })?;
            println!("wrote {}", output.display());
            Ok(())
        }
        Command::Verify { seed } => {
            let checks = qnpg::verify::run_all(seed).map_err(|e| CliError::Aborted(e.to_string()))?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                return Err(CliError::Verify(failed));
            }
            Ok(())
        }
    }
}
