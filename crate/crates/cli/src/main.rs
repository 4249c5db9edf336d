use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use xsalpha_cli::{run, synth, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "xsalpha", version, about = "Excess-return timing backtests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Backtest one or more configurations in parallel.
    Run {
        /// Configuration file; repeat for several runs.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Directory against which relative output paths resolve.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate a synthetic panel and save it to `panel_out`.
    Synth {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    let (configs, out_dir, generate_only) = match cli.command {
        Command::Run { configs, out_dir } => (configs, out_dir, false),
        Command::Synth { configs, out_dir } => (configs, out_dir, true),
    };

    let outcomes: Vec<(PathBuf, Result<Vec<PathBuf>, CliError>)> = configs
        .par_iter()
        .map(|path| {
            let outcome = RunConfig::load(path, out_dir.as_deref())
                .map_err(CliError::from)
                .and_then(|config| {
                    if generate_only {
                        synth(&config).map(|p| vec![p])
                    } else {
                        run(&config).map(|o| o.written)
                    }
                });
            (path.clone(), outcome)
        })
        .collect();

    let mut code = 0u8;
    for (path, outcome) in outcomes {
        match outcome {
            Ok(written) => {
                for file in written {
                    println!("{}: wrote {}", path.display(), file.display());
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                code = code.max(e.exit_code());
            }
        }
    }
    ExitCode::from(code)
}

/// Caps the global thread pool at `XSALPHA_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("XSALPHA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("XSALPHA_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}
