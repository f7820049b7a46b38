use std::path::PathBuf;
use std::process::ExitCode;

use chaoslab_harness::plot::{plot, PlotKind};
use chaoslab_harness::{configure_threads, run, ExperimentConfig, HarnessError, Plan};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chaoslab", version, about = "Monte Carlo experiments on imaginary multiplicative chaos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifact directory.
    Run { config: PathBuf },
    /// Render SVG plots from an artifact directory.
    Plot {
        dir: PathBuf,
        #[arg(long)]
        kind: Option<PlotKind>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let art = run(&cfg)?;
            println!("{}", art.dir.display());
            for f in art.data_files.iter().chain(&art.plot_files) {
                println!("  {}", f.display());
            }
        }
        Command::Plot { dir, kind } => {
            for f in plot(&dir, kind)? {
                println!("{}", f.display());
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            Plan::from_config(&cfg)?;
            println!("ok: {} ({})", cfg.experiment_id, cfg.kind.as_str());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
