use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gem_cli::config::{Overrides, RunConfig};
use gem_cli::generate::{run_synth, SynthArgs};
use gem_cli::pipeline::{run_gem, run_summarize};
use gem_cli::plot::render_plots;
use gem_cli::CliError;

/// General effect modelling: GLM effect decomposition followed by PLS on
/// per-variable effect-plus-residual matrices.
#[derive(Parser)]
#[command(name = "gem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-tabulate categorical design factors.
    Summarize(Overrides),
    /// Run the full pipeline: GLM, ER matrices, PLS, cross-validation, jackknife.
    Gem {
        #[command(flatten)]
        run: Overrides,
        /// Render plots after a successful run.
        #[arg(long)]
        plot: bool,
    },
    /// Render SVG plots from the tables of a finished `gem` run.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic confounded study with its ground truth.
    Synth(SynthArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Summarize(o) => {
            let m = run_summarize(&RunConfig::resolve(&o)?)?;
            eprintln!("wrote {} files", m.files.len());
        }
        Command::Gem { run, plot } => {
            let cfg = RunConfig::resolve(&run)?;
            let m = run_gem(&cfg)?;
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            if plot {
                render_plots(cfg.out_dir()?)?;
            }
            eprintln!("wrote {} files", m.files.len());
        }
        Command::Plot { out } => {
            let m = render_plots(&out)?;
            eprintln!("manifest now lists {} files", m.files.len());
        }
        Command::Synth(args) => {
            let m = run_synth(&args)?;
            eprintln!("wrote {} files", m.files.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
