use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnevo_cli::CliError;

/// Incremental-minimization solver for doubly nonlinear evolution equations.
#[derive(Parser)]
#[command(name = "dnevo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write trajectory, diagnostics and refinement files.
    Run {
        config: PathBuf,
        /// Output root for relative output directories (overrides DNEVO_OUTPUT_ROOT).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// List registered models.
    ListModels,
    /// Show parameters and constraints of a model.
    Describe { name: String },
    /// Run diagnostics on an existing trajectory file.
    Check {
        config: PathBuf,
        /// Trajectory CSV; defaults to trajectory.csv in the configured output directory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output_root } => match dnevo_cli::run(&config, output_root.as_deref()) {
            Ok(out) => {
                if let Some(report) = &out.report {
                    print!("{}", dnevo_cli::summarize(report));
                }
                println!("wrote {}", out.dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::ListModels => {
            print!("{}", dnevo_cli::list_models());
            ExitCode::SUCCESS
        }
        Command::Describe { name } => match dnevo_cli::describe(&name) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Check { config, trajectory, output_root } => {
            match dnevo_cli::check(&config, trajectory.as_deref(), output_root.as_deref()) {
                Ok(report) => {
                    print!("{}", dnevo_cli::summarize(&report));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
