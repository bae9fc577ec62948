use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gaussinv_cli::{run, Command, Format, Options};

/// Design and check invariant-based transport protocols for quadratic traps.
#[derive(Debug, Parser)]
#[command(name = "gaussinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Time steps (overrides grid.steps).
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Artifact formats (overrides output.formats); repeat or comma-separate.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,

    /// Suppress the summary on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { config: cli.config, out: cli.out, steps: cli.steps, formats: cli.format };
    match run(cli.command, &opts) {
        Ok(summary) => {
            if !cli.quiet {
                print!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
