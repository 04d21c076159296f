use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gconvex::cli::{execute, Command, EXIT_CONFIG};

/// Run a G-expectation experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "gconvex", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Path to the JSON config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(execute(args.command, &args.config, &args.out) as u8)
}
