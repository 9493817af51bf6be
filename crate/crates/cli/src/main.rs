use std::process::ExitCode;

use clap::Parser;
use epp_cli::app::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
