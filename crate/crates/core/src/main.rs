use std::process::ExitCode;

use clap::Parser;
use mvs_core::commands::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mvs: {e}");
            ExitCode::from(2)
        }
    }
}
