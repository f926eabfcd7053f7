use std::process::ExitCode;

use clap::Parser;
use rupture_lab::cli::{exit_code, init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| run(&cli, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rupture-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
