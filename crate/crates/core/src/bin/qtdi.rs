use std::process::ExitCode;

use clap::Parser;
use qtdi::cli::{error_json, run, Cli, LOG_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for f in &outcome.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
