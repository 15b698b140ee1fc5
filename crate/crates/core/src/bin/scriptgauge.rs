use std::process::ExitCode;

use clap::Parser;
use scriptgauge::cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let raw: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match execute(cli, &raw, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
