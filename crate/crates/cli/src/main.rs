use std::process::ExitCode;

use clap::Parser;
use fishgame_cli::{configure_threads, run, Args, EXIT_ERROR};

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    ExitCode::from(run(&args) as u8)
}
