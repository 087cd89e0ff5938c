//! Experiment runner behind the `fishgame` binary.
//!
//! A run reads an INI config (see [`config`]), dispatches to one
//! experiment, writes CSVs into the output directory and finishes with
//! `manifest.json`. Exit codes: 0 when every stage converged, 2 when the
//! run completed without converging, 1 on errors.

pub mod config;
pub mod error;
mod experiments;
pub mod manifest;
pub mod presets;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub use config::Config;
pub use error::CliError;

#[derive(Clone, Debug, Parser)]
#[command(name = "fishgame", version, about = "Spatial harvesting experiments")]
pub struct Args {
    /// Experiment configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only errors on stderr, nothing on stdout.
    #[arg(long)]
    pub quiet: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Caps the global rayon pool at `FISHGAME_THREADS` when set.
pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FISHGAME_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("FISHGAME_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Runs one experiment and returns the process exit code.
pub fn run(args: &Args) -> i32 {
    let started = Instant::now();
    let cfg = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let seed = match args.seed {
        Some(s) => Ok(s),
        None => cfg.get("", "seed", 0u64),
    };
    let seed = match seed {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return EXIT_ERROR;
    }
    let mut state = experiments::Run {
        cfg: &cfg,
        out: args.out.clone(),
        seed,
        quiet: args.quiet,
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    let result = experiments::dispatch(&mut state);
    let code = match &result {
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
        Ok(()) if state.stages.iter().all(|s| s.converged) => EXIT_OK,
        Ok(()) => EXIT_NOT_CONVERGED,
    };
    let manifest = manifest::Manifest {
        experiment: cfg.experiment(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: args.config.display().to_string(),
        config: cfg.echo(),
        seed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        stages: state.stages,
        outputs: state.outputs,
        exit_code: code,
        error: result.err().map(|e| e.to_string()),
    };
    if let Err(e) = manifest.write_atomic(&args.out) {
        eprintln!("error: writing manifest: {e}");
        return EXIT_ERROR;
    }
    code
}
