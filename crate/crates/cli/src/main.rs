use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::Parser;

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    if let Ok(v) = std::env::var("MCAA_THREADS") {
        let n: usize = v.parse().with_context(|| format!("MCAA_THREADS must be a positive integer, got {v:?}"))?;
        ensure!(n > 0, "MCAA_THREADS must be a positive integer, got 0");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("sizing the worker pool")?;
    }
    mcaa_cli::run(mcaa_cli::Cli::parse())
}
