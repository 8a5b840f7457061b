//! `mcaa`: train a small binary classifier and estimate the uncertainty of
//! its predictions by sweeping adversarial perturbations over an epsilon
//! grid, with an MC-dropout baseline for comparison.
//!
//! The binary is a thin shell over [`pipeline`]; everything is callable as
//! a library too, which is how the integration tests drive it.

pub mod artifacts;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Method};

#[derive(Debug, Parser)]
#[command(name = "mcaa", version, about = "Model uncertainty via adversarial perturbation sweeps")]
pub struct Cli {
    /// Output root; each run gets a subdirectory named by its config hash.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Override the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the scoring method in the config file.
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model; writes model.json, losses.csv, data-report.json.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score the test split of a trained run with the configured method.
    Score {
        #[arg(long)]
        config: PathBuf,
    },
    /// Turn a scores file into threshold curves, ROC/PR tables, and a summary.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Pick eps_max by validation AUROC over the configured candidates.
    SweepEpsmax {
        #[arg(long)]
        config: PathBuf,
    },
    /// Synthetic end-to-end run, ending in a cloud.csv of (x1, x2, mi, label).
    SynthDemo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Replay the pipeline recorded in an artifact's reproducibility header.
    Rerun {
        #[arg(long)]
        artifact: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let load = |path: &PathBuf| -> Result<ExperimentConfig> {
        ExperimentConfig::load(path)?.resolve(cli.seed, cli.method)
    };
    match &cli.command {
        Command::Train { config } => pipeline::cmd_train(&load(config)?, &cli.out)?,
        Command::Score { config } => pipeline::cmd_score(&load(config)?, &cli.out)?,
        Command::Evaluate { config } => pipeline::cmd_evaluate(&load(config)?, &cli.out)?,
        Command::SweepEpsmax { config } => pipeline::cmd_sweep_epsmax(&load(config)?, &cli.out)?,
        Command::SynthDemo { config } => pipeline::cmd_synth_demo(&load(config)?, &cli.out)?,
        Command::Rerun { artifact } => {
            // A replay reproduces the recorded config bit for bit; letting
            // flags rewrite it would defeat the point.
            if cli.seed.is_some() || cli.method.is_some() {
                bail!("rerun replays the recorded config; --seed and --method do not apply");
            }
            pipeline::cmd_rerun(artifact, &cli.out)?
        }
    };
    Ok(())
}
