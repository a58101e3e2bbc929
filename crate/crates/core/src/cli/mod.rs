//! Command-line runner: builds systems from a JSON config, sweeps the grid
//! and writes `cells.csv` plus a JSON report.
//!
//! Exit codes: 0 when every check passes, 2 on a check failure (including a
//! failed metric validation), 3 on a config error, 4 when a budget ran out
//! and the results are partial.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

mod check;
mod config;
mod estimate;
mod report;
mod reproduce;

pub use check::{run_checks, CheckEntry, CheckReport, Outcome, SystemChecks};
pub use config::{Budgets, CheckKind, EstimatorKind, HolderSpec, MapSpec, RunConfig, ALL_CHECKS, BUDGET_ENV};
pub use estimate::{run_estimate, EstimateEntry, EstimateReport, SystemEstimates};
pub use report::{exit_code_for, CellRow, Provenance, RunOutput, Status, CONFIG_ERROR_EXIT};
pub use reproduce::{run_reproduce, Assertion, Example, ReproduceParams, ReproduceReport, REPRODUCE_NODE_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mdimlab", version, about = "Mean dimension estimates and checks on finite dynamical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory receiving cells.csv and the JSON report.
    #[arg(long, global = true, default_value = "mdimlab-out")]
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured estimators over the grid.
    Estimate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute one of the worked examples.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Branch-and-bound nodes per solver call before greedy fallback.
        #[arg(long, default_value_t = REPRODUCE_NODE_BUDGET)]
        node_budget: u64,
        /// Largest model to build; defaults to the environment budget.
        #[arg(long)]
        point_budget: Option<usize>,
    },
    /// Run the inequality suite on the configured systems.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses config text and applies the command-line seed.
pub fn load_config(text: &str, seed: Option<u64>) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::parse(text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Point cap for commands without a config file.
pub fn default_point_budget() -> crate::Result<usize> {
    RunConfig::parse(r#"{"systems":[{"kind":"singleton"}],"epsilons":[0.5],"scales":[1]}"#)?.point_budget()
}
