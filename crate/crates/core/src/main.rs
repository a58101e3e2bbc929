use std::fs;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use mdimlab::cli::{self, Cli, Command, Format, ReproduceParams, RunOutput};

fn execute(cli: &Cli) -> anyhow::Result<RunOutput> {
    let out = match &cli.command {
        Command::Estimate { config } | Command::Check { config } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = cli::load_config(&text, cli.seed)?;
            if matches!(cli.command, Command::Estimate { .. }) {
                cli::run_estimate(&cfg)?
            } else {
                cli::run_checks(&cfg)?
            }
        }
        Command::Reproduce {
            example,
            theta,
            m_max,
            n_max,
            node_budget,
            point_budget,
        } => cli::run_reproduce(&ReproduceParams {
            example: *example,
            theta: *theta,
            m_max: *m_max,
            n_max: *n_max,
            seed: cli.seed.unwrap_or(0),
            point_budget: match point_budget {
                Some(p) => *p,
                None => cli::default_point_budget()?,
            },
            node_budget: *node_budget,
        })?,
    };
    out.write(&cli.out_dir)
        .with_context(|| format!("writing to {}", cli.out_dir.display()))?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            for line in &out.summary {
                eprintln!("{line}");
            }
            match cli.format {
                Format::Csv => print!("{}", out.csv),
                Format::Json => print!("{}", out.json),
            }
            ExitCode::from(out.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<mdimlab::Error>() {
                Some(err) => cli::exit_code_for(err),
                // unreadable config file or output directory
                None => cli::CONFIG_ERROR_EXIT,
            };
            ExitCode::from(code)
        }
    }
}
