//! `mlergm`: decompose, simulate, fit and check multilayer ERGMs for
//! ordinal-weighted networks.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "mlergm", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration, or a previous run's manifest.json to replay it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides mcmc.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "mlergm-out")]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Edge list `i,j,weight` (overrides data.edges).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Node attribute table (overrides data.attributes).
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Node count when the edge list does not declare one.
    #[arg(long)]
    nodes: Option<usize>,
    /// Number of layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Ordinalize raw weights at these cut points.
    #[arg(long, value_delimiter = ',', conflicts_with = "quantiles")]
    thresholds: Option<Vec<f64>>,
    /// Ordinalize raw weights at these quantiles of the positive weights.
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a weighted network into nested binary layers.
    Decompose {
        #[command(flatten)]
        data: DataArgs,
        /// Re-read the written layers and write their recomposition.
        #[arg(long)]
        recompose: bool,
    },
    /// Simulate weighted networks from per-layer parameters in [simulate].
    Simulate {
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        steps_per_dyad: Option<u32>,
    },
    /// Fit the hierarchical model by exchange-algorithm MCMC.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Fraction of iterations discarded as burn-in.
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        thinning: Option<usize>,
        /// Auxiliary chain length per candidate dyad.
        #[arg(long)]
        steps_per_dyad: Option<u32>,
    },
    /// Posterior predictive weighted-degree check.
    Gof {
        #[command(flatten)]
        data: DataArgs,
        /// Directory of a fit (or its posterior.csv).
        #[arg(long)]
        posterior: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        steps_per_dyad: Option<u32>,
    },
    /// Summarize posterior draws.
    Summarize {
        /// Directory of a fit (or its posterior.csv).
        #[arg(long)]
        posterior: PathBuf,
    },
}

fn apply_data(cfg: &mut Config, d: DataArgs) {
    let c = &mut cfg.data;
    if d.data.is_some() {
        c.edges = d.data;
    }
    if d.attributes.is_some() {
        c.attributes = d.attributes;
    }
    if d.nodes.is_some() {
        c.nodes = d.nodes;
    }
    if d.layers.is_some() {
        c.layers = d.layers;
    }
    if d.thresholds.is_some() {
        c.thresholds = d.thresholds;
        c.quantiles = None;
    }
    if d.quantiles.is_some() {
        c.quantiles = d.quantiles;
        c.thresholds = None;
    }
    cfg.make_paths_absolute();
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let loaded = cli.common.config.as_deref().map(config::load).transpose()?;
    let has_config = loaded.is_some();
    let mut cfg = loaded.unwrap_or_default();
    set(&mut cfg.mcmc.seed, cli.common.seed);
    let out = &cli.common.out;
    match cli.command {
        Command::Decompose { data, recompose } => {
            apply_data(&mut cfg, data);
            commands::decompose_cmd(cfg, out, recompose)
        }
        Command::Simulate {
            nodes,
            replicates,
            steps_per_dyad,
        } => {
            if nodes.is_some() {
                cfg.simulate.nodes = nodes;
            }
            set(&mut cfg.simulate.replicates, replicates);
            set(&mut cfg.mcmc.steps_per_dyad, steps_per_dyad);
            commands::simulate_cmd(cfg, out)
        }
        Command::Fit {
            data,
            chains,
            iterations,
            burn_in,
            thinning,
            steps_per_dyad,
        } => {
            apply_data(&mut cfg, data);
            set(&mut cfg.mcmc.chains, chains);
            set(&mut cfg.mcmc.iterations, iterations);
            set(&mut cfg.mcmc.burn_in, burn_in);
            set(&mut cfg.mcmc.thinning, thinning);
            set(&mut cfg.mcmc.steps_per_dyad, steps_per_dyad);
            commands::fit_cmd(cfg, out)
        }
        Command::Gof {
            data,
            posterior,
            replicates,
            steps_per_dyad,
        } => {
            apply_data(&mut cfg, data);
            set(&mut cfg.gof.replicates, replicates);
            set(&mut cfg.mcmc.steps_per_dyad, steps_per_dyad);
            commands::gof_cmd(cfg, &posterior, out)
        }
        Command::Summarize { posterior } => commands::summarize_cmd(has_config.then_some(cfg), &posterior, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
