#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uavsim_core::sim::Policy;

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "uavsim", version, about = "Predictive UAV base-station deployment simulator")]
struct Cli {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated policies: predictive, closest, max_energy.
    #[arg(long, global = true, value_delimiter = ',')]
    policy: Vec<Policy>,
    /// Comma-separated fleet sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    fleet: Vec<usize>,
    /// Comma-separated hotspot-to-average rate ratios.
    #[arg(long, global = true, value_delimiter = ',')]
    ratio: Vec<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a traffic dataset, partition service areas and synthesize per-second records.
    Ingest {
        #[arg(long)]
        bs: Option<PathBuf>,
        #[arg(long)]
        traffic: Option<PathBuf>,
    },
    /// Flag congested hours with a two-level Haar wavelet test.
    Detect {
        #[arg(long)]
        bs: Option<PathBuf>,
        #[arg(long)]
        traffic: Option<PathBuf>,
        /// CSV with columns `hour,value` instead of a dataset.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Learn demand forecasts and score them against WEM, EM and k-mean.
    Learn {
        /// Comma-separated k values for the k-mean baseline.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// Record stream written by `ingest`; learns on observed data.
        #[arg(long, requires = "partition")]
        records: Option<PathBuf>,
        #[arg(long, requires = "records")]
        partition: Option<PathBuf>,
    },
    /// Build a contract menu and check its incentive properties.
    ContractCheck {
        /// Demand in bits.
        #[arg(long)]
        demand: Option<f64>,
    },
    /// Run every policy once on one synthetic scenario.
    Simulate,
    /// Sweep policies, fleet sizes and seeds.
    Compare,
    /// Summarize a sweep table, a sweep directory or an event log.
    Report { input: PathBuf },
}

/// Broken internal invariant; exits with status 3.
#[derive(Debug)]
pub struct Invariant(pub String);

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Invariant {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use uavsim_core::Error as E;
    for cause in err.chain() {
        if cause.is::<Invariant>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            if matches!(e, E::ProtocolViolation(_) | E::NotNormalized(_)) {
                return 3;
            }
        }
    }
    2
}

fn effective_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if !cli.policy.is_empty() {
        cfg.sweep.policies = cli.policy.clone();
    }
    if !cli.fleet.is_empty() {
        cfg.sweep.fleet_sizes = cli.fleet.clone();
    }
    if !cli.ratio.is_empty() {
        cfg.sweep.ratios = cli.ratio.clone();
    }
    if let Command::Learn { k, .. } = &cli.command {
        if !k.is_empty() {
            cfg.sweep.kmean_k = k.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = effective_config(&cli)?;
    let out = OutDir::create(&cli.out)?;
    out.write_text("config.toml", &cfg.to_toml()?)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    pool.install(|| match &cli.command {
        Command::Ingest { bs, traffic } => commands::ingest::run(&cfg, bs.as_deref(), traffic.as_deref(), &out),
        Command::Detect { bs, traffic, series } => {
            commands::detect::run(&cfg, bs.as_deref(), traffic.as_deref(), series.as_deref(), &out)
        }
        Command::Learn { records, partition, .. } => match (records, partition) {
            (Some(r), Some(p)) => commands::learn::run_observed(&cfg, r, p, &out),
            _ => commands::learn::run_synthetic(&cfg, &out),
        },
        Command::ContractCheck { demand } => commands::contract::run(&cfg, *demand, &out),
        Command::Simulate => commands::sweep::simulate(&cfg, cli.fleet.first().copied(), &out),
        Command::Compare => commands::sweep::compare(&cfg, &out),
        Command::Report { input } => commands::report::run(input, &out),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UAVSIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
