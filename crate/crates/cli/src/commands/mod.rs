pub mod contract;
pub mod detect;
pub mod ingest;
pub mod learn;
pub mod report;
pub mod sweep;

use std::path::{Path, PathBuf};

use anyhow::Context;
use uavsim_core::ingest::{parse_dataset, Dataset};

use crate::config::RunConfig;

/// Dataset paths from the command line, falling back to the config.
pub fn dataset_paths(cfg: &RunConfig, bs: Option<&Path>, traffic: Option<&Path>) -> anyhow::Result<(PathBuf, PathBuf)> {
    let bs = bs.map(Path::to_path_buf).or_else(|| cfg.dataset.bs_file.clone());
    let traffic = traffic.map(Path::to_path_buf).or_else(|| cfg.dataset.traffic_file.clone());
    match (bs, traffic) {
        (Some(b), Some(t)) => Ok((b, t)),
        _ => anyhow::bail!("need a BS table and a traffic table (--bs/--traffic or [dataset] in the config)"),
    }
}

pub fn load_dataset(cfg: &RunConfig, bs: Option<&Path>, traffic: Option<&Path>) -> anyhow::Result<Dataset> {
    let (b, t) = dataset_paths(cfg, bs, traffic)?;
    let ds = parse_dataset(&b, &t, &cfg.dataset.parse).context("cannot load dataset")?;
    if ds.dropped_bs_rows + ds.dropped_traffic_rows > 0 {
        log::warn!("dropped {} BS rows and {} traffic rows", ds.dropped_bs_rows, ds.dropped_traffic_rows);
    }
    Ok(ds)
}
