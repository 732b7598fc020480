use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use uavsim_core::ingest::{dwt_congestion_detect, hourly_city_series};

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Debug, Serialize)]
struct Detection {
    hours: usize,
    levels: usize,
    threshold_sigmas: f64,
    flagged: Vec<usize>,
}

/// Reads `hour,value` rows; hours must be 0, 1, 2, ... in order.
fn read_series(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read series {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<(usize, f64)>().enumerate() {
        let (h, v) = row.with_context(|| format!("{}: bad row {}", path.display(), i + 1))?;
        if h != i || !v.is_finite() {
            bail!("{}: row {} must be hour {i} with a finite value", path.display(), i + 1);
        }
        out.push(v);
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig, bs: Option<&Path>, traffic: Option<&Path>, series: Option<&Path>, out: &OutDir) -> anyhow::Result<()> {
    let values = match series {
        Some(p) => read_series(p)?,
        None => hourly_city_series(&super::load_dataset(cfg, bs, traffic)?.traffic),
    };
    let flagged = dwt_congestion_detect(&values, &cfg.detect)?;
    let mut csv = String::from("hour,value,flagged\n");
    for (h, v) in values.iter().enumerate() {
        csv.push_str(&format!("{h},{v},{}\n", u8::from(flagged.binary_search(&h).is_ok())));
    }
    out.write_text("detect.csv", &csv)?;
    out.write_json(
        "detect.json",
        &Detection {
            hours: values.len(),
            levels: cfg.detect.levels,
            threshold_sigmas: cfg.detect.threshold_sigmas,
            flagged,
        },
    )?;
    Ok(())
}
