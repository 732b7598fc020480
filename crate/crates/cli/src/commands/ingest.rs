use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use uavsim_core::ingest::{hourly_city_series, project_and_partition, synthesize_bs_labels, write_record_stream, RawTrafficRow};

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Debug, Serialize)]
struct BsSummary {
    bs_id: u32,
    cells: usize,
    records: usize,
    skipped_hours: usize,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    base_stations: usize,
    traffic_rows: usize,
    hours: usize,
    dropped_bs_rows: usize,
    dropped_traffic_rows: usize,
    merged_duplicates: usize,
    seed: u64,
    per_bs: Vec<BsSummary>,
}

pub fn run(cfg: &RunConfig, bs: Option<&Path>, traffic: Option<&Path>, out: &OutDir) -> anyhow::Result<()> {
    let ds = super::load_dataset(cfg, bs, traffic)?;
    let partition = project_and_partition::<f64>(&ds.base_stations, &cfg.dataset.partition)?;

    let labels = partition
        .ids
        .par_iter()
        .enumerate()
        .map(|(i, &id)| {
            let rows: Vec<RawTrafficRow> = ds.traffic.iter().filter(|r| r.bs_id == id).copied().collect();
            synthesize_bs_labels(id, &rows, &partition.region(i), &cfg.dataset.labels, cfg.seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let streams: Vec<(u32, &[_])> = labels.iter().map(|l| (l.bs_id, &l.records[..])).collect();
    let mut buf = Vec::new();
    write_record_stream(&streams, &mut buf)?;
    out.write_bytes("records.csv", &buf)?;
    out.write_json("partition.json", &partition)?;

    let series = hourly_city_series(&ds.traffic);
    let mut csv = String::from("hour,bytes\n");
    for (h, v) in series.iter().enumerate() {
        csv.push_str(&format!("{h},{v}\n"));
    }
    out.write_text("city_series.csv", &csv)?;

    let per_bs = labels
        .iter()
        .enumerate()
        .map(|(i, l)| BsSummary {
            bs_id: l.bs_id,
            cells: partition.region(i).cell_count(),
            records: l.records.len(),
            skipped_hours: l.skipped_hours,
        })
        .collect();
    out.write_json(
        "ingest.json",
        &IngestSummary {
            base_stations: ds.base_stations.len(),
            traffic_rows: ds.traffic.len(),
            hours: series.len(),
            dropped_bs_rows: ds.dropped_bs_rows,
            dropped_traffic_rows: ds.dropped_traffic_rows,
            merged_duplicates: ds.merged_duplicates,
            seed: cfg.seed,
            per_bs,
        },
    )?;
    log::info!("ingested {} base stations", ds.base_stations.len());
    Ok(())
}
