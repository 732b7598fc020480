use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use uavsim_core::geom::Region;
use uavsim_core::ingest::{read_record_stream, synthetic_scenario_with, Partition, SyntheticSpec};
use uavsim_core::learning::{forecast_window, mre, split_hotspot, ForecastSetup, TransmissionRecord, WindowForecast};
use uavsim_core::placement::max_capacity_point;
use uavsim_core::sim::detect_overloads;
use uavsim_core::Error;

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Debug, Serialize)]
struct SubareaOut {
    demand_bits: f64,
    cells: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
struct Entry {
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trial: Option<u64>,
    seed: u64,
    bs_id: u32,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    forecast: Option<WindowForecast<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cell_m: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    hotspot_cells: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    subareas: Vec<SubareaOut>,
}

fn data_dependent(e: &Error) -> bool {
    matches!(
        e,
        Error::NoHotspot
            | Error::NoPositiveWeight
            | Error::InsufficientData(_)
            | Error::DemandUnservable(_)
            | Error::NoFeasiblePlacement
            | Error::EmptyRegion
    )
}

fn evaluate(
    cfg: &RunConfig,
    records: &[TransmissionRecord<f64>],
    area: &Region<f64>,
    start_s: f64,
    seed: u64,
    bs_id: u32,
) -> anyhow::Result<Entry> {
    let mut entry = Entry {
        ratio: None,
        trial: None,
        seed,
        bs_id,
        status: "ok".into(),
        forecast: None,
        cell_m: None,
        hotspot_cells: Vec::new(),
        subareas: Vec::new(),
    };
    let setup = ForecastSetup {
        traffic_components: cfg.sim.traffic_components,
        ue_components: cfg.sweep.em_components,
        kmean_k: &cfg.sweep.kmean_k,
        seed,
    };
    let (est, fc) = match forecast_window(records, area, start_s, &setup, &cfg.learning, &cfg.mixture) {
        Ok(v) => v,
        Err(e) if data_dependent(&e) => {
            entry.status = e.to_string();
            return Ok(entry);
        }
        Err(e) => return Err(e).with_context(|| format!("learning BS {bs_id}")),
    };
    let p_max = cfg.econ.p_max_w;
    let capacity = |region: &Region<f64>, dens: &[f64]| Ok(max_capacity_point(region, dens, p_max, &cfg.channel, &cfg.placement)?.1);
    match split_hotspot(&est, &capacity, &cfg.learning) {
        Ok(parts) => {
            entry.subareas = parts
                .into_iter()
                .map(|s| SubareaOut { demand_bits: s.demand_bits, cells: s.region.cells().collect() })
                .collect()
        }
        Err(e) if data_dependent(&e) => entry.status = format!("ok, not split: {e}"),
        Err(e) => return Err(e).with_context(|| format!("splitting the hotspot of BS {bs_id}")),
    }
    entry.cell_m = Some(est.hotspot.cell_size);
    entry.hotspot_cells = est.hotspot.cells().collect();
    entry.forecast = Some(fc);
    Ok(entry)
}

/// One MRE row per group: WEM, EM, then each k-mean variant.
fn mre_table(cfg: &RunConfig, groups: &[(String, Vec<&Entry>)]) -> anyhow::Result<String> {
    let mut csv = String::from("ratio,windows,wem,em");
    for k in &cfg.sweep.kmean_k {
        csv.push_str(&format!(",kmean_k{k}"));
    }
    csv.push('\n');
    for (label, entries) in groups {
        let fcs: Vec<&WindowForecast<f64>> = entries.iter().filter_map(|e| e.forecast.as_ref()).collect();
        let actual: Vec<f64> = fcs.iter().map(|f| f.actual_bits).collect();
        let score = |pred: Vec<f64>| -> anyhow::Result<String> {
            let r = mre(&pred, &actual)?;
            Ok(if r.entries > 0 { format!("{}", r.mre) } else { String::new() })
        };
        let windows = actual.iter().filter(|a| **a > 0.0).count();
        let mut row = format!("{label},{windows},{},{}", score(fcs.iter().map(|f| f.wem_bits).collect())?, score(fcs.iter().map(|f| f.em_bits).collect())?);
        for j in 0..cfg.sweep.kmean_k.len() {
            row.push(',');
            row.push_str(&score(fcs.iter().map(|f| f.kmean_bits[j].1).collect())?);
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

fn write_entries(out: &OutDir, entries: &[Entry]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e)?;
        buf.push(b'\n');
    }
    out.write_bytes("estimates.jsonl", &buf)?;
    Ok(())
}

/// Learning on synthetic scenarios: for every ratio and trial, the first
/// overload of each BS opens the learning window.
pub fn run_synthetic(cfg: &RunConfig, out: &OutDir) -> anyhow::Result<()> {
    let jobs: Vec<(f64, u64)> = cfg
        .sweep
        .ratios
        .iter()
        .flat_map(|&r| (0..cfg.sweep.trials).map(move |t| (r, t)))
        .collect();
    let model = cfg.model();
    let per_job = jobs
        .par_iter()
        .map(|&(ratio, trial)| -> anyhow::Result<Vec<Entry>> {
            let seed = cfg.seed + trial;
            let spec = SyntheticSpec { rate_ratio: ratio, seed, fleet_size: 0, ..cfg.synthetic };
            let sc = synthetic_scenario_with::<f64>(&spec, &model)?.scenario;
            let mut entries = Vec::new();
            for bs in &sc.base_stations {
                let mut e = match detect_overloads(bs, &sc).first() {
                    Some(&t) => evaluate(cfg, &bs.records, &bs.region, t, seed, bs.id)?,
                    None => Entry {
                        ratio: None,
                        trial: None,
                        seed,
                        bs_id: bs.id,
                        status: "no overload".into(),
                        forecast: None,
                        cell_m: None,
                        hotspot_cells: Vec::new(),
                        subareas: Vec::new(),
                    },
                };
                e.ratio = Some(ratio);
                e.trial = Some(trial);
                entries.push(e);
            }
            Ok(entries)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let entries: Vec<Entry> = per_job.into_iter().flatten().collect();
    write_entries(out, &entries)?;
    let groups: Vec<(String, Vec<&Entry>)> = cfg
        .sweep
        .ratios
        .iter()
        .map(|&r| (format!("{r}"), entries.iter().filter(|e| e.ratio == Some(r)).collect()))
        .collect();
    out.write_text("mre.csv", &mre_table(cfg, &groups)?)?;
    Ok(())
}

/// Start of the busiest hour of a record stream.
fn busiest_hour_start(records: &[TransmissionRecord<f64>]) -> Option<f64> {
    let mut per_hour: BTreeMap<i64, f64> = BTreeMap::new();
    for r in records {
        *per_hour.entry((r.time_s / 3600.0).floor() as i64).or_default() += r.rate_bps;
    }
    per_hour
        .into_iter()
        .fold(None, |best: Option<(i64, f64)>, (h, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((h, v)),
        })
        .map(|(h, _)| h as f64 * 3600.0)
}

/// Learning on an ingested record stream, one window per BS opening at
/// its busiest hour.
pub fn run_observed(cfg: &RunConfig, records: &Path, partition: &Path, out: &OutDir) -> anyhow::Result<()> {
    let file = std::fs::File::open(records).with_context(|| format!("cannot open record stream {}", records.display()))?;
    let streams = read_record_stream::<f64>(std::io::BufReader::new(file)).with_context(|| format!("in {}", records.display()))?;
    let text = std::fs::read_to_string(partition).with_context(|| format!("cannot read partition {}", partition.display()))?;
    let part: Partition<f64> = serde_json::from_str(&text).with_context(|| format!("invalid partition {}", partition.display()))?;
    if part.owner.len() != part.grid.mask.len() || part.owner.iter().any(|&o| o >= part.ids.len()) {
        anyhow::bail!("partition {} is inconsistent", partition.display());
    }
    let empty = Vec::new();
    let entries = part
        .ids
        .par_iter()
        .enumerate()
        .map(|(i, &id)| {
            let recs = streams.get(&id).unwrap_or(&empty);
            match busiest_hour_start(recs) {
                Some(start) => evaluate(cfg, recs, &part.region(i), start, cfg.seed, id),
                None => Ok(Entry {
                    ratio: None,
                    trial: None,
                    seed: cfg.seed,
                    bs_id: id,
                    status: "no records".into(),
                    forecast: None,
                    cell_m: None,
                    hotspot_cells: Vec::new(),
                    subareas: Vec::new(),
                }),
            }
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_entries(out, &entries)?;
    let groups = vec![("observed".to_string(), entries.iter().collect())];
    out.write_text("mre.csv", &mre_table(cfg, &groups)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busiest_hour_ties_go_early() {
        let r = |t: f64, v: f64| TransmissionRecord { rate_bps: v, location: [0.0, 0.0], time_s: t };
        assert_eq!(busiest_hour_start(&[]), None);
        assert_eq!(busiest_hour_start(&[r(10.0, 5.0), r(3700.0, 2.0), r(3800.0, 4.0)]), Some(3600.0));
        assert_eq!(busiest_hour_start(&[r(10.0, 5.0), r(3700.0, 5.0)]), Some(0.0));
    }
}
