use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use uavsim_core::sim::{collect_metrics, read_log, MetricsReport};

use crate::output::{OutDir, TidyRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub policy: String,
    pub fleet_size: usize,
    pub runs: usize,
    /// Per-metric mean over the runs of the group.
    pub means: BTreeMap<String, f64>,
}

pub type Summary = Vec<GroupSummary>;

/// Seeds seen and per-metric (sum, count) of one group.
type Acc = (BTreeSet<u64>, BTreeMap<String, (f64, usize)>);

/// Means per (policy, fleet size), groups in order of first appearance.
pub fn summarize(rows: &[TidyRow]) -> Summary {
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut acc: BTreeMap<(String, usize), Acc> = BTreeMap::new();
    for r in rows {
        let key = (r.policy.clone(), r.fleet_size);
        let entry = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Default::default()
        });
        entry.0.insert(r.seed);
        let m = entry.1.entry(r.metric.clone()).or_insert((0.0, 0));
        m.0 += r.value;
        m.1 += 1;
    }
    order
        .into_iter()
        .map(|key| {
            let (seeds, metrics) = &acc[&key];
            GroupSummary {
                policy: key.0,
                fleet_size: key.1,
                runs: seeds.len(),
                means: metrics.iter().map(|(k, (s, n))| (k.clone(), s / *n as f64)).collect(),
            }
        })
        .collect()
}

fn table(summary: &Summary) -> String {
    let cols = ["total_capacity_bps", "avg_energy_per_uav_j", "avg_service_delay_s", "avg_bs_utility", "total_uav_utility"];
    let mut s = format!("{:<12} {:>5} {:>4}", "policy", "fleet", "runs");
    for c in cols {
        s.push_str(&format!(" {c:>22}"));
    }
    s.push('\n');
    for g in summary {
        s.push_str(&format!("{:<12} {:>5} {:>4}", g.policy, g.fleet_size, g.runs));
        for c in cols {
            match g.means.get(c) {
                Some(v) => s.push_str(&format!(" {v:>22.6e}")),
                None => s.push_str(&format!(" {:>22}", "-")),
            }
        }
        s.push('\n');
    }
    s
}

fn read_rows(path: &Path) -> anyhow::Result<Vec<TidyRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: bad row {}", path.display(), i + 1)))
        .collect()
}

/// Summarizes a sweep table (or a directory holding `metrics.csv`), or
/// recomputes the metrics of a JSON-lines event log.
pub fn run(input: &Path, out: &OutDir) -> anyhow::Result<()> {
    if input.extension().is_some_and(|e| e == "jsonl") {
        let f = File::open(input).with_context(|| format!("cannot open log {}", input.display()))?;
        let log = read_log::<f64>(BufReader::new(f)).with_context(|| format!("in {}", input.display()))?;
        let report: MetricsReport<f64> = collect_metrics(&log)?;
        let mut text = String::new();
        for (k, v) in report.metrics() {
            text.push_str(&format!("{k:<22} {v}\n"));
        }
        print!("{text}");
        out.write_text("report.txt", &text)?;
        out.write_json("report.json", &report)?;
        return Ok(());
    }
    let csv_path = if input.is_dir() { input.join("metrics.csv") } else { input.to_path_buf() };
    let summary = summarize(&read_rows(&csv_path)?);
    let text = table(&summary);
    print!("{text}");
    out.write_text("report.txt", &text)?;
    out.write_json("report.json", &summary)?;
    Ok(())
}
