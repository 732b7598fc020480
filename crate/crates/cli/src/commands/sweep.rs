use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use uavsim_core::ingest::{synthetic_scenario_with, SyntheticSpec};
use uavsim_core::sim::{collect_metrics, prepare_plans, run_with_plans, write_log, EventPlan, MetricsReport, PlanOutcome, Policy, Scenario};

use super::report::{summarize, Summary};
use crate::config::RunConfig;
use crate::output::{tidy_csv, OutDir, TidyRow};
use crate::Invariant;

const INCOMPLETE: &str = "INCOMPLETE";

type Prepared = (Scenario<f64>, Vec<EventPlan<f64>>);

fn scenario(cfg: &RunConfig, seed: u64, fleet: usize) -> anyhow::Result<Prepared> {
    let spec = SyntheticSpec { seed, fleet_size: fleet, ..cfg.synthetic };
    let sc = synthetic_scenario_with::<f64>(&spec, &cfg.model())
        .with_context(|| format!("building scenario for seed {seed}"))?
        .scenario;
    let plans = prepare_plans(&sc).with_context(|| format!("planning scenario for seed {seed}"))?;
    Ok((sc, plans))
}

/// Runs one policy, writes its log to `log_name` and checks that the
/// reported metrics recompute from the log.
fn run_one(
    sc: &Scenario<f64>,
    plans: &[EventPlan<f64>],
    policy: Policy,
    out: &OutDir,
    log_name: &str,
) -> anyhow::Result<MetricsReport<f64>> {
    let res = run_with_plans(sc, plans, policy).with_context(|| format!("{policy} run"))?;
    let mut buf = Vec::new();
    write_log(&res.log, &mut buf)?;
    out.write_bytes(log_name, &buf)?;
    if collect_metrics(&res.log)? != res.report {
        return Err(Invariant(format!("{policy} metrics do not recompute from its log")).into());
    }
    Ok(res.report)
}

fn tidy(policy: Policy, fleet: usize, seed: u64, r: &MetricsReport<f64>) -> Vec<TidyRow> {
    r.metrics()
        .iter()
        .map(|(name, v)| TidyRow { policy: policy.name().into(), fleet_size: fleet, seed, metric: (*name).into(), value: *v })
        .collect()
}

#[derive(Debug, Serialize)]
struct EventSummary {
    bs_id: u32,
    detect_s: f64,
    status: String,
    subareas: usize,
    predicted_bits: Option<f64>,
}

pub fn simulate(cfg: &RunConfig, fleet: Option<usize>, out: &OutDir) -> anyhow::Result<()> {
    let fleet = fleet.unwrap_or(cfg.synthetic.fleet_size);
    let (sc, plans) = scenario(cfg, cfg.seed, fleet)?;
    let events: Vec<EventSummary> = plans
        .iter()
        .map(|p| match &p.outcome {
            PlanOutcome::Skipped(why) => EventSummary { bs_id: p.bs_id, detect_s: p.detect_s, status: why.clone(), subareas: 0, predicted_bits: None },
            PlanOutcome::Ready { predictive, .. } => EventSummary {
                bs_id: p.bs_id,
                detect_s: p.detect_s,
                status: "ready".into(),
                subareas: predictive.subareas.len(),
                predicted_bits: Some(predictive.estimate.demand_bits),
            },
        })
        .collect();
    out.write_json("events.json", &events)?;

    let reports = cfg
        .sweep
        .policies
        .par_iter()
        .map(|&p| run_one(&sc, &plans, p, out, &format!("logs/{p}.jsonl")).map(|r| (p, r)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (p, r) in &reports {
        out.write_json(&format!("metrics/{p}.json"), r)?;
        rows.extend(tidy(*p, fleet, cfg.seed, r));
    }
    out.write_bytes("metrics.csv", &tidy_csv(&rows)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    complete: bool,
    runs: usize,
    summary: Summary,
}

/// Raises `failed` on error so pending runs are skipped.
fn note<T>(failed: &AtomicBool, r: anyhow::Result<T>) -> anyhow::Result<T> {
    if r.is_err() {
        failed.store(true, Ordering::SeqCst);
    }
    r
}

pub fn compare(cfg: &RunConfig, out: &OutDir) -> anyhow::Result<()> {
    let s = &cfg.sweep;
    let max_fleet = s.fleet_sizes.iter().copied().max().unwrap_or(0);
    let seeds: Vec<u64> = (0..s.replicates).map(|i| cfg.seed + i).collect();
    let marker = out.path(INCOMPLETE);
    if marker.exists() {
        std::fs::remove_file(&marker).with_context(|| format!("cannot remove {}", marker.display()))?;
    }
    let failed = AtomicBool::new(false);

    let prepared: Vec<Option<anyhow::Result<Prepared>>> = seeds
        .par_iter()
        .map(|&seed| (!failed.load(Ordering::SeqCst)).then(|| note(&failed, scenario(cfg, seed, max_fleet))))
        .collect();

    let mut jobs = Vec::new();
    for (si, &seed) in seeds.iter().enumerate() {
        for &fleet in &s.fleet_sizes {
            for &policy in &s.policies {
                jobs.push((si, seed, fleet, policy));
            }
        }
    }
    let results: Vec<Option<anyhow::Result<MetricsReport<f64>>>> = jobs
        .par_iter()
        .map(|&(si, seed, fleet, policy)| {
            if failed.load(Ordering::SeqCst) {
                return None;
            }
            let Some(Ok((sc, plans))) = &prepared[si] else { return None };
            let sc = sc.with_fleet_prefix(fleet);
            let name = format!("runs/{policy}_f{fleet}_s{seed}.jsonl");
            Some(note(&failed, run_one(&sc, plans, policy, out, &name)))
        })
        .collect();

    let mut rows = Vec::new();
    let mut done = 0;
    let mut first_err = prepared.into_iter().flatten().find_map(|r| r.err());
    for (&(_, seed, fleet, policy), r) in jobs.iter().zip(results) {
        match r {
            Some(Ok(rep)) => {
                rows.extend(tidy(policy, fleet, seed, &rep));
                done += 1;
            }
            Some(Err(e)) => {
                first_err.get_or_insert(e);
            }
            None => {}
        }
    }
    let complete = first_err.is_none();
    out.write_bytes("metrics.csv", &tidy_csv(&rows)?)?;
    out.write_json("summary.json", &SweepSummary { complete, runs: done, summary: summarize(&rows) })?;
    match first_err {
        None => Ok(()),
        Some(e) => {
            out.write_text(INCOMPLETE, &format!("{done} of {} runs finished\n{e:#}\n", jobs.len()))?;
            Err(e.context("sweep aborted; partial results written"))
        }
    }
}
