use serde::{Deserialize, Serialize};

use super::{BaseStation, Scenario};
use crate::channel::{normalize_density, uniform_density};
use crate::contract::{build_menu, ContractMenu};
use crate::error::{Error, Result};
use crate::geom::{Region, SpatialPoint};
use crate::learning::{hotspot_ue_count, learn_demand, split_hotspot, surface_values, total_average_rate, DemandEstimate};
use crate::mixture::FitOptions;
use crate::placement::{max_capacity_point, min_required_power, optimal_service_point, ServiceTarget};
use crate::scalar::Scalar;

/// Times at which the rolling offered load of `bs` first exceeds its
/// capacity. After a detection the BS stays busy for one learning window
/// plus one service interval before it can detect again.
pub fn detect_overloads<F: Scalar>(bs: &BaseStation<F>, scenario: &Scenario<F>) -> Vec<F> {
    let s = &scenario.sim;
    let l = &scenario.learning;
    let horizon = s.horizon_s.ceil().to_usize().unwrap_or(0);
    let w = s.overload_window_s.round().to_usize().unwrap_or(1).max(1);
    if horizon < w {
        return Vec::new();
    }
    let mut bins = vec![F::zero(); horizon];
    for r in &bs.records {
        if r.time_s >= F::zero() {
            if let Some(i) = r.time_s.floor().to_usize().filter(|&i| i < horizon) {
                bins[i] = bins[i] + r.rate_bps * l.slot_s;
            }
        }
    }
    let limit = bs.capacity_bps * F::lit(w as f64);
    let hold = l.learn_window_s + l.service_interval_s;
    let mut out = Vec::new();
    let mut next = F::zero();
    let mut sum: F = bins[..w].iter().copied().sum();
    for end in w..=horizon {
        if end > w {
            sum = sum + bins[end - 1] - bins[end - 1 - w];
        }
        let t = F::lit(end as f64);
        if t >= next && sum > limit && t + l.learn_window_s <= s.horizon_s {
            out.push(t);
            next = t + hold;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubareaPlan<F> {
    pub region: Region<F>,
    /// Normalized UE density over `region`, in cell order.
    pub density: Vec<F>,
    pub demand_bits: F,
    pub service_point: SpatialPoint<F>,
    pub min_power_w: F,
    pub menu: ContractMenu<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictivePlan<F> {
    pub estimate: DemandEstimate<F>,
    pub subareas: Vec<SubareaPlan<F>>,
}

/// What an event-driven BS knows: the hotspot, the area-average rate per
/// UE and a rate-maximizing service point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePlan<F> {
    pub hotspot: Region<F>,
    pub density: Vec<F>,
    pub area_rate_per_ue_bps: F,
    pub demand_bits: F,
    pub service_point: SpatialPoint<F>,
    /// Power needed for `demand_bits` at the service point, if at most `p_max`.
    pub required_power_w: Option<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanOutcome<F> {
    Skipped(String),
    Ready { predictive: Box<PredictivePlan<F>>, baseline: Box<BaselinePlan<F>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPlan<F> {
    pub bs_id: u32,
    pub detect_s: F,
    pub outcome: PlanOutcome<F>,
}

fn skippable(e: &Error) -> bool {
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

fn region_density<F: Scalar>(est: &DemandEstimate<F>, region: &Region<F>) -> Result<Vec<F>> {
    let vals = surface_values(&est.density_model, region);
    normalize_density(region, &vals).or_else(|_| uniform_density(region))
}

fn plan_event<F: Scalar>(bs: &BaseStation<F>, detect_s: F, sc: &Scenario<F>) -> Result<PlanOutcome<F>> {
    let l = &sc.learning;
    let lo = bs.records.partition_point(|r| r.time_s < detect_s);
    let hi = bs.records.partition_point(|r| r.time_s < detect_s + l.learn_window_s);
    let window = &bs.records[lo..hi];
    let p_max = sc.econ.p_max_w;

    let mut est = learn_demand(window, &bs.region, sc.sim.traffic_components, l, &FitOptions::default())?;
    let capacity = |region: &Region<F>, dens: &[F]| -> Result<F> {
        Ok(max_capacity_point(region, dens, p_max, &sc.channel, &sc.placement)?.1)
    };
    est.subareas = split_hotspot(&est, &capacity, l)?;

    let mut subareas = Vec::with_capacity(est.subareas.len());
    for sub in &est.subareas {
        let density = region_density(&est, &sub.region)?;
        let target = ServiceTarget {
            demand_bits: sub.demand_bits,
            service_s: l.service_interval_s,
            eta: l.efficiency,
            p_max_w: p_max,
        };
        let placed = optimal_service_point(&sub.region, &density, &target, &sc.channel, &sc.placement)?;
        subareas.push(SubareaPlan {
            region: sub.region.clone(),
            density,
            demand_bits: sub.demand_bits,
            service_point: placed.service_point,
            min_power_w: placed.min_power_w,
            menu: build_menu(sub.demand_bits, l.service_interval_s, &sc.econ, l.travel_fraction)?,
        });
    }

    let q_area = hotspot_ue_count(window, &bs.region);
    let rho = if q_area > 0 {
        total_average_rate(window, l) / F::lit(q_area as f64)
    } else {
        F::zero()
    };
    let hot_density = region_density(&est, &est.hotspot)?;
    let demand_b = rho * F::lit(est.hotspot_ue_count as f64) * l.service_interval_s;
    let (point_b, _) = max_capacity_point(&est.hotspot, &hot_density, p_max, &sc.channel, &sc.placement)?;
    let target_b = ServiceTarget { demand_bits: demand_b, service_s: l.service_interval_s, eta: l.efficiency, p_max_w: p_max };
    let required = min_required_power(&point_b, &target_b, &est.hotspot, &hot_density, &sc.channel)?;
    let baseline = BaselinePlan {
        hotspot: est.hotspot.clone(),
        density: hot_density,
        area_rate_per_ue_bps: rho,
        demand_bits: demand_b,
        service_point: point_b,
        required_power_w: required,
    };
    Ok(PlanOutcome::Ready {
        predictive: Box::new(PredictivePlan { estimate: est, subareas }),
        baseline: Box::new(baseline),
    })
}

/// Learning and placement for a learning window of `bs` opening at
/// `detect_s`. Data-dependent failures become [`PlanOutcome::Skipped`].
pub fn plan_at<F: Scalar>(bs: &BaseStation<F>, detect_s: F, scenario: &Scenario<F>) -> Result<EventPlan<F>> {
    let outcome = match plan_event(bs, detect_s, scenario) {
        Ok(o) => o,
        Err(e) if skippable(&e) => PlanOutcome::Skipped(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(EventPlan { bs_id: bs.id, detect_s, outcome })
}

/// Overload events of every BS with their learning and placement results,
/// ordered by `(detection time, bs id)`. Plans depend only on the base
/// stations and the configuration, never on the fleet or the policy.
pub fn prepare_plans<F: Scalar>(scenario: &Scenario<F>) -> Result<Vec<EventPlan<F>>> {
    scenario.validate()?;
    let mut out = Vec::new();
    for bs in &scenario.base_stations {
        for t in detect_overloads(bs, scenario) {
            out.push(plan_at(bs, t, scenario)?);
        }
    }
    out.sort_by(|a, b| {
        a.detect_s
            .partial_cmp(&b.detect_s)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.bs_id.cmp(&b.bs_id))
    });
    Ok(out)
}
