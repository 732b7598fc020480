use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sub_seed;
use crate::contract::UavProfile;
use crate::error::{Error, Result};
use crate::geom::{Region, SpatialPoint};
use crate::learning::TransmissionRecord;
use crate::scalar::Scalar;
use crate::sim::{BaseStation, ModelParams, Scenario, SimConfig};

const TRAFFIC: u64 = 1;
const FLEET: u64 = 2;

/// Recipe for a synthetic city: a square grid of base stations, each with
/// uniformly spread background UEs and, from a random onset on, a cluster
/// of heavier hotspot UEs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub map_m: f64,
    /// Base stations per side.
    pub bs_grid: usize,
    pub cell_m: f64,
    pub background_ues: usize,
    pub hotspot_ues: usize,
    pub hotspot_clusters: usize,
    pub cluster_sigma_min_m: f64,
    pub cluster_sigma_max_m: f64,
    /// Probability that a UE transmits in a given one-second slot.
    pub activity: f64,
    pub background_rate_bps: f64,
    /// Target ratio of hotspot per-UE rate to area-average per-UE rate.
    pub rate_ratio: f64,
    /// BS capacity as a multiple of its expected background load.
    pub capacity_factor: f64,
    pub horizon_s: f64,
    pub fleet_size: usize,
    /// UAVs start this far (at most) from a recharge station.
    pub fleet_spread_m: f64,
    /// Initial UAV energy is uniform in `[min_charge, 1]` of a full battery.
    pub min_charge: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            map_m: 2000.0,
            bs_grid: 2,
            cell_m: 20.0,
            background_ues: 170,
            hotspot_ues: 30,
            hotspot_clusters: 1,
            cluster_sigma_min_m: 20.0,
            cluster_sigma_max_m: 50.0,
            activity: 0.25,
            background_rate_bps: 1.5e7,
            rate_ratio: 3.0,
            capacity_factor: 1.1,
            horizon_s: 3600.0,
            fleet_size: 6,
            fleet_spread_m: 150.0,
            min_charge: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Hotspot UE rate over background UE rate that yields `rate_ratio`.
    pub fn hotspot_multiplier(&self) -> f64 {
        let f = self.hotspot_ues as f64 / (self.hotspot_ues + self.background_ues) as f64;
        self.rate_ratio * (1.0 - f) / (1.0 - self.rate_ratio * f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("synthetic spec: {m}")));
        if !(self.map_m > 0.0 && self.bs_grid >= 1 && self.cell_m > 0.0 && self.cell_m * 4.0 <= self.map_m / self.bs_grid as f64) {
            return bad("map, grid and cell sizes are inconsistent");
        }
        if self.hotspot_ues > 0 && self.hotspot_clusters == 0 {
            return bad("hotspot UEs need at least one cluster");
        }
        if !(self.cluster_sigma_min_m > 0.0 && self.cluster_sigma_max_m >= self.cluster_sigma_min_m) {
            return bad("cluster sigma range is empty");
        }
        if !(self.activity > 0.0 && self.activity <= 1.0 && self.background_rate_bps > 0.0 && self.capacity_factor > 0.0) {
            return bad("activity, rate and capacity factor must be positive");
        }
        let f = self.hotspot_ues as f64 / (self.hotspot_ues + self.background_ues).max(1) as f64;
        if !(self.rate_ratio > 0.0 && self.rate_ratio * f < 1.0) || self.background_ues == 0 {
            return bad("rate ratio must satisfy 0 < ratio < total UEs / hotspot UEs");
        }
        if !(self.horizon_s > 0.0 && (0.0..=1.0).contains(&self.min_charge) && self.fleet_spread_m >= 0.0) {
            return bad("horizon, charge range or fleet spread out of range");
        }
        Ok(())
    }
}

/// What generated the traffic of one BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsTruth<F> {
    pub bs_id: u32,
    pub onset_s: F,
    pub cluster_centers: Vec<[F; 2]>,
    pub cluster_sigmas_m: Vec<F>,
    pub hotspot_ue_positions: Vec<[F; 2]>,
    pub background_ue_positions: Vec<[F; 2]>,
    pub hotspot_rate_bps: F,
    pub background_rate_bps: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct SyntheticScenario<F> {
    pub spec: SyntheticSpec,
    pub scenario: Scenario<F>,
    pub truth: Vec<BsTruth<F>>,
}

fn uniform_in<R: Rng>(rng: &mut R, lo: [f64; 2], size: f64) -> [f64; 2] {
    [lo[0] + rng.random::<f64>() * size, lo[1] + rng.random::<f64>() * size]
}

fn clamp_into(p: [f64; 2], lo: [f64; 2], size: f64) -> [f64; 2] {
    let e = size * 1e-9;
    [p[0].clamp(lo[0] + e, lo[0] + size - e), p[1].clamp(lo[1] + e, lo[1] + size - e)]
}

fn lit2<F: Scalar>(p: [f64; 2]) -> [F; 2] {
    [F::lit(p[0]), F::lit(p[1])]
}

/// Builds a synthetic scenario with default module parameters.
pub fn synthetic_scenario<F: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticScenario<F>> {
    synthetic_scenario_with(spec, &ModelParams::default())
}

/// Builds a synthetic scenario under `params`. The horizon comes from `spec`.
pub fn synthetic_scenario_with<F: Scalar>(spec: &SyntheticSpec, params: &ModelParams<F>) -> Result<SyntheticScenario<F>> {
    spec.validate()?;
    let learning = params.learning;
    let sim = SimConfig::<F> { horizon_s: F::lit(spec.horizon_s), ..params.sim };
    let nx = (spec.map_m / spec.cell_m).round() as usize;
    let per_side = nx / spec.bs_grid;
    let grid = Region::<F>::full(F::zero(), F::zero(), F::lit(spec.map_m / nx as f64), nx, nx)?;
    let hold = (learning.learn_window_s + learning.service_interval_s).as_f64();
    let onset_hi = (spec.horizon_s - hold - 120.0).max(120.0);
    let multiplier = spec.hotspot_multiplier();
    let hot_rate = spec.background_rate_bps * multiplier;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut base_stations = Vec::new();
    let mut truth = Vec::new();
    for by in 0..spec.bs_grid {
        for bx in 0..spec.bs_grid {
            let id = (by * spec.bs_grid + bx) as u32;
            let cells: Vec<(usize, usize)> = (0..nx)
                .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
                .filter(|&(ix, iy)| {
                    (ix / per_side).min(spec.bs_grid - 1) == bx && (iy / per_side).min(spec.bs_grid - 1) == by
                })
                .collect();
            let region = grid.from_cells(&cells);
            let (x0, y0, x1, _) = region.cropped()?.grid_bounds();
            let (lo, size) = ([x0.as_f64(), y0.as_f64()], (x1 - x0).as_f64());

            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(sub_seed(spec.seed, TRAFFIC), u64::from(id)));
            let onset = if onset_hi > 120.0 { rng.random_range(120.0..onset_hi) } else { 120.0 }.round();
            let margin = (size * 0.2).min(200.0);
            let centers: Vec<[f64; 2]> = (0..spec.hotspot_clusters)
                .map(|_| uniform_in(&mut rng, [lo[0] + margin, lo[1] + margin], size - 2.0 * margin))
                .collect();
            let sigmas: Vec<f64> = (0..spec.hotspot_clusters)
                .map(|_| rng.random_range(spec.cluster_sigma_min_m..=spec.cluster_sigma_max_m))
                .collect();
            let background: Vec<[f64; 2]> = (0..spec.background_ues).map(|_| uniform_in(&mut rng, lo, size)).collect();
            let hotspot: Vec<[f64; 2]> = (0..spec.hotspot_ues)
                .map(|i| {
                    let c = i % spec.hotspot_clusters;
                    let p = [
                        centers[c][0] + sigmas[c] * unit.sample(&mut rng),
                        centers[c][1] + sigmas[c] * unit.sample(&mut rng),
                    ];
                    clamp_into(p, lo, size)
                })
                .collect();

            let bg_loc: Vec<[F; 2]> = background.iter().map(|&p| lit2(p)).collect();
            let hot_loc: Vec<[F; 2]> = hotspot.iter().map(|&p| lit2(p)).collect();
            let (bg_rate, hs_rate) = (F::lit(spec.background_rate_bps), F::lit(hot_rate));
            let mut records = Vec::new();
            for t in 0..spec.horizon_s.ceil() as usize {
                let tf = t as f64;
                let time_s = F::lit(tf);
                for &location in &bg_loc {
                    if rng.random::<f64>() < spec.activity {
                        records.push(TransmissionRecord { rate_bps: bg_rate, location, time_s });
                    }
                }
                if tf >= onset {
                    for &location in &hot_loc {
                        if rng.random::<f64>() < spec.activity {
                            records.push(TransmissionRecord { rate_bps: hs_rate, location, time_s });
                        }
                    }
                }
            }
            let capacity = spec.capacity_factor * spec.background_ues as f64 * spec.activity * spec.background_rate_bps;
            base_stations.push(BaseStation {
                id,
                position: lit2([lo[0] + size / 2.0, lo[1] + size / 2.0]),
                region,
                capacity_bps: F::lit(capacity),
                records,
            });
            truth.push(BsTruth {
                bs_id: id,
                onset_s: F::lit(onset),
                cluster_centers: centers.into_iter().map(lit2).collect(),
                cluster_sigmas_m: sigmas.into_iter().map(F::lit).collect(),
                hotspot_ue_positions: hot_loc,
                background_ue_positions: bg_loc,
                hotspot_rate_bps: hs_rate,
                background_rate_bps: bg_rate,
            });
        }
    }

    let stations: Vec<[F; 2]> = base_stations.iter().map(|b| b.position).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, FLEET));
    let battery = sim.battery_j.as_f64();
    let fleet = (0..spec.fleet_size)
        .map(|_| {
            let s = stations[rng.random_range(0..stations.len())];
            let r = spec.fleet_spread_m * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let p = [
                (s[0].as_f64() + r * a.cos()).clamp(0.0, spec.map_m),
                (s[1].as_f64() + r * a.sin()).clamp(0.0, spec.map_m),
            ];
            UavProfile {
                position: SpatialPoint::ground(F::lit(p[0]), F::lit(p[1])),
                speed_m_s: F::lit(5.0),
                energy_j: F::lit(battery * rng.random_range(spec.min_charge..=1.0)),
                busy_until_s: F::zero(),
            }
        })
        .collect();

    let scenario = Scenario {
        base_stations,
        fleet,
        recharge_stations: stations,
        econ: params.econ,
        channel: params.channel,
        learning,
        placement: params.placement,
        sim,
        seed: spec.seed,
    };
    scenario.validate()?;
    Ok(SyntheticScenario { spec: *spec, scenario, truth })
}

/// Per-UE rate of hotspot UEs over per-UE rate of all UEs, measured on the
/// records after hotspot onset.
pub fn measured_rate_ratio<F: Scalar>(bs: &BaseStation<F>, truth: &BsTruth<F>) -> Option<F> {
    let key = |p: &[F; 2]| (p[0].as_f64().to_bits(), p[1].as_f64().to_bits());
    let hot: HashSet<_> = truth.hotspot_ue_positions.iter().map(key).collect();
    let (mut hot_bits, mut all_bits) = (F::zero(), F::zero());
    for r in bs.records.iter().filter(|r| r.time_s >= truth.onset_s) {
        all_bits = all_bits + r.rate_bps;
        if hot.contains(&key(&r.location)) {
            hot_bits = hot_bits + r.rate_bps;
        }
    }
    let n_hot = F::lit(truth.hotspot_ue_positions.len() as f64);
    let n_all = n_hot + F::lit(truth.background_ue_positions.len() as f64);
    (hot_bits > F::zero() && n_hot > F::zero()).then(|| (hot_bits / n_hot) / (all_bits / n_all))
}
