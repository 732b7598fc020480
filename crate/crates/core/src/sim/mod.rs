//! Discrete-event simulation of overload handling with UAV offloading.

mod channel;
mod engine;
mod log;
mod plan;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::contract::{EconomicParams, UavProfile};
use crate::error::{Error, Result};
use crate::geom::Region;
use crate::learning::{LearningConfig, TransmissionRecord};
use crate::placement::PlacementConfig;
use crate::scalar::Scalar;

pub use channel::BroadcastChannel;
pub use engine::{run_simulation, run_with_plans, SimOutput};
pub use log::{collect_metrics, read_log, write_log, LogEvent, MetricsReport};
pub use plan::{detect_overloads, plan_at, prepare_plans, BaselinePlan, EventPlan, PlanOutcome, PredictivePlan, SubareaPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Predictive,
    Closest,
    MaxEnergy,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Predictive, Policy::Closest, Policy::MaxEnergy];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Predictive => "predictive",
            Policy::Closest => "closest",
            Policy::MaxEnergy => "max_energy",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "predictive" => Ok(Policy::Predictive),
            "closest" => Ok(Policy::Closest),
            "max_energy" | "max-energy" => Ok(Policy::MaxEnergy),
            other => Err(Error::InvalidParameter(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation<F> {
    pub id: u32,
    pub position: [F; 2],
    pub region: Region<F>,
    /// Offered load above which the BS counts as overloaded, bits/s.
    pub capacity_bps: F,
    /// Downlink records, in nondecreasing time order.
    pub records: Vec<TransmissionRecord<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct SimConfig<F> {
    pub horizon_s: F,
    /// Length of the rolling window that must exceed BS capacity.
    pub overload_window_s: F,
    pub backoff_s: F,
    pub max_retries: u32,
    pub association_round_s: F,
    pub recharge_s: F,
    pub battery_j: F,
    /// Transmit power a UAV keeps in reserve when deciding to re-listen.
    pub reserve_power_w: F,
    pub traffic_components: usize,
    /// Average the realized capacity over per-slot shadowing draws.
    pub stochastic_capacity: bool,
}

impl<F: Scalar> Default for SimConfig<F> {
    fn default() -> Self {
        Self {
            horizon_s: F::lit(3600.0),
            overload_window_s: F::lit(60.0),
            backoff_s: F::lit(60.0),
            max_retries: 3,
            association_round_s: F::one(),
            recharge_s: F::lit(600.0),
            battery_j: F::lit(90_000.0),
            reserve_power_w: F::one(),
            traffic_components: 8,
            stochastic_capacity: false,
        }
    }
}

/// Module parameters a scenario runs under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct ModelParams<F> {
    pub econ: EconomicParams<F>,
    pub channel: ChannelParams<F>,
    pub learning: LearningConfig<F>,
    pub placement: PlacementConfig<F>,
    pub sim: SimConfig<F>,
}

impl<F: Scalar> Default for ModelParams<F> {
    fn default() -> Self {
        Self {
            econ: EconomicParams::default(),
            channel: ChannelParams::default(),
            learning: LearningConfig::default(),
            placement: PlacementConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

impl<F: Scalar> ModelParams<F> {
    pub fn validate(&self) -> Result<()> {
        self.econ.validate()?;
        self.channel.validate()?;
        self.learning.validate()?;
        self.placement.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct Scenario<F> {
    pub base_stations: Vec<BaseStation<F>>,
    pub fleet: Vec<UavProfile<F>>,
    pub recharge_stations: Vec<[F; 2]>,
    pub econ: EconomicParams<F>,
    pub channel: ChannelParams<F>,
    pub learning: LearningConfig<F>,
    pub placement: PlacementConfig<F>,
    pub sim: SimConfig<F>,
    pub seed: u64,
}

impl<F: Scalar> Scenario<F> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedScenario(m));
        self.econ.validate()?;
        self.channel.validate()?;
        self.learning.validate()?;
        self.placement.validate()?;
        let s = &self.sim;
        if !(s.horizon_s > F::zero() && s.overload_window_s >= F::one() && s.association_round_s > F::zero()) {
            return bad("horizon, overload window and round length must be positive".into());
        }
        if !(s.backoff_s >= F::zero() && s.recharge_s >= F::zero() && s.battery_j > F::zero() && s.reserve_power_w >= F::zero()) {
            return bad("backoff, recharge time, battery and reserve must be nonnegative".into());
        }
        if s.traffic_components == 0 {
            return bad("traffic_components must be at least 1".into());
        }
        let Some(first) = self.base_stations.first() else {
            return bad("no base stations".into());
        };
        let mut ids: Vec<u32> = self.base_stations.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate BS id".into());
        }
        let mut cover = vec![false; first.region.mask.len()];
        for b in &self.base_stations {
            if !b.region.same_grid(&first.region) {
                return bad(format!("BS {} region uses a different grid", b.id));
            }
            if b.region.is_empty() {
                return bad(format!("BS {} has an empty service region", b.id));
            }
            if !(b.capacity_bps > F::zero()) {
                return bad(format!("BS {} capacity must be positive", b.id));
            }
            for (c, &m) in cover.iter_mut().zip(&b.region.mask) {
                if m && *c {
                    return bad(format!("BS {} region overlaps another", b.id));
                }
                *c |= m;
            }
            if b.records.windows(2).any(|w| w[1].time_s < w[0].time_s) {
                return bad(format!("BS {} records are not time ordered", b.id));
            }
            if b.records.iter().any(|r| !(r.rate_bps >= F::zero()) || !r.time_s.is_finite()) {
                return bad(format!("BS {} has an invalid record", b.id));
            }
        }
        if cover.iter().any(|c| !c) {
            return bad("service regions do not cover the map".into());
        }
        for (j, u) in self.fleet.iter().enumerate() {
            if !(u.speed_m_s > F::zero()) || !(u.energy_j >= F::zero()) || u.energy_j > s.battery_j {
                return bad(format!("UAV {j} has invalid speed or energy"));
            }
        }
        if !self.fleet.is_empty() && self.recharge_stations.is_empty() {
            return bad("fleet without recharge stations".into());
        }
        Ok(())
    }

    /// Same scenario with only the first `n` UAVs.
    pub fn with_fleet_prefix(&self, n: usize) -> Self {
        Self { fleet: self.fleet[..n.min(self.fleet.len())].to_vec(), ..self.clone() }
    }
}
