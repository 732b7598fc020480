use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::Policy;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One line of the simulation event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent<F> {
    Start {
        time_s: F,
        policy: Policy,
        base_stations: usize,
        fleet_size: usize,
        seed: u64,
    },
    Overload {
        time_s: F,
        bs_id: u32,
    },
    Skipped {
        time_s: F,
        bs_id: u32,
        reason: String,
    },
    Learned {
        time_s: F,
        bs_id: u32,
        demand_bits: F,
        subareas: usize,
    },
    ChannelGrant {
        time_s: F,
        bs_id: u32,
        rounds: usize,
    },
    Broadcast {
        time_s: F,
        bs_id: u32,
        subarea: usize,
        demand_bits: F,
        service_point: [F; 3],
        kappa: F,
        gamma: F,
        /// `(uav id, type)` of every UAV that replied.
        responses: Vec<(u32, F)>,
    },
    Engage {
        time_s: F,
        bs_id: u32,
        subarea: usize,
        uav_id: u32,
        detect_s: F,
        travel_s: F,
        /// Accepted type under the contract; absent for baseline policies.
        theta: Option<F>,
        gamma: Option<F>,
        demand_bits: F,
        power_w: F,
        capacity_bps: F,
        energy_j: F,
        payment: F,
        uav_utility: F,
        bs_utility: F,
        delay_s: F,
    },
    Unserved {
        time_s: F,
        bs_id: u32,
        subarea: usize,
        attempt: u32,
    },
    ChannelRelease {
        time_s: F,
        bs_id: u32,
    },
    Recharge {
        time_s: F,
        uav_id: u32,
        station: usize,
        ready_s: F,
    },
    End {
        time_s: F,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<F> {
    pub policy: Option<Policy>,
    pub base_stations: usize,
    pub fleet_size: usize,
    pub overload_events: usize,
    pub engagements: usize,
    pub unserved: usize,
    pub total_capacity_bps: F,
    pub total_energy_j: F,
    pub avg_energy_per_uav_j: F,
    pub avg_service_delay_s: F,
    pub avg_bs_utility: F,
    pub total_uav_utility: F,
}

impl<F: Scalar> MetricsReport<F> {
    pub fn zero() -> Self {
        Self {
            policy: None,
            base_stations: 0,
            fleet_size: 0,
            overload_events: 0,
            engagements: 0,
            unserved: 0,
            total_capacity_bps: F::zero(),
            total_energy_j: F::zero(),
            avg_energy_per_uav_j: F::zero(),
            avg_service_delay_s: F::zero(),
            avg_bs_utility: F::zero(),
            total_uav_utility: F::zero(),
        }
    }

    /// Named metric values in a fixed order, for tabular output.
    pub fn metrics(&self) -> [(&'static str, F); 9] {
        [
            ("total_capacity_bps", self.total_capacity_bps),
            ("avg_energy_per_uav_j", self.avg_energy_per_uav_j),
            ("avg_service_delay_s", self.avg_service_delay_s),
            ("avg_bs_utility", self.avg_bs_utility),
            ("total_uav_utility", self.total_uav_utility),
            ("total_energy_j", self.total_energy_j),
            ("overload_events", F::lit(self.overload_events as f64)),
            ("engagements", F::lit(self.engagements as f64)),
            ("unserved", F::lit(self.unserved as f64)),
        ]
    }
}

/// Aggregates a complete event log.
///
/// Energy and delay are averaged over engagements; BS utility is summed
/// per BS and averaged over all base stations in the scenario.
pub fn collect_metrics<F: Scalar>(log: &[LogEvent<F>]) -> Result<MetricsReport<F>> {
    let mut r = MetricsReport::zero();
    let Some(first) = log.first() else {
        return Ok(r);
    };
    let LogEvent::Start { policy, base_stations, fleet_size, .. } = first else {
        return Err(Error::TruncatedLog("log does not begin with a start event".into()));
    };
    if !matches!(log.last(), Some(LogEvent::End { .. })) {
        return Err(Error::TruncatedLog("log has no end event".into()));
    }
    r.policy = Some(*policy);
    r.base_stations = *base_stations;
    r.fleet_size = *fleet_size;
    let mut delay = F::zero();
    let mut bs_total = F::zero();
    for e in log {
        match e {
            LogEvent::Overload { .. } => r.overload_events += 1,
            LogEvent::Unserved { .. } => r.unserved += 1,
            LogEvent::Engage { capacity_bps, energy_j, uav_utility, bs_utility, delay_s, .. } => {
                r.engagements += 1;
                r.total_capacity_bps = r.total_capacity_bps + *capacity_bps;
                r.total_energy_j = r.total_energy_j + *energy_j;
                r.total_uav_utility = r.total_uav_utility + *uav_utility;
                bs_total = bs_total + *bs_utility;
                delay = delay + *delay_s;
            }
            _ => {}
        }
    }
    if r.engagements > 0 {
        let n = F::lit(r.engagements as f64);
        r.avg_energy_per_uav_j = r.total_energy_j / n;
        r.avg_service_delay_s = delay / n;
    }
    if r.base_stations > 0 {
        r.avg_bs_utility = bs_total / F::lit(r.base_stations as f64);
    }
    Ok(r)
}

/// Writes one JSON object per line.
pub fn write_log<F: Scalar + Serialize>(log: &[LogEvent<F>], mut out: impl Write) -> Result<()> {
    for e in log {
        let line = serde_json::to_string(e).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<event log>", e))?;
    }
    Ok(())
}

pub fn read_log<F: Scalar + DeserializeOwned>(input: impl BufRead) -> Result<Vec<LogEvent<F>>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<event log>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}
