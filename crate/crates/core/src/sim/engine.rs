use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::log::{collect_metrics, LogEvent, MetricsReport};
use super::plan::{prepare_plans, BaselinePlan, EventPlan, PlanOutcome, PredictivePlan};
use super::{BroadcastChannel, Policy, Scenario};
use crate::channel::CapacityProfile;
use crate::contract::{
    bs_utility, max_available_power, select_optimal_uav, travel_time, uav_type, uav_utility, OfferMenu, TypeResponse,
    UavProfile,
};
use crate::error::Result;
use crate::geom::{Region, SpatialPoint};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput<F> {
    pub report: MetricsReport<F>,
    pub log: Vec<LogEvent<F>>,
}

/// Prepares the event plans and runs one policy.
pub fn run_simulation<F: Scalar>(scenario: &Scenario<F>, policy: Policy) -> Result<SimOutput<F>> {
    let plans = prepare_plans(scenario)?;
    run_with_plans(scenario, &plans, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Detect,
    Request,
    Retry,
}

#[derive(Debug, Clone)]
struct Pending<F> {
    time: F,
    bs_id: u32,
    seq: u64,
    plan: usize,
    stage: Stage,
    attempt: u32,
    subareas: Vec<usize>,
}

impl<F: Scalar> PartialEq for Pending<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F: Scalar> Eq for Pending<F> {}
impl<F: Scalar> PartialOrd for Pending<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Scalar> Ord for Pending<F> {
    // reversed so the max-heap pops the earliest entry
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .as_f64()
            .total_cmp(&self.time.as_f64())
            .then(other.bs_id.cmp(&self.bs_id))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Engine<'a, F: Scalar> {
    sc: &'a Scenario<F>,
    plans: &'a [EventPlan<F>],
    policy: Policy,
    uavs: Vec<UavProfile<F>>,
    channel: BroadcastChannel<F>,
    queue: BinaryHeap<Pending<F>>,
    log: Vec<LogEvent<F>>,
    seq: u64,
    engagements: u64,
}

/// One engagement's physical outcome.
struct Service<F> {
    uav: usize,
    start_s: F,
    service_point: SpatialPoint<F>,
}

impl<'a, F: Scalar> Engine<'a, F> {
    fn push(&mut self, time: F, plan: usize, stage: Stage, attempt: u32, subareas: Vec<usize>) {
        self.seq += 1;
        let bs_id = self.plans[plan].bs_id;
        self.queue.push(Pending { time, bs_id, seq: self.seq, plan, stage, attempt, subareas });
    }

    fn relisten_threshold(&self) -> F {
        let l = &self.sc.learning;
        let e = &self.sc.econ;
        let t_est = l.travel_fraction * l.service_interval_s;
        e.move_power_w * t_est + (e.hover_power_w + self.sc.sim.reserve_power_w) * (l.service_interval_s - t_est)
    }

    /// Sends UAV `j` to recharge if it cannot support another interval.
    fn energy_gate(&mut self, j: usize, now: F) {
        if self.uavs[j].energy_j >= self.relisten_threshold() {
            return;
        }
        let here = self.uavs[j].position;
        let (station, dist) = self
            .sc
            .recharge_stations
            .iter()
            .enumerate()
            .map(|(i, s)| (i, here.distance(&SpatialPoint::from_xy(*s, F::zero()))))
            .fold((0, F::infinity()), |b, c| if c.1 < b.1 { c } else { b });
        let u = &mut self.uavs[j];
        let ready = now + dist / u.speed_m_s + self.sc.sim.recharge_s;
        u.position = SpatialPoint::from_xy(self.sc.recharge_stations[station], F::zero());
        u.energy_j = self.sc.sim.battery_j;
        u.busy_until_s = ready;
        self.log.push(LogEvent::Recharge { time_s: now, uav_id: j as u32, station, ready_s: ready });
    }

    fn realized_capacity(&mut self, point: &SpatialPoint<F>, region: &Region<F>, density: &[F], power: F, travel: F) -> Result<F> {
        let profile = CapacityProfile::new(point, region, density, &self.sc.channel)?;
        self.engagements += 1;
        if !self.sc.sim.stochastic_capacity {
            return Ok(profile.capacity(power));
        }
        let seed = self.sc.seed ^ self.engagements.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = &self.sc.channel;
        let los = Normal::new(0.0, ch.excess_loss_los_db.std_db.as_f64()).map_err(|e| crate::Error::InvalidParameter(e.to_string()))?;
        let nlos = Normal::new(0.0, ch.excess_loss_nlos_db.std_db.as_f64()).map_err(|e| crate::Error::InvalidParameter(e.to_string()))?;
        let slots = ((self.sc.learning.service_interval_s - travel) / self.sc.learning.slot_s)
            .floor()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let mut sum = F::zero();
        for _ in 0..slots {
            let a = F::lit(los.sample(&mut rng));
            let b = F::lit(nlos.sample(&mut rng));
            sum = sum + profile.capacity_with_shadowing(power, a, b);
        }
        Ok(sum / F::lit(slots as f64))
    }

    fn finish(&mut self, s: &Service<F>, energy: F) {
        let end = s.start_s + self.sc.learning.service_interval_s;
        let u = &mut self.uavs[s.uav];
        u.energy_j = (u.energy_j - energy).max(F::zero());
        u.position = s.service_point;
        u.busy_until_s = end;
        self.energy_gate(s.uav, end);
    }

    fn engagement_energy(&self, travel: F, power: F) -> F {
        let e = &self.sc.econ;
        e.move_power_w * travel + (e.hover_power_w + power) * (self.sc.learning.service_interval_s - travel)
    }

    fn predictive_request(&mut self, p: &Pending<F>, plan: &PredictivePlan<F>, detect_s: F) -> Result<()> {
        let l = self.sc.learning;
        let econ = self.sc.econ;
        let big_t = l.service_interval_s;
        self.channel.request(p.bs_id, p.time);
        let (bs, grant) = self.channel.acquire_next().expect("channel is free between requests");
        self.log.push(LogEvent::ChannelGrant { time_s: grant, bs_id: bs, rounds: p.subareas.len() });

        let mut unserved = Vec::new();
        for (round, &n) in p.subareas.iter().enumerate() {
            let b = grant + self.sc.sim.association_round_s * F::lit(round as f64);
            let sp = &plan.subareas[n];
            let menu = sp.menu;
            let mut responses = Vec::new();
            for (j, u) in self.uavs.iter().enumerate() {
                if u.busy_until_s > b {
                    continue;
                }
                let t = travel_time(u, &sp.service_point);
                let Ok(ty) = uav_type(sp.demand_bits, big_t, t, &econ) else {
                    continue;
                };
                let p_avail = max_available_power(u, t, big_t, &econ);
                if t <= l.travel_fraction * big_t && p_avail >= menu.power(ty.theta) {
                    responses.push(TypeResponse { uav_id: j as u32, ty, max_power_w: p_avail });
                }
            }
            let x = sp.service_point;
            self.log.push(LogEvent::Broadcast {
                time_s: b,
                bs_id: bs,
                subarea: n,
                demand_bits: sp.demand_bits,
                service_point: [x.x, x.y, x.z],
                kappa: l.travel_fraction,
                gamma: menu.gamma,
                responses: responses.iter().map(|r| (r.uav_id, r.ty.theta)).collect(),
            });
            let Some(id) = select_optimal_uav(&responses, &menu, sp.min_power_w, &econ, l.travel_fraction) else {
                unserved.push(n);
                continue;
            };
            let r = *responses.iter().find(|r| r.uav_id == id).expect("selected UAV replied");
            let theta = r.ty.theta;
            let power = menu.power(theta);
            let travel = r.ty.travel_time_s;
            let capacity = self.realized_capacity(&x, &sp.region, &sp.density, power, travel)?;
            let energy = self.engagement_energy(travel, power);
            self.log.push(LogEvent::Engage {
                time_s: b,
                bs_id: bs,
                subarea: n,
                uav_id: id,
                detect_s,
                travel_s: travel,
                theta: Some(theta),
                gamma: Some(menu.gamma),
                demand_bits: sp.demand_bits,
                power_w: power,
                capacity_bps: capacity,
                energy_j: energy,
                payment: menu.unit_payment(theta) * menu.demand_bits,
                uav_utility: uav_utility(&menu, theta, &r.ty, &econ),
                bs_utility: bs_utility(&menu, theta, &r.ty, capacity, &econ, l.efficiency),
                delay_s: b + travel - detect_s,
            });
            let s = Service { uav: id as usize, start_s: b, service_point: x };
            self.finish(&s, energy);
        }
        let release = grant + self.sc.sim.association_round_s * F::lit(p.subareas.len() as f64);
        self.channel.release(bs, release)?;
        self.log.push(LogEvent::ChannelRelease { time_s: release, bs_id: bs });
        self.after_attempt(p, unserved, release);
        Ok(())
    }

    fn after_attempt(&mut self, p: &Pending<F>, unserved: Vec<usize>, now: F) {
        if unserved.is_empty() {
            return;
        }
        if p.attempt < self.sc.sim.max_retries {
            let stage = if self.policy == Policy::Predictive { Stage::Request } else { Stage::Retry };
            self.push(now + self.sc.sim.backoff_s, p.plan, stage, p.attempt + 1, unserved);
        } else {
            for n in unserved {
                self.log.push(LogEvent::Unserved { time_s: now, bs_id: p.bs_id, subarea: n, attempt: p.attempt });
            }
        }
    }

    fn baseline_attempt(&mut self, p: &Pending<F>, plan: &BaselinePlan<F>, detect_s: F) -> Result<()> {
        let l = self.sc.learning;
        let econ = self.sc.econ;
        let big_t = l.service_interval_s;
        let x = plan.service_point;
        let mut best: Option<(usize, F, F, F)> = None; // (uav, key, travel, p_avail)
        for (j, u) in self.uavs.iter().enumerate() {
            if u.busy_until_s > p.time {
                continue;
            }
            let t = travel_time(u, &x);
            if t >= big_t {
                continue;
            }
            let p_avail = max_available_power(u, t, big_t, &econ);
            if !(p_avail > F::zero()) {
                continue;
            }
            let key = match self.policy {
                Policy::Closest => t,
                _ => -u.energy_j,
            };
            if best.is_none_or(|b| key < b.1) {
                best = Some((j, key, t, p_avail));
            }
        }
        let Some((j, _, travel, p_avail)) = best else {
            self.after_attempt(p, vec![0], p.time);
            return Ok(());
        };
        let power = plan.required_power_w.unwrap_or(econ.p_max_w).min(p_avail).min(econ.p_max_w);
        let capacity = self.realized_capacity(&x, &plan.hotspot, &plan.density, power, travel)?;
        let energy = self.engagement_energy(travel, power);
        let payment = econ.ue_payment_per_bit * plan.demand_bits;
        self.log.push(LogEvent::Engage {
            time_s: p.time,
            bs_id: p.bs_id,
            subarea: 0,
            uav_id: j as u32,
            detect_s,
            travel_s: travel,
            theta: None,
            gamma: None,
            demand_bits: plan.demand_bits,
            power_w: power,
            capacity_bps: capacity,
            energy_j: energy,
            payment,
            uav_utility: payment - econ.energy_cost_per_j * energy,
            bs_utility: econ.ue_payment_per_bit * l.efficiency * (big_t - travel) * capacity - payment,
            delay_s: p.time + travel - detect_s,
        });
        let s = Service { uav: j, start_s: p.time, service_point: x };
        self.finish(&s, energy);
        Ok(())
    }

    fn step(&mut self, p: Pending<F>) -> Result<()> {
        let plans = self.plans;
        let ev = &plans[p.plan];
        match (&ev.outcome, p.stage) {
            (PlanOutcome::Skipped(reason), _) => {
                self.log.push(LogEvent::Overload { time_s: p.time, bs_id: p.bs_id });
                self.log.push(LogEvent::Skipped { time_s: p.time, bs_id: p.bs_id, reason: reason.clone() });
            }
            (PlanOutcome::Ready { predictive, baseline }, Stage::Detect) => {
                self.log.push(LogEvent::Overload { time_s: p.time, bs_id: p.bs_id });
                if self.policy == Policy::Predictive {
                    let ready = p.time + self.sc.learning.learn_window_s;
                    self.log.push(LogEvent::Learned {
                        time_s: ready,
                        bs_id: p.bs_id,
                        demand_bits: predictive.estimate.demand_bits,
                        subareas: predictive.subareas.len(),
                    });
                    self.push(ready, p.plan, Stage::Request, 0, (0..predictive.subareas.len()).collect());
                } else {
                    self.baseline_attempt(&p, baseline, ev.detect_s)?;
                }
            }
            (PlanOutcome::Ready { predictive, .. }, Stage::Request) => {
                self.predictive_request(&p, predictive, ev.detect_s)?;
            }
            (PlanOutcome::Ready { baseline, .. }, Stage::Retry) => {
                self.baseline_attempt(&p, baseline, ev.detect_s)?;
            }
        }
        Ok(())
    }
}

/// Runs one policy over precomputed plans.
pub fn run_with_plans<F: Scalar>(scenario: &Scenario<F>, plans: &[EventPlan<F>], policy: Policy) -> Result<SimOutput<F>> {
    scenario.validate()?;
    let mut eng = Engine {
        sc: scenario,
        plans,
        policy,
        uavs: scenario.fleet.clone(),
        channel: BroadcastChannel::new(),
        queue: BinaryHeap::new(),
        log: vec![LogEvent::Start {
            time_s: F::zero(),
            policy,
            base_stations: scenario.base_stations.len(),
            fleet_size: scenario.fleet.len(),
            seed: scenario.seed,
        }],
        seq: 0,
        engagements: 0,
    };
    for j in 0..eng.uavs.len() {
        eng.energy_gate(j, F::zero());
    }
    for (i, ev) in plans.iter().enumerate() {
        eng.push(ev.detect_s, i, Stage::Detect, 0, Vec::new());
    }
    while let Some(p) = eng.queue.pop() {
        eng.step(p)?;
    }
    eng.log.push(LogEvent::End { time_s: scenario.sim.horizon_s });
    let report = collect_metrics(&eng.log)?;
    Ok(SimOutput { report, log: eng.log })
}
