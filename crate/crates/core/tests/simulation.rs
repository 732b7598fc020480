use std::collections::BTreeMap;
use std::sync::OnceLock;

use uavsim_core::contract::{build_menu, verify_ic, verify_ir};
use uavsim_core::geom::SpatialPoint;
use uavsim_core::ingest::{synthetic_scenario, SyntheticSpec};
use uavsim_core::sim::{collect_metrics, prepare_plans, run_with_plans, write_log, EventPlan, LogEvent, Policy, Scenario, SimOutput};

struct Fixture {
    scenario: Scenario<f64>,
    plans: Vec<EventPlan<f64>>,
    runs: BTreeMap<Policy, SimOutput<f64>>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = SyntheticSpec { bs_grid: 2, horizon_s: 2400.0, fleet_size: 5, seed: 21, ..SyntheticSpec::default() };
        let scenario = synthetic_scenario::<f64>(&spec).unwrap().scenario;
        let plans = prepare_plans(&scenario).unwrap();
        let runs = Policy::ALL.iter().map(|&p| (p, run_with_plans(&scenario, &plans, p).unwrap())).collect();
        Fixture { scenario, plans, runs }
    })
}

fn engagements(log: &[LogEvent<f64>]) -> Vec<&LogEvent<f64>> {
    log.iter().filter(|e| matches!(e, LogEvent::Engage { .. })).collect()
}

#[test]
fn there_is_something_to_simulate() {
    let f = fixture();
    assert!(!f.plans.is_empty());
    for out in f.runs.values() {
        assert!(out.report.engagements > 0, "{:?}", out.report);
    }
}

#[test]
fn first_predictive_engagement_matches_hand_trace() {
    let f = fixture();
    let l = &f.scenario.learning;
    let log = &f.runs[&Policy::Predictive].log;
    let Some(LogEvent::Engage { time_s, uav_id, detect_s, travel_s, delay_s, subarea, bs_id, .. }) =
        log.iter().find(|e| matches!(e, LogEvent::Engage { .. }))
    else {
        panic!("no engagement");
    };
    // nothing holds the channel before the first grant and no UAV has moved yet
    let first_grant = log.iter().find_map(|e| match e {
        LogEvent::ChannelGrant { time_s, .. } => Some(*time_s),
        _ => None,
    });
    if first_grant == Some(detect_s + l.learn_window_s) && *time_s == detect_s + l.learn_window_s + *subarea as f64 {
        let uav = &f.scenario.fleet[*uav_id as usize];
        let plan = f.plans.iter().find(|p| p.bs_id == *bs_id && p.detect_s == *detect_s).unwrap();
        let uavsim_core::sim::PlanOutcome::Ready { predictive, .. } = &plan.outcome else { panic!() };
        let sp: SpatialPoint<f64> = predictive.subareas[*subarea].service_point;
        let expect = uav.position.distance(&sp) / uav.speed_m_s;
        assert!((travel_s - expect).abs() < 1e-9);
    }
    assert!((delay_s - (time_s - detect_s + travel_s)).abs() < 1e-9);
    assert!(*delay_s >= l.learn_window_s);
}

#[test]
fn baselines_act_at_detection() {
    let f = fixture();
    for p in [Policy::Closest, Policy::MaxEnergy] {
        for e in engagements(&f.runs[&p].log) {
            let LogEvent::Engage { time_s, detect_s, travel_s, delay_s, theta, .. } = e else { unreachable!() };
            assert!(theta.is_none());
            assert!(*time_s >= *detect_s);
            assert!((delay_s - (time_s - detect_s + travel_s)).abs() < 1e-9);
        }
    }
}

#[test]
fn empty_fleet_engages_nobody() {
    let f = fixture();
    let sc = f.scenario.with_fleet_prefix(0);
    for p in Policy::ALL {
        let out = run_with_plans(&sc, &f.plans, p).unwrap();
        assert_eq!(out.report.engagements, 0);
        assert_eq!(out.report.total_capacity_bps, 0.0);
        assert!(out.report.unserved > 0);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let f = fixture();
    for p in Policy::ALL {
        let again = run_with_plans(&f.scenario, &f.plans, p).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_log(&f.runs[&p].log, &mut a).unwrap();
        write_log(&again.log, &mut b).unwrap();
        assert_eq!(a, b);
    }
    assert_eq!(prepare_plans(&f.scenario).unwrap(), f.plans);
}

#[test]
fn uavs_never_serve_two_requests_at_once() {
    let f = fixture();
    let big_t = f.scenario.learning.service_interval_s;
    for out in f.runs.values() {
        let mut busy: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
        for e in &out.log {
            match e {
                LogEvent::Engage { time_s, uav_id, .. } => busy.entry(*uav_id).or_default().push((*time_s, time_s + big_t)),
                LogEvent::Recharge { time_s, uav_id, ready_s, .. } => busy.entry(*uav_id).or_default().push((*time_s, *ready_s)),
                _ => {}
            }
        }
        for spans in busy.values_mut() {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                assert!(w[1].0 >= w[0].1 - 1e-9, "overlap {:?}", w);
            }
        }
    }
}

#[test]
fn energy_is_conserved() {
    let f = fixture();
    let battery = f.scenario.sim.battery_j;
    for out in f.runs.values() {
        let mut energy: Vec<f64> = f.scenario.fleet.iter().map(|u| u.energy_j).collect();
        for e in &out.log {
            match e {
                LogEvent::Engage { uav_id, energy_j, .. } => {
                    let left = &mut energy[*uav_id as usize];
                    assert!(*energy_j <= *left + 1e-6, "UAV {uav_id} spends {energy_j} with {left}");
                    *left -= energy_j;
                }
                LogEvent::Recharge { uav_id, .. } => energy[*uav_id as usize] = battery,
                _ => {}
            }
        }
    }
}

#[test]
fn transmit_power_within_limits() {
    let f = fixture();
    let p_max = f.scenario.econ.p_max_w;
    for out in f.runs.values() {
        for e in engagements(&out.log) {
            let LogEvent::Engage { power_w, .. } = e else { unreachable!() };
            assert!(*power_w > 0.0 && *power_w <= p_max + 1e-12);
        }
    }
}

#[test]
fn broadcast_menus_are_incentive_compatible_and_rational() {
    let f = fixture();
    let l = &f.scenario.learning;
    let mut seen = 0;
    for e in &f.runs[&Policy::Predictive].log {
        if let LogEvent::Broadcast { demand_bits, gamma, .. } = e {
            let menu = build_menu(*demand_bits, l.service_interval_s, &f.scenario.econ, l.travel_fraction).unwrap();
            assert!((menu.gamma - gamma).abs() <= 1e-12 * gamma);
            assert!(verify_ic(&menu, 200).unwrap().passed);
            assert!(verify_ir(&menu, &f.scenario.econ, 200).unwrap().passed);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn logged_utilities_recompute() {
    let f = fixture();
    let econ = &f.scenario.econ;
    let l = &f.scenario.learning;
    for out in f.runs.values() {
        for e in engagements(&out.log) {
            let LogEvent::Engage { travel_s, power_w, capacity_bps, energy_j, payment, uav_utility, bs_utility, theta, gamma, demand_bits, .. } = e
            else {
                unreachable!()
            };
            let t = l.service_interval_s;
            let energy = econ.move_power_w * travel_s + (econ.hover_power_w + power_w) * (t - travel_s);
            assert!((energy - energy_j).abs() <= 1e-9 * energy);
            assert!((uav_utility - (payment - econ.energy_cost_per_j * energy_j)).abs() <= 1e-6 * payment.abs().max(1.0));
            let revenue = econ.ue_payment_per_bit * l.efficiency * (t - travel_s) * capacity_bps;
            assert!((bs_utility - (revenue - payment)).abs() <= 1e-6 * revenue.max(1.0));
            if let (Some(theta), Some(gamma)) = (theta, gamma) {
                assert!((payment - gamma * theta * demand_bits).abs() <= 1e-9 * payment);
                assert!((power_w - gamma * theta * theta / 2.0).abs() <= 1e-9 * power_w);
            }
        }
    }
}

#[test]
fn report_matches_log() {
    let f = fixture();
    for out in f.runs.values() {
        assert_eq!(collect_metrics(&out.log).unwrap(), out.report);
        let n = engagements(&out.log).len();
        assert_eq!(out.report.engagements, n);
    }
}

#[test]
fn selected_uav_has_the_smallest_type() {
    let f = fixture();
    let log = &f.runs[&Policy::Predictive].log;
    for (i, e) in log.iter().enumerate() {
        let LogEvent::Broadcast { responses, bs_id, subarea, .. } = e else { continue };
        let engaged = log[i + 1..].iter().find_map(|x| match x {
            LogEvent::Engage { bs_id: b, subarea: s, uav_id, theta, .. } if b == bs_id && s == subarea => Some((*uav_id, theta.unwrap())),
            _ => None,
        });
        if let Some((uav, theta)) = engaged {
            if let Some(&(_, th)) = responses.iter().find(|r| r.0 == uav) {
                assert_eq!(th, theta);
                assert!(responses.iter().all(|r| r.1 >= theta || r.0 == uav));
            }
        }
    }
}
