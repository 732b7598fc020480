use serde::Serialize;
use uavsim_core::contract::{
    build_menu, condition_b_margin, move_power_menu, scaled_uav_utility, travel_time_for_type, verify_ic, verify_ir,
    verify_ir_fixed_m, ContractMenu, IcReport, IrReport, OfferMenu,
};

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::Invariant;

#[derive(Debug, Serialize)]
struct AlternativeCheck {
    condition_b_margin: f64,
    ir: IrReport<f64>,
    ic: IcReport<f64>,
}

#[derive(Debug, Serialize)]
struct ContractReport {
    menu: ContractMenu<f64>,
    kappa: f64,
    /// Whether the parameters guarantee IR for every type (`m <= 2 p_h`).
    ir_guaranteed: bool,
    ic: IcReport<f64>,
    ir: IrReport<f64>,
    ir_hover_only: IrReport<f64>,
    condition_b_margin: f64,
    move_power_menu: AlternativeCheck,
}

pub fn run(cfg: &RunConfig, demand: Option<f64>, out: &OutDir) -> anyhow::Result<()> {
    let d = demand.unwrap_or(cfg.contract.demand_bits);
    let t = cfg.learning.service_interval_s;
    let kappa = cfg.learning.travel_fraction;
    let econ = &cfg.econ;
    let n = cfg.contract.grid_size;
    let menu = build_menu(d, t, econ, kappa)?;
    let alt = move_power_menu(d, t, econ, kappa)?;

    let report = ContractReport {
        menu,
        kappa,
        ir_guaranteed: econ.move_power_w <= 2.0 * econ.hover_power_w,
        ic: verify_ic(&menu, n)?,
        ir: verify_ir(&menu, econ, n)?,
        ir_hover_only: verify_ir_fixed_m(&menu, econ.hover_power_w, n)?,
        condition_b_margin: condition_b_margin(&menu, econ),
        move_power_menu: AlternativeCheck {
            condition_b_margin: condition_b_margin(&alt, econ),
            ir: verify_ir(&alt, econ, n)?,
            ic: verify_ic(&alt, n)?,
        },
    };

    let mut csv = String::from("theta,travel_s,unit_payment,power_w,payment,ir_margin_w\n");
    for theta in menu.theta_grid(n) {
        let travel = travel_time_for_type(&menu, theta, econ);
        let m = econ.move_power_w * travel / (t - travel) + econ.hover_power_w;
        csv.push_str(&format!(
            "{theta},{travel},{},{},{},{}\n",
            menu.unit_payment(theta),
            menu.power(theta),
            menu.unit_payment(theta) * d,
            scaled_uav_utility(&menu, theta, theta, m)
        ));
    }
    out.write_text("menu.csv", &csv)?;
    out.write_json("contract.json", &report)?;

    if !report.ic.passed || report.ic.max_deviation_steps != 0 {
        return Err(Invariant(format!("contract menu is not incentive compatible: {:?}", report.ic)).into());
    }
    if report.ir_guaranteed && !report.ir.passed {
        return Err(Invariant(format!("contract menu violates IR although m <= 2 p_h: {:?}", report.ir)).into());
    }
    if !report.ir.passed {
        log::warn!("IR fails at theta = {} (m > 2 p_h)", report.ir.worst_theta);
    }
    Ok(())
}
