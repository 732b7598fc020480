//! Traffic-offload contracts between a base station and candidate UAVs.
//!
//! A UAV's private type is `theta = d / (alpha * (T - t))`, where `t` is its
//! travel time to the service point. The base station offers the menu
//! `u(theta) = gamma * theta`, `p(theta) = gamma * theta^2 / 2` over the type
//! interval `[d / (alpha T), d / (alpha (1 - kappa) T)]`, with
//! `gamma = 2 alpha^2 T^2 p_h / d^2` chosen so the lowest type breaks even.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::SpatialPoint;
use crate::scalar::Scalar;

pub type UavId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct EconomicParams<F> {
    /// Cost per joule of on-board energy.
    pub energy_cost_per_j: F,
    /// Price UEs pay the base station per bit.
    pub ue_payment_per_bit: F,
    pub hover_power_w: F,
    pub move_power_w: F,
    pub p_max_w: F,
}

impl<F: Scalar> Default for EconomicParams<F> {
    fn default() -> Self {
        Self {
            energy_cost_per_j: F::lit(1.2),
            ue_payment_per_bit: F::lit(1e-7),
            hover_power_w: F::lit(16.0),
            move_power_w: F::lit(20.0),
            p_max_w: F::lit(20.0),
        }
    }
}

impl<F: Scalar> EconomicParams<F> {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.energy_cost_per_j, "energy_cost_per_j"),
            (self.ue_payment_per_bit, "ue_payment_per_bit"),
            (self.hover_power_w, "hover_power_w"),
            (self.move_power_w, "move_power_w"),
            (self.p_max_w, "p_max_w"),
        ] {
            if !(v > F::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavProfile<F> {
    pub position: SpatialPoint<F>,
    pub speed_m_s: F,
    pub energy_j: F,
    pub busy_until_s: F,
}

/// Type of a UAV with respect to one request, plus the values it derives from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeValue<F> {
    pub theta: F,
    pub travel_time_s: F,
    /// `m t / (T - t) + p_h`, the per-second-of-service fixed cost.
    pub m_offset_w: F,
}

pub fn travel_time<F: Scalar>(uav: &UavProfile<F>, service_point: &SpatialPoint<F>) -> F {
    uav.position.distance(service_point) / uav.speed_m_s
}

pub fn uav_type<F: Scalar>(demand_bits: F, service_s: F, travel_time_s: F, econ: &EconomicParams<F>) -> Result<TypeValue<F>> {
    if travel_time_s >= service_s {
        return Err(Error::ServiceWindowExhausted {
            travel_s: travel_time_s.as_f64(),
            interval_s: service_s.as_f64(),
        });
    }
    let remaining = service_s - travel_time_s;
    Ok(TypeValue {
        theta: demand_bits / (econ.energy_cost_per_j * remaining),
        travel_time_s,
        m_offset_w: econ.move_power_w * travel_time_s / remaining + econ.hover_power_w,
    })
}

/// Largest transmit power the UAV can sustain over the rest of the interval
/// after paying for travel and hovering; zero when it cannot break even.
pub fn max_available_power<F: Scalar>(uav: &UavProfile<F>, travel_time_s: F, service_s: F, econ: &EconomicParams<F>) -> F {
    let remaining = service_s - travel_time_s;
    if !(remaining > F::zero()) {
        return F::zero();
    }
    let spare = uav.energy_j - econ.move_power_w * travel_time_s - econ.hover_power_w * remaining;
    (spare / remaining).max(F::zero())
}

/// Any menu of (unit payment, transmit power) indexed by type.
pub trait OfferMenu<F: Scalar> {
    fn unit_payment(&self, theta: F) -> F;
    fn power(&self, theta: F) -> F;
    fn type_interval(&self) -> (F, F);
    fn demand_bits(&self) -> F;
    fn service_s(&self) -> F;

    fn theta_grid(&self, n: usize) -> Vec<F> {
        let (lo, hi) = self.type_interval();
        if n <= 1 {
            return vec![lo];
        }
        let step = (hi - lo) / F::lit((n - 1) as f64);
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + step * F::lit(i as f64) })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu<F> {
    pub gamma: F,
    pub demand_bits: F,
    pub service_s: F,
    pub theta_min: F,
    pub theta_max: F,
}

impl<F: Scalar> OfferMenu<F> for ContractMenu<F> {
    fn unit_payment(&self, theta: F) -> F {
        self.gamma * theta
    }
    fn power(&self, theta: F) -> F {
        self.gamma * theta * theta / F::lit(2.0)
    }
    fn type_interval(&self) -> (F, F) {
        (self.theta_min, self.theta_max)
    }
    fn demand_bits(&self) -> F {
        self.demand_bits
    }
    fn service_s(&self) -> F {
        self.service_s
    }
}

impl<F: Scalar> ContractMenu<F> {
    pub fn contains(&self, theta: F) -> bool {
        theta >= self.theta_min && theta <= self.theta_max
    }
}

/// Menu defined by arbitrary payment and power schedules.
pub struct FnMenu<F, U, P> {
    pub payment: U,
    pub power: P,
    pub interval: (F, F),
    pub demand_bits: F,
    pub service_s: F,
}

impl<F: Scalar, U: Fn(F) -> F, P: Fn(F) -> F> OfferMenu<F> for FnMenu<F, U, P> {
    fn unit_payment(&self, theta: F) -> F {
        (self.payment)(theta)
    }
    fn power(&self, theta: F) -> F {
        (self.power)(theta)
    }
    fn type_interval(&self) -> (F, F) {
        self.interval
    }
    fn demand_bits(&self) -> F {
        self.demand_bits
    }
    fn service_s(&self) -> F {
        self.service_s
    }
}

pub fn build_menu<F: Scalar>(demand_bits: F, service_s: F, econ: &EconomicParams<F>, kappa: F) -> Result<ContractMenu<F>> {
    if !(demand_bits > F::zero()) || !demand_bits.is_finite() {
        return Err(Error::InvalidParameter(format!("demand must be positive, got {demand_bits}")));
    }
    if !(service_s > F::zero()) {
        return Err(Error::InvalidParameter("service interval must be positive".into()));
    }
    if !(kappa > F::zero() && kappa < F::one()) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let a = econ.energy_cost_per_j;
    let gamma = F::lit(2.0) * a * a * service_s * service_s * econ.hover_power_w / (demand_bits * demand_bits);
    Ok(ContractMenu {
        gamma,
        demand_bits,
        service_s,
        theta_min: demand_bits / (a * service_s),
        theta_max: demand_bits / (a * (F::one() - kappa) * service_s),
    })
}

/// Menu priced on the move power instead of the hover power:
/// `p = m T^2 / (4 alpha (T - t)^2)` and `u d = m T^2 / (2 (T - t))`.
/// Its lowest type falls short of break-even whenever `m < 4 alpha p_h`.
#[allow(clippy::type_complexity)]
pub fn move_power_menu<F: Scalar>(
    demand_bits: F,
    service_s: F,
    econ: &EconomicParams<F>,
    kappa: F,
) -> Result<FnMenu<F, impl Fn(F) -> F, impl Fn(F) -> F>> {
    let base = build_menu(demand_bits, service_s, econ, kappa)?;
    let c = econ.move_power_w * service_s * service_s * econ.energy_cost_per_j / (demand_bits * demand_bits);
    Ok(FnMenu {
        payment: move |theta: F| c * theta / F::lit(2.0),
        power: move |theta: F| c * theta * theta / F::lit(4.0),
        interval: (base.theta_min, base.theta_max),
        demand_bits,
        service_s,
    })
}

/// Travel time implied by type `theta` for this menu's demand and interval.
pub fn travel_time_for_type<F: Scalar, M: OfferMenu<F>>(menu: &M, theta: F, econ: &EconomicParams<F>) -> F {
    menu.service_s() - menu.demand_bits() / (econ.energy_cost_per_j * theta)
}

/// Utility per unit of `alpha (T - t)`: `theta u - p - M`.
pub fn scaled_uav_utility<F: Scalar, M: OfferMenu<F>>(menu: &M, accepted_theta: F, true_theta: F, m_offset_w: F) -> F {
    true_theta * menu.unit_payment(accepted_theta) - menu.power(accepted_theta) - m_offset_w
}

/// Profit of a UAV of `true_type` that accepts the item for `accepted_theta`.
pub fn uav_utility<F: Scalar, M: OfferMenu<F>>(menu: &M, accepted_theta: F, true_type: &TypeValue<F>, econ: &EconomicParams<F>) -> F {
    let t = true_type.travel_time_s;
    let remaining = menu.service_s() - t;
    let reward = menu.unit_payment(accepted_theta) * menu.demand_bits();
    let cost = econ.energy_cost_per_j
        * ((menu.power(accepted_theta) + econ.hover_power_w) * remaining + econ.move_power_w * t);
    reward - cost
}

/// Base-station profit when a UAV of `true_type` serves under item `theta`
/// and delivers an average hotspot rate of `capacity_bps`.
pub fn bs_utility<F: Scalar, M: OfferMenu<F>>(
    menu: &M,
    theta: F,
    true_type: &TypeValue<F>,
    capacity_bps: F,
    econ: &EconomicParams<F>,
    eta: F,
) -> F {
    let delivered = eta * (menu.service_s() - true_type.travel_time_s) * capacity_bps;
    econ.ue_payment_per_bit * delivered - menu.unit_payment(theta) * menu.demand_bits()
}

/// Margin of the lowest type at zero travel time: `theta_min u - p - p_h`.
pub fn condition_b_margin<F: Scalar, M: OfferMenu<F>>(menu: &M, econ: &EconomicParams<F>) -> F {
    let (lo, _) = menu.type_interval();
    scaled_uav_utility(menu, lo, lo, econ.hover_power_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrReport<F> {
    pub passed: bool,
    pub worst_margin: F,
    pub worst_theta: F,
    pub grid_size: usize,
}

/// Tolerance on IR margins, in watts of scaled utility.
pub const IR_TOLERANCE: f64 = 1e-9;

fn ir_over_grid<F: Scalar, M: OfferMenu<F>>(menu: &M, grid_size: usize, m_of_theta: impl Fn(F) -> F) -> Result<IrReport<F>> {
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid size must be at least 1".into()));
    }
    let mut worst = (F::infinity(), F::nan());
    for theta in menu.theta_grid(grid_size) {
        let margin = scaled_uav_utility(menu, theta, theta, m_of_theta(theta));
        if margin < worst.0 {
            worst = (margin, theta);
        }
    }
    Ok(IrReport {
        passed: worst.0 >= -F::lit(IR_TOLERANCE),
        worst_margin: worst.0,
        worst_theta: worst.1,
        grid_size,
    })
}

/// Physical IR check: each type pays the fixed cost implied by its own travel time.
pub fn verify_ir<F: Scalar, M: OfferMenu<F>>(menu: &M, econ: &EconomicParams<F>, grid_size: usize) -> Result<IrReport<F>> {
    ir_over_grid(menu, grid_size, |theta| {
        let t = travel_time_for_type(menu, theta, econ);
        let remaining = menu.service_s() - t;
        econ.move_power_w * t / remaining + econ.hover_power_w
    })
}

/// IR check with one fixed cost `m_offset_w` shared by every type.
pub fn verify_ir_fixed_m<F: Scalar, M: OfferMenu<F>>(menu: &M, m_offset_w: F, grid_size: usize) -> Result<IrReport<F>> {
    ir_over_grid(menu, grid_size, |_| m_offset_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcReport<F> {
    pub passed: bool,
    /// Largest distance, in grid steps, between a type and its best response.
    pub max_deviation_steps: usize,
    pub worst_theta: F,
    /// Largest utility gain from misreporting, relative to truthful acceptance.
    pub max_misreport_gain: F,
    pub monotone: bool,
    /// Largest relative error of `dp/dtheta = theta du/dtheta` at interior grid points.
    pub slope_identity_rel_err: F,
    pub grid_size: usize,
}

pub const SLOPE_IDENTITY_TOLERANCE: f64 = 1e-6;

/// Best response of `true_theta` over the candidate items in `grid`.
pub fn best_response_index<F: Scalar, M: OfferMenu<F>>(menu: &M, grid: &[F], true_theta: F) -> usize {
    let mut best = (0, F::neg_infinity());
    for (j, &cand) in grid.iter().enumerate() {
        let v = true_theta * menu.unit_payment(cand) - menu.power(cand);
        if v > best.1 {
            best = (j, v);
        }
    }
    best.0
}

pub fn verify_ic<F: Scalar, M: OfferMenu<F>>(menu: &M, grid_size: usize) -> Result<IcReport<F>> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("IC grid needs at least 2 points".into()));
    }
    let grid = menu.theta_grid(grid_size);
    let payments: Vec<F> = grid.iter().map(|&t| menu.unit_payment(t)).collect();
    let powers: Vec<F> = grid.iter().map(|&t| menu.power(t)).collect();

    let mut max_dev = 0;
    let mut worst_theta = grid[0];
    let mut max_gain = F::zero();
    for (i, &theta) in grid.iter().enumerate() {
        let own = theta * payments[i] - powers[i];
        let j = best_response_index(menu, &grid, theta);
        let best = theta * payments[j] - powers[j];
        // ties resolved in favour of truth
        let dev = if best - own <= own.abs() * F::lit(1e-12) { 0 } else { i.abs_diff(j) };
        if dev > max_dev {
            max_dev = dev;
            worst_theta = theta;
        }
        let gain = (best - own) / own.abs().max(F::min_positive_value());
        if gain > max_gain {
            max_gain = gain;
        }
    }

    let nondecreasing = |v: &[F]| {
        v.windows(2).all(|w| w[1] - w[0] >= -(w[0].abs().max(w[1].abs()) * F::lit(1e-12)))
    };
    let monotone = nondecreasing(&payments) && nondecreasing(&powers);

    let mut slope_err = F::zero();
    for i in 1..grid.len().saturating_sub(1) {
        let h2 = grid[i + 1] - grid[i - 1];
        let dp = (powers[i + 1] - powers[i - 1]) / h2;
        let du = (payments[i + 1] - payments[i - 1]) / h2;
        let rhs = grid[i] * du;
        let scale = dp.abs().max(rhs.abs());
        if scale > F::zero() {
            slope_err = slope_err.max((dp - rhs).abs() / scale);
        }
    }

    Ok(IcReport {
        passed: max_dev <= 1 && monotone && slope_err <= F::lit(SLOPE_IDENTITY_TOLERANCE),
        max_deviation_steps: max_dev,
        worst_theta,
        max_misreport_gain: max_gain,
        monotone,
        slope_identity_rel_err: slope_err,
        grid_size,
    })
}

/// Reply of one UAV to a broadcast request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeResponse<F> {
    pub uav_id: UavId,
    pub ty: TypeValue<F>,
    pub max_power_w: F,
}

/// Whether a response satisfies the power and travel-time constraints.
pub fn is_feasible<F: Scalar>(
    r: &TypeResponse<F>,
    menu: &ContractMenu<F>,
    min_required_power_w: F,
    econ: &EconomicParams<F>,
    kappa: F,
) -> bool {
    let p = menu.power(r.ty.theta);
    let cap = r.max_power_w.min(econ.p_max_w);
    r.ty.travel_time_s <= kappa * menu.service_s && p >= min_required_power_w && p <= cap
}

/// Smallest feasible type wins; ties go to the lowest id.
pub fn select_optimal_uav<F: Scalar>(
    responses: &[TypeResponse<F>],
    menu: &ContractMenu<F>,
    min_required_power_w: F,
    econ: &EconomicParams<F>,
    kappa: F,
) -> Option<UavId> {
    responses
        .iter()
        .filter(|r| is_feasible(r, menu, min_required_power_w, econ, kappa))
        .min_by(|a, b| {
            a.ty.theta
                .partial_cmp(&b.ty.theta)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.uav_id.cmp(&b.uav_id))
        })
        .map(|r| r.uav_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn econ() -> EconomicParams<f64> {
        EconomicParams::default()
    }

    fn uav_at(x: f64, energy: f64) -> UavProfile<f64> {
        UavProfile { position: SpatialPoint { x, y: 0.0, z: 0.0 }, speed_m_s: 5.0, energy_j: energy, busy_until_s: 0.0 }
    }

    #[test]
    fn travel_time_examples() {
        let sp = SpatialPoint { x: 0.0, y: 0.0, z: 0.0 };
        assert_eq!(travel_time(&uav_at(0.0, 1.0), &sp), 0.0);
        assert_relative_eq!(travel_time(&uav_at(540.0, 1.0), &sp), 108.0);
        let mut fast = uav_at(540.0, 1.0);
        fast.speed_m_s = 10.0;
        assert_relative_eq!(travel_time(&fast, &sp), 54.0);
    }

    #[test]
    fn type_examples() {
        let e = econ();
        let t0 = uav_type(1e10, 1080.0, 0.0, &e).unwrap();
        assert_relative_eq!(t0.theta, 7.7160e6, max_relative = 1e-4);
        assert_relative_eq!(t0.m_offset_w, 16.0);
        let t1 = uav_type(1e10, 1080.0, 108.0, &e).unwrap();
        assert_relative_eq!(t1.theta, 8.5734e6, max_relative = 1e-4);
        assert_relative_eq!(t1.m_offset_w, 18.222, max_relative = 1e-4);
        assert!(matches!(uav_type(1e10, 1080.0, 1080.0, &e), Err(Error::ServiceWindowExhausted { .. })));
    }

    #[test]
    fn available_power_examples() {
        let e = econ();
        assert_relative_eq!(max_available_power(&uav_at(0.0, 90000.0), 108.0, 1080.0, &e), 74.37, max_relative = 1e-4);
        let breakeven = 20.0 * 108.0 + 16.0 * 972.0;
        assert_eq!(max_available_power(&uav_at(0.0, breakeven), 108.0, 1080.0, &e), 0.0);
        assert_eq!(max_available_power(&uav_at(0.0, breakeven - 5.0), 108.0, 1080.0, &e), 0.0);
    }

    #[test]
    fn menu_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        assert_relative_eq!(menu.gamma, 5.3748e-13, max_relative = 1e-4);
        assert_relative_eq!(menu.unit_payment(menu.theta_min) * 1e10, 41472.0, max_relative = 1e-12);
        assert_relative_eq!(menu.power(menu.theta_min), 16.0, max_relative = 1e-12);
        let theta = uav_type(1e10, 1080.0, 108.0, &e).unwrap().theta;
        assert_relative_eq!(menu.power(theta), 16.0 / 0.81, max_relative = 1e-12);
        assert!(build_menu(0.0, 1080.0, &e, 0.1).is_err());
    }

    #[test]
    fn uav_utility_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let t0 = uav_type(1e10, 1080.0, 0.0, &e).unwrap();
        assert!(uav_utility(&menu, t0.theta, &t0, &e).abs() < 1e-9);
        let t1 = uav_type(1e10, 1080.0, 108.0, &e).unwrap();
        let x: f64 = 10.0 / 9.0;
        let expected = 1.2 * 972.0 * (x - 1.0) * (16.0 * (x + 1.0) - 20.0);
        let r = uav_utility(&menu, t1.theta, &t1, &e);
        assert_relative_eq!(r, expected, max_relative = 1e-9);
        assert!((r - 1786.0).abs() < 1.0);
        // the scaled form agrees
        assert_relative_eq!(
            r,
            1.2 * 972.0 * scaled_uav_utility(&menu, t1.theta, t1.theta, t1.m_offset_w),
            max_relative = 1e-9
        );
    }

    #[test]
    fn misreporting_never_pays() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let truth = uav_type(1e10, 1080.0, 60.0, &e).unwrap();
        let honest = uav_utility(&menu, truth.theta, &truth, &e);
        for theta in menu.theta_grid(200) {
            assert!(uav_utility(&menu, theta, &truth, &e) <= honest + 1e-9);
        }
    }

    #[test]
    fn bs_utility_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let ty = uav_type(1e10, 1080.0, 0.0, &e).unwrap();
        let pay = menu.unit_payment(ty.theta) * 1e10;
        assert_relative_eq!(bs_utility(&menu, ty.theta, &ty, 0.0, &e, 0.9), -pay);
        let free = EconomicParams { ue_payment_per_bit: 0.0, ..e };
        assert_relative_eq!(bs_utility(&menu, ty.theta, &ty, 3e8, &free, 0.9), -pay);
    }

    #[test]
    fn ir_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let rep = verify_ir(&menu, &e, 200).unwrap();
        assert!(rep.passed);
        assert!(rep.worst_margin.abs() < 1e-9);
        assert_relative_eq!(rep.worst_theta, menu.theta_min);
        let single = verify_ir(&menu, &e, 1).unwrap();
        assert_eq!(single.worst_margin, 0.0);

        let heavy = EconomicParams { move_power_w: 100.0, ..e };
        let menu = build_menu(1e10, 1080.0, &heavy, 0.1).unwrap();
        let rep = verify_ir(&menu, &heavy, 200).unwrap();
        assert!(!rep.passed);
        assert!(rep.worst_theta > menu.theta_min);
    }

    #[test]
    fn ic_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let rep = verify_ic(&menu, 200).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.max_deviation_steps, 0);
        assert!(rep.monotone);

        let gamma = menu.gamma;
        let tampered = FnMenu {
            payment: move |t: f64| gamma * t,
            power: move |t: f64| gamma * t * t / 4.0,
            interval: (menu.theta_min, menu.theta_max),
            demand_bits: menu.demand_bits,
            service_s: menu.service_s,
        };
        let rep = verify_ic(&tampered, 200).unwrap();
        assert!(!rep.passed);
        assert!(rep.max_deviation_steps > 1);
        assert!(rep.max_misreport_gain > 0.0);
        // every type prefers the top item
        let grid = tampered.theta_grid(200);
        assert_eq!(best_response_index(&tampered, &grid, grid[0]), 199);
    }

    #[test]
    fn move_power_menu_matches_its_closed_forms() {
        let e = econ();
        let alt = move_power_menu(1e10, 1080.0, &e, 0.1).unwrap();
        for t in [0.0, 50.0, 108.0] {
            let theta = uav_type(1e10, 1080.0, t, &e).unwrap().theta;
            let rem = 1080.0 - t;
            assert_relative_eq!(alt.power(theta), 20.0 * 1080.0f64.powi(2) / (4.0 * 1.2 * rem * rem), max_relative = 1e-12);
            assert_relative_eq!(alt.unit_payment(theta) * 1e10, 20.0 * 1080.0f64.powi(2) / (2.0 * rem), max_relative = 1e-12);
        }
        // m / (4 alpha) - p_h
        assert_relative_eq!(condition_b_margin(&alt, &e), 20.0 / 4.8 - 16.0, max_relative = 1e-12);
    }

    #[test]
    fn selection_examples() {
        let e = econ();
        let menu = build_menu(1e10, 1080.0, &e, 0.1).unwrap();
        let resp = |id, t: f64| TypeResponse { uav_id: id, ty: uav_type(1e10, 1080.0, t, &e).unwrap(), max_power_w: 50.0 };
        let rs = vec![resp(4, 80.0), resp(2, 30.0), resp(7, 30.0)];
        assert_eq!(select_optimal_uav(&rs, &menu, 1.0, &e, 0.1), Some(2));
        let far = vec![resp(1, 120.0), resp(2, 200.0)];
        assert_eq!(select_optimal_uav(&far, &menu, 1.0, &e, 0.1), None);
        // demanded power above the item excludes everyone
        assert_eq!(select_optimal_uav(&rs, &menu, 19.9, &e, 0.1), None);
    }
}
