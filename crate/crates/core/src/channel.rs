//! Air-to-ground downlink channel: free-space loss plus a Gaussian excess
//! loss per link class, an elevation-dependent LOS probability, and the
//! resulting expected TDMA rate over a hotspot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Region, SpatialPoint};
use crate::scalar::Scalar;

/// Mean and standard deviation of the excess path loss, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessLoss<F> {
    pub mean_db: F,
    pub std_db: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct ChannelParams<F> {
    pub carrier_hz: F,
    pub bandwidth_hz: F,
    pub noise_psd_dbm_hz: F,
    pub antenna_gain_linear: F,
    pub los_a: F,
    pub los_b: F,
    pub excess_loss_los_db: ExcessLoss<F>,
    pub excess_loss_nlos_db: ExcessLoss<F>,
    pub light_speed_m_s: F,
}

impl<F: Scalar> Default for ChannelParams<F> {
    /// Dense-urban 2 GHz defaults with a 20 MHz downlink.
    fn default() -> Self {
        Self {
            carrier_hz: F::lit(2e9),
            bandwidth_hz: F::lit(20e6),
            noise_psd_dbm_hz: F::lit(-174.0),
            antenna_gain_linear: F::one(),
            los_a: F::lit(9.6),
            los_b: F::lit(0.28),
            excess_loss_los_db: ExcessLoss { mean_db: F::lit(1.6), std_db: F::lit(8.41) },
            excess_loss_nlos_db: ExcessLoss { mean_db: F::lit(23.0), std_db: F::lit(33.78) },
            light_speed_m_s: F::lit(3e8),
        }
    }
}

impl<F: Scalar> ChannelParams<F> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: F, name: &str| {
            if v > F::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.carrier_hz, "carrier_hz")?;
        pos(self.bandwidth_hz, "bandwidth_hz")?;
        pos(self.antenna_gain_linear, "antenna_gain_linear")?;
        pos(self.los_a, "los_a")?;
        pos(self.los_b, "los_b")?;
        pos(self.light_speed_m_s, "light_speed_m_s")?;
        if self.excess_loss_los_db.std_db < F::zero() || self.excess_loss_nlos_db.std_db < F::zero() {
            return Err(Error::InvalidParameter("excess loss std must be nonnegative".into()));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::InvalidParameter("noise_psd_dbm_hz must be finite".into()));
        }
        Ok(())
    }

    /// Noise power over the whole band, in watts.
    pub fn noise_power_w(&self) -> F {
        let psd_w_hz = F::lit(10.0).powf(self.noise_psd_dbm_hz / F::lit(10.0)) * F::lit(1e-3);
        psd_w_hz * self.bandwidth_hz
    }

    fn excess(&self, link: LinkClass) -> ExcessLoss<F> {
        match link {
            LinkClass::Los => self.excess_loss_los_db,
            LinkClass::Nlos => self.excess_loss_nlos_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Los,
    Nlos,
}

/// How the Gaussian excess loss term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    Mean,
    Sample(u64),
}

/// Elevation of the UAV as seen from the UE, in radians.
pub fn elevation_angle<F: Scalar>(uav: &SpatialPoint<F>, ue: &SpatialPoint<F>) -> Result<F> {
    let d = uav.distance(ue);
    if !(d > F::zero()) {
        return Err(Error::DegenerateGeometry("UAV and UE positions coincide".into()));
    }
    let s = ((uav.z - ue.z) / d).max(-F::one()).min(F::one());
    Ok(s.asin())
}

/// Free-space loss at distance `d` meters, in dB.
pub fn free_space_loss_db<F: Scalar>(d: F, params: &ChannelParams<F>) -> F {
    let four_pi = F::lit(4.0) * F::PI();
    F::lit(20.0) * (four_pi * params.carrier_hz * d / params.light_speed_m_s).log10()
}

pub fn path_loss_db<F: Scalar>(
    uav: &SpatialPoint<F>,
    ue: &SpatialPoint<F>,
    link: LinkClass,
    params: &ChannelParams<F>,
    mode: LossMode,
) -> Result<F> {
    let d = uav.distance(ue);
    if !(d > F::zero()) {
        return Err(Error::DegenerateGeometry("zero UAV-UE distance".into()));
    }
    let excess = params.excess(link);
    let xi = match mode {
        LossMode::Mean => excess.mean_db,
        LossMode::Sample(seed) => {
            let normal = Normal::new(excess.mean_db.as_f64(), excess.std_db.as_f64())
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            F::lit(normal.sample(&mut rng))
        }
    };
    Ok(free_space_loss_db(d, params) + xi)
}

/// LOS probability for an elevation angle in radians.
pub fn los_probability_at<F: Scalar>(elevation_rad: F, params: &ChannelParams<F>) -> F {
    let deg = elevation_rad.to_degrees();
    F::one() / (F::one() + params.los_a * (-params.los_b * (deg - params.los_a)).exp())
}

pub fn los_probability<F: Scalar>(uav: &SpatialPoint<F>, ue: &SpatialPoint<F>, params: &ChannelParams<F>) -> Result<F> {
    Ok(los_probability_at(elevation_angle(uav, ue)?, params))
}

/// Shannon rate for a given path loss (dB) and transmit power.
pub fn link_rate<F: Scalar>(loss_db: F, power_w: F, params: &ChannelParams<F>) -> F {
    let loss_lin = F::lit(10.0).powf(loss_db / F::lit(10.0));
    let snr = params.antenna_gain_linear * power_w / (loss_lin * params.noise_power_w());
    params.bandwidth_hz * snr.ln_1p() / F::LN_2()
}

/// LOS-probability-weighted average rate, using the mean excess loss of each class.
pub fn expected_rate<F: Scalar>(
    uav: &SpatialPoint<F>,
    ue: &SpatialPoint<F>,
    power_w: F,
    params: &ChannelParams<F>,
) -> Result<F> {
    if power_w < F::zero() || !power_w.is_finite() {
        return Err(Error::InvalidParameter(format!("power must be nonnegative, got {power_w}")));
    }
    let p_los = los_probability(uav, ue, params)?;
    let r_los = link_rate(path_loss_db(uav, ue, LinkClass::Los, params, LossMode::Mean)?, power_w, params);
    let r_nlos = link_rate(path_loss_db(uav, ue, LinkClass::Nlos, params, LossMode::Mean)?, power_w, params);
    Ok(p_los * r_los + (F::one() - p_los) * r_nlos)
}

/// Checks that a per-cell density integrates to one over `region`.
pub fn check_normalized<F: Scalar>(region: &Region<F>, density: &[F]) -> Result<()> {
    let n = region.cell_count();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    if density.len() != n {
        return Err(Error::InvalidParameter(format!(
            "density has {} values for {n} cells",
            density.len()
        )));
    }
    if density.iter().any(|v| *v < F::zero() || !v.is_finite()) {
        return Err(Error::InvalidParameter("density must be finite and nonnegative".into()));
    }
    let total: F = density.iter().copied().sum::<F>() * region.cell_area();
    if (total - F::one()).abs() > F::lit(1e-3) {
        return Err(Error::NotNormalized(total.as_f64()));
    }
    Ok(())
}

/// Per-cell channel terms for a fixed UAV position over a hotspot, so that
/// the capacity can be re-evaluated cheaply for many transmit powers.
#[derive(Debug, Clone)]
pub struct CapacityProfile<F> {
    bandwidth_hz: F,
    // (quadrature weight f*h^2, P_LOS, LOS SNR per watt, NLOS SNR per watt)
    terms: Vec<(F, F, F, F)>,
}

/// UE mass of a hotspot lumped into square blocks of cells, each block
/// placed at its mass centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<F> {
    pub points: Vec<[F; 2]>,
    pub mass: Vec<F>,
}

impl<F: Scalar> Quadrature<F> {
    /// One node per cell.
    pub fn exact(hotspot: &Region<F>, ue_density: &[F]) -> Result<Self> {
        check_normalized(hotspot, ue_density)?;
        let area = hotspot.cell_area();
        Ok(Self {
            points: hotspot.centers(),
            mass: ue_density.iter().map(|&f| f * area).collect(),
        })
    }

    /// Blocks of whole cells no wider than `block_m` (at least one cell).
    pub fn blocked(hotspot: &Region<F>, ue_density: &[F], block_m: F) -> Result<Self> {
        let k = (block_m / hotspot.cell_size).floor().to_usize().unwrap_or(1).max(1);
        if k == 1 {
            return Self::exact(hotspot, ue_density);
        }
        check_normalized(hotspot, ue_density)?;
        let area = hotspot.cell_area();
        let bx = hotspot.nx.div_ceil(k);
        let mut acc: std::collections::BTreeMap<usize, (F, F, F)> = std::collections::BTreeMap::new();
        for ((ix, iy), &f) in hotspot.cells().zip(ue_density) {
            let m = f * area;
            let c = hotspot.center(ix, iy);
            let e = acc.entry((iy / k) * bx + ix / k).or_insert((F::zero(), F::zero(), F::zero()));
            *e = (e.0 + m, e.1 + m * c[0], e.2 + m * c[1]);
        }
        let (mut points, mut mass) = (Vec::with_capacity(acc.len()), Vec::with_capacity(acc.len()));
        for (m, sx, sy) in acc.into_values().filter(|v| v.0 > F::zero()) {
            points.push([sx / m, sy / m]);
            mass.push(m);
        }
        Ok(Self { points, mass })
    }
}

impl<F: Scalar> CapacityProfile<F> {
    pub fn new(
        uav: &SpatialPoint<F>,
        hotspot: &Region<F>,
        ue_density: &[F],
        params: &ChannelParams<F>,
    ) -> Result<Self> {
        Self::from_quadrature(uav, &Quadrature::exact(hotspot, ue_density)?, params)
    }

    pub fn from_quadrature(uav: &SpatialPoint<F>, quad: &Quadrature<F>, params: &ChannelParams<F>) -> Result<Self> {
        let noise = params.noise_power_w();
        let ten = F::lit(10.0);
        let mut terms = Vec::with_capacity(quad.mass.len());
        for (&xy, &m) in quad.points.iter().zip(&quad.mass) {
            let ue = SpatialPoint::from_xy(xy, F::zero());
            let p_los = los_probability(uav, &ue, params)?;
            let los = path_loss_db(uav, &ue, LinkClass::Los, params, LossMode::Mean)?;
            let nlos = path_loss_db(uav, &ue, LinkClass::Nlos, params, LossMode::Mean)?;
            let k_los = params.antenna_gain_linear / (ten.powf(los / ten) * noise);
            let k_nlos = params.antenna_gain_linear / (ten.powf(nlos / ten) * noise);
            terms.push((m, p_los, k_los, k_nlos));
        }
        Ok(Self { bandwidth_hz: params.bandwidth_hz, terms })
    }

    /// Average rate to the hotspot UEs at transmit power `power_w`.
    pub fn capacity(&self, power_w: F) -> F {
        let p = power_w.max(F::zero());
        let s: F = self
            .terms
            .iter()
            .map(|&(w, pl, kl, kn)| w * (pl * (kl * p).ln_1p() + (F::one() - pl) * (kn * p).ln_1p()))
            .sum();
        self.bandwidth_hz * s / F::LN_2()
    }

    /// Capacity when the excess loss of each link class deviates from its
    /// mean by the given number of dB in every cell.
    pub fn capacity_with_shadowing(&self, power_w: F, los_offset_db: F, nlos_offset_db: F) -> F {
        let p = power_w.max(F::zero());
        let ten = F::lit(10.0);
        let gl = ten.powf(-los_offset_db / ten);
        let gn = ten.powf(-nlos_offset_db / ten);
        let s: F = self
            .terms
            .iter()
            .map(|&(w, pl, kl, kn)| w * (pl * (kl * gl * p).ln_1p() + (F::one() - pl) * (kn * gn * p).ln_1p()))
            .sum();
        self.bandwidth_hz * s / F::LN_2()
    }
}

/// Average downlink rate a UAV at `uav` provides to UEs distributed over
/// `hotspot` with per-cell density `ue_density` (one value per included
/// cell, in cell order, integrating to one).
pub fn hotspot_capacity<F: Scalar>(
    uav: &SpatialPoint<F>,
    power_w: F,
    hotspot: &Region<F>,
    ue_density: &[F],
    params: &ChannelParams<F>,
) -> Result<F> {
    if power_w < F::zero() || !power_w.is_finite() {
        return Err(Error::InvalidParameter(format!("power must be nonnegative, got {power_w}")));
    }
    Ok(CapacityProfile::new(uav, hotspot, ue_density, params)?.capacity(power_w))
}

/// Uniform normalized density over a region.
pub fn uniform_density<F: Scalar>(region: &Region<F>) -> Result<Vec<F>> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let v = F::one() / region.area();
    Ok(vec![v; region.cell_count()])
}

/// Normalizes nonnegative per-cell values into a density over `region`.
pub fn normalize_density<F: Scalar>(region: &Region<F>, values: &[F]) -> Result<Vec<F>> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mass: F = values.iter().copied().sum::<F>() * region.cell_area();
    if !(mass > F::zero()) || !mass.is_finite() {
        return Err(Error::NoPositiveWeight);
    }
    Ok(values.iter().map(|&v| v / mass).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64, z: f64) -> SpatialPoint<f64> {
        SpatialPoint { x, y, z }
    }

    #[test]
    fn elevation_examples() {
        let ue = p(0.0, 0.0, 0.0);
        assert_relative_eq!(elevation_angle(&p(0.0, 0.0, 100.0), &ue).unwrap(), PI / 2.0);
        assert_relative_eq!(elevation_angle(&p(100.0, 0.0, 100.0), &ue).unwrap(), PI / 4.0, epsilon = 1e-12);
        assert_relative_eq!(elevation_angle(&p(173.205, 0.0, 100.0), &ue).unwrap(), PI / 6.0, epsilon = 1e-5);
        assert!(matches!(elevation_angle(&ue, &ue), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn path_loss_examples() {
        let params = ChannelParams::<f64>::default();
        let uav = p(0.0, 0.0, 1000.0);
        let ue = p(0.0, 0.0, 0.0);
        let los = path_loss_db(&uav, &ue, LinkClass::Los, &params, LossMode::Mean).unwrap();
        let nlos = path_loss_db(&uav, &ue, LinkClass::Nlos, &params, LossMode::Mean).unwrap();
        assert!((los - 100.06).abs() < 0.005, "{los}");
        assert!((nlos - 121.46).abs() < 0.005, "{nlos}");
        let a = path_loss_db(&uav, &ue, LinkClass::Nlos, &params, LossMode::Sample(9)).unwrap();
        let b = path_loss_db(&uav, &ue, LinkClass::Nlos, &params, LossMode::Sample(9)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(path_loss_db(&ue, &ue, LinkClass::Los, &params, LossMode::Mean).is_err());
    }

    #[test]
    fn los_probability_examples() {
        let params = ChannelParams::<f64>::default();
        let at = |deg: f64| los_probability_at(deg.to_radians(), &params);
        assert_relative_eq!(at(9.6), 1.0 / 10.6, epsilon = 1e-12);
        // 1 - a*exp(-b*(90 - a)) to first order
        let overhead = at(90.0);
        assert_relative_eq!(1.0 - overhead, 9.6 * (-0.28f64 * 80.4).exp(), max_relative = 1e-6);
        assert!((at(45.0) - 0.99953).abs() < 1e-5);
    }

    #[test]
    fn expected_rate_examples() {
        let params = ChannelParams::<f64>::default();
        let uav = p(0.0, 0.0, 100.0);
        let ue = p(0.0, 0.0, 0.0);
        assert_eq!(expected_rate(&uav, &ue, 0.0, &params).unwrap(), 0.0);
        let r = expected_rate(&uav, &ue, 1.0, &params).unwrap();
        assert!((r / 3.38e8 - 1.0).abs() < 5e-3, "{r}");
        assert!(expected_rate(&uav, &ue, -1.0, &params).is_err());
    }

    #[test]
    fn single_cell_capacity_is_point_rate() {
        let params = ChannelParams::<f64>::default();
        let region = Region::full(0.0, 0.0, 10.0, 1, 1).unwrap();
        let dens = uniform_density(&region).unwrap();
        let uav = p(40.0, -20.0, 120.0);
        let c = hotspot_capacity(&uav, 2.0, &region, &dens, &params).unwrap();
        let r = expected_rate(&uav, &p(5.0, 5.0, 0.0), 2.0, &params).unwrap();
        assert_relative_eq!(c, r, max_relative = 1e-12);
        assert_eq!(hotspot_capacity(&uav, 0.0, &region, &dens, &params).unwrap(), 0.0);
    }

    #[test]
    fn capacity_rejects_bad_density() {
        let params = ChannelParams::<f64>::default();
        let region = Region::full(0.0, 0.0, 10.0, 2, 2).unwrap();
        let uav = p(0.0, 0.0, 100.0);
        assert!(matches!(
            hotspot_capacity(&uav, 1.0, &region, &[1.0; 4], &params),
            Err(Error::NotNormalized(_))
        ));
        let empty = region.empty_like();
        assert_eq!(hotspot_capacity(&uav, 1.0, &empty, &[], &params), Err(Error::EmptyRegion));
    }

    #[test]
    fn works_in_single_precision() {
        let params = ChannelParams::<f32>::default();
        let r = expected_rate(
            &SpatialPoint { x: 0.0f32, y: 0.0, z: 100.0 },
            &SpatialPoint { x: 0.0f32, y: 0.0, z: 0.0 },
            1.0,
            &params,
        )
        .unwrap();
        assert!((r / 3.38e8 - 1.0).abs() < 1e-2);
    }
}
