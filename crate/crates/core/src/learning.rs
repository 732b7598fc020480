//! Learning stage: turn a window of transmission records into a traffic
//! surface, a hotspot, a demand forecast and, when one UAV is not enough,
//! a split of the hotspot into equal-demand subareas.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist2, Region};
use crate::mixture::{em_fit, region_integral, wem_fit, Component, Cov2, FitOptions, MixtureModel, WeightedSamples};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord<F> {
    pub rate_bps: F,
    pub location: [F; 2],
    pub time_s: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct LearningConfig<F> {
    pub slot_s: F,
    pub learn_window_s: F,
    pub service_interval_s: F,
    pub efficiency: F,
    pub travel_fraction: F,
    pub grid_cell_m: F,
}

impl<F: Scalar> Default for LearningConfig<F> {
    fn default() -> Self {
        Self {
            slot_s: F::one(),
            learn_window_s: F::lit(120.0),
            service_interval_s: F::lit(1080.0),
            efficiency: F::lit(0.9),
            travel_fraction: F::lit(0.1),
            grid_cell_m: F::lit(10.0),
        }
    }
}

impl<F: Scalar> LearningConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.slot_s > F::zero() && self.slot_s <= self.learn_window_s && self.learn_window_s < self.service_interval_s) {
            return bad(format!(
                "need 0 < slot ({}) <= learning window ({}) < service interval ({})",
                self.slot_s, self.learn_window_s, self.service_interval_s
            ));
        }
        if !(self.efficiency > F::zero() && self.efficiency < F::one()) {
            return bad(format!("efficiency must lie in (0, 1), got {}", self.efficiency));
        }
        if !(self.travel_fraction > F::zero() && self.travel_fraction < F::one()) {
            return bad(format!("travel fraction must lie in (0, 1), got {}", self.travel_fraction));
        }
        if !(self.grid_cell_m > F::zero()) {
            return bad("grid cell must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subarea<F> {
    pub region: Region<F>,
    pub demand_bits: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandEstimate<F> {
    pub density_model: MixtureModel<F>,
    pub hotspot: Region<F>,
    pub demand_bits: F,
    pub avg_rate_per_hotspot_ue_bps: F,
    pub hotspot_ue_count: usize,
    pub subareas: Vec<Subarea<F>>,
}

fn snap<F: Scalar>(p: [F; 2], h: F) -> (i64, i64) {
    let k = |v: F| (v / h).round().to_i64().unwrap_or(i64::MAX);
    (k(p[0]), k(p[1]))
}

/// Time-averaged rate per snapped location, `sum(s * dt) / tau`.
pub fn build_density_samples<F: Scalar>(records: &[TransmissionRecord<F>], cfg: &LearningConfig<F>) -> Result<WeightedSamples<F>> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no transmission records".into()));
    }
    let h = cfg.grid_cell_m;
    let mut acc: BTreeMap<(i64, i64), F> = BTreeMap::new();
    for r in records {
        if !(r.rate_bps >= F::zero()) || !r.rate_bps.is_finite() {
            return Err(Error::InvalidParameter(format!("record rate must be nonnegative, got {}", r.rate_bps)));
        }
        let e = acc.entry(snap(r.location, h)).or_insert(F::zero());
        *e = *e + r.rate_bps * cfg.slot_s;
    }
    let (points, weights) = acc
        .into_iter()
        .map(|((ix, iy), v)| ([F::lit(ix as f64) * h, F::lit(iy as f64) * h], v / cfg.learn_window_s))
        .unzip();
    Ok(WeightedSamples { points, weights: Some(weights) })
}

/// Sum of all records' time-averaged rates.
pub fn total_average_rate<F: Scalar>(records: &[TransmissionRecord<F>], cfg: &LearningConfig<F>) -> F {
    records.iter().map(|r| r.rate_bps * cfg.slot_s).sum::<F>() / cfg.learn_window_s
}

/// UE distribution fitted by EM over the record locations.
pub fn estimate_ue_distribution<F: Scalar>(
    records: &[TransmissionRecord<F>],
    l: usize,
    seed: u64,
    opts: &FitOptions<F>,
) -> Result<MixtureModel<F>> {
    let pts = records.iter().map(|r| r.location).collect();
    Ok(em_fit(&WeightedSamples::unweighted(pts), l, opts, seed)?.model)
}

/// Traffic-density surface fitted by WEM, in bits/s per square meter.
///
/// The fit runs in coordinates standardized by the weighted spread of the
/// samples, so the identity initial covariance is on the scale of the
/// data rather than one square meter. The covariance floor is at least
/// the variance of a point snapped to a `grid_cell_m` cell. With a
/// service area, the surface is rescaled to carry the observed mass over
/// that area instead of over the whole plane.
pub fn estimate_traffic_density<F: Scalar>(
    records: &[TransmissionRecord<F>],
    k: usize,
    cfg: &LearningConfig<F>,
    opts: &FitOptions<F>,
    service_area: Option<&Region<F>>,
) -> Result<MixtureModel<F>> {
    cfg.validate()?;
    let samples = build_density_samples(records, cfg)?;
    let w = samples.weight_vec();
    let mass = samples.total_weight();
    if !(mass > F::zero()) {
        return Err(Error::NoPositiveWeight);
    }
    let (mut cx, mut cy) = (F::zero(), F::zero());
    for (p, &wi) in samples.points.iter().zip(&w) {
        cx = cx + wi * p[0];
        cy = cy + wi * p[1];
    }
    cx = cx / mass;
    cy = cy / mass;
    let var: F = samples
        .points
        .iter()
        .zip(&w)
        .map(|(p, &wi)| wi * dist2(*p, [cx, cy]))
        .sum::<F>()
        / (F::lit(2.0) * mass);
    let scale = if var > F::zero() { var.sqrt() } else { cfg.grid_cell_m };

    let scaled = WeightedSamples {
        points: samples.points.iter().map(|p| [(p[0] - cx) / scale, (p[1] - cy) / scale]).collect(),
        weights: samples.weights.clone(),
    };
    let quant = cfg.grid_cell_m * cfg.grid_cell_m / F::lit(12.0);
    let opts = FitOptions { cov_floor: opts.cov_floor.max(quant / (scale * scale)), ..*opts };
    let fit = wem_fit(&scaled, k, &opts)?;
    let s2 = scale * scale;
    let components = fit
        .model
        .components
        .iter()
        .map(|c| Component {
            weight: c.weight / s2,
            mean: [cx + scale * c.mean[0], cy + scale * c.mean[1]],
            cov: Cov2 { xx: c.cov.xx * s2, xy: c.cov.xy * s2, yy: c.cov.yy * s2 },
        })
        .collect();
    let model = MixtureModel::new(fit.model.kind, components)?;
    match service_area {
        None => Ok(model),
        Some(area) => {
            let inside = region_integral(&model, area)?;
            if !(inside > F::zero()) {
                return Err(Error::NoPositiveWeight);
            }
            Ok(model.scaled(mass / inside))
        }
    }
}

/// Surface values at every cell center of `area`, in cell order.
pub fn surface_values<F: Scalar>(model: &MixtureModel<F>, area: &Region<F>) -> Vec<F> {
    area.centers().iter().map(|&c| model.eval(c)).collect()
}

/// Connected super-average cell set around the strongest component mean.
pub fn detect_hotspot<F: Scalar>(model: &MixtureModel<F>, area: &Region<F>) -> Result<Region<F>> {
    model.validate()?;
    if area.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let cells: Vec<(usize, usize)> = area.cells().collect();
    let vals = surface_values(model, area);
    let mean = vals.iter().copied().sum::<F>() / F::lit(vals.len() as f64);
    let thresh = mean + mean.abs() * F::lit(1e-12);

    let mut selected = vec![false; area.nx * area.ny];
    let mut any = false;
    for (&(ix, iy), &v) in cells.iter().zip(&vals) {
        if v > thresh {
            selected[area.index(ix, iy)] = true;
            any = true;
        }
    }
    if !any {
        return Err(Error::NoHotspot);
    }

    let peak_cell = model
        .means()
        .into_iter()
        .filter_map(|m| area.cell_of(m).filter(|&(ix, iy)| area.contains_cell(ix, iy)).map(|c| (model.eval(m), c)))
        .filter(|&(_, (ix, iy))| selected[area.index(ix, iy)])
        .fold(None, |best: Option<(F, (usize, usize))>, cand| match best {
            Some(b) if b.0 >= cand.0 => Some(b),
            _ => Some(cand),
        })
        .map(|(_, c)| c);
    // Fall back to the highest cell when no mean sits on a super-average cell.
    let start = peak_cell.unwrap_or_else(|| {
        let mut best = 0;
        for i in 1..vals.len() {
            if vals[i] > vals[best] {
                best = i;
            }
        }
        cells[best]
    });
    Ok(area.connected_component(&selected, start))
}

/// Forecast demand over the service interval, `T * integral of S`.
pub fn predict_demand<F: Scalar>(model: &MixtureModel<F>, hotspot: &Region<F>, service_s: F) -> Result<F> {
    Ok(service_s * region_integral(model, hotspot)?)
}

/// Number of distinct record locations inside `hotspot`.
pub fn hotspot_ue_count<F: Scalar>(records: &[TransmissionRecord<F>], hotspot: &Region<F>) -> usize {
    records
        .iter()
        .filter(|r| hotspot.contains(r.location))
        .map(|r| (r.location[0].as_f64().to_bits(), r.location[1].as_f64().to_bits()))
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn avg_rate_per_ue<F: Scalar>(model: &MixtureModel<F>, region: &Region<F>, ue_count: usize) -> Result<F> {
    if ue_count == 0 {
        return Err(Error::InvalidParameter("UE count must be positive".into()));
    }
    Ok(region_integral(model, region)? / F::lit(ue_count as f64))
}

/// Full learning pass with a single subarea (the whole hotspot).
pub fn learn_demand<F: Scalar>(
    records: &[TransmissionRecord<F>],
    area: &Region<F>,
    k: usize,
    cfg: &LearningConfig<F>,
    opts: &FitOptions<F>,
) -> Result<DemandEstimate<F>> {
    let samples = build_density_samples(records, cfg)?;
    let distinct = samples.weight_vec().iter().filter(|w| **w > F::zero()).count();
    if distinct == 0 {
        return Err(Error::NoPositiveWeight);
    }
    let model = estimate_traffic_density(records, k.clamp(1, distinct), cfg, opts, Some(area))?;
    let hotspot = detect_hotspot(&model, area)?;
    let demand = predict_demand(&model, &hotspot, cfg.service_interval_s)?;
    let q = hotspot_ue_count(records, &hotspot);
    let rho_c = if q > 0 { avg_rate_per_ue(&model, &hotspot, q)? } else { F::zero() };
    Ok(DemandEstimate {
        density_model: model,
        subareas: vec![Subarea { region: hotspot.clone(), demand_bits: demand }],
        hotspot,
        demand_bits: demand,
        avg_rate_per_hotspot_ue_bps: rho_c,
        hotspot_ue_count: q,
    })
}

/// Best average rate one UAV can offer a subarea whose UEs follow `density`.
pub trait SubareaCapacity<F: Scalar> {
    fn capacity(&self, region: &Region<F>, density: &[F]) -> Result<F>;
}

impl<F: Scalar, T: Fn(&Region<F>, &[F]) -> Result<F>> SubareaCapacity<F> for T {
    fn capacity(&self, region: &Region<F>, density: &[F]) -> Result<F> {
        self(region, density)
    }
}

/// Finest refinement factor tried when equalizing subarea demands.
const MAX_REFINE: usize = 8;
/// Cap on refined cell count; beyond it the cuts stay coarse.
const MAX_REFINED_CELLS: usize = 4096;
/// Largest number of subareas tried before giving up.
const MAX_SUBAREAS: usize = 64;

/// Contiguous runs of `demand` (in cell order) with sums close to `total / n`.
fn equal_cuts<F: Scalar>(demand: &[F], n: usize) -> Vec<std::ops::Range<usize>> {
    let total: F = demand.iter().copied().sum();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    let mut cum = F::zero();
    let mut i = 0;
    for k in 1..n {
        let target = total * F::lit(k as f64) / F::lit(n as f64);
        let max_end = demand.len() - (n - k);
        // advance while adding the next cell brings the sum closer to the target
        while i < max_end && (i <= start || (cum + demand[i] - target).abs() <= (cum - target).abs()) {
            cum = cum + demand[i];
            i += 1;
        }
        out.push(start..i);
        start = i;
    }
    out.push(start..demand.len());
    out
}

/// Splits the hotspot into the fewest equal-demand subareas each of which
/// one UAV at full power can carry.
pub fn split_hotspot<F: Scalar, C: SubareaCapacity<F>>(
    estimate: &DemandEstimate<F>,
    capacity: &C,
    cfg: &LearningConfig<F>,
) -> Result<Vec<Subarea<F>>> {
    cfg.validate()?;
    let hotspot = &estimate.hotspot;
    if hotspot.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = estimate.demand_bits;
    let budget = cfg.efficiency * cfg.service_interval_s;
    let model = &estimate.density_model;

    let fits = |region: &Region<F>, demand: F| -> Result<bool> {
        let vals = surface_values(model, region);
        let dens = crate::channel::normalize_density(region, &vals)
            .or_else(|_| crate::channel::uniform_density(region))?;
        Ok(demand < budget * capacity.capacity(region, &dens)?)
    };

    if fits(hotspot, d)? {
        return Ok(vec![Subarea { region: hotspot.clone(), demand_bits: d }]);
    }

    // Finer grids give cuts closer to equal demand.
    let mut factor = 1;
    while factor < MAX_REFINE && hotspot.cell_count() * (2 * factor) * (2 * factor) <= MAX_REFINED_CELLS {
        factor *= 2;
    }
    let grid = if factor > 1 { hotspot.refined(factor) } else { hotspot.clone() };
    let cells: Vec<(usize, usize)> = grid.cells().collect();
    let cell_demand: Vec<F> = surface_values(model, &grid)
        .into_iter()
        .map(|v| v * grid.cell_area() * cfg.service_interval_s)
        .collect();
    let quad_total: F = cell_demand.iter().copied().sum();
    let rescale = if quad_total > F::zero() { d / quad_total } else { F::zero() };

    for n in 2..=cells.len().min(MAX_SUBAREAS) {
        let mut parts = Vec::with_capacity(n);
        let mut ok = true;
        for range in equal_cuts(&cell_demand, n) {
            let demand = cell_demand[range.clone()].iter().copied().sum::<F>() * rescale;
            let region = grid.from_cells(&cells[range.clone()]);
            if !fits(&region, demand)? {
                if range.len() == 1 {
                    return Err(Error::DemandUnservable(format!(
                        "a single {} m cell carries {demand} bits, beyond one UAV",
                        grid.cell_size
                    )));
                }
                ok = false;
                break;
            }
            parts.push(Subarea { region, demand_bits: demand });
        }
        if ok {
            return Ok(parts);
        }
    }
    Err(Error::DemandUnservable(format!(
        "{d} bits need more than {} UAVs",
        cells.len().min(MAX_SUBAREAS)
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MreReport<F> {
    pub mre: F,
    pub entries: usize,
    /// Entries dropped because the actual value was not positive.
    pub skipped: usize,
}

pub fn mre<F: Scalar>(predicted: &[F], actual: &[F]) -> Result<MreReport<F>> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidParameter(format!(
            "{} predictions for {} actual values",
            predicted.len(),
            actual.len()
        )));
    }
    let mut sum = F::zero();
    let mut n = 0;
    let mut skipped = 0;
    for (&p, &a) in predicted.iter().zip(actual) {
        if a > F::zero() {
            sum = sum + (p - a).abs() / a;
            n += 1;
        } else {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("mre: skipped {skipped} entries with non-positive actual demand");
    }
    if n == 0 {
        return Err(Error::InsufficientData("no entry with positive actual demand".into()));
    }
    Ok(MreReport { mre: sum / F::lit(n as f64), entries: n, skipped })
}

/// Bits actually carried inside `hotspot` by `records`.
pub fn actual_demand<F: Scalar>(records: &[TransmissionRecord<F>], hotspot: &Region<F>, cfg: &LearningConfig<F>) -> F {
    records
        .iter()
        .filter(|r| hotspot.contains(r.location))
        .map(|r| r.rate_bps * cfg.slot_s)
        .sum()
}

/// Demand assuming every UE draws the area-average rate: `T * rate * P(hotspot)`.
pub fn em_demand_baseline<F: Scalar>(
    ue_model: &MixtureModel<F>,
    records: &[TransmissionRecord<F>],
    hotspot: &Region<F>,
    cfg: &LearningConfig<F>,
) -> Result<F> {
    let mass = region_integral(ue_model, hotspot)?;
    Ok(cfg.service_interval_s * total_average_rate(records, cfg) * mass)
}

/// Demand from the k-nearest-sample average of the observed densities.
///
/// The averaged values only fix the shape of the surface. Like the WEM
/// surface, it is scaled to carry the observed total rate over `area`, so
/// cells without nearby samples are not counted as fully occupied.
pub fn kmean_demand_baseline<F: Scalar>(
    samples: &WeightedSamples<F>,
    k: usize,
    hotspot: &Region<F>,
    area: &Region<F>,
    service_s: F,
) -> Result<F> {
    samples.validate()?;
    if k == 0 || k > samples.len() {
        return Err(Error::InvalidParameter(format!("k = {k} with {} samples", samples.len())));
    }
    if hotspot.is_empty() || area.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !hotspot.is_subset_of(area) {
        return Err(Error::InvalidParameter("hotspot must lie inside the service area".into()));
    }
    let w = samples.weight_vec();
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    let (mut inside, mut total) = (F::zero(), F::zero());
    for (ix, iy) in area.cells() {
        let q = area.center(ix, iy);
        let key = |i: &usize| (dist2(samples.points[*i], q), *i);
        let cmp = |a: &usize, b: &usize| {
            let (da, ia) = key(a);
            let (db, ib) = key(b);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(ia.cmp(&ib))
        };
        if k < idx.len() {
            idx.select_nth_unstable_by(k - 1, cmp);
        }
        let mean = idx[..k].iter().map(|&i| w[i]).sum::<F>() / F::lit(k as f64);
        total = total + mean;
        if hotspot.contains_cell(ix, iy) {
            inside = inside + mean;
        }
    }
    if !(total > F::zero()) {
        return Err(Error::NoPositiveWeight);
    }
    Ok(service_s * samples.total_weight() * inside / total)
}

/// Density value the k-nearest-sample rule assigns at `q`, in weight units.
pub fn kmean_density_at<F: Scalar>(samples: &WeightedSamples<F>, k: usize, q: [F; 2]) -> Result<F> {
    samples.validate()?;
    if k == 0 || k > samples.len() {
        return Err(Error::InvalidParameter(format!("k = {k} with {} samples", samples.len())));
    }
    let w = samples.weight_vec();
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| {
        dist2(samples.points[a], q)
            .partial_cmp(&dist2(samples.points[b], q))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(idx[..k].iter().map(|&i| w[i]).sum::<F>() / F::lit(k as f64))
}

/// Demand forecasts of every predictor for one learning window, next to
/// the demand that followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowForecast<F> {
    pub window_start_s: F,
    /// Bits carried inside the WEM hotspot during the service interval
    /// after the window.
    pub actual_bits: F,
    pub wem_bits: F,
    pub em_bits: F,
    /// `(k, forecast)` for each k-mean variant, in the order requested.
    pub kmean_bits: Vec<(usize, F)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastSetup<'a> {
    pub traffic_components: usize,
    pub ue_components: usize,
    pub kmean_k: &'a [usize],
    pub seed: u64,
}

/// Learns from `[start, start + tau)` of `records` (time ordered) and scores
/// every predictor on the hotspot WEM finds, against the traffic of the
/// following service interval.
pub fn forecast_window<F: Scalar>(
    records: &[TransmissionRecord<F>],
    area: &Region<F>,
    start_s: F,
    setup: &ForecastSetup<'_>,
    cfg: &LearningConfig<F>,
    opts: &FitOptions<F>,
) -> Result<(DemandEstimate<F>, WindowForecast<F>)> {
    let at = |t: F| records.partition_point(|r| r.time_s < t);
    let a = at(start_s);
    let b = at(start_s + cfg.learn_window_s);
    let c = at(start_s + cfg.learn_window_s + cfg.service_interval_s);
    let window = &records[a..b];
    let est = learn_demand(window, area, setup.traffic_components, cfg, opts)?;
    let ue = estimate_ue_distribution(window, setup.ue_components, setup.seed, opts)?;
    let samples = build_density_samples(window, cfg)?;
    let kmean_bits = setup
        .kmean_k
        .iter()
        .map(|&k| {
            let k_eff = k.min(samples.len());
            Ok((k, kmean_demand_baseline(&samples, k_eff, &est.hotspot, area, cfg.service_interval_s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fc = WindowForecast {
        window_start_s: start_s,
        actual_bits: actual_demand(&records[b..c], &est.hotspot, cfg),
        wem_bits: est.demand_bits,
        em_bits: em_demand_baseline(&ue, window, &est.hotspot, cfg)?,
        kmean_bits,
    };
    Ok((est, fc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::MixtureKind;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg() -> LearningConfig<f64> {
        LearningConfig::default()
    }

    fn rec(rate: f64, x: f64, y: f64, t: f64) -> TransmissionRecord<f64> {
        TransmissionRecord { rate_bps: rate, location: [x, y], time_s: t }
    }

    fn bell(weight: f64, mean: [f64; 2], sigma: f64) -> MixtureModel<f64> {
        MixtureModel::new(
            MixtureKind::DensityFunction,
            vec![Component { weight, mean, cov: Cov2::isotropic(sigma * sigma) }],
        )
        .unwrap()
    }

    #[test]
    fn density_samples_examples() {
        let s = build_density_samples(&[rec(100.0, 20.0, 30.0, 5.0)], &cfg()).unwrap();
        assert_eq!(s.points, vec![[20.0, 30.0]]);
        assert_relative_eq!(s.weights.as_ref().unwrap()[0], 100.0 / 120.0);

        let s = build_density_samples(&[rec(100.0, 20.0, 30.0, 5.0), rec(50.0, 21.0, 29.0, 6.0)], &cfg()).unwrap();
        assert_eq!(s.len(), 1);
        assert_relative_eq!(s.weights.as_ref().unwrap()[0], 150.0 / 120.0);

        let stream: Vec<_> = (1..=120).map(|t| rec(250.0, 0.0, 0.0, t as f64)).collect();
        let s = build_density_samples(&stream, &cfg()).unwrap();
        assert_eq!(s.weights.unwrap()[0], 250.0);

        assert!(build_density_samples::<f64>(&[], &cfg()).is_err());
    }

    fn cluster(rng: &mut ChaCha8Rng, n: usize, c: [f64; 2], sigma: f64, rate: f64, out: &mut Vec<TransmissionRecord<f64>>) {
        let nd = Normal::new(0.0, sigma).unwrap();
        for _ in 0..n {
            let t = rng.random_range(1.0..=120.0_f64).floor();
            out.push(rec(rate, c[0] + nd.sample(rng), c[1] + nd.sample(rng), t));
        }
    }

    #[test]
    fn ue_distribution_recovers_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rs = Vec::new();
        cluster(&mut rng, 1500, [-200.0, 0.0], 20.0, 1.0, &mut rs);
        cluster(&mut rng, 1500, [200.0, 50.0], 20.0, 1.0, &mut rs);
        let m = estimate_ue_distribution(&rs, 2, 11, &FitOptions::default()).unwrap();
        let mut means = m.means();
        means.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!(dist2(means[0], [-200.0, 0.0]).sqrt() < 5.0);
        assert!(dist2(means[1], [200.0, 50.0]).sqrt() < 5.0);
        let again = estimate_ue_distribution(&rs, 2, 11, &FitOptions::default()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn traffic_surface_integral_matches_observed_rate() {
        // uniform rate on a 10 m lattice of 400 locations
        let mut rs = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                rs.push(rec(120.0, i as f64 * 10.0, j as f64 * 10.0, 1.0));
            }
        }
        let m = estimate_traffic_density(&rs, 2, &cfg(), &FitOptions::default(), None).unwrap();
        let whole = Region::full(-1000.0, -1000.0, 10.0, 220, 220).unwrap();
        let integral = region_integral(&m, &whole).unwrap();
        assert_relative_eq!(integral, 400.0, max_relative = 0.01);
    }

    #[test]
    fn traffic_surface_peaks_at_hot_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rs = Vec::new();
        cluster(&mut rng, 600, [0.0, 0.0], 150.0, 10.0, &mut rs);
        cluster(&mut rng, 600, [120.0, -80.0], 25.0, 100.0, &mut rs);
        let area = Region::full(-500.0, -500.0, 10.0, 100, 100).unwrap();
        let m = estimate_traffic_density(&rs, 3, &cfg(), &FitOptions::default(), Some(&area)).unwrap();
        let best = area
            .centers()
            .into_iter()
            .max_by(|a, b| m.eval(*a).partial_cmp(&m.eval(*b)).unwrap())
            .unwrap();
        assert!(dist2(best, [120.0, -80.0]).sqrt() < 20.0, "peak at {best:?}");
        let total = total_average_rate(&rs, &cfg());
        assert_relative_eq!(region_integral(&m, &area).unwrap(), total, max_relative = 1e-9);
    }

    #[test]
    fn zero_rates_have_no_positive_weight() {
        let rs = vec![rec(0.0, 0.0, 0.0, 1.0), rec(0.0, 50.0, 0.0, 2.0)];
        let e = estimate_traffic_density(&rs, 1, &cfg(), &FitOptions::default(), None).unwrap_err();
        assert_eq!(e, Error::NoPositiveWeight);
    }

    #[test]
    fn hotspot_of_single_bump_is_a_disc() {
        let area = Region::full(-500.0, -500.0, 10.0, 100, 100).unwrap();
        let m = bell(1.0, [0.0, 0.0], 60.0);
        let hot = detect_hotspot(&m, &area).unwrap();
        let mean = surface_values(&m, &area).iter().sum::<f64>() / 10000.0;
        // threshold contour radius of the bell
        let r = (2.0 * 3600.0 * (1.0 / mean).ln()).sqrt();
        for c in area.centers() {
            let d = c[0].hypot(c[1]);
            if d < r - 8.0 {
                assert!(hot.contains(c));
            }
            if d > r + 8.0 {
                assert!(!hot.contains(c));
            }
        }
        assert!(hot.is_connected());
        for c in hot.centers() {
            assert!(m.eval(c) > mean);
        }
    }

    #[test]
    fn two_bumps_keep_the_strongest() {
        let area = Region::full(-500.0, -500.0, 10.0, 100, 100).unwrap();
        let m = MixtureModel::new(
            MixtureKind::DensityFunction,
            vec![
                Component { weight: 1.0, mean: [-250.0, 0.0], cov: Cov2::isotropic(900.0) },
                Component { weight: 1.2, mean: [250.0, 0.0], cov: Cov2::isotropic(900.0) },
            ],
        )
        .unwrap();
        let hot = detect_hotspot(&m, &area).unwrap();
        assert!(hot.contains([250.0, 0.0]));
        assert!(!hot.contains([-250.0, 0.0]));
    }

    #[test]
    fn flat_surface_has_no_hotspot() {
        let area = Region::full(-50.0, -50.0, 10.0, 10, 10).unwrap();
        let flat = bell(3.0, [0.0, 0.0], 1e9);
        assert_eq!(detect_hotspot(&flat, &area).unwrap_err(), Error::NoHotspot);
    }

    #[test]
    fn demand_examples() {
        let whole = Region::full(-400.0, -400.0, 5.0, 160, 160).unwrap();
        let m = bell(100.0, [0.0, 0.0], 50.0);
        assert_eq!(predict_demand(&m, &whole, 0.0).unwrap(), 0.0);
        let d = predict_demand(&m, &whole, 1080.0).unwrap();
        assert_relative_eq!(d, 1.696e9, max_relative = 1e-3);
        assert_relative_eq!(predict_demand(&m, &whole, 2160.0).unwrap(), 2.0 * d, max_relative = 1e-12);
        let part = whole.from_cells(&whole.cells().filter(|c| c.0 < 80).collect::<Vec<_>>());
        assert!(predict_demand(&m, &part, 1080.0).unwrap() <= d);
    }

    #[test]
    fn per_ue_rate_examples() {
        let whole = Region::full(-400.0, -400.0, 5.0, 160, 160).unwrap();
        let m = bell(1e6 / (2.0 * std::f64::consts::PI * 2500.0), [0.0, 0.0], 50.0);
        assert_relative_eq!(avg_rate_per_ue(&m, &whole, 100).unwrap(), 1e4, max_relative = 1e-3);
        assert_relative_eq!(
            avg_rate_per_ue(&m.scaled(2.0), &whole, 100).unwrap(),
            2.0 * avg_rate_per_ue(&m, &whole, 100).unwrap(),
            max_relative = 1e-12
        );
        assert!(avg_rate_per_ue(&m, &whole, 0).is_err());
        // same UE density everywhere: hotspot share of UEs is its area share
        let hot = detect_hotspot(&m, &whole).unwrap();
        let q_all = 10_000;
        let q_hot = (q_all as f64 * hot.area() / whole.area()).round() as usize;
        assert!(avg_rate_per_ue(&m, &hot, q_hot).unwrap() >= avg_rate_per_ue(&m, &whole, q_all).unwrap());
    }

    #[test]
    fn mre_examples() {
        assert_eq!(mre(&[5.0, 7.0], &[5.0, 7.0]).unwrap().mre, 0.0);
        assert_relative_eq!(mre(&[1.1], &[1.0]).unwrap().mre, 0.1, max_relative = 1e-12);
        assert_relative_eq!(mre(&[1.1, 1.3], &[1.0, 1.0]).unwrap().mre, 0.2, max_relative = 1e-12);
        let r = mre(&[1.0, 2.0], &[0.0, 2.0]).unwrap();
        assert_eq!((r.entries, r.skipped, r.mre), (1, 1, 0.0));
    }

    fn toy_estimate(demand: f64) -> DemandEstimate<f64> {
        let hot = Region::full(0.0, 0.0, 10.0, 10, 6).unwrap();
        let m = bell(1.0, [50.0, 30.0], 1e4);
        DemandEstimate {
            density_model: m,
            hotspot: hot.clone(),
            demand_bits: demand,
            avg_rate_per_hotspot_ue_bps: 0.0,
            hotspot_ue_count: 0,
            subareas: vec![Subarea { region: hot, demand_bits: demand }],
        }
    }

    #[test]
    fn split_examples() {
        let c = cfg();
        let bound = 0.9 * 1080.0 * 1e6;
        let flat = |_: &Region<f64>, _: &[f64]| -> Result<f64> { Ok(1e6) };

        let one = split_hotspot(&toy_estimate(0.5 * bound), &flat, &c).unwrap();
        assert_eq!(one.len(), 1);

        let est = toy_estimate(2.5 * bound);
        let parts = split_hotspot(&est, &flat, &c).unwrap();
        assert_eq!(parts.len(), 3);
        let sum: f64 = parts.iter().map(|p| p.demand_bits).sum();
        assert_relative_eq!(sum, est.demand_bits, max_relative = 0.01);
        for p in &parts {
            assert_relative_eq!(p.demand_bits, est.demand_bits / 3.0, max_relative = 0.01);
        }
        let fine = est.hotspot.refined(parts[0].region.nx / est.hotspot.nx);
        let mut union = fine.empty_like();
        for p in &parts {
            for (a, b) in union.mask.iter_mut().zip(&p.region.mask) {
                assert!(!(*a && *b), "subareas overlap");
                *a |= *b;
            }
        }
        assert_eq!(union, fine);

        let tiny = |r: &Region<f64>, _: &[f64]| -> Result<f64> { Ok(r.area() * 1e-3) };
        assert!(matches!(split_hotspot(&est, &tiny, &c), Err(Error::DemandUnservable(_))));
    }

    #[test]
    fn equal_cuts_cover_everything() {
        let d = vec![1.0, 5.0, 1.0, 1.0, 2.0, 3.0, 1.0];
        for n in 1..=d.len() {
            let cuts = equal_cuts(&d, n);
            assert_eq!(cuts.len(), n);
            assert_eq!(cuts[0].start, 0);
            assert_eq!(cuts[n - 1].end, d.len());
            for w in cuts.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert!(cuts.iter().all(|r| !r.is_empty()));
        }
    }

    #[test]
    fn em_baseline_examples() {
        let whole = Region::full(-400.0, -400.0, 5.0, 160, 160).unwrap();
        let ue = MixtureModel::new(
            MixtureKind::Probabilistic,
            vec![Component { weight: 1.0, mean: [0.0, 0.0], cov: Cov2::isotropic(2500.0) }],
        )
        .unwrap();
        let rs: Vec<_> = (0..120).map(|t| rec(1e6, 0.0, 0.0, t as f64)).collect();
        let full = em_demand_baseline(&ue, &rs, &whole, &cfg()).unwrap();
        assert_relative_eq!(full, 1080.0 * 1e6, max_relative = 1e-3);
        let half = whole.from_cells(&whole.cells().filter(|c| c.0 < 80).collect::<Vec<_>>());
        assert_relative_eq!(em_demand_baseline(&ue, &rs, &half, &cfg()).unwrap(), 5.4e8, max_relative = 1e-3);
    }

    #[test]
    fn em_baseline_matches_wem_for_uniform_traffic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rs = Vec::new();
        cluster(&mut rng, 4000, [0.0, 0.0], 80.0, 500.0, &mut rs);
        let area = Region::full(-500.0, -500.0, 10.0, 100, 100).unwrap();
        let opts = FitOptions::default();
        let s = estimate_traffic_density(&rs, 1, &cfg(), &opts, Some(&area)).unwrap();
        let hot = detect_hotspot(&s, &area).unwrap();
        let wem = predict_demand(&s, &hot, 1080.0).unwrap();
        let ue = estimate_ue_distribution(&rs, 1, 1, &opts).unwrap();
        let em = em_demand_baseline(&ue, &rs, &hot, &cfg()).unwrap();
        assert_relative_eq!(wem, em, max_relative = 0.1);
    }

    #[test]
    fn kmean_examples() {
        let pts = vec![[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]];
        let s = WeightedSamples::weighted(pts, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(kmean_density_at(&s, 1, [90.0, 5.0]).unwrap(), 2.0);
        assert_eq!(kmean_density_at(&s, 4, [90.0, 5.0]).unwrap(), 2.5);
        let c = WeightedSamples::weighted(vec![[0.0, 0.0], [50.0, 0.0], [0.0, 70.0]], vec![7.0; 3]).unwrap();
        for q in [[0.0, 0.0], [300.0, -10.0], [25.0, 25.0]] {
            assert_eq!(kmean_density_at(&c, 2, q).unwrap(), 7.0);
        }
        let area = Region::full(0.0, 0.0, 10.0, 10, 10).unwrap();
        let hot = area.from_cells(&[(0, 0), (1, 0), (2, 0)]);
        // every cell sees the global mean, so the hotspot gets its area share
        let d = kmean_demand_baseline(&s, 4, &hot, &area, 1080.0).unwrap();
        assert_relative_eq!(d, 1080.0 * 10.0 * 3.0 / 100.0, max_relative = 1e-12);
        assert!(kmean_demand_baseline(&s, 5, &hot, &area, 1080.0).is_err());
        // k = 1: left half of the grid is nearest to weights 1 and 3, right half to 2 and 4
        let left = area.from_cells(&(0..5).flat_map(|x| (0..10).map(move |y| (x, y))).collect::<Vec<_>>());
        let d1 = kmean_demand_baseline(&s, 1, &left, &area, 1.0).unwrap();
        assert_relative_eq!(d1, 10.0 * (25.0 + 75.0) / (25.0 * 10.0), max_relative = 1e-12);
    }

    #[test]
    fn hotspot_count_uses_distinct_locations() {
        let hot = Region::full(0.0, 0.0, 10.0, 2, 2).unwrap();
        let rs = vec![rec(1.0, 5.0, 5.0, 1.0), rec(1.0, 5.0, 5.0, 2.0), rec(1.0, 15.0, 5.0, 1.0), rec(1.0, 50.0, 5.0, 1.0)];
        assert_eq!(hotspot_ue_count(&rs, &hot), 2);
    }
}
