use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::RawTrafficRow;
use super::partition::Partition;
use super::sub_seed;
use crate::error::{Error, Result};
use crate::geom::{dist2, Region};
use crate::learning::TransmissionRecord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelConfig {
    pub noise_sigma_m: f64,
    pub max_components: usize,
    pub sigma_min_m: f64,
    pub sigma_max_m: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { noise_sigma_m: 3.0, max_components: 3, sigma_min_m: 20.0, sigma_max_m: 80.0 }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma_m >= 0.0 && self.max_components >= 1 && self.sigma_min_m > 0.0 && self.sigma_max_m >= self.sigma_min_m) {
            return Err(Error::InvalidParameter("label config needs noise >= 0, >= 1 component, 0 < sigma_min <= sigma_max".into()));
        }
        Ok(())
    }
}

/// Isotropic Gaussian the labels of one BS are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelComponent {
    pub weight: f64,
    pub mean: [f64; 2],
    pub sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsLabels<F> {
    pub bs_id: u32,
    pub components: Vec<LabelComponent>,
    /// One record per packet, time ordered, one-second slots.
    pub records: Vec<TransmissionRecord<F>>,
    pub skipped_hours: usize,
}

fn uniform_in_region<F: Scalar>(region: &Region<F>, cells: &[(usize, usize)], rng: &mut ChaCha8Rng) -> [f64; 2] {
    let (ix, iy) = cells[rng.random_range(0..cells.len())];
    let h = region.cell_size.as_f64();
    let o = [region.origin_x.as_f64(), region.origin_y.as_f64()];
    [o[0] + (ix as f64 + rng.random::<f64>()) * h, o[1] + (iy as f64 + rng.random::<f64>()) * h]
}

/// Moves `p` to the nearest cell center of `region` when it falls outside.
fn clip<F: Scalar>(region: &Region<F>, centers: &[[F; 2]], p: [F; 2]) -> [F; 2] {
    if region.contains(p) {
        return p;
    }
    let mut best = (F::infinity(), p);
    for &c in centers {
        let d = dist2(c, p);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

/// Labels for one BS. `rows` must all belong to `bs_id`.
pub fn synthesize_bs_labels<F: Scalar>(
    bs_id: u32,
    rows: &[RawTrafficRow],
    region: &Region<F>,
    cfg: &LabelConfig,
    seed: u64,
) -> Result<BsLabels<F>> {
    cfg.validate()?;
    let cells: Vec<_> = region.cells().collect();
    if cells.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let centers = region.centers();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, u64::from(bs_id)));
    let k = rng.random_range(1..=cfg.max_components);
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = raw.iter().sum();
    let components: Vec<LabelComponent> = raw
        .iter()
        .map(|w| LabelComponent {
            weight: w / total,
            mean: uniform_in_region(region, &cells, &mut rng),
            sigma_m: rng.random_range(cfg.sigma_min_m..=cfg.sigma_max_m),
        })
        .collect();
    let noise = Normal::new(0.0, cfg.noise_sigma_m).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let std = Normal::new(0.0, 1.0).expect("unit normal");

    let mut records = Vec::new();
    let mut skipped_hours = 0;
    for r in rows {
        debug_assert_eq!(r.bs_id, bs_id);
        let bits = (r.bytes * 8.0).round() as u64;
        if r.packets == 0 {
            if bits > 0 {
                log::warn!("BS {bs_id} hour {}: {} bytes over zero packets, hour skipped", r.hour, r.bytes);
                skipped_hours += 1;
            }
            continue;
        }
        let (base, extra) = (bits / r.packets, bits % r.packets);
        let start = f64::from(r.hour) * 3600.0;
        for i in 0..r.packets {
            let b = base + u64::from(i < extra);
            let t = start + rng.random_range(0..3600u32) as f64;
            let mut u = rng.random::<f64>();
            let c = components
                .iter()
                .find(|c| {
                    u -= c.weight;
                    u < 0.0
                })
                .unwrap_or(&components[k - 1]);
            let p = [
                c.mean[0] + c.sigma_m * std.sample(&mut rng) + noise.sample(&mut rng),
                c.mean[1] + c.sigma_m * std.sample(&mut rng) + noise.sample(&mut rng),
            ];
            records.push(TransmissionRecord {
                rate_bps: F::lit(b as f64),
                location: clip(region, &centers, [F::lit(p[0]), F::lit(p[1])]),
                time_s: F::lit(t),
            });
        }
    }
    records.sort_by(|a, b| a.time_s.partial_cmp(&b.time_s).unwrap_or(std::cmp::Ordering::Equal));
    Ok(BsLabels { bs_id, components, records, skipped_hours })
}

/// Per-second, per-location labels for every BS in `partition`. Each BS
/// draws from its own seed derived from `(seed, bs id)`, so the result does
/// not depend on processing order.
pub fn synthesize_labels<F: Scalar>(
    traffic: &[RawTrafficRow],
    partition: &Partition<F>,
    cfg: &LabelConfig,
    seed: u64,
) -> Result<Vec<BsLabels<F>>> {
    partition
        .ids
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let rows: Vec<_> = traffic.iter().filter(|r| r.bs_id == id).copied().collect();
            synthesize_bs_labels(id, &rows, &partition.region(i), cfg, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::dataset::RawBsRecord;
    use crate::ingest::partition::{project_and_partition, PartitionConfig};

    fn setup() -> (Vec<RawTrafficRow>, Partition<f64>) {
        let bs = [
            RawBsRecord { id: 1, longitude: 114.30, latitude: 30.60 },
            RawBsRecord { id: 2, longitude: 114.31, latitude: 30.605 },
        ];
        let part = project_and_partition(&bs, &PartitionConfig { cell_m: 20.0, margin_m: 300.0 }).unwrap();
        let rows = vec![
            RawTrafficRow { bs_id: 1, hour: 0, users: 10, packets: 1000, bytes: 123_457.0 },
            RawTrafficRow { bs_id: 1, hour: 1, users: 10, packets: 7, bytes: 1.0 },
            RawTrafficRow { bs_id: 2, hour: 0, users: 3, packets: 300, bytes: 99_999.0 },
            RawTrafficRow { bs_id: 2, hour: 2, users: 3, packets: 0, bytes: 10.0 },
        ];
        (rows, part)
    }

    #[test]
    fn same_seed_same_streams() {
        let (rows, part) = setup();
        let a = synthesize_labels(&rows, &part, &LabelConfig::default(), 9).unwrap();
        let b = synthesize_labels(&rows, &part, &LabelConfig::default(), 9).unwrap();
        assert_eq!(a, b);
        let c = synthesize_labels(&rows, &part, &LabelConfig::default(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn one_record_per_packet_and_bits_conserved() {
        let (rows, part) = setup();
        let labels = synthesize_labels(&rows, &part, &LabelConfig::default(), 1).unwrap();
        for r in &rows {
            let l = labels.iter().find(|l| l.bs_id == r.bs_id).unwrap();
            let in_hour: Vec<_> = l
                .records
                .iter()
                .filter(|x| (x.time_s / 3600.0).floor() as u32 == r.hour)
                .collect();
            if r.packets == 0 {
                assert!(in_hour.is_empty());
                continue;
            }
            assert_eq!(in_hour.len() as u64, r.packets);
            let bits: f64 = in_hour.iter().map(|x| x.rate_bps).sum();
            assert_eq!(bits, r.bytes * 8.0);
        }
        assert_eq!(labels[1].skipped_hours, 1);
    }

    #[test]
    fn labels_stay_in_their_region() {
        let (rows, part) = setup();
        let labels = synthesize_labels(&rows, &part, &LabelConfig::default(), 3).unwrap();
        for (i, l) in labels.iter().enumerate() {
            let region = part.region(i);
            assert!(l.records.iter().all(|r| region.contains(r.location)));
            assert!(l.records.windows(2).all(|w| w[0].time_s <= w[1].time_s));
            assert!(l.components.iter().all(|c| (20.0..=80.0).contains(&c.sigma_m)));
        }
    }

    #[test]
    fn per_bs_streams_are_order_independent() {
        let (rows, part) = setup();
        let all = synthesize_labels(&rows, &part, &LabelConfig::default(), 5).unwrap();
        let only: Vec<_> = rows.iter().filter(|r| r.bs_id == 2).copied().collect();
        let single = synthesize_bs_labels(2, &only, &part.region(1), &LabelConfig::default(), 5).unwrap();
        assert_eq!(all[1], single);
    }
}
