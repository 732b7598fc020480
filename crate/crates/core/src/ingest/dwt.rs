use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarDecomposition<F> {
    /// Input length at each level, before odd-length padding.
    pub lengths: Vec<usize>,
    pub approx: Vec<F>,
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<F>>,
}

fn haar_step<F: Scalar>(x: &[F]) -> (Vec<F>, Vec<F>) {
    let r = F::SQRT_2().recip();
    let pair = |i: usize| (x[2 * i], *x.get(2 * i + 1).unwrap_or(&x[2 * i]));
    let n = x.len().div_ceil(2);
    let a = (0..n).map(pair).map(|(p, q)| (p + q) * r).collect();
    let d = (0..n).map(pair).map(|(p, q)| (p - q) * r).collect();
    (a, d)
}

/// Orthonormal Haar transform. Odd-length levels repeat their last sample.
pub fn haar_forward<F: Scalar>(series: &[F], levels: usize) -> Result<HaarDecomposition<F>> {
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    if series.len() < 1 << levels {
        return Err(Error::InsufficientData(format!(
            "{} samples is too short for {levels} levels",
            series.len()
        )));
    }
    let mut approx = series.to_vec();
    let mut lengths = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        lengths.push(approx.len());
        let (a, d) = haar_step(&approx);
        details.push(d);
        approx = a;
    }
    Ok(HaarDecomposition { lengths, approx, details })
}

pub fn haar_inverse<F: Scalar>(dec: &HaarDecomposition<F>) -> Vec<F> {
    let r = F::SQRT_2().recip();
    let mut x = dec.approx.clone();
    for (d, &len) in dec.details.iter().zip(&dec.lengths).rev() {
        let mut up = Vec::with_capacity(2 * x.len());
        for (&a, &d) in x.iter().zip(d) {
            up.push((a + d) * r);
            up.push((a - d) * r);
        }
        up.truncate(len);
        x = up;
    }
    x
}

fn median<F: Scalar>(v: &mut [F]) -> F {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / F::lit(2.0)
    }
}

/// Median absolute deviation scaled to a Gaussian standard deviation.
pub fn robust_std<F: Scalar>(v: &[F]) -> F {
    if v.is_empty() {
        return F::zero();
    }
    let mut w = v.to_vec();
    let m = median(&mut w);
    let mut dev: Vec<F> = v.iter().map(|&x| (x - m).abs()).collect();
    F::lit(1.4826) * median(&mut dev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct DetectConfig<F> {
    pub levels: usize,
    pub threshold_sigmas: F,
}

impl<F: Scalar> Default for DetectConfig<F> {
    fn default() -> Self {
        Self { levels: 2, threshold_sigmas: F::lit(3.0) }
    }
}

/// Hours flagged as congested, ascending.
///
/// A detail coefficient is an outlier when its magnitude exceeds
/// `threshold_sigmas` robust deviations of its level. Each outlier flags the
/// busiest hour of the span it covers.
pub fn dwt_congestion_detect<F: Scalar>(series: &[F], cfg: &DetectConfig<F>) -> Result<Vec<usize>> {
    if series.len() < 4 {
        return Err(Error::InsufficientData(format!("series of {} hours, need at least 4", series.len())));
    }
    if !(cfg.threshold_sigmas >= F::zero()) {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    let dec = haar_forward(series, cfg.levels)?;
    let mut flagged = vec![false; series.len()];
    for (j, d) in dec.details.iter().enumerate() {
        let limit = cfg.threshold_sigmas * robust_std(d);
        let span = 1usize << (j + 1);
        for (k, &c) in d.iter().enumerate() {
            if !(c.abs() > limit) {
                continue;
            }
            let lo = k * span;
            let hi = ((k + 1) * span).min(series.len());
            let peak = (lo..hi).fold(lo, |b, h| if series[h] > series[b] { h } else { b });
            flagged[peak] = true;
        }
    }
    Ok(flagged.iter().enumerate().filter(|(_, &f)| f).map(|(h, _)| h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_two_levels() {
        let dec = haar_forward(&[4.0, 2.0, 5.0, 5.0], 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((dec.details[0][0] - 2.0 * r).abs() < 1e-12);
        assert_eq!(dec.details[0][1], 0.0);
        // level-1 approximations are 6r and 10r
        assert!((dec.details[1][0] - (6.0 * r - 10.0 * r) * r).abs() < 1e-12);
        assert!((dec.approx[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_reconstruction() {
        for n in [4, 5, 7, 24, 168, 171] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin() * 10.0 + i as f64).collect();
            let back = haar_inverse(&haar_forward(&x, 2).unwrap());
            assert_eq!(back.len(), n);
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn constant_series_has_no_flags() {
        assert!(dwt_congestion_detect(&[5.0; 48], &DetectConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn spike_on_daily_sinusoid() {
        let mut x: Vec<f64> = (0..168)
            .map(|h| 100.0 + 40.0 * (2.0 * std::f64::consts::PI * h as f64 / 24.0).sin())
            .collect();
        x[77] += 5.0 * 40.0;
        assert_eq!(dwt_congestion_detect(&x, &DetectConfig::default()).unwrap(), vec![77]);
        let never = DetectConfig { levels: 2, threshold_sigmas: f64::INFINITY };
        assert!(dwt_congestion_detect(&x, &never).unwrap().is_empty());
    }

    #[test]
    fn short_series_rejected() {
        assert!(dwt_congestion_detect(&[1.0, 2.0, 3.0], &DetectConfig::default()).is_err());
    }

    #[test]
    fn robust_std_of_known_sample() {
        // median 3, deviations 2,1,0,1,2 -> MAD 1
        assert!((robust_std(&[1.0f64, 2.0, 3.0, 4.0, 5.0]) - 1.4826).abs() < 1e-12);
    }
}
