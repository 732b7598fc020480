//! Service-point search and minimum transmit power for a hotspot.

use serde::{Deserialize, Serialize};

use crate::channel::{CapacityProfile, ChannelParams, Quadrature};
use crate::error::{Error, Result};
use crate::geom::{Region, SpatialPoint};
use crate::scalar::Scalar;

/// Demand a single UAV must carry over one service interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceTarget<F> {
    pub demand_bits: F,
    pub service_s: F,
    pub eta: F,
    pub p_max_w: F,
}

impl<F: Scalar> ServiceTarget<F> {
    /// Average rate the hotspot must receive, `d / (eta T)`.
    pub fn required_rate(&self) -> F {
        self.demand_bits / (self.eta * self.service_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct PlacementConfig<F> {
    pub altitude_min_m: F,
    pub altitude_max_m: F,
    pub restarts: usize,
    pub max_evals: usize,
    /// Cells are merged into blocks this wide while searching.
    pub quadrature_block_m: F,
}

impl<F: Scalar> Default for PlacementConfig<F> {
    fn default() -> Self {
        Self {
            altitude_min_m: F::lit(50.0),
            altitude_max_m: F::lit(500.0),
            restarts: 5,
            max_evals: 300,
            quadrature_block_m: F::lit(10.0),
        }
    }
}

impl<F: Scalar> PlacementConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_min_m > F::zero() && self.altitude_max_m > self.altitude_min_m) {
            return Err(Error::InvalidParameter(format!(
                "altitude bounds [{}, {}] are invalid",
                self.altitude_min_m, self.altitude_max_m
            )));
        }
        if !(self.quadrature_block_m > F::zero()) {
            return Err(Error::InvalidParameter("quadrature block must be positive".into()));
        }
        if self.max_evals < 10 {
            return Err(Error::InvalidParameter("max_evals must be at least 10".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult<F> {
    pub service_point: SpatialPoint<F>,
    pub min_power_w: F,
    pub achieved_capacity_bps: F,
}

const BISECTION_REL_TOL: f64 = 1e-9;
const BISECTION_MAX_ITER: usize = 200;

/// Smallest power meeting `rate` on a precomputed profile, or `None` if
/// even `p_max` falls short.
pub fn min_power_for_rate<F: Scalar>(profile: &CapacityProfile<F>, rate: F, p_max: F) -> Option<F> {
    if !(rate > F::zero()) {
        return Some(F::min_positive_value());
    }
    if profile.capacity(p_max) < rate {
        return None;
    }
    let (mut lo, mut hi) = (F::zero(), p_max);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= hi * F::lit(BISECTION_REL_TOL) {
            break;
        }
        let mid = (lo + hi) / F::lit(2.0);
        if profile.capacity(mid) >= rate {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Smallest transmit power at `x` that lets the hotspot receive
/// `target.demand_bits` over the interval.
pub fn min_required_power<F: Scalar>(
    x: &SpatialPoint<F>,
    target: &ServiceTarget<F>,
    hotspot: &Region<F>,
    ue_density: &[F],
    params: &ChannelParams<F>,
) -> Result<Option<F>> {
    let profile = CapacityProfile::new(x, hotspot, ue_density, params)?;
    Ok(min_power_for_rate(&profile, target.required_rate(), target.p_max_w))
}

/// Derivative-free minimizer over a box, clamping every trial point.
pub(crate) fn nelder_mead<F: Scalar, const D: usize>(
    mut f: impl FnMut(&[F; D]) -> F,
    start: [F; D],
    step: [F; D],
    lo: [F; D],
    hi: [F; D],
    max_evals: usize,
) -> ([F; D], F) {
    let clamp = |mut p: [F; D]| {
        for i in 0..D {
            p[i] = p[i].max(lo[i]).min(hi[i]);
        }
        p
    };
    let half = F::lit(0.5);
    let mut evals = 0;
    let mut eval = |p: &[F; D], evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_nan() { F::infinity() } else { v }
    };

    let mut simplex: Vec<([F; D], F)> = Vec::with_capacity(D + 1);
    let s0 = clamp(start);
    simplex.push((s0, eval(&s0, &mut evals)));
    for i in 0..D {
        let mut p = s0;
        p[i] = p[i] + step[i];
        if p[i] > hi[i] {
            p[i] = s0[i] - step[i];
        }
        let p = clamp(p);
        simplex.push((p, eval(&p, &mut evals)));
    }

    let sort = |s: &mut Vec<([F; D], F)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    };
    while evals < max_evals {
        sort(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[D].1;
        let spread_f = (worst - best).abs() <= F::lit(1e-10) * (best.abs() + F::lit(1e-12));
        let small = (0..D).all(|i| {
            simplex
                .iter()
                .map(|v| (v.0[i] - simplex[0].0[i]).abs())
                .fold(F::zero(), F::max)
                <= step[i] * F::lit(1e-4)
        });
        if spread_f && small {
            break;
        }

        let mut centroid = [F::zero(); D];
        for v in &simplex[..D] {
            for (c, &x) in centroid.iter_mut().zip(&v.0) {
                *c = *c + x / F::lit(D as f64);
            }
        }
        let along = |t: F| {
            let mut p = [F::zero(); D];
            for i in 0..D {
                p[i] = centroid[i] + t * (simplex[D].0[i] - centroid[i]);
            }
            clamp(p)
        };

        let xr = along(-F::one());
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-F::lit(2.0));
            let fe = eval(&xe, &mut evals);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[D].1 {
                let xc = along(-half);
                (xc, eval(&xc, &mut evals))
            } else {
                let xc = along(half);
                (xc, eval(&xc, &mut evals))
            };
            if fc < simplex[D].1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let mut p = [F::zero(); D];
                    for i in 0..D {
                        p[i] = b[i] + half * (v.0[i] - b[i]);
                    }
                    let p = clamp(p);
                    *v = (p, eval(&p, &mut evals));
                }
            }
        }
    }
    sort(&mut simplex);
    simplex[0]
}

struct SearchBox<F> {
    lo: [F; 3],
    hi: [F; 3],
    starts: Vec<[F; 3]>,
    step: [F; 3],
}

fn search_box<F: Scalar>(hotspot: &Region<F>, ue_density: &[F], cfg: &PlacementConfig<F>) -> Result<SearchBox<F>> {
    cfg.validate()?;
    if hotspot.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (x0, y0, x1, y1) = hotspot.grid_bounds();
    let c = hotspot
        .weighted_centroid(ue_density)
        .ok_or(Error::NoPositiveWeight)?;
    let (zl, zh) = (cfg.altitude_min_m, cfg.altitude_max_m);
    let zmid = (zl + zh) / F::lit(2.0);
    let zq = (zh - zl) / F::lit(4.0);
    let r = (hotspot.area() / F::PI()).sqrt() / F::lit(2.0);
    let r = r.max(hotspot.cell_size);
    let perturb = [
        [r, F::zero(), -zq],
        [-r, F::zero(), -zq],
        [F::zero(), r, zq],
        [F::zero(), -r, zq],
        [F::zero(), F::zero(), -zq * F::lit(1.8)],
    ];
    let mut starts = vec![[c[0], c[1], zmid]];
    for d in perturb.iter().cycle().take(cfg.restarts) {
        starts.push([c[0] + d[0], c[1] + d[1], zmid + d[2]]);
    }
    Ok(SearchBox {
        lo: [x0, y0, zl],
        hi: [x1, y1, zh],
        starts,
        step: [r, r, zq],
    })
}

fn point<F: Scalar>(v: &[F; 3]) -> SpatialPoint<F> {
    SpatialPoint { x: v[0], y: v[1], z: v[2] }
}

/// Service point minimizing the power needed to carry `target`.
///
/// Runs a bounded Nelder-Mead search from the density centroid at
/// mid-altitude and from `cfg.restarts` fixed perturbations of it. Points
/// where `p_max` is insufficient score above `p_max` in proportion to the
/// shortfall so the search is pulled back toward feasibility.
pub fn optimal_service_point<F: Scalar>(
    hotspot: &Region<F>,
    ue_density: &[F],
    target: &ServiceTarget<F>,
    params: &ChannelParams<F>,
    cfg: &PlacementConfig<F>,
) -> Result<PlacementResult<F>> {
    crate::channel::check_normalized(hotspot, ue_density)?;
    let sb = search_box(hotspot, ue_density, cfg)?;
    let rate = target.required_rate();
    let p_max = target.p_max_w;
    let quad = Quadrature::blocked(hotspot, ue_density, cfg.quadrature_block_m)?;

    let objective = |v: &[F; 3]| -> F {
        let Ok(profile) = CapacityProfile::from_quadrature(&point(v), &quad, params) else {
            return F::infinity();
        };
        match min_power_for_rate(&profile, rate, p_max) {
            Some(p) => p,
            None => p_max * (F::one() + (rate - profile.capacity(p_max)) / rate),
        }
    };

    let mut best: Option<([F; 3], F)> = None;
    for s in &sb.starts {
        let (v, f) = nelder_mead(objective, *s, sb.step, sb.lo, sb.hi, cfg.max_evals);
        if best.is_none_or(|b| f < b.1) {
            best = Some((v, f));
        }
    }
    let (v, _) = best.expect("at least one start");
    let sp = point(&v);
    let profile = CapacityProfile::new(&sp, hotspot, ue_density, params)?;
    let p = min_power_for_rate(&profile, rate, p_max).ok_or(Error::NoFeasiblePlacement)?;
    Ok(PlacementResult {
        service_point: sp,
        min_power_w: p,
        achieved_capacity_bps: profile.capacity(p),
    })
}

/// Point maximizing the hotspot capacity at a fixed power.
pub fn max_capacity_point<F: Scalar>(
    hotspot: &Region<F>,
    ue_density: &[F],
    power_w: F,
    params: &ChannelParams<F>,
    cfg: &PlacementConfig<F>,
) -> Result<(SpatialPoint<F>, F)> {
    crate::channel::check_normalized(hotspot, ue_density)?;
    let sb = search_box(hotspot, ue_density, cfg)?;
    let quad = Quadrature::blocked(hotspot, ue_density, cfg.quadrature_block_m)?;
    let objective = |v: &[F; 3]| -> F {
        match CapacityProfile::from_quadrature(&point(v), &quad, params) {
            Ok(p) => -p.capacity(power_w),
            Err(_) => F::infinity(),
        }
    };
    let mut best: Option<([F; 3], F)> = None;
    for s in &sb.starts {
        let (v, f) = nelder_mead(objective, *s, sb.step, sb.lo, sb.hi, cfg.max_evals);
        if best.is_none_or(|b| f < b.1) {
            best = Some((v, f));
        }
    }
    let (v, _) = best.expect("at least one start");
    let sp = point(&v);
    let c = CapacityProfile::new(&sp, hotspot, ue_density, params)?.capacity(power_w);
    Ok((sp, c))
}
