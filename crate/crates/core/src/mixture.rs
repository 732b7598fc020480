//! Two-dimensional Gaussian mixtures.
//!
//! A [`MixtureModel`] is either a probability density (weights sum to one,
//! normalized Gaussian components) or a traffic-density surface made of
//! unnormalized Gaussian bells whose coefficients carry absolute scale.
//! Both are fitted by the same log-space EM iteration; the weighted variant
//! multiplies every sample's contribution by its observed weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist2, Region};
use crate::scalar::Scalar;

/// Symmetric 2x2 covariance `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2<F> {
    pub xx: F,
    pub xy: F,
    pub yy: F,
}

impl<F: Scalar> Cov2<F> {
    pub fn isotropic(var: F) -> Self {
        Self { xx: var, xy: F::zero(), yy: var }
    }

    pub fn det(&self) -> F {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (F, F) {
        let half = F::lit(0.5);
        let mean = (self.xx + self.yy) * half;
        let d = (self.xx - self.yy) * half;
        let r = (d * d + self.xy * self.xy).sqrt();
        (mean - r, mean + r)
    }

    /// Squared Mahalanobis distance of the offset `(dx, dy)`.
    pub fn mahalanobis2(&self, dx: F, dy: F) -> F {
        let det = self.det();
        (self.yy * dx * dx - F::lit(2.0) * self.xy * dx * dy + self.xx * dy * dy) / det
    }

    /// Lifts the spectrum so the smallest eigenvalue is at least `floor`.
    /// Returns the shift that was added to the diagonal (zero if none).
    pub fn regularize(&mut self, floor: F) -> F {
        let (lo, _) = self.eigenvalues();
        if lo >= floor && self.det() > F::zero() {
            return F::zero();
        }
        let shift = (floor - lo).max(floor);
        self.xx = self.xx + shift;
        self.yy = self.yy + shift;
        shift
    }

    fn is_valid(&self) -> bool {
        let (lo, _) = self.eigenvalues();
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite() && lo > F::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureKind {
    /// Weights sum to one; components are normalized Gaussian pdfs.
    Probabilistic,
    /// Coefficients scale unnormalized Gaussian bells `exp(-m/2)`.
    DensityFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component<F> {
    pub weight: F,
    pub mean: [F; 2],
    pub cov: Cov2<F>,
}

impl<F: Scalar> Component<F> {
    fn log_normal_pdf(&self, y: [F; 2]) -> F {
        let m = self.cov.mahalanobis2(y[0] - self.mean[0], y[1] - self.mean[1]);
        -(F::lit(2.0) * F::PI()).ln() - F::lit(0.5) * self.cov.det().ln() - F::lit(0.5) * m
    }

    fn bell(&self, y: [F; 2]) -> F {
        let m = self.cov.mahalanobis2(y[0] - self.mean[0], y[1] - self.mean[1]);
        (-F::lit(0.5) * m).exp()
    }

    /// Integral of the unnormalized bell over the plane: `2*pi*sqrt(det)`.
    pub fn bell_mass(&self) -> F {
        F::lit(2.0) * F::PI() * self.cov.det().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel<F> {
    pub kind: MixtureKind,
    pub components: Vec<Component<F>>,
}

impl<F: Scalar> MixtureModel<F> {
    pub fn new(kind: MixtureKind, components: Vec<Component<F>>) -> Result<Self> {
        let model = Self { kind, components };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("mixture has no components".into()));
        }
        for (k, c) in self.components.iter().enumerate() {
            if !c.cov.is_valid() {
                return Err(Error::InvalidParameter(format!("component {k} covariance is not positive definite")));
            }
            if !(c.mean[0].is_finite() && c.mean[1].is_finite()) {
                return Err(Error::InvalidParameter(format!("component {k} mean is not finite")));
            }
            if !c.weight.is_finite() || c.weight < F::zero() {
                return Err(Error::InvalidParameter(format!("component {k} weight is invalid")));
            }
        }
        match self.kind {
            MixtureKind::Probabilistic => {
                let s: F = self.components.iter().map(|c| c.weight).sum();
                if (s - F::one()).abs() > F::lit(1e-9).max(F::epsilon() * F::lit(64.0)) {
                    return Err(Error::InvalidParameter(format!("weights sum to {s}, expected 1")));
                }
            }
            MixtureKind::DensityFunction => {
                if self.components.iter().any(|c| !(c.weight > F::zero())) {
                    return Err(Error::InvalidParameter("density coefficients must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Value at `point`: a pdf for probabilistic models, a density surface otherwise.
    pub fn eval(&self, point: [F; 2]) -> F {
        match self.kind {
            MixtureKind::Probabilistic => self
                .components
                .iter()
                .map(|c| c.weight * c.log_normal_pdf(point).exp())
                .sum(),
            MixtureKind::DensityFunction => self.components.iter().map(|c| c.weight * c.bell(point)).sum(),
        }
    }

    /// Closed-form integral over the whole plane.
    pub fn plane_integral(&self) -> F {
        match self.kind {
            MixtureKind::Probabilistic => self.components.iter().map(|c| c.weight).sum(),
            MixtureKind::DensityFunction => self.components.iter().map(|c| c.weight * c.bell_mass()).sum(),
        }
    }

    /// Multiplies every coefficient by `factor`. Only meaningful for density functions.
    pub fn scaled(&self, factor: F) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.weight = c.weight * factor;
        }
        out
    }

    pub fn means(&self) -> Vec<[F; 2]> {
        self.components.iter().map(|c| c.mean).collect()
    }
}

pub fn mixture_eval<F: Scalar>(model: &MixtureModel<F>, point: [F; 2]) -> F {
    model.eval(point)
}

/// Midpoint-rule integral of the model over the cells of `region`.
pub fn region_integral<F: Scalar>(model: &MixtureModel<F>, region: &Region<F>) -> Result<F> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(region.integrate(|y| model.eval(y)))
}

/// Sample points with optional nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples<F> {
    pub points: Vec<[F; 2]>,
    pub weights: Option<Vec<F>>,
}

impl<F: Scalar> WeightedSamples<F> {
    pub fn unweighted(points: Vec<[F; 2]>) -> Self {
        Self { points, weights: None }
    }

    pub fn weighted(points: Vec<[F; 2]>, weights: Vec<F>) -> Result<Self> {
        let s = Self { points, weights: Some(weights) };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidParameter("non-finite sample point".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.points.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} weights for {} points",
                    w.len(),
                    self.points.len()
                )));
            }
            if w.iter().any(|v| !v.is_finite() || *v < F::zero()) {
                return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
            }
            if !w.iter().any(|v| *v > F::zero()) {
                return Err(Error::NoPositiveWeight);
            }
        } else if self.points.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        Ok(())
    }

    /// Per-point weights, ones when unweighted.
    pub fn weight_vec(&self) -> Vec<F> {
        self.weights.clone().unwrap_or_else(|| vec![F::one(); self.points.len()])
    }

    pub fn total_weight(&self) -> F {
        match &self.weights {
            Some(w) => w.iter().copied().sum(),
            None => F::lit(self.points.len() as f64),
        }
    }

    /// Translates every point by `(dx, dy)`.
    pub fn translated(&self, dx: F, dy: F) -> Self {
        Self {
            points: self.points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
            weights: self.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<F> {
    /// Stop once the (weighted) log-likelihood improves by no more than `tol * |LL|`.
    pub tol: F,
    pub max_iter: usize,
    /// Smallest covariance eigenvalue allowed, in square meters.
    pub cov_floor: F,
}

impl<F: Scalar> Default for FitOptions<F> {
    fn default() -> Self {
        Self { tol: F::lit(1e-6), max_iter: 500, cov_floor: F::lit(1e-6) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<F> {
    pub model: MixtureModel<F>,
    /// Log-likelihood of every parameter set visited, the returned one last.
    /// For weighted fits this is the weighted log-likelihood of the
    /// normalized iteration, before any rescaling of the coefficients.
    pub log_likelihood: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
}

struct EmOutcome<F> {
    components: Vec<Component<F>>,
    trace: Vec<F>,
    iterations: usize,
    converged: bool,
}

fn log_sum_exp<F: Scalar>(v: &[F]) -> F {
    let m = v.iter().copied().fold(F::neg_infinity(), F::max);
    if m == F::neg_infinity() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<F>().ln()
}

/// Weighted EM on normalized components. `init` weights must sum to one.
fn run_em<F: Scalar>(points: &[[F; 2]], weights: &[F], mut comps: Vec<Component<F>>, opts: &FitOptions<F>) -> EmOutcome<F> {
    let n = points.len();
    let k = comps.len();
    let mut resp = vec![F::zero(); n * k];
    let mut logs = vec![F::zero(); k];
    let mut trace: Vec<F> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        // E step
        let log_w: Vec<F> = comps.iter().map(|c| c.weight.ln()).collect();
        let mut ll = F::zero();
        for (i, &y) in points.iter().enumerate() {
            for (j, c) in comps.iter().enumerate() {
                logs[j] = log_w[j] + c.log_normal_pdf(y);
            }
            let lse = log_sum_exp(&logs);
            ll = ll + weights[i] * lse;
            for j in 0..k {
                resp[i * k + j] = (logs[j] - lse).exp();
            }
        }
        if let Some(&prev) = trace.last() {
            if ll - prev <= opts.tol * ll.abs() {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        // M step
        let mut mass = vec![F::zero(); k];
        for j in 0..k {
            let (mut sw, mut sx, mut sy) = (F::zero(), F::zero(), F::zero());
            for (i, &y) in points.iter().enumerate() {
                let r = resp[i * k + j] * weights[i];
                sw = sw + r;
                sx = sx + r * y[0];
                sy = sy + r * y[1];
            }
            mass[j] = sw;
            if !(sw > F::zero()) {
                continue;
            }
            let mean = [sx / sw, sy / sw];
            let (mut cxx, mut cxy, mut cyy) = (F::zero(), F::zero(), F::zero());
            for (i, &y) in points.iter().enumerate() {
                let r = resp[i * k + j] * weights[i];
                let dx = y[0] - mean[0];
                let dy = y[1] - mean[1];
                cxx = cxx + r * dx * dx;
                cxy = cxy + r * dx * dy;
                cyy = cyy + r * dy * dy;
            }
            let mut cov = Cov2 { xx: cxx / sw, xy: cxy / sw, yy: cyy / sw };
            cov.regularize(opts.cov_floor);
            comps[j].mean = mean;
            comps[j].cov = cov;
        }
        let total: F = mass.iter().copied().sum();
        for (c, m) in comps.iter_mut().zip(&mass) {
            c.weight = *m / total;
        }
    }

    EmOutcome { components: comps, trace, iterations, converged }
}

fn sample_covariance<F: Scalar>(points: &[[F; 2]], floor: F) -> Cov2<F> {
    let n = F::lit(points.len() as f64);
    let mx = points.iter().map(|p| p[0]).sum::<F>() / n;
    let my = points.iter().map(|p| p[1]).sum::<F>() / n;
    let mut c = Cov2 { xx: F::zero(), xy: F::zero(), yy: F::zero() };
    for p in points {
        let dx = p[0] - mx;
        let dy = p[1] - my;
        c.xx = c.xx + dx * dx / n;
        c.xy = c.xy + dx * dy / n;
        c.yy = c.yy + dy * dy / n;
    }
    c.regularize(floor);
    c
}

/// k-means++ seeding of `l` centers.
fn kmeanspp_centers<F: Scalar>(points: &[[F; 2]], l: usize, seed: u64) -> Vec<[F; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(*p, centers[0]).as_f64()).collect();
    while centers.len() < l {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(*p, c).as_f64());
        }
    }
    centers
}

/// Fits a probabilistic mixture of `l` components to unweighted samples.
pub fn em_fit<F: Scalar>(samples: &WeightedSamples<F>, l: usize, opts: &FitOptions<F>, seed: u64) -> Result<FitReport<F>> {
    samples.validate()?;
    let n = samples.len();
    if l == 0 {
        return Err(Error::InvalidParameter("number of components must be at least 1".into()));
    }
    if l > n {
        return Err(Error::InsufficientData(format!("{l} components for {n} samples")));
    }
    let first = samples.points[0];
    if samples.points.iter().all(|p| *p == first) {
        return Err(Error::InsufficientData("all samples are identical".into()));
    }
    let cov = sample_covariance(&samples.points, opts.cov_floor);
    let w0 = F::one() / F::lit(l as f64);
    let init = kmeanspp_centers(&samples.points, l, seed)
        .into_iter()
        .map(|mean| Component { weight: w0, mean, cov })
        .collect();
    let ones = vec![F::one(); n];
    let out = run_em(&samples.points, &ones, init, opts);
    let mut components = out.components;
    components.retain(|c| c.weight > F::zero());
    let s: F = components.iter().map(|c| c.weight).sum();
    for c in &mut components {
        c.weight = c.weight / s;
    }
    Ok(FitReport {
        model: MixtureModel::new(MixtureKind::Probabilistic, components)?,
        log_likelihood: out.trace,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Distinct positive-weight points ranked by (weight desc, x asc, y asc),
/// with the weights of coincident points merged.
fn ranked_distinct<F: Scalar>(points: &[[F; 2]], weights: &[F]) -> Vec<([F; 2], F)> {
    let mut items: Vec<([F; 2], F)> = points
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > F::zero())
        .map(|(p, w)| (*p, *w))
        .collect();
    items.sort_by(|a, b| {
        a.0[0]
            .partial_cmp(&b.0[0])
            .unwrap()
            .then(a.0[1].partial_cmp(&b.0[1]).unwrap())
    });
    let mut merged: Vec<([F; 2], F)> = Vec::with_capacity(items.len());
    for (p, w) in items {
        match merged.last_mut() {
            Some(last) if last.0 == p => last.1 = last.1 + w,
            _ => merged.push((p, w)),
        }
    }
    merged.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(a.0[0].partial_cmp(&b.0[0]).unwrap())
            .then(a.0[1].partial_cmp(&b.0[1]).unwrap())
    });
    merged
}

/// Fits a traffic-density surface of `k` Gaussian bells by weighted EM.
///
/// Means start at the `k` highest-weight locations, covariances at the
/// identity, coefficients equal. The iteration runs on normalized
/// coefficients; the returned bells are scaled so that the surface
/// integrates to the total sample weight over the plane.
pub fn wem_fit<F: Scalar>(samples: &WeightedSamples<F>, k: usize, opts: &FitOptions<F>) -> Result<FitReport<F>> {
    samples.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("number of components must be at least 1".into()));
    }
    let weights = samples.weight_vec();
    let ranked = ranked_distinct(&samples.points, &weights);
    if ranked.is_empty() {
        return Err(Error::NoPositiveWeight);
    }
    if ranked.len() < k {
        return Err(Error::InsufficientData(format!(
            "{k} components for {} distinct positive-weight points",
            ranked.len()
        )));
    }
    let w0 = F::one() / F::lit(k as f64);
    let init = ranked
        .iter()
        .take(k)
        .map(|(p, _)| Component { weight: w0, mean: *p, cov: Cov2::isotropic(F::one()) })
        .collect();
    let out = run_em(&samples.points, &weights, init, opts);
    let mass = samples.total_weight();
    let components: Vec<Component<F>> = out
        .components
        .into_iter()
        .filter(|c| c.weight > F::zero())
        .map(|c| Component { weight: mass * c.weight / c.bell_mass(), ..c })
        .collect();
    Ok(FitReport {
        model: MixtureModel::new(MixtureKind::DensityFunction, components)?,
        log_likelihood: out.trace,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Pairs the components of two models greedily by nearest mean; returns
/// index pairs `(a, b)`.
pub fn pair_components<F: Scalar>(a: &MixtureModel<F>, b: &MixtureModel<F>) -> Vec<(usize, usize)> {
    let mut cand: Vec<(F, usize, usize)> = Vec::new();
    for (i, ca) in a.components.iter().enumerate() {
        for (j, cb) in b.components.iter().enumerate() {
            cand.push((dist2(ca.mean, cb.mean), i, j));
        }
    }
    cand.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.components.len()];
    let mut used_b = vec![false; b.components.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    fn blob(center: [f64; 2], sigma: f64, n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nx = Normal::new(center[0], sigma).unwrap();
        let ny = Normal::new(center[1], sigma).unwrap();
        (0..n).map(|_| [nx.sample(&mut rng), ny.sample(&mut rng)]).collect()
    }

    #[test]
    fn cov_regularization_respects_floor() {
        let mut c = Cov2 { xx: 1.0, xy: 1.0, yy: 1.0 };
        let shift = c.regularize(1e-6);
        assert!(shift > 0.0);
        assert!(c.eigenvalues().0 >= 1e-6 * (1.0 - 1e-9));
        let mut ok = Cov2::isotropic(4.0);
        assert_eq!(ok.regularize(1e-6), 0.0);
    }

    #[test]
    fn single_component_is_closed_form_mle() {
        let pts = blob([10.0, -5.0], 7.0, 400, 1);
        let fit = em_fit(&WeightedSamples::unweighted(pts.clone()), 1, &FitOptions::default(), 3).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        let sxx = pts.iter().map(|p| (p[0] - mx).powi(2)).sum::<f64>() / n;
        let sxy = pts.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum::<f64>() / n;
        let c = &fit.model.components[0];
        assert_relative_eq!(c.weight, 1.0);
        assert_relative_eq!(c.mean[0], mx, epsilon = 1e-9);
        assert_relative_eq!(c.mean[1], my, epsilon = 1e-9);
        assert_relative_eq!(c.cov.xx, sxx, max_relative = 1e-9);
        assert_relative_eq!(c.cov.xy, sxy, epsilon = 1e-9);
    }

    #[test]
    fn em_errors() {
        let pts = vec![[0.0, 0.0], [1.0, 1.0]];
        let s = WeightedSamples::unweighted(pts);
        assert!(matches!(em_fit(&s, 3, &FitOptions::default(), 0), Err(Error::InsufficientData(_))));
        let same = WeightedSamples::unweighted(vec![[1.0, 1.0]; 5]);
        assert!(em_fit(&same, 1, &FitOptions::default(), 0).is_err());
    }

    #[test]
    fn em_is_deterministic_per_seed() {
        let mut pts = blob([0.0, 0.0], 20.0, 300, 5);
        pts.extend(blob([150.0, 40.0], 20.0, 300, 6));
        let s = WeightedSamples::unweighted(pts);
        let a = em_fit(&s, 2, &FitOptions::default(), 42).unwrap();
        let b = em_fit(&s, 2, &FitOptions::default(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weighted_single_component_is_weighted_centroid() {
        let pts = vec![[0.0, 0.0], [10.0, 0.0], [0.0, 30.0]];
        let w = vec![1.0, 3.0, 2.0];
        let fit = wem_fit(&WeightedSamples::weighted(pts, w).unwrap(), 1, &FitOptions::default()).unwrap();
        let m = fit.model.components[0].mean;
        assert_relative_eq!(m[0], 30.0 / 6.0, epsilon = 1e-9);
        assert_relative_eq!(m[1], 60.0 / 6.0, epsilon = 1e-9);
        assert_relative_eq!(fit.model.plane_integral(), 6.0, max_relative = 1e-12);
    }

    #[test]
    fn wem_errors() {
        let s = WeightedSamples::weighted(vec![[0.0, 0.0], [1.0, 0.0]], vec![1.0, 0.0]).unwrap();
        assert!(matches!(wem_fit(&s, 2, &FitOptions::default()), Err(Error::InsufficientData(_))));
        assert_eq!(
            WeightedSamples::weighted(vec![[0.0, 0.0]], vec![0.0]).unwrap_err(),
            Error::NoPositiveWeight
        );
    }

    #[test]
    fn heavier_cluster_gets_larger_coefficient() {
        let a = blob([0.0, 0.0], 15.0, 200, 11);
        let b = blob([300.0, 0.0], 15.0, 200, 12);
        let mut pts = a.clone();
        pts.extend(&b);
        let mut w = vec![10.0; a.len()];
        w.extend(vec![1.0; b.len()]);
        let fit = wem_fit(&WeightedSamples::weighted(pts, w).unwrap(), 2, &FitOptions::default()).unwrap();
        let near_a = fit
            .model
            .components
            .iter()
            .min_by(|x, y| dist2(x.mean, [0.0, 0.0]).partial_cmp(&dist2(y.mean, [0.0, 0.0])).unwrap())
            .unwrap();
        let other = fit.model.components.iter().find(|c| c.mean != near_a.mean).unwrap();
        assert!(near_a.weight >= 5.0 * other.weight, "{} vs {}", near_a.weight, other.weight);
    }

    #[test]
    fn eval_examples() {
        let c = Component { weight: 3.5, mean: [1.0, 2.0], cov: Cov2::isotropic(9.0) };
        let gmf = MixtureModel::new(MixtureKind::DensityFunction, vec![c]).unwrap();
        assert_relative_eq!(gmf.eval([1.0, 2.0]), 3.5);
        let std = MixtureModel::new(
            MixtureKind::Probabilistic,
            vec![Component { weight: 1.0, mean: [0.0, 0.0], cov: Cov2::isotropic(1.0) }],
        )
        .unwrap();
        assert_relative_eq!(std.eval([0.0, 0.0]), 1.0 / (2.0 * std::f64::consts::PI), max_relative = 1e-12);
        assert!(gmf.eval([1e6, 0.0]) < 1e-12);
        assert!(std.eval([1e6, 0.0]) < 1e-12);
    }

    #[test]
    fn model_validation() {
        let c = Component { weight: 0.5, mean: [0.0, 0.0], cov: Cov2::isotropic(1.0) };
        assert!(MixtureModel::new(MixtureKind::Probabilistic, vec![c]).is_err());
        assert!(MixtureModel::new(MixtureKind::DensityFunction, vec![c]).is_ok());
        let bad = Component { cov: Cov2 { xx: 1.0, xy: 2.0, yy: 1.0 }, ..c };
        assert!(MixtureModel::new(MixtureKind::DensityFunction, vec![bad]).is_err());
    }

    #[test]
    fn integral_over_region() {
        let c = Component { weight: 100.0, mean: [0.0, 0.0], cov: Cov2::isotropic(2500.0) };
        let gmf = MixtureModel::new(MixtureKind::DensityFunction, vec![c]).unwrap();
        let plane = Region::covering(-400.0, -400.0, 400.0, 400.0, 5.0).unwrap();
        let v = region_integral(&gmf, &plane).unwrap();
        assert_relative_eq!(v, 100.0 * 2.0 * std::f64::consts::PI * 2500.0, max_relative = 1e-2);
        assert_relative_eq!(gmf.plane_integral(), 1.5708e6, max_relative = 1e-4);
        assert_eq!(region_integral(&gmf, &plane.empty_like()), Err(Error::EmptyRegion));
    }
}
