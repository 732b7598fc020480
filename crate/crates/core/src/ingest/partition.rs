use serde::{Deserialize, Serialize};

use super::dataset::RawBsRecord;
use crate::error::{Error, Result};
use crate::geom::{dist2, Region};
use crate::scalar::Scalar;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Equirectangular projection to local meters about a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub lon0: f64,
    pub lat0: f64,
}

impl Projection {
    pub fn centered_on(bs: &[RawBsRecord]) -> Result<Self> {
        if bs.is_empty() {
            return Err(Error::InsufficientData("no base stations".into()));
        }
        let n = bs.len() as f64;
        Ok(Self {
            lon0: bs.iter().map(|b| b.longitude).sum::<f64>() / n,
            lat0: bs.iter().map(|b| b.latitude).sum::<f64>() / n,
        })
    }

    pub fn forward(&self, lon: f64, lat: f64) -> [f64; 2] {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        [(lon - self.lon0) * k * self.lat0.to_radians().cos(), (lat - self.lat0) * k]
    }

    pub fn inverse(&self, p: [f64; 2]) -> (f64, f64) {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (self.lon0 + p[0] / (k * self.lat0.to_radians().cos()), self.lat0 + p[1] / k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct PartitionConfig<F> {
    pub cell_m: F,
    /// Padding added around the BS bounding box.
    pub margin_m: F,
}

impl<F: Scalar> Default for PartitionConfig<F> {
    fn default() -> Self {
        Self { cell_m: F::lit(50.0), margin_m: F::lit(500.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<F> {
    pub projection: Projection,
    pub ids: Vec<u32>,
    pub sites: Vec<[F; 2]>,
    /// Full grid over the padded bounding box.
    pub grid: Region<F>,
    /// Index into `ids` of the nearest site for every grid cell.
    pub owner: Vec<usize>,
}

impl<F: Scalar> Partition<F> {
    pub fn region(&self, i: usize) -> Region<F> {
        let mask = self.owner.iter().map(|&o| o == i).collect();
        Region { mask, ..self.grid.clone() }
    }

    pub fn regions(&self) -> Vec<Region<F>> {
        (0..self.ids.len()).map(|i| self.region(i)).collect()
    }
}

/// Nearest site, lowest index on ties.
pub fn nearest_site<F: Scalar>(sites: &[[F; 2]], p: [F; 2]) -> usize {
    let mut best = (F::infinity(), 0);
    for (i, &s) in sites.iter().enumerate() {
        let d = dist2(s, p);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Projects the base stations and assigns every grid cell to its closest BS.
/// Coincident stations are pushed apart by 1 cm steps along x.
pub fn project_and_partition<F: Scalar>(bs: &[RawBsRecord], cfg: &PartitionConfig<F>) -> Result<Partition<F>> {
    let projection = Projection::centered_on(bs)?;
    if !(cfg.cell_m > F::zero() && cfg.margin_m >= F::zero()) {
        return Err(Error::InvalidParameter("cell must be positive and margin nonnegative".into()));
    }
    let mut sites: Vec<[f64; 2]> = Vec::with_capacity(bs.len());
    for b in bs {
        let mut p = projection.forward(b.longitude, b.latitude);
        let mut moved = false;
        while sites.iter().any(|s| s[0] == p[0] && s[1] == p[1]) {
            p[0] += 0.01;
            moved = true;
        }
        if moved {
            log::warn!("BS {} shares a position with another BS, moved to x = {:.2} m", b.id, p[0]);
        }
        sites.push(p);
    }
    let sites: Vec<[F; 2]> = sites.into_iter().map(|p| [F::lit(p[0]), F::lit(p[1])]).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (F::infinity(), F::infinity(), F::neg_infinity(), F::neg_infinity());
    for s in &sites {
        x0 = x0.min(s[0]);
        y0 = y0.min(s[1]);
        x1 = x1.max(s[0]);
        y1 = y1.max(s[1]);
    }
    let pad = cfg.margin_m.max(cfg.cell_m);
    let grid = Region::covering(x0 - pad, y0 - pad, x1 + pad, y1 + pad, cfg.cell_m)?;
    let owner = grid.cells().map(|(ix, iy)| nearest_site(&sites, grid.center(ix, iy))).collect();
    Ok(Partition { projection, ids: bs.iter().map(|b| b.id).collect(), sites, grid, owner })
}
