//! Planar geometry in a local metric frame and grid-cell regions.
//!
//! A [`Region`] is a boolean mask over a regular grid of square cells. All
//! area integrals in the crate are midpoint-rule sums over the cells of a
//! region, so two regions can only be combined when they share a grid.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Position in meters: `x` east, `y` north, `z` altitude above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialPoint<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F: Scalar> SpatialPoint<F> {
    pub fn new(x: F, y: F, z: F) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        if z < F::zero() {
            return Err(Error::InvalidParameter(format!("negative altitude {z}")));
        }
        Ok(Self { x, y, z })
    }

    /// Ground-level point.
    pub fn ground(x: F, y: F) -> Self {
        Self { x, y, z: F::zero() }
    }

    pub fn from_xy(xy: [F; 2], z: F) -> Self {
        Self { x: xy[0], y: xy[1], z }
    }

    pub fn xy(&self) -> [F; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &Self) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Self) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Squared Euclidean distance between two planar points.
#[inline]
pub fn dist2<F: Scalar>(a: [F; 2], b: [F; 2]) -> F {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Set of grid cells. Cell `(ix, iy)` spans
/// `[origin_x + ix*h, origin_x + (ix+1)*h) x [origin_y + iy*h, origin_y + (iy+1)*h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region<F> {
    pub origin_x: F,
    pub origin_y: F,
    pub cell_size: F,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, index `iy * nx + ix`.
    pub mask: Vec<bool>,
}

impl<F: Scalar> Region<F> {
    pub fn new(origin_x: F, origin_y: F, cell_size: F, nx: usize, ny: usize, mask: Vec<bool>) -> Result<Self> {
        if !(cell_size > F::zero()) || !cell_size.is_finite() {
            return Err(Error::InvalidParameter(format!("cell size must be positive, got {cell_size}")));
        }
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::InvalidParameter("non-finite region origin".into()));
        }
        if mask.len() != nx * ny {
            return Err(Error::InvalidParameter(format!(
                "mask length {} does not match {nx}x{ny} grid",
                mask.len()
            )));
        }
        Ok(Self { origin_x, origin_y, cell_size, nx, ny, mask })
    }

    /// Every cell of an `nx` by `ny` grid.
    pub fn full(origin_x: F, origin_y: F, cell_size: F, nx: usize, ny: usize) -> Result<Self> {
        Self::new(origin_x, origin_y, cell_size, nx, ny, vec![true; nx * ny])
    }

    /// Smallest full grid covering the rectangle `[min_x, max_x] x [min_y, max_y]`.
    pub fn covering(min_x: F, min_y: F, max_x: F, max_y: F, cell_size: F) -> Result<Self> {
        if !(max_x > min_x && max_y > min_y) {
            return Err(Error::InvalidParameter("empty rectangle".into()));
        }
        let nx = ((max_x - min_x) / cell_size).ceil().to_usize().unwrap_or(0).max(1);
        let ny = ((max_y - min_y) / cell_size).ceil().to_usize().unwrap_or(0).max(1);
        Self::full(min_x, min_y, cell_size, nx, ny)
    }

    /// Same grid with a different mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::new(self.origin_x, self.origin_y, self.cell_size, self.nx, self.ny, mask)
    }

    /// Same grid, no cells selected.
    pub fn empty_like(&self) -> Self {
        Self { mask: vec![false; self.nx * self.ny], ..self.clone() }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn contains_cell(&self, ix: usize, iy: usize) -> bool {
        ix < self.nx && iy < self.ny && self.mask[self.index(ix, iy)]
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn cell_area(&self) -> F {
        self.cell_size * self.cell_size
    }

    pub fn area(&self) -> F {
        self.cell_area() * F::lit(self.cell_count() as f64)
    }

    /// Included cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i % nx, i / nx))
    }

    pub fn center(&self, ix: usize, iy: usize) -> [F; 2] {
        let half = F::lit(0.5);
        [
            self.origin_x + (F::lit(ix as f64) + half) * self.cell_size,
            self.origin_y + (F::lit(iy as f64) + half) * self.cell_size,
        ]
    }

    /// Centers of the included cells, in the same order as [`Region::cells`].
    pub fn centers(&self) -> Vec<[F; 2]> {
        self.cells().map(|(ix, iy)| self.center(ix, iy)).collect()
    }

    /// Grid cell containing `p`, whether or not it is included.
    pub fn cell_of(&self, p: [F; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin_x) / self.cell_size).floor();
        let fy = ((p[1] - self.origin_y) / self.cell_size).floor();
        if fx < F::zero() || fy < F::zero() || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        let (ix, iy) = (fx.to_usize()?, fy.to_usize()?);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    pub fn contains(&self, p: [F; 2]) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| self.contains_cell(ix, iy))
    }

    /// Outer bounds of the grid `(min_x, min_y, max_x, max_y)`.
    pub fn grid_bounds(&self) -> (F, F, F, F) {
        (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.cell_size * F::lit(self.nx as f64),
            self.origin_y + self.cell_size * F::lit(self.ny as f64),
        )
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.origin_x == other.origin_x
            && self.origin_y == other.origin_y
            && self.cell_size == other.cell_size
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("regions are defined on different grids".into()))
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        self.with_mask(mask)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        self.with_mask(mask)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.same_grid(other) && self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    /// Region made of the listed cells on this grid.
    pub fn from_cells(&self, cells: &[(usize, usize)]) -> Self {
        let mut out = self.empty_like();
        for &(ix, iy) in cells {
            let i = out.index(ix, iy);
            out.mask[i] = true;
        }
        out
    }

    /// Splits every cell into `factor x factor` sub-cells.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let nx = self.nx * factor;
        let ny = self.ny * factor;
        let mut mask = vec![false; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                mask[iy * nx + ix] = self.mask[self.index(ix / factor, iy / factor)];
            }
        }
        Self {
            origin_x: self.origin_x,
            origin_y: self.origin_y,
            cell_size: self.cell_size / F::lit(factor as f64),
            nx,
            ny,
            mask,
        }
    }

    /// Smallest sub-grid holding every included cell. Errors on an empty region.
    pub fn cropped(&self) -> Result<Self> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for (ix, iy) in self.cells() {
            x0 = x0.min(ix);
            y0 = y0.min(iy);
            x1 = x1.max(ix);
            y1 = y1.max(iy);
        }
        if x0 == usize::MAX {
            return Err(Error::EmptyRegion);
        }
        let nx = x1 - x0 + 1;
        let ny = y1 - y0 + 1;
        let mut mask = Vec::with_capacity(nx * ny);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                mask.push(self.mask[self.index(ix, iy)]);
            }
        }
        Self::new(
            self.origin_x + F::lit(x0 as f64) * self.cell_size,
            self.origin_y + F::lit(y0 as f64) * self.cell_size,
            self.cell_size,
            nx,
            ny,
            mask,
        )
    }

    /// 4-connected component of `selected` cells containing `start`.
    pub fn connected_component(&self, selected: &[bool], start: (usize, usize)) -> Self {
        let mut out = self.empty_like();
        let si = self.index(start.0, start.1);
        if !selected[si] {
            return out;
        }
        let mut queue = VecDeque::from([start]);
        out.mask[si] = true;
        while let Some((ix, iy)) = queue.pop_front() {
            let mut visit = |jx: usize, jy: usize| {
                let j = jy * self.nx + jx;
                if selected[j] && !out.mask[j] {
                    out.mask[j] = true;
                    queue.push_back((jx, jy));
                }
            };
            if ix > 0 {
                visit(ix - 1, iy);
            }
            if ix + 1 < self.nx {
                visit(ix + 1, iy);
            }
            if iy > 0 {
                visit(ix, iy - 1);
            }
            if iy + 1 < self.ny {
                visit(ix, iy + 1);
            }
        }
        out
    }

    /// True when the included cells form a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        match self.cells().next() {
            None => true,
            Some(start) => self.connected_component(&self.mask, start).cell_count() == self.cell_count(),
        }
    }

    /// Area-weighted centroid of the cells under a nonnegative cell weighting.
    pub fn weighted_centroid(&self, weights: &[F]) -> Option<[F; 2]> {
        let (mut sx, mut sy, mut sw) = (F::zero(), F::zero(), F::zero());
        for (c, &w) in self.centers().iter().zip(weights) {
            sx = sx + w * c[0];
            sy = sy + w * c[1];
            sw = sw + w;
        }
        (sw > F::zero()).then(|| [sx / sw, sy / sw])
    }

    /// Midpoint-rule integral of `f` over the region.
    pub fn integrate(&self, mut f: impl FnMut([F; 2]) -> F) -> F {
        let a = self.cell_area();
        self.cells().map(|(ix, iy)| f(self.center(ix, iy)) * a).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_validation() {
        assert!(SpatialPoint::new(0.0, 0.0, -1.0).is_err());
        assert!(SpatialPoint::new(f64::NAN, 0.0, 1.0).is_err());
        let p = SpatialPoint::new(3.0, 4.0, 0.0).unwrap();
        assert_eq!(p.distance(&SpatialPoint::ground(0.0, 0.0)), 5.0);
    }

    #[test]
    fn region_area_and_centers() {
        let r = Region::full(0.0, 0.0, 10.0, 3, 2).unwrap();
        assert_eq!(r.cell_count(), 6);
        assert_eq!(r.area(), 600.0);
        assert_eq!(r.center(1, 1), [15.0, 15.0]);
        assert_eq!(r.cell_of([29.9, 19.9]), Some((2, 1)));
        assert_eq!(r.cell_of([30.0, 0.0]), None);
        assert!(Region::<f64>::new(0.0, 0.0, 0.0, 1, 1, vec![true]).is_err());
    }

    #[test]
    fn refine_preserves_area() {
        let r = Region::<f64>::full(0.0, 0.0, 10.0, 4, 4).unwrap();
        let r = r.from_cells(&[(0, 0), (1, 0), (3, 3)]);
        let f = r.refined(2);
        assert_eq!(f.cell_count(), 12);
        assert!((f.area() - r.area()).abs() < 1e-9);
    }

    #[test]
    fn connectivity_is_four_neighbour() {
        let r = Region::full(0.0, 0.0, 1.0, 3, 3).unwrap();
        // diagonal pair is not 4-connected
        let diag = r.from_cells(&[(0, 0), (1, 1)]);
        assert!(!diag.is_connected());
        let line = r.from_cells(&[(0, 0), (1, 0), (1, 1)]);
        assert!(line.is_connected());
        let comp = r.connected_component(&diag.mask, (0, 0));
        assert_eq!(comp.cell_count(), 1);
    }

    #[test]
    fn crop_keeps_cells() {
        let r = Region::full(0.0, 0.0, 5.0, 10, 10).unwrap();
        let s = r.from_cells(&[(4, 5), (6, 7)]);
        let c = s.cropped().unwrap();
        assert_eq!((c.nx, c.ny), (3, 3));
        assert_eq!(c.origin_x, 20.0);
        assert_eq!(c.centers(), s.centers());
        assert_eq!(r.empty_like().cropped(), Err(Error::EmptyRegion));
    }
}
