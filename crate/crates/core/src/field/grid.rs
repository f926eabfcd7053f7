use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane. One-dimensional grids use only the first entry.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
    Disk,
    Annulus,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Interval => "interval",
            DomainKind::Rectangle => "rectangle",
            DomainKind::Disk => "disk",
            DomainKind::Annulus => "annulus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interval" => Some(DomainKind::Interval),
            "rectangle" => Some(DomainKind::Rectangle),
            "disk" => Some(DomainKind::Disk),
            "annulus" => Some(DomainKind::Annulus),
            _ => None,
        }
    }
}

/// Uniform Cartesian node array with an interior mask.
///
/// Nodes are stored row-major with axis 0 slowest: node `(i, j)` has flat
/// index `i * shape[1] + j` and coordinates `origin + (i h, j h)`. A 1D grid
/// is stored with `shape[1] == 1`.
///
/// Interior nodes are the unknowns of a Dirichlet problem; every other node
/// carries boundary data. No interior node may sit on the edge of the node
/// array, so the 5-point stencil of an interior node is always available.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    shape: [usize; 2],
    h: f64,
    origin: Point,
    kind: DomainKind,
    interior: Vec<bool>,
}

impl Grid {
    /// Validating constructor used by file readers and the other builders.
    pub fn from_parts(
        dim: usize,
        shape: &[usize],
        h: f64,
        origin: &[f64],
        kind: DomainKind,
        interior: Vec<bool>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "shape and origin must have {dim} entries (got {} and {})",
                shape.len(),
                origin.len()
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h must be positive, got {h}")));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!("every axis needs at least 3 nodes, got {n}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if (dim == 1) != (kind == DomainKind::Interval) {
            return Err(Error::InvalidGrid(format!(
                "domain kind {} does not match dimension {dim}",
                kind.as_str()
            )));
        }
        let shape = if dim == 1 { [shape[0], 1] } else { [shape[0], shape[1]] };
        let origin = if dim == 1 { [origin[0], 0.0] } else { [origin[0], origin[1]] };
        if interior.len() != shape[0] * shape[1] {
            return Err(Error::InvalidGrid(format!(
                "interior mask has {} entries, expected {}",
                interior.len(),
                shape[0] * shape[1]
            )));
        }
        let grid = Grid { dim, shape, h, origin, kind, interior };
        if let Some(k) = (0..grid.len()).find(|&k| grid.interior[k] && grid.on_array_edge(k)) {
            return Err(Error::InvalidGrid(format!(
                "interior node {k} lies on the edge of the node array"
            )));
        }
        Ok(grid)
    }

    /// Interval `[a, b]` with `n` nodes including both endpoints.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n < 3 {
            return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}] with {n} nodes")));
        }
        let h = (b - a) / (n - 1) as f64;
        let interior = (0..n).map(|i| i > 0 && i + 1 < n).collect();
        Self::from_parts(1, &[n], h, &[a], DomainKind::Interval, interior)
    }

    /// Rectangle `[origin, origin + extent]`; the node count per axis is
    /// `round(extent / h) + 1`, so `extent` should be a multiple of `h`.
    pub fn rectangle(origin: Point, extent: [f64; 2], h: f64) -> Result<Self> {
        if !(h > 0.0) || extent.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidGrid(format!("bad rectangle extent {extent:?} with h = {h}")));
        }
        let n0 = (extent[0] / h).round() as usize + 1;
        let n1 = (extent[1] / h).round() as usize + 1;
        let interior = (0..n0 * n1)
            .map(|k| {
                let (i, j) = (k / n1, k % n1);
                i > 0 && j > 0 && i + 1 < n0 && j + 1 < n1
            })
            .collect();
        Self::from_parts(2, &[n0, n1], h, &origin, DomainKind::Rectangle, interior)
    }

    /// Disk of the given radius. The center is a node and the array has two
    /// layers of exterior nodes beyond the circle. Interior nodes are those
    /// with `|x - center| < radius - h/2`.
    pub fn disk(center: Point, radius: f64, h: f64) -> Result<Self> {
        Self::annular(center, None, radius, h, DomainKind::Disk)
    }

    /// Annulus `inner <= |x - center| <= outer`; interior nodes satisfy
    /// `inner + h/2 < |x - center| < outer - h/2`.
    pub fn annulus(center: Point, inner: f64, outer: f64, h: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::InvalidGrid(format!("bad annulus radii {inner}, {outer}")));
        }
        Self::annular(center, Some(inner), outer, h, DomainKind::Annulus)
    }

    fn annular(center: Point, inner: Option<f64>, outer: f64, h: f64, kind: DomainKind) -> Result<Self> {
        if !(h > 0.0 && outer > 2.0 * h) {
            return Err(Error::InvalidGrid(format!("radius {outer} too small for h = {h}")));
        }
        let half = (outer / h).ceil() as usize + 2;
        let n = 2 * half + 1;
        let origin = [center[0] - half as f64 * h, center[1] - half as f64 * h];
        let interior = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let dx = (i as f64 - half as f64) * h;
                let dy = (j as f64 - half as f64) * h;
                let d = dx.hypot(dy);
                let outside_hole = inner.map_or(true, |r_in| d > r_in + 0.5 * h);
                d < outer - 0.5 * h && outside_hole
            })
            .collect();
        Self::from_parts(2, &[n, n], h, &origin, kind, interior)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node counts per axis (`dim` entries).
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub(crate) fn shape2(&self) -> [usize; 2] {
        self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.interior[k]
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape[1] + j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.shape[1], k % self.shape[1])
    }

    #[inline]
    pub fn coords(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        if self.dim == 1 {
            [self.origin[0] + i as f64 * self.h, 0.0]
        } else {
            [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
        }
    }

    /// True when some axis neighbor of node `k` is missing from the array.
    pub fn on_array_edge(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        if i == 0 || i + 1 == self.shape[0] {
            return true;
        }
        self.dim == 2 && (j == 0 || j + 1 == self.shape[1])
    }

    /// Lower and upper corners of the node hull.
    pub fn hull(&self) -> (Point, Point) {
        let hi0 = self.origin[0] + (self.shape[0] - 1) as f64 * self.h;
        let hi1 = if self.dim == 2 {
            self.origin[1] + (self.shape[1] - 1) as f64 * self.h
        } else {
            0.0
        };
        (self.origin, [hi0, hi1])
    }

    /// Distance from `x` to the nearest face of the node hull (negative outside).
    pub fn distance_to_hull(&self, x: Point) -> f64 {
        let (lo, hi) = self.hull();
        let mut d = (x[0] - lo[0]).min(hi[0] - x[0]);
        if self.dim == 2 {
            d = d.min(x[1] - lo[1]).min(hi[1] - x[1]);
        }
        d
    }

    /// Fails unless the closed ball of radius `r` (plus `margin`) about `x`
    /// lies in the node hull.
    pub fn require_ball(&self, x: Point, r: f64, margin: f64) -> Result<()> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
        }
        let (lo, hi) = self.hull();
        let ext = r + margin;
        let axes = self.dim;
        for a in 0..axes {
            if x[a] - ext < lo[a] - 1e-12 || x[a] + ext > hi[a] + 1e-12 {
                return Err(Error::OutOfDomain(format!(
                    "ball about ({:.6}, {:.6}) with extent {ext:.6} leaves the hull on axis {a}: [{:.6}, {:.6}] vs [{:.6}, {:.6}]",
                    x[0],
                    x[1],
                    x[a] - ext,
                    x[a] + ext,
                    lo[a],
                    hi[a]
                )));
            }
        }
        Ok(())
    }

    /// Fractional node coordinates of a point.
    #[inline]
    pub(crate) fn locate(&self, x: Point) -> [f64; 2] {
        [(x[0] - self.origin[0]) / self.h, (x[1] - self.origin[1]) / self.h]
    }

    /// Inclusive index window of nodes within `reach` of `x`, clipped to the array.
    pub(crate) fn window(&self, x: Point, reach: f64) -> ([usize; 2], [usize; 2]) {
        let f = self.locate(x);
        let r = reach / self.h;
        let clip = |v: f64, n: usize| -> usize { v.max(0.0).min((n - 1) as f64) as usize };
        let lo0 = clip((f[0] - r).floor(), self.shape[0]);
        let hi0 = clip((f[0] + r).ceil(), self.shape[0]);
        if self.dim == 1 {
            return ([lo0, 0], [hi0, 0]);
        }
        let lo1 = clip((f[1] - r).floor(), self.shape[1]);
        let hi1 = clip((f[1] + r).ceil(), self.shape[1]);
        ([lo0, lo1], [hi0, hi1])
    }

    /// Nearest node to `x`.
    pub fn nearest_node(&self, x: Point) -> usize {
        let f = self.locate(x);
        let i = f[0].round().max(0.0).min((self.shape[0] - 1) as f64) as usize;
        let j = if self.dim == 2 {
            f[1].round().max(0.0).min((self.shape[1] - 1) as f64) as usize
        } else {
            0
        };
        self.index(i, j)
    }

    /// Volume of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Iterator over the flat indices of interior nodes.
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    /// Axis neighbors of node `k` (2 in 1D, 4 in 2D); the caller must ensure
    /// `k` is not on the array edge.
    #[inline]
    pub(crate) fn neighbors(&self, k: usize) -> ([usize; 4], usize) {
        let s = self.shape[1];
        if self.dim == 1 {
            ([k - 1, k + 1, 0, 0], 2)
        } else {
            ([k - s, k + s, k - 1, k + 1], 4)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mask_matches_radius_rule() {
        let h = 1.0 / 16.0;
        let g = Grid::disk([0.0, 0.0], 1.0, h).unwrap();
        for k in 0..g.len() {
            let x = g.coords(k);
            assert_eq!(g.is_interior(k), x[0].hypot(x[1]) < 1.0 - h / 2.0);
        }
        let c = g.nearest_node([0.0, 0.0]);
        assert_eq!(g.coords(c), [0.0, 0.0]);
    }

    #[test]
    fn interior_nodes_have_neighbors() {
        let g = Grid::annulus([0.1, -0.2], 0.2, 1.0, 1.0 / 32.0).unwrap();
        assert!(g.interior_nodes().all(|k| !g.on_array_edge(k)));
        assert!(g.interior_count() > 0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::from_parts(2, &[2, 5], 0.1, &[0.0, 0.0], DomainKind::Rectangle, vec![false; 10]).is_err());
        assert!(Grid::from_parts(2, &[3, 3], -1.0, &[0.0, 0.0], DomainKind::Rectangle, vec![false; 9]).is_err());
        let mut mask = vec![false; 9];
        mask[0] = true;
        assert!(Grid::from_parts(2, &[3, 3], 0.1, &[0.0, 0.0], DomainKind::Rectangle, mask).is_err());
        assert!(Grid::from_parts(3, &[3, 3, 3], 0.1, &[0.0; 3], DomainKind::Rectangle, vec![false; 27]).is_err());
    }

    #[test]
    fn interval_layout() {
        let g = Grid::interval(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.shape(), &[5]);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.coords(4)[0], 1.0);
        assert_eq!(g.interior_count(), 3);
    }

    #[test]
    fn ball_containment() {
        let g = Grid::rectangle([-1.0, -1.0], [2.0, 2.0], 0.05).unwrap();
        assert!(g.require_ball([0.0, 0.0], 0.9, 0.05).is_ok());
        let err = g.require_ball([0.5, 0.0], 0.9, 0.0).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain(_)));
    }
}
