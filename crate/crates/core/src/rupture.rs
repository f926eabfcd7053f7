//! Sublevel sets `{u <= τ}` as proxies for the rupture set, their connected
//! components, box-counting dimension and the discreteness test.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::Verdict;
use crate::error::{Error, Result};
use crate::field::io::fmt_f64;
use crate::field::{Grid, Point, ScalarField};
use crate::numerics::fit_line;

pub const COMPONENTS_HEADER: &str = "id,centroid_x,centroid_y,diameter,node_count,tau";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub id: usize,
    pub centroid: Point,
    /// Largest distance between two member nodes.
    pub diameter: f64,
    pub node_count: usize,
    #[serde(skip)]
    pub nodes: Vec<usize>,
}

/// Interior nodes with `u <= τ` and their 4-connected components, ordered by
/// smallest member index.
#[derive(Debug, Clone, Serialize)]
pub struct LevelMask {
    pub tau: f64,
    #[serde(skip)]
    pub grid: Arc<Grid>,
    #[serde(skip)]
    pub mask: Vec<bool>,
    pub components: Vec<Component>,
}

impl LevelMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Mask built from an explicit node set (for tests and synthetic sets).
    pub fn from_nodes(grid: Arc<Grid>, tau: f64, nodes: &[usize]) -> Result<Self> {
        let mut mask = vec![false; grid.len()];
        for &k in nodes {
            if k >= grid.len() {
                return Err(Error::InvalidInput(format!("node {k} outside the grid")));
            }
            mask[k] = true;
        }
        let components = components(&grid, &mask);
        Ok(LevelMask { tau, grid, mask, components })
    }

    pub fn components_csv(&self) -> String {
        let mut s = String::from(COMPONENTS_HEADER);
        s.push('\n');
        push_rows(&mut s, self);
        s
    }
}

fn push_rows(s: &mut String, m: &LevelMask) {
    for c in &m.components {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.id,
            fmt_f64(c.centroid[0]),
            fmt_f64(c.centroid[1]),
            fmt_f64(c.diameter),
            c.node_count,
            fmt_f64(m.tau)
        );
    }
}

/// Components CSV for several thresholds, in the given order.
pub fn components_csv(masks: &[LevelMask]) -> String {
    let mut s = String::from(COMPONENTS_HEADER);
    s.push('\n');
    for m in masks {
        push_rows(&mut s, m);
    }
    s
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn diameter(points: Vec<Point>) -> f64 {
    let hull = convex_hull(points);
    let mut d: f64 = 0.0;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    d
}

fn components(grid: &Grid, mask: &[bool]) -> Vec<Component> {
    let shape = grid.shape2();
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut nodes = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            nodes.push(k);
            let (i, j) = grid.ij(k);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - shape[1]);
            }
            if i + 1 < shape[0] {
                nb.push(k + shape[1]);
            }
            if grid.dim() == 2 {
                if j > 0 {
                    nb.push(k - 1);
                }
                if j + 1 < shape[1] {
                    nb.push(k + 1);
                }
            }
            for m in nb {
                if mask[m] && !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        nodes.sort_unstable();
        let pts: Vec<Point> = nodes.iter().map(|&k| grid.coords(k)).collect();
        let n = pts.len() as f64;
        let centroid = [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n];
        out.push(Component { id: out.len(), centroid, diameter: diameter(pts), node_count: nodes.len(), nodes });
    }
    out
}

/// `{u <= τ}` over interior nodes.
pub fn sublevel(u: &ScalarField, tau: f64) -> Result<LevelMask> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidInput(format!("threshold tau must be positive, got {tau}")));
    }
    let grid = u.grid_arc().clone();
    let mask: Vec<bool> = (0..grid.len()).map(|k| grid.is_interior(k) && u.values()[k] <= tau).collect();
    let components = components(&grid, &mask);
    Ok(LevelMask { tau, grid, mask, components })
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionEstimate {
    /// Decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Slope of `log N` against `log(1/ε)`; absent for an empty mask.
    pub slope: Option<f64>,
    /// Two standard errors of the slope.
    pub band: Option<f64>,
}

fn box_count(grid: &Grid, nodes: &[usize], eps: f64, offset: [f64; 2]) -> usize {
    let o = grid.origin();
    let o1 = if grid.dim() == 2 { o[1] } else { 0.0 };
    let mut boxes = HashSet::with_capacity(nodes.len());
    for &k in nodes {
        let x = grid.coords(k);
        let b0 = ((x[0] - o[0]) / eps + offset[0]).floor() as i64;
        let b1 = ((x[1] - o1) / eps + offset[1]).floor() as i64;
        boxes.insert((b0, b1));
    }
    boxes.len()
}

/// Box counts of the mask at each scale (minimum over four grid offsets) and
/// the fitted dimension.
pub fn box_dimension(mask: &LevelMask, scales: &[f64]) -> Result<DimensionEstimate> {
    if scales.len() < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 scales, got {}", scales.len())));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidInput("scales must be positive".into()));
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    if scales[0] / scales[scales.len() - 1] < 10.0 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "scales must span at least a decade, got [{}, {}]",
            scales[scales.len() - 1],
            scales[0]
        )));
    }
    let nodes: Vec<usize> = mask.mask.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect();
    let offsets = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];
    let counts: Vec<usize> = scales
        .par_iter()
        .map(|&eps| offsets.iter().map(|&o| box_count(&mask.grid, &nodes, eps, o)).min().unwrap())
        .collect();
    if nodes.is_empty() {
        return Ok(DimensionEstimate { scales, counts, slope: None, band: None });
    }
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(DimensionEstimate { scales, counts, slope: fit.map(|f| f.slope), band: fit.map(|f| 2.0 * f.slope_stderr) })
}

/// Largest allowed spread of `diameter / τ^{(p+1)/2}` across the sweep.
pub const DIAMETER_SPREAD: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct DiscretenessCheck {
    pub verdict: Verdict,
    pub counts: Vec<usize>,
    /// `(diameter + h) / τ^{(p+1)/2}` for every component at every threshold.
    pub scaled_diameters: Vec<Vec<f64>>,
    pub masks: Vec<LevelMask>,
}

/// Passes iff the component count is the same at the two smallest thresholds
/// (and nonzero) and `(diameter + h)/τ^{(p+1)/2}` varies by at most a factor
/// 4 over all components and thresholds. The `+h` accounts for the node
/// footprint, so single-node components are not treated as points.
pub fn discreteness_check(u: &ScalarField, taus: &[f64]) -> Result<DiscretenessCheck> {
    if taus.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 thresholds, got {}", taus.len())));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("thresholds must be strictly decreasing".into()));
    }
    let masks = taus.iter().map(|&t| sublevel(u, t)).collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = masks.iter().map(|m| m.components.len()).collect();
    let e = 0.5 * (u.p() + 1.0);
    let h = u.grid().h();
    let scaled: Vec<Vec<f64>> = masks
        .iter()
        .map(|m| m.components.iter().map(|c| (c.diameter + h) / m.tau.powf(e)).collect())
        .collect();
    let all: Vec<f64> = scaled.iter().flatten().copied().collect();
    let n = counts.len();
    let stable = counts[n - 1] > 0 && counts[n - 1] == counts[n - 2];
    let (lo, hi) = all.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = if all.is_empty() { f64::INFINITY } else { hi / lo };
    let mut verdict = Verdict::new("discreteness", stable && spread <= DIAMETER_SPREAD, spread, DIAMETER_SPREAD);
    verdict.note(format!("component counts {counts:?}"));
    if !stable {
        verdict.note("component count did not stabilize");
    }
    Ok(DiscretenessCheck { verdict, counts, scaled_diameters: scaled, masks })
}

/// Largest sweep slope still read as dimension zero.
pub const POINT_DIMENSION_TOL: f64 = 0.3;

/// Box-counting dimension over a threshold sweep: the set `{u <= τ}` is
/// covered by boxes of side `ε(τ) = 4 (τ / c)^{(p+1)/2}`, twice the diameter
/// of the `τ`-sublevel set of the homogeneous radial solution
/// `c|x|^{2/(p+1)}`. A set of at most half the box side fits in one box for
/// one of the four half-box offsets, so an isolated zero counts 1 at every
/// threshold (slope 0) while a curve of zeros counts like `1/ε`.
pub fn sweep_dimension(u: &ScalarField, taus: &[f64]) -> Result<DimensionEstimate> {
    if taus.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 thresholds, got {}", taus.len())));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("thresholds must be strictly decreasing".into()));
    }
    let p = u.p();
    let c = crate::profiles::radial_exact(2, p)?.c;
    let offsets = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];
    let mut scales = Vec::with_capacity(taus.len());
    let mut counts = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mask = sublevel(u, tau)?;
        let eps = (4.0 * (tau / c).powf(0.5 * (p + 1.0))).max(u.grid().h());
        let nodes: Vec<usize> = mask.mask.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect();
        scales.push(eps);
        counts.push(offsets.iter().map(|&o| box_count(&mask.grid, &nodes, eps, o)).min().unwrap());
    }
    if counts.iter().all(|&n| n == 0) {
        return Ok(DimensionEstimate { scales, counts, slope: None, band: None });
    }
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n.max(1) as f64).ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(DimensionEstimate { scales, counts, slope: fit.map(|f| f.slope), band: fit.map(|f| 2.0 * f.slope_stderr) })
}
