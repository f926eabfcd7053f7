use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{closure_nodes, rupture_floor};
use crate::error::{Error, Result};
use crate::field::{ball_integral_with, grad_at, Point, ScalarField, VectorField};

/// `∫_{B_r(x)} u^{-p} / r^{n - 2p/(p+1)}`.
pub fn growth_ratio_up(u: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let p = u.p();
    let n = u.grid().dim() as f64;
    let floor = rupture_floor(u);
    let i = ball_integral_with(u, x, r, None, floor, |s| s.u.powf(-p))?;
    Ok(i / r.powf(n - 2.0 * p / (p + 1.0)))
}

/// `∫_{B_r(x)} (|∇u|² + u^{1-p}) / r^{n - 2(p-1)/(p+1)}`.
pub fn growth_ratio_energy(u: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let p = u.p();
    let n = u.grid().dim() as f64;
    let floor = rupture_floor(u);
    let i = ball_integral_with(u, x, r, None, floor, |s| s.grad_sq() + s.u.powf(1.0 - p))?;
    Ok(i / r.powf(n - 2.0 * (p - 1.0) / (p + 1.0)))
}

/// `∫_{B_r(x)} u / r^{n + 2/(p+1)}`.
pub fn nondegeneracy_ratio(u: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let p = u.p();
    let n = u.grid().dim() as f64;
    let i = ball_integral_with(u, x, r, None, 0.0, |s| s.u)?;
    Ok(i / r.powf(n + 2.0 / (p + 1.0)))
}

/// `∫_Ω (|∇u|² + u^{1-p} + u²)` over interior nodes, the energy bound of a
/// solution family reported as a summary statistic.
pub fn energy_bound_m(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let p = u.p();
    let floor = rupture_floor(u);
    let vals = u.values();
    let s: f64 = grid
        .interior_nodes()
        .map(|k| {
            let g = grad_at(grid, vals, k);
            let v = vals[k].max(floor);
            g[0] * g[0] + g[1] * g[1] + v.powf(1.0 - p) + vals[k] * vals[k]
        })
        .sum();
    s * grid.cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub seminorm: f64,
    pub pairs: usize,
    pub exhaustive: bool,
    /// The maximizing pair of node indices.
    pub argmax: (usize, usize),
}

fn quotient(u: &ScalarField, exponent: f64, a: usize, b: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let g = u.grid();
    let (x, y) = (g.coords(a), g.coords(b));
    let d = (x[0] - y[0]).hypot(x[1] - y[1]);
    (u.values()[a] - u.values()[b]).abs() / d.powf(exponent)
}

/// `max |u(x) - u(y)| / |x - y|^γ` over node pairs of the closed domain.
///
/// All pairs are visited when there are at most `budget` of them. Otherwise
/// `budget` pairs are drawn from three strata: half pair the node of minimal
/// `u` with random nodes, a quarter are short pairs at geometrically
/// distributed offsets, and a quarter are uniform.
pub fn holder_seminorm(u: &ScalarField, exponent: f64, budget: usize, seed: u64) -> Result<HolderEstimate> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::InvalidInput(format!("Hölder exponent must lie in (0, 1], got {exponent}")));
    }
    if budget == 0 {
        return Err(Error::InvalidInput("pair budget must be positive".into()));
    }
    let nodes = closure_nodes(u);
    let m = nodes.len();
    let total = m.saturating_mul(m.saturating_sub(1)) / 2;
    let best = |a: (f64, (usize, usize)), b: (f64, (usize, usize))| if b.0 > a.0 { b } else { a };
    if total <= budget {
        let (seminorm, argmax) = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut acc = (0.0, (nodes[i], nodes[i]));
                for &b in &nodes[i + 1..] {
                    acc = best(acc, (quotient(u, exponent, nodes[i], b), (nodes[i], b)));
                }
                acc
            })
            .reduce(|| (0.0, (0, 0)), best);
        return Ok(HolderEstimate { exponent, seminorm, pairs: total, exhaustive: true, argmax });
    }

    let grid = u.grid();
    let shape = grid.shape2();
    let vals = u.values();
    let min_node = nodes.iter().copied().min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty domain");
    let mut in_domain = vec![false; grid.len()];
    for &k in &nodes {
        in_domain[k] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(budget);
    let n_min = budget / 2;
    let n_short = budget / 4;
    for _ in 0..n_min {
        pairs.push((min_node, nodes[rng.random_range(0..m)]));
    }
    let max_log = (shape[0].max(shape[1]) as f64).log2().max(1.0);
    while pairs.len() < n_min + n_short {
        let a = nodes[rng.random_range(0..m)];
        let len = 2f64.powf(rng.random_range(0.0..max_log));
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let (i, j) = grid.ij(a);
        let bi = i as f64 + (len * theta.cos()).round();
        let bj = if grid.dim() == 2 { j as f64 + (len * theta.sin()).round() } else { 0.0 };
        if bi < 0.0 || bj < 0.0 || bi >= shape[0] as f64 || bj >= shape[1] as f64 {
            continue;
        }
        let b = grid.index(bi as usize, bj as usize);
        if in_domain[b] && b != a {
            pairs.push((a, b));
        }
    }
    while pairs.len() < budget {
        pairs.push((nodes[rng.random_range(0..m)], nodes[rng.random_range(0..m)]));
    }
    let (seminorm, argmax) = pairs
        .par_iter()
        .map(|&(a, b)| (quotient(u, exponent, a, b), (a, b)))
        .reduce(|| (0.0, (0, 0)), best);
    Ok(HolderEstimate { exponent, seminorm, pairs: budget, exhaustive: false, argmax })
}

/// Nodes of the closed domain whose stencil stays clear of the floor: those
/// at Chebyshev distance more than 2 from every node with `u <= δ`.
fn clear_of_floor(u: &ScalarField) -> Vec<usize> {
    let grid = u.grid();
    let floor = rupture_floor(u);
    let shape = grid.shape2();
    let mut blocked = vec![false; grid.len()];
    for k in 0..grid.len() {
        if u.values()[k] <= floor {
            let (i, j) = grid.ij(k);
            for a in i.saturating_sub(2)..=(i + 2).min(shape[0] - 1) {
                for b in j.saturating_sub(2)..=(j + 2).min(shape[1] - 1) {
                    blocked[grid.index(a, b)] = true;
                }
            }
        }
    }
    closure_nodes(u).into_iter().filter(|&k| !blocked[k] && grid.is_interior(k)).collect()
}

/// `sup |∇u| u^{(p-1)/2}` over interior nodes clear of the floor.
pub fn gradient_bound_ratio(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let p = u.p();
    let vals = u.values();
    clear_of_floor(u)
        .into_iter()
        .map(|k| {
            let g = grad_at(grid, vals, k);
            g[0].hypot(g[1]) * vals[k].powf(0.5 * (p - 1.0))
        })
        .fold(0.0, f64::max)
}

/// `sup |∇(u^{(p+1)/2})|` over interior nodes clear of the floor, with the
/// gradient taken by differencing the power of `u`.
pub fn lipschitz_companion(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let e = 0.5 * (u.p() + 1.0);
    let w: Vec<f64> = u.values().iter().map(|v| v.max(0.0).powf(e)).collect();
    clear_of_floor(u)
        .into_iter()
        .map(|k| {
            let g = grad_at(grid, &w, k);
            g[0].hypot(g[1])
        })
        .fold(0.0, f64::max)
}

/// Domain-variation functional
/// `∫ (½|∇u|² - u^{1-p}/(p-1)) div Y - Σ_{ij} ∂_j Y_i ∂_i u ∂_j u`
/// by node sums with centered differences. `Y` must vanish on every node
/// within two cells of a non-interior node.
pub fn stationarity_residual(u: &ScalarField, y: &VectorField) -> Result<f64> {
    let grid = u.grid();
    if y.grid() != grid {
        return Err(Error::InvalidInput("vector field lives on a different grid".into()));
    }
    let shape = grid.shape2();
    let dim = grid.dim();
    let reach = 2;
    for k in 0..grid.len() {
        let yk = y.at(k);
        if yk[0] == 0.0 && yk[1] == 0.0 {
            continue;
        }
        let (i, j) = grid.ij(k);
        let near_boundary = i < reach
            || i + reach >= shape[0]
            || (dim == 2 && (j < reach || j + reach >= shape[1]))
            || (i - reach..=i + reach).any(|a| {
                let (jl, jh) = if dim == 2 { (j - reach, j + reach) } else { (0, 0) };
                (jl..=jh).any(|b| !grid.is_interior(grid.index(a, b)))
            });
        if near_boundary {
            return Err(Error::InvalidInput(format!(
                "vector field must vanish within 2 cells of the boundary; node {k} at ({:.4}, {:.4}) carries ({:.3e}, {:.3e})",
                grid.coords(k)[0],
                grid.coords(k)[1],
                yk[0],
                yk[1]
            )));
        }
    }
    let p = u.p();
    let floor = rupture_floor(u);
    let vals = u.values();
    let comps = y.components();
    let total: f64 = grid
        .interior_nodes()
        .map(|k| {
            let yk = y.at(k);
            let (nb, count) = grid.neighbors(k);
            if yk[0] == 0.0 && yk[1] == 0.0 && nb[..count].iter().all(|&m| y.at(m) == [0.0, 0.0]) {
                return 0.0;
            }
            let g = grad_at(grid, vals, k);
            let mut dy = [[0.0; 2]; 2];
            for (i, c) in comps.iter().enumerate() {
                dy[i] = grad_at(grid, c, k);
            }
            let div = dy[0][0] + if dim == 2 { dy[1][1] } else { 0.0 };
            let v = vals[k].max(floor);
            let lagr = 0.5 * (g[0] * g[0] + g[1] * g[1]) - v.powf(1.0 - p) / (p - 1.0);
            let mut dyuu = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    dyuu += dy[i][j] * g[i] * g[j];
                }
            }
            lagr * div - dyuu
        })
        .sum();
    Ok(total * grid.cell_volume())
}
