//! Finite-difference operators and off-node sampling.

use super::grid::{Grid, Point};
use super::scalar::{check_finite, ScalarField, VectorField};
use crate::error::{Error, Result};

/// Second-order derivative along one axis at node `k`: central in the array
/// interior, one-sided at the array edge.
#[inline]
fn axis_derivative(grid: &Grid, values: &[f64], k: usize, axis: usize) -> f64 {
    let shape = grid.shape2();
    let (i, j) = grid.ij(k);
    let (idx, n, stride) = if axis == 0 { (i, shape[0], shape[1]) } else { (j, shape[1], 1) };
    let h2 = 2.0 * grid.h();
    if idx == 0 {
        (-3.0 * values[k] + 4.0 * values[k + stride] - values[k + 2 * stride]) / h2
    } else if idx + 1 == n {
        (3.0 * values[k] - 4.0 * values[k - stride] + values[k - 2 * stride]) / h2
    } else {
        (values[k + stride] - values[k - stride]) / h2
    }
}

/// Gradient of raw node values at node `k`.
#[inline]
pub(crate) fn grad_at(grid: &Grid, values: &[f64], k: usize) -> [f64; 2] {
    let gx = axis_derivative(grid, values, k, 0);
    let gy = if grid.dim() == 2 { axis_derivative(grid, values, k, 1) } else { 0.0 };
    [gx, gy]
}

/// Standard 3-point / 5-point Laplacian at a node off the array edge.
#[inline]
pub(crate) fn laplacian_at(grid: &Grid, values: &[f64], k: usize) -> f64 {
    let (nb, count) = grid.neighbors(k);
    let mut s = -(count as f64) * values[k];
    for &m in &nb[..count] {
        s += values[m];
    }
    s / (grid.h() * grid.h())
}

/// Central differences at array-interior nodes, second-order one-sided
/// differences on the array edge. Exact on quadratics.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    check_finite(f.values())?;
    let grid = f.grid();
    let dim = grid.dim();
    let mut components = vec![vec![0.0; grid.len()]; dim];
    for k in 0..grid.len() {
        let g = grad_at(grid, f.values(), k);
        for a in 0..dim {
            components[a][k] = g[a];
        }
    }
    VectorField::new(f.grid_arc().clone(), components)
}

/// Discrete Laplacian. Nodes on the edge of the node array have no stencil;
/// they hold 0 in the result and should be ignored (see
/// [`Grid::on_array_edge`]).
pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    check_finite(f.values())?;
    let grid = f.grid();
    let values = (0..grid.len())
        .map(|k| if grid.on_array_edge(k) { 0.0 } else { laplacian_at(grid, f.values(), k) })
        .collect();
    f.with_values(values)
}

/// Bilinear (linear in 1D) interpolation stencil: four node indices and
/// weights. `None` when `x` is outside the node hull.
#[inline]
pub(crate) fn bilinear_stencil(grid: &Grid, x: Point) -> Option<([usize; 4], [f64; 4])> {
    let f = grid.locate(x);
    let shape = grid.shape2();
    let eps = 1e-9;
    let cell = |v: f64, n: usize| -> Option<(usize, f64)> {
        if v < -eps || v > (n - 1) as f64 + eps {
            return None;
        }
        let i = (v.floor().max(0.0) as usize).min(n - 2);
        Some((i, (v - i as f64).clamp(0.0, 1.0)))
    };
    let (i, tx) = cell(f[0], shape[0])?;
    if grid.dim() == 1 {
        let k = grid.index(i, 0);
        return Some(([k, k + 1, k, k], [1.0 - tx, tx, 0.0, 0.0]));
    }
    let (j, ty) = cell(f[1], shape[1])?;
    let k00 = grid.index(i, j);
    let k10 = grid.index(i + 1, j);
    Some((
        [k00, k10, k00 + 1, k10 + 1],
        [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty],
    ))
}

/// Interpolated value of raw node data at `x`.
#[inline]
pub(crate) fn interpolate_values(grid: &Grid, values: &[f64], x: Point) -> Option<f64> {
    let (idx, w) = bilinear_stencil(grid, x)?;
    Some(idx.iter().zip(&w).map(|(&k, &w)| w * values[k]).sum())
}

/// Interpolated nodal gradient at `x`.
#[inline]
pub(crate) fn interpolate_gradient_values(grid: &Grid, values: &[f64], x: Point) -> Option<[f64; 2]> {
    let (idx, w) = bilinear_stencil(grid, x)?;
    let mut g = [0.0; 2];
    for (&k, &w) in idx.iter().zip(&w) {
        if w == 0.0 {
            continue;
        }
        let gk = grad_at(grid, values, k);
        g[0] += w * gk[0];
        g[1] += w * gk[1];
    }
    Some(g)
}

/// Bilinear interpolation of a field at an arbitrary point of the hull.
pub fn interpolate(f: &ScalarField, x: Point) -> Result<f64> {
    interpolate_values(f.grid(), f.values(), x)
        .ok_or_else(|| Error::OutOfDomain(format!("point ({}, {}) outside the grid hull", x[0], x[1])))
}

/// Bilinear interpolation of the nodal gradient.
pub fn interpolate_gradient(f: &ScalarField, x: Point) -> Result<[f64; 2]> {
    interpolate_gradient_values(f.grid(), f.values(), x)
        .ok_or_else(|| Error::OutOfDomain(format!("point ({}, {}) outside the grid hull", x[0], x[1])))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn square(h: f64) -> Arc<Grid> {
        Arc::new(Grid::rectangle([-1.0, -1.0], [2.0, 2.0], h).unwrap())
    }

    #[test]
    fn gradient_exact_on_affine_and_quadratic() {
        let g = square(0.1);
        let f = ScalarField::from_fn(g.clone(), 3.0, |x| x[0]).unwrap();
        let grad = gradient(&f).unwrap();
        for k in 0..g.len() {
            assert!((grad.at(k)[0] - 1.0).abs() < 1e-12);
            assert!(grad.at(k)[1].abs() < 1e-12);
        }
        let f = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let grad = gradient(&f).unwrap();
        for k in 0..g.len() {
            let x = g.coords(k);
            assert!((grad.at(k)[0] - 2.0 * x[0]).abs() < 1e-11);
            assert!((grad.at(k)[1] - 2.0 * x[1]).abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_exact_cases() {
        let g = square(0.05);
        let f = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let lap = laplacian(&f).unwrap();
        let lin = laplacian(&ScalarField::from_fn(g.clone(), 3.0, |x| x[0]).unwrap()).unwrap();
        for k in g.interior_nodes() {
            assert!((lap.values()[k] - 4.0).abs() < 1e-9);
            assert!(lin.values()[k].abs() < 1e-9);
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear() {
        let g = square(0.1);
        let f = ScalarField::from_fn(g, 3.0, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]).unwrap();
        let x = [0.123, -0.456];
        let v = interpolate(&f, x).unwrap();
        assert!((v - (1.0 + 0.246 + 0.456 + 0.5 * 0.123 * -0.456)).abs() < 1e-12);
        assert!(interpolate(&f, [1.5, 0.0]).is_err());
    }

    #[test]
    fn gradient_rejects_non_finite() {
        // Construction already refuses NaN, so build through the raw path.
        let g = square(0.5);
        let f = ScalarField::constant(g, 3.0, 1.0).unwrap();
        assert!(gradient(&f).is_ok());
        assert!(check_finite(&[1.0, f64::INFINITY]).is_err());
    }
}
