//! Quadrature over balls and spheres centered anywhere in the grid hull.
//!
//! Ball integrals are node sums `Σ w_k f_k h^n`, where the weight of a cell
//! cut by the sphere is estimated from the signed distance of its center and
//! clamped to `[0, 1]`. Sphere integrals use the trapezoidal rule on the
//! circle with bilinearly interpolated values.
//!
//! Integrals of functionals of a solution `u` (powers of `u`, `|∇u|²`, ...)
//! go through [`ball_integral_with`]. Around an isolated rupture node, where
//! `u` vanishes and negative powers of `u` are singular, the node sum is
//! replaced on a small patch of cells by exact-in-radius quadrature of the
//! local homogeneous model `u ≈ ρ^α φ(θ)`, `α = 2/(p+1)`, with `φ` read off
//! the ring of nodes around the patch.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::grid::{Grid, Point};
use super::ops::{grad_at, interpolate_gradient_values, interpolate_values};
use super::scalar::ScalarField;
use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

/// Half-width (in cells) of the patch treated with the homogeneous model.
pub const RUPTURE_PATCH_HALF_WIDTH: usize = 2;

/// Weight of the cell centered at distance `d` from the ball center.
#[inline]
pub fn ball_weight(d: f64, r: f64, inner: Option<f64>, h: f64) -> f64 {
    let outer = (0.5 - (d - r) / h).clamp(0.0, 1.0);
    match inner {
        Some(r_in) => outer * (0.5 + (d - r_in) / h).clamp(0.0, 1.0),
        None => outer,
    }
}

/// Local data handed to integrands.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub pos: Point,
    pub u: f64,
    pub grad: [f64; 2],
}

impl Sample {
    #[inline]
    pub fn grad_sq(&self) -> f64 {
        self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1]
    }
}

fn check_ball(grid: &Grid, x: Point, r: f64, inner: Option<f64>) -> Result<()> {
    if let Some(r_in) = inner {
        if !(r_in >= 0.0 && r_in < r) {
            return Err(Error::InvalidInput(format!("inner radius {r_in} must lie in [0, {r})")));
        }
    }
    grid.require_ball(x, r, 0.5 * grid.h())
}

/// `∫_{B_r(x)} f` (or over the shell `inner < |y - x| <= r`).
pub fn ball_integral(f: &ScalarField, x: Point, r: f64, inner: Option<f64>) -> Result<f64> {
    let grid = f.grid();
    check_ball(grid, x, r, inner)?;
    let h = grid.h();
    let values = f.values();
    let mut sum = 0.0;
    for_each_in_window(grid, x, r + h, |k, d| {
        let w = ball_weight(d, r, inner, h);
        if w > 0.0 {
            sum += w * values[k];
        }
    });
    Ok(sum * grid.cell_volume())
}

fn for_each_in_window(grid: &Grid, x: Point, reach: f64, mut visit: impl FnMut(usize, f64)) {
    let (lo, hi) = grid.window(x, reach);
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            let k = grid.index(i, j);
            let y = grid.coords(k);
            let d = if grid.dim() == 1 { (y[0] - x[0]).abs() } else { (y[0] - x[0]).hypot(y[1] - x[1]) };
            visit(k, d);
        }
    }
}

/// `∫_{B_r(x)} F(u, ∇u, y) dy` for a solution-like field `u`.
///
/// With a positive `floor`, values of `u` below it are raised to `floor`
/// before the integrand sees them, except on the patches around isolated rupture nodes (nodes
/// with `u <= floor`), which are integrated with the local homogeneous model
/// (2D only).
pub fn ball_integral_with<F>(u: &ScalarField, x: Point, r: f64, inner: Option<f64>, floor: f64, integrand: F) -> Result<f64>
where
    F: Fn(&Sample) -> f64,
{
    let grid = u.grid();
    check_ball(grid, x, r, inner)?;
    let h = grid.h();
    let values = u.values();
    let patches = if grid.dim() == 2 && floor > 0.0 {
        find_rupture_patches(u, x, r + h, floor)
    } else {
        Vec::new()
    };
    let in_patch = |k: usize| patches.iter().any(|p| p.contains(grid, k));
    let mut sum = 0.0;
    for_each_in_window(grid, x, r + h, |k, d| {
        let w = ball_weight(d, r, inner, h);
        if w == 0.0 || (!patches.is_empty() && in_patch(k)) {
            return;
        }
        let v = if floor > 0.0 { values[k].max(floor) } else { values[k] };
        let s = Sample { pos: grid.coords(k), u: v, grad: grad_at(grid, values, k) };
        sum += w * integrand(&s);
    });
    sum *= grid.cell_volume();
    for patch in &patches {
        sum += patch.integrate(grid, x, r, inner, &integrand);
    }
    Ok(sum)
}

/// Homogeneous model around an isolated rupture node.
struct RupturePatch {
    center_ij: (usize, usize),
    center: Point,
    alpha: f64,
    /// Ring samples `(θ, φ)` sorted by angle.
    ring: Vec<(f64, f64)>,
}

fn find_rupture_patches(u: &ScalarField, x: Point, reach: f64, floor: f64) -> Vec<RupturePatch> {
    let grid = u.grid();
    let values = u.values();
    let shape = grid.shape2();
    let kk = RUPTURE_PATCH_HALF_WIDTH as isize;
    let ring_w = kk + 1;
    let alpha = 2.0 / (u.p() + 1.0);
    let mut out = Vec::new();
    for_each_in_window(grid, x, reach, |k, _| {
        if values[k] > floor {
            return;
        }
        let (i, j) = grid.ij(k);
        let (i, j) = (i as isize, j as isize);
        if i - ring_w < 0 || j - ring_w < 0 || i + ring_w >= shape[0] as isize || j + ring_w >= shape[1] as isize {
            return;
        }
        let mut ring = Vec::with_capacity(8 * ring_w as usize);
        let mut isolated = true;
        for a in -ring_w..=ring_w {
            for b in -ring_w..=ring_w {
                if a == 0 && b == 0 {
                    continue;
                }
                let m = grid.index((i + a) as usize, (j + b) as usize);
                if values[m] <= floor {
                    isolated = false;
                }
                if a.abs() == ring_w || b.abs() == ring_w {
                    let rho = h_norm(a, b) * grid.h();
                    ring.push(((b as f64).atan2(a as f64), values[m] / rho.powf(alpha)));
                }
            }
        }
        if !isolated {
            return;
        }
        ring.sort_by(|p, q| p.0.total_cmp(&q.0));
        out.push(RupturePatch { center_ij: (i as usize, j as usize), center: grid.coords(k), alpha, ring });
    });
    out
}

#[inline]
fn h_norm(a: isize, b: isize) -> f64 {
    (a as f64).hypot(b as f64)
}

struct PatchRules {
    cell: Vec<(f64, f64, f64)>,
    theta: Vec<(f64, f64)>,
    radial: Vec<(f64, f64)>,
}

fn patch_rules() -> &'static PatchRules {
    static RULES: OnceLock<PatchRules> = OnceLock::new();
    RULES.get_or_init(|| {
        let (x4, w4) = gauss_legendre(4);
        let mut cell = Vec::new();
        for (a, wa) in x4.iter().zip(&w4) {
            for (b, wb) in x4.iter().zip(&w4) {
                cell.push((0.5 * a, 0.5 * b, 0.25 * wa * wb));
            }
        }
        let (xt, wt) = gauss_legendre(12);
        let theta = xt.iter().zip(&wt).map(|(&x, &w)| (x, w)).collect();
        let (xr, wr) = gauss_legendre(24);
        let radial = xr.iter().zip(&wr).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        PatchRules { cell, theta, radial }
    })
}

impl RupturePatch {
    fn contains(&self, grid: &Grid, k: usize) -> bool {
        let (i, j) = grid.ij(k);
        let kk = RUPTURE_PATCH_HALF_WIDTH;
        i.abs_diff(self.center_ij.0) <= kk && j.abs_diff(self.center_ij.1) <= kk
    }

    /// Piecewise-linear periodic interpolant of the ring samples: `(φ, φ')`.
    fn phi(&self, theta: f64) -> (f64, f64) {
        let n = self.ring.len();
        let idx = self.ring.partition_point(|s| s.0 <= theta);
        let (t0, f0, t1, f1) = if idx == 0 || idx == n {
            let (a, b) = (self.ring[n - 1], self.ring[0]);
            let t1 = if idx == 0 { b.0 } else { b.0 + 2.0 * PI };
            let t0 = if idx == 0 { a.0 - 2.0 * PI } else { a.0 };
            (t0, a.1, t1, b.1)
        } else {
            let (a, b) = (self.ring[idx - 1], self.ring[idx]);
            (a.0, a.1, b.0, b.1)
        };
        let slope = (f1 - f0) / (t1 - t0);
        (f0 + slope * (theta - t0), slope)
    }

    fn sample(&self, pos: Point) -> Sample {
        let dx = pos[0] - self.center[0];
        let dy = pos[1] - self.center[1];
        let rho = dx.hypot(dy);
        let theta = dy.atan2(dx);
        let (phi, dphi) = self.phi(theta);
        let ra = rho.powf(self.alpha);
        let (c, s) = (dx / rho, dy / rho);
        let ur = self.alpha * ra / rho * phi;
        let ut = ra / rho * dphi;
        Sample { pos, u: ra * phi, grad: [ur * c - ut * s, ur * s + ut * c] }
    }

    fn integrate<F: Fn(&Sample) -> f64>(&self, grid: &Grid, x: Point, r: f64, inner: Option<f64>, f: &F) -> f64 {
        let h = grid.h();
        let kk = RUPTURE_PATCH_HALF_WIDTH as isize;
        let rules = patch_rules();
        let mut total = 0.0;
        for a in -kk..=kk {
            for b in -kk..=kk {
                let cx = [self.center[0] + a as f64 * h, self.center[1] + b as f64 * h];
                let d = (cx[0] - x[0]).hypot(cx[1] - x[1]);
                let w = ball_weight(d, r, inner, h);
                if w == 0.0 {
                    continue;
                }
                let cell = if a == 0 && b == 0 {
                    self.center_cell(h, f)
                } else {
                    rules
                        .cell
                        .iter()
                        .map(|&(s, t, wq)| wq * f(&self.sample([cx[0] + s * h, cx[1] + t * h])))
                        .sum::<f64>()
                        * h
                        * h
                };
                total += w * cell;
            }
        }
        total
    }

    /// Polar quadrature over the center cell; the substitution `ρ = ρ_max t^m`
    /// removes the algebraic singularity at the rupture node.
    fn center_cell<F: Fn(&Sample) -> f64>(&self, h: f64, f: &F) -> f64 {
        let rules = patch_rules();
        let m = (2.0 / self.alpha).ceil() + 1.0;
        let half = 0.5 * h;
        let mut total = 0.0;
        for octant in 0..8 {
            let t0 = octant as f64 * PI / 4.0 - PI;
            for &(xt, wt) in &rules.theta {
                let theta = t0 + PI / 8.0 * (xt + 1.0);
                let wtheta = PI / 8.0 * wt;
                let (c, s) = (theta.cos(), theta.sin());
                let rho_max = half / c.abs().max(s.abs());
                let mut radial = 0.0;
                for &(t, wr) in &rules.radial {
                    let tm = t.powf(m);
                    let rho = rho_max * tm;
                    let drho = rho_max * m * tm / t;
                    let sample = self.sample([self.center[0] + rho * c, self.center[1] + rho * s]);
                    radial += wr * f(&sample) * rho * drho;
                }
                total += wtheta * radial;
            }
        }
        total
    }
}

/// Quadrature points on `∂B_r(x)`: `(point, outward normal, weight)`.
pub fn sphere_points(grid: &Grid, x: Point, r: f64) -> Vec<(Point, [f64; 2], f64)> {
    if grid.dim() == 1 {
        return vec![([x[0] - r, 0.0], [-1.0, 0.0], 1.0), ([x[0] + r, 0.0], [1.0, 0.0], 1.0)];
    }
    let m = ((2.0 * PI * r / grid.h()).ceil() as usize).max(64);
    let w = 2.0 * PI * r / m as f64;
    (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            let (s, c) = t.sin_cos();
            ([x[0] + r * c, x[1] + r * s], [c, s], w)
        })
        .collect()
}

fn check_sphere(grid: &Grid, x: Point, r: f64) -> Result<()> {
    grid.require_ball(x, r, 0.0)
}

/// `∫_{∂B_r(x)} f dσ` (in 1D: `f(x - r) + f(x + r)`).
pub fn sphere_integral(f: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let grid = f.grid();
    check_sphere(grid, x, r)?;
    let mut sum = 0.0;
    for (y, _, w) in sphere_points(grid, x, r) {
        sum += w * interpolate_values(grid, f.values(), y).ok_or_else(|| outside(y))?;
    }
    Ok(sum)
}

fn outside(y: Point) -> Error {
    Error::OutOfDomain(format!("quadrature point ({}, {}) outside the grid hull", y[0], y[1]))
}

/// `∫_{∂B_r(x)} F(u, ∂u/∂r, y) dσ` with interpolated values and gradients.
pub fn sphere_integral_with<F>(u: &ScalarField, x: Point, r: f64, integrand: F) -> Result<f64>
where
    F: Fn(f64, f64, Point) -> f64,
{
    let grid = u.grid();
    check_sphere(grid, x, r)?;
    let mut sum = 0.0;
    for (y, nu, w) in sphere_points(grid, x, r) {
        let v = interpolate_values(grid, u.values(), y).ok_or_else(|| outside(y))?;
        let g = interpolate_gradient_values(grid, u.values(), y).ok_or_else(|| outside(y))?;
        sum += w * integrand(v, g[0] * nu[0] + g[1] * nu[1], y);
    }
    Ok(sum)
}

/// Radial derivative sampled at the sphere quadrature points.
#[derive(Debug, Clone)]
pub struct SphereSamples {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

/// `∇f · ν` at the quadrature points of `∂B_r(x)`.
pub fn radial_derivative(f: &ScalarField, x: Point, r: f64) -> Result<SphereSamples> {
    let grid = f.grid();
    grid.require_ball(x, r, grid.h())?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (y, nu, _) in sphere_points(grid, x, r) {
        let g = interpolate_gradient_values(grid, f.values(), y).ok_or_else(|| outside(y))?;
        points.push(y);
        values.push(g[0] * nu[0] + g[1] * nu[1]);
    }
    Ok(SphereSamples { points, values })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn disk(h: f64) -> Arc<Grid> {
        Arc::new(Grid::disk([0.0, 0.0], 1.0, h).unwrap())
    }

    fn radial(g: Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(g, 3.0, |x| 2f64.sqrt() * x[0].hypot(x[1]).sqrt()).unwrap()
    }

    #[test]
    fn area_of_disk() {
        let h = 1.0 / 128.0;
        let one = ScalarField::constant(disk(h), 3.0, 1.0).unwrap();
        let a = ball_integral(&one, [0.0, 0.0], 0.5, None).unwrap();
        assert!((a - PI * 0.25).abs() <= 2.0 * h, "{a}");
        let shell = ball_integral(&one, [0.1, 0.0], 0.5, Some(0.25)).unwrap();
        assert!((shell - PI * (0.25 - 0.0625)).abs() <= 4.0 * h);
    }

    #[test]
    fn circle_integrals() {
        let g = disk(1.0 / 128.0);
        let one = ScalarField::constant(g.clone(), 3.0, 1.0).unwrap();
        assert!((sphere_integral(&one, [0.0, 0.0], 0.5).unwrap() - PI).abs() < 0.01 * PI);
        let x2 = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0]).unwrap();
        assert!((sphere_integral(&x2, [0.0, 0.0], 1.0).unwrap() - PI).abs() < 0.01 * PI);
        let u2 = ScalarField::from_fn(g, 3.0, |x| 2.0 * x[0].hypot(x[1])).unwrap();
        for r in [0.2, 0.5, 0.9] {
            let s = sphere_integral(&u2, [0.0, 0.0], r).unwrap();
            assert!((s - 4.0 * PI * r * r).abs() < 0.01 * 4.0 * PI * r * r);
        }
    }

    #[test]
    fn singular_powers_of_radial_solution() {
        // ∫_{B_r} (√2 ρ^{1/2})^{-3} = √2 π r^{1/2}; ∫_{B_r} √2 ρ^{1/2} = (4√2π/5) r^{5/2}.
        let h = 1.0 / 256.0;
        let u = radial(disk(h));
        let floor = h.sqrt() / 100.0;
        for r in [0.25, 0.5] {
            let up = ball_integral_with(&u, [0.0, 0.0], r, None, floor, |s| s.u.powi(-3)).unwrap();
            let exact = 2f64.sqrt() * PI * r.sqrt();
            assert!((up - exact).abs() < 0.02 * exact, "r={r}: {up} vs {exact}");
        }
        let m = ball_integral(&u, [0.0, 0.0], 1.0 - 2.0 * h, None).unwrap();
        let exact = 4.0 * 2f64.sqrt() * PI / 5.0 * (1.0 - 2.0 * h).powf(2.5);
        assert!((m - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn radial_derivative_of_quadratic() {
        let g = disk(1.0 / 128.0);
        let f = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let s = radial_derivative(&f, [0.0, 0.0], 0.5).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-3));
        let lin = ScalarField::from_fn(g, 3.0, |x| x[0]).unwrap();
        let s = radial_derivative(&lin, [0.0, 0.0], 0.9).unwrap();
        for (y, v) in s.points.iter().zip(&s.values) {
            assert!((v - y[0] / 0.9).abs() < 1e-9);
        }
    }

    #[test]
    fn one_dimensional_ball_and_sphere() {
        let g = Arc::new(Grid::interval(-1.0, 1.0, 201).unwrap());
        let one = ScalarField::constant(g.clone(), 3.0, 1.0).unwrap();
        let len = ball_integral(&one, [0.0, 0.0], 0.5, None).unwrap();
        assert!((len - 1.0).abs() < 0.02);
        assert!((sphere_integral(&one, [0.0, 0.0], 0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_balls_leaving_hull() {
        let u = radial(disk(1.0 / 32.0));
        assert!(matches!(ball_integral(&u, [0.9, 0.0], 0.5, None), Err(Error::OutOfDomain(_))));
        assert!(matches!(sphere_integral(&u, [0.0, 0.9], 0.5), Err(Error::OutOfDomain(_))));
        assert!(ball_integral(&u, [0.0, 0.0], 0.5, Some(0.6)).is_err());
    }
}
