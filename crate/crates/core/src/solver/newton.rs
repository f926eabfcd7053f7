use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{laplacian_at, Grid, ScalarField};
use crate::linalg::InteriorOperator;

/// `g_δ(u) = max(u, δ)^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedNonlinearity {
    p: f64,
    delta: f64,
}

impl RegularizedNonlinearity {
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidInput(format!("regularization floor must be >= 0, got {delta}")));
        }
        Ok(RegularizedNonlinearity { p, delta })
    }

    /// Floor tied to the Hölder scale of rupture solutions: `h^{2/(p+1)} / 100`.
    pub fn default_delta(h: f64, p: f64) -> f64 {
        h.powf(2.0 / (p + 1.0)) / 100.0
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        u.max(self.delta).powf(-self.p)
    }

    /// `g_δ'(u)`; zero on the floor.
    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        if u > self.delta {
            -self.p * u.powf(-self.p - 1.0)
        } else {
            0.0
        }
    }

    #[inline]
    pub fn is_floored(&self, u: f64) -> bool {
        u <= self.delta
    }
}

/// Newton parameters shared by the Dirichlet solver and the continuation
/// corrector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub max_newton_iters: usize,
    /// Sup norm of the discrete PDE residual on interior nodes.
    pub residual_tol: f64,
    /// Step reduction factor of the backtracking line search.
    pub damping: f64,
    pub max_backtracks: usize,
    /// Regularization floor; `None` selects [`RegularizedNonlinearity::default_delta`].
    pub delta: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { max_newton_iters: 50, residual_tol: 1e-8, damping: 0.5, max_backtracks: 30, delta: None }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(Error::InvalidInput(format!("residual_tol must be positive, got {}", self.residual_tol)));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidInput("max_newton_iters must be at least 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidInput(format!("delta must be >= 0, got {d}")));
            }
        }
        Ok(())
    }

    pub fn nonlinearity(&self, grid: &Grid, p: f64) -> Result<RegularizedNonlinearity> {
        RegularizedNonlinearity::new(p, self.delta.unwrap_or_else(|| RegularizedNonlinearity::default_delta(grid.h(), p)))
    }
}

/// Outcome of [`solve_dirichlet`].
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub field: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    /// Fraction of interior nodes sitting on the regularization floor.
    pub floored_fraction: f64,
    /// More than half of the interior nodes are floored; the result says
    /// more about the regularization than about the equation.
    pub regularization_dominated: bool,
}

fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidInput("boundary data and guess live on different grids".into()));
    }
    Ok(())
}

fn residual_into(op: &InteriorOperator, values: &[f64], g: &RegularizedNonlinearity, out: &mut [f64]) {
    let grid = op.grid();
    for (r, &k) in out.iter_mut().zip(op.unknowns()) {
        *r = laplacian_at(grid, values, k) - g.value(values[k]);
    }
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves `Δ_h u = g_δ(u)` on the interior nodes of the grid of `bc`, with
/// the values of `bc` on every other node as Dirichlet data.
///
/// Damped Newton: each step solves `(Δ_h - diag g_δ'(u)) du = -F(u)` and
/// backtracks until the Euclidean residual norm decreases. The exponent is
/// the one attached to `bc`.
pub fn solve_dirichlet(bc: &ScalarField, guess: &ScalarField, cfg: &SolveConfig) -> Result<DirichletSolution> {
    cfg.validate()?;
    same_grid(bc, guess)?;
    let grid = bc.grid_arc().clone();
    let g = cfg.nonlinearity(&grid, bc.p())?;
    let mut op = InteriorOperator::new(grid.clone())?;
    check_boundary_positive(&grid, bc)?;
    let mut values = bc.values().to_vec();
    for &k in op.unknowns() {
        let v = guess.values()[k];
        if v <= g.delta() {
            return Err(Error::InvalidInput(format!(
                "guess must exceed the floor {:.3e} on interior nodes (node {k} has {v:.3e})",
                g.delta()
            )));
        }
        values[k] = v;
    }
    let n = op.len();
    let mut res = vec![0.0; n];
    let mut trial_res = vec![0.0; n];
    let mut shift = vec![0.0; n];
    residual_into(&op, &values, &g, &mut res);
    let mut iterations = 0;
    loop {
        let r_inf = norm_inf(&res);
        if r_inf <= cfg.residual_tol {
            return Ok(finish(&op, values, bc.p(), &g, iterations, r_inf));
        }
        if iterations == cfg.max_newton_iters {
            return Err(diverged(&grid, values, bc.p(), iterations, r_inf, "iteration limit reached"));
        }
        iterations += 1;
        for (s, &k) in shift.iter_mut().zip(op.unknowns()) {
            *s = -g.derivative(values[k]);
        }
        op.factor(&shift)?;
        let mut du: Vec<f64> = res.iter().map(|r| -r).collect();
        op.solve(&mut du)?;
        let r2 = norm2(&res);
        let mut t = 1.0;
        let mut trial = values.clone();
        let mut accepted = false;
        for _ in 0..=cfg.max_backtracks {
            for (d, &k) in du.iter().zip(op.unknowns()) {
                trial[k] = values[k] + t * d;
            }
            residual_into(&op, &trial, &g, &mut trial_res);
            let t2 = norm2(&trial_res);
            if t2.is_finite() && t2 < (1.0 - 1e-4 * t) * r2 {
                accepted = true;
                break;
            }
            t *= cfg.damping;
        }
        if !accepted {
            return Err(diverged(&grid, values, bc.p(), iterations, r_inf, "line search failed to reduce the residual"));
        }
        values = trial;
        std::mem::swap(&mut res, &mut trial_res);
    }
}

fn check_boundary_positive(grid: &Grid, bc: &ScalarField) -> Result<()> {
    for k in grid.interior_nodes() {
        let (nb, count) = grid.neighbors(k);
        for &m in &nb[..count] {
            if !grid.is_interior(m) && bc.values()[m] <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "boundary data must be positive; node {m} has {}",
                    bc.values()[m]
                )));
            }
        }
    }
    Ok(())
}

fn finish(op: &InteriorOperator, values: Vec<f64>, p: f64, g: &RegularizedNonlinearity, iterations: usize, residual: f64) -> DirichletSolution {
    let floored = op.unknowns().iter().filter(|&&k| g.is_floored(values[k])).count();
    let floored_fraction = floored as f64 / op.len() as f64;
    let field = ScalarField::new(op.grid().clone(), values, p).expect("iterates stay finite");
    DirichletSolution { field, iterations, residual, floored_fraction, regularization_dominated: floored_fraction > 0.5 }
}

fn diverged(grid: &Arc<Grid>, values: Vec<f64>, p: f64, iterations: usize, residual: f64, reason: &str) -> Error {
    Error::Diverged {
        iterations,
        residual,
        reason: reason.into(),
        last: ScalarField::new(grid.clone(), values, p).ok().map(Box::new),
    }
}

/// `Δ_h u - g_δ(u)` on interior nodes, zero elsewhere.
pub fn residual_field(u: &ScalarField, p: f64, delta: f64) -> Result<ScalarField> {
    let g = RegularizedNonlinearity::new(p, delta)?;
    let grid = u.grid();
    let mut out = vec![0.0; grid.len()];
    for k in grid.interior_nodes() {
        out[k] = laplacian_at(grid, u.values(), k) - g.value(u.values()[k]);
    }
    u.with_values(out)
}

/// Discrete harmonic function with the non-interior values of `bc`.
pub fn harmonic_extension(bc: &ScalarField) -> Result<ScalarField> {
    let mut op = InteriorOperator::new(bc.grid_arc().clone())?;
    let mut rhs: Vec<f64> = op.boundary_rhs(bc.values()).iter().map(|b| -b).collect();
    op.factor(&vec![0.0; op.len()])?;
    op.solve(&mut rhs)?;
    let mut values = bc.values().to_vec();
    op.scatter(&rhs, &mut values);
    bc.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_residual() {
        let g = Arc::new(Grid::disk([0.0, 0.0], 1.0, 0.1).unwrap());
        let one = ScalarField::constant(g.clone(), 3.0, 1.0).unwrap();
        let r = residual_field(&one, 3.0, 0.0).unwrap();
        for k in g.interior_nodes() {
            assert_eq!(r.values()[k], -1.0);
        }
    }

    #[test]
    fn nonlinearity_floor() {
        let g = RegularizedNonlinearity::new(2.0, 0.1).unwrap();
        assert!((g.value(0.05) - 100.0).abs() < 1e-12);
        assert_eq!(g.derivative(0.05), 0.0);
        assert!((g.derivative(0.5) + 16.0).abs() < 1e-12);
        assert!(RegularizedNonlinearity::new(1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SolveConfig { damping: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolveConfig { residual_tol: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
