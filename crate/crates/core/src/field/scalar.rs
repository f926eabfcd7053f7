use std::sync::Arc;

use super::grid::{Grid, Point};
use crate::error::{Error, Result};

/// Node values on a [`Grid`] together with the exponent `p` of the equation
/// the field belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    p: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")))
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, value: values[index] }),
        None => Ok(()),
    }
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, p: f64) -> Result<Self> {
        check_p(p)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(ScalarField { grid, values, p })
    }

    /// Like [`ScalarField::new`] but also rejects negative values, as
    /// required of a solution `u` of the rupture equation.
    pub fn new_nonneg(grid: Arc<Grid>, values: Vec<f64>, p: f64) -> Result<Self> {
        let f = Self::new(grid, values, p)?;
        f.check_nonneg()?;
        Ok(f)
    }

    pub fn from_fn(grid: Arc<Grid>, p: f64, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Self::new(grid, values, p)
    }

    pub fn constant(grid: Arc<Grid>, p: f64, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n], p)
    }

    pub fn check_nonneg(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::Negative { index, value: self.values[index] }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same values, different exponent.
    pub fn with_p(mut self, p: f64) -> Result<Self> {
        check_p(p)?;
        self.p = p;
        Ok(self)
    }

    /// New field on the same grid with the given values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`; both fields must share a grid.
    pub fn lincomb(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        self.with_values(self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect())
    }

    /// Smallest value over interior nodes and the node attaining it.
    pub fn interior_min(&self) -> Option<(usize, f64)> {
        self.grid
            .interior_nodes()
            .map(|k| (k, self.values[k]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn interior_max(&self) -> Option<(usize, f64)> {
        self.grid
            .interior_nodes()
            .map(|k| (k, self.values[k]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest absolute value over interior nodes.
    pub fn interior_max_abs(&self) -> f64 {
        self.grid.interior_nodes().map(|k| self.values[k].abs()).fold(0.0, f64::max)
    }
}

/// `dim` component arrays over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::InvalidInput(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::InvalidInput("component length does not match grid".into()));
            }
            check_finite(c)?;
        }
        Ok(VectorField { grid, components })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> [f64; 2]) -> Result<Self> {
        let dim = grid.dim();
        let mut components = vec![Vec::with_capacity(grid.len()); dim];
        for k in 0..grid.len() {
            let v = f(grid.coords(k));
            for (a, c) in components.iter_mut().enumerate() {
                c.push(v[a]);
            }
        }
        Self::new(grid, components)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let components = vec![vec![0.0; grid.len()]; grid.dim()];
        VectorField { grid, components }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Vector at node `k` (unused trailing entries are zero in 1D).
    pub fn at(&self, k: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c[k];
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_negative() {
        let g = Arc::new(Grid::interval(0.0, 1.0, 4).unwrap());
        let err = ScalarField::new(g.clone(), vec![0.0, f64::NAN, 1.0, 2.0], 3.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
        let err = ScalarField::new_nonneg(g.clone(), vec![0.0, -1.0, 1.0, 2.0], 3.0).unwrap_err();
        assert!(matches!(err, Error::Negative { index: 1, .. }));
        assert!(ScalarField::new(g, vec![1.0; 4], 1.0).is_err());
    }
}
