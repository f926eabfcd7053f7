//! Functionals of a solution: monotone energy and density, growth ratios,
//! Hölder and gradient bounds, the stationarity identity and the frequency
//! function with its companion identities.

mod energy;
mod frequency;
mod growth;
mod report;

use serde::Serialize;

pub use energy::{
    check_e_monotone, classify_point, default_theta_radii, density_theta, energy_e, energy_e_alt, energy_exponent,
    Classification, EnergyRecord, MonotoneCheck, PointKind, Theta, ThetaEstimate, C_MONO, THETA_CUTOFF,
};
pub use frequency::{
    check_a8, check_doubling, check_n_monotone, frequency, FrequencyRecord, DoublingCheck, FREQUENCY_GATE_TOL,
};
pub use growth::{
    energy_bound_m, gradient_bound_ratio, growth_ratio_energy, growth_ratio_up, holder_seminorm, lipschitz_companion,
    nondegeneracy_ratio, stationarity_residual, HolderEstimate,
};
pub use report::{run_sweep, DiagnoseSweep, DiagnosticReport, ReportRow, REPORT_HEADER};

use crate::error::Result;
use crate::field::{laplacian_at, Point, ScalarField};
use crate::solver::RegularizedNonlinearity;

/// Pass/fail outcome of a check. `pass` is `None` when the check's
/// hypothesis does not hold and no verdict is issued.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: Option<bool>,
    pub worst_violation: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check: &str, pass: bool, worst_violation: f64, tolerance: f64) -> Self {
        Verdict { check: check.into(), pass: Some(pass), worst_violation, tolerance, notes: Vec::new() }
    }

    pub fn withheld(check: &str, worst_violation: f64, tolerance: f64, note: impl Into<String>) -> Self {
        Verdict { check: check.into(), pass: None, worst_violation, tolerance, notes: vec![note.into()] }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

/// Floor used for `u^{1-p}` and `u^{-p}` at rupture nodes; the solver's default.
pub(crate) fn rupture_floor(u: &ScalarField) -> f64 {
    RegularizedNonlinearity::default_delta(u.grid().h(), u.p())
}

/// Relative defect above which a field is flagged as not solving the PDE.
pub const NOT_A_SOLUTION_DEFECT: f64 = 1e-2;

/// Relative `ℓ¹` defect `Σ|Δ_h u - u^{-p}| / Σ(|Δ_h u| + u^{-p})` over interior
/// nodes in `B_r(x)`, skipping nodes within `3h` of a node where
/// `u <= h^{2/(p+1)}` (the discrete equation is not expected to hold there).
pub(crate) fn solution_defect(u: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let grid = u.grid();
    let h = grid.h();
    let p = u.p();
    let vals = u.values();
    let small = h.powf(2.0 / (p + 1.0));
    let (lo, hi) = grid.window(x, r + 3.0 * h);
    let shape = grid.shape2();
    let mut near_zero = Vec::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            let k = i * shape[1] + j;
            if vals[k] <= small {
                near_zero.push(grid.coords(k));
            }
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    let (lo, hi) = grid.window(x, r);
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            let k = i * shape[1] + j;
            if !grid.is_interior(k) {
                continue;
            }
            let y = grid.coords(k);
            if (y[0] - x[0]).hypot(y[1] - x[1]) > r {
                continue;
            }
            if near_zero.iter().any(|z| (z[0] - y[0]).hypot(z[1] - y[1]) <= 3.0 * h + 1e-12) {
                continue;
            }
            let lap = laplacian_at(grid, vals, k);
            let g = vals[k].max(small).powf(-p);
            num += (lap - g).abs();
            den += lap.abs() + g;
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Interior nodes together with every node in their stencils.
pub(crate) fn closure_nodes(u: &ScalarField) -> Vec<usize> {
    let grid = u.grid();
    let mut mark = vec![false; grid.len()];
    for k in grid.interior_nodes() {
        mark[k] = true;
        let (nb, count) = grid.neighbors(k);
        for &m in &nb[..count] {
            mark[m] = true;
        }
    }
    mark.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect()
}
