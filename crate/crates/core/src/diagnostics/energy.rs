use serde::Serialize;

use super::{rupture_floor, solution_defect, Verdict, NOT_A_SOLUTION_DEFECT};
use crate::error::{Error, Result};
use crate::field::{ball_integral_with, interpolate, sphere_integral, sphere_integral_with, Point, ScalarField};
use crate::numerics::fit_line;

/// Monotone energy at one center and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub center: Point,
    pub r: f64,
    #[serde(rename = "E")]
    pub e: f64,
    /// `∫_{B_r} ½|∇u|² - u^{1-p}/(p-1)`.
    pub bulk: f64,
    /// `∫_{∂B_r} u²`.
    pub boundary_raw: f64,
    /// `∫_{∂B_r} (∂u/∂r - α u / r)²`, zero exactly for homogeneous fields.
    pub de_integrand: f64,
    /// Nodes at or below the regularization floor met the ball.
    pub floored: bool,
}

/// Scaling exponent `a = -n + 2(p-1)/(p+1)` of the energy.
pub fn energy_exponent(dim: usize, p: f64) -> f64 {
    -(dim as f64) + 2.0 * (p - 1.0) / (p + 1.0)
}

fn touches_floor(u: &ScalarField, x: Point, r: f64, floor: f64) -> bool {
    let g = u.grid();
    (0..g.len()).any(|k| u.values()[k] <= floor && { let y = g.coords(k); (y[0] - x[0]).hypot(y[1] - x[1]) } <= r + g.h())
}

/// `E(r) = r^a ∫_{B_r}(½|∇u|² - u^{1-p}/(p-1)) - r^{a-1}/(p+1) ∫_{∂B_r} u²`.
pub fn energy_e(u: &ScalarField, x: Point, r: f64) -> Result<EnergyRecord> {
    let p = u.p();
    let grid = u.grid();
    let floor = rupture_floor(u);
    let bulk = ball_integral_with(u, x, r, None, floor, |s| 0.5 * s.grad_sq() - s.u.powf(1.0 - p) / (p - 1.0))?;
    let boundary_raw = sphere_integral_with(u, x, r, |v, _, _| v * v)?;
    let alpha = 2.0 / (p + 1.0);
    let de_integrand = sphere_integral_with(u, x, r, |v, dr, _| {
        let d = dr - alpha * v / r;
        d * d
    })?;
    let a = energy_exponent(grid.dim(), p);
    let e = r.powf(a) * bulk - r.powf(a - 1.0) / (p + 1.0) * boundary_raw;
    Ok(EnergyRecord { center: x, r, e, bulk, boundary_raw, de_integrand, floored: touches_floor(u, x, r, floor) })
}

/// Result of [`check_e_monotone`].
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneCheck {
    pub verdict: Verdict,
    pub records: Vec<EnergyRecord>,
    /// Index `k` of the worst decrease `E(r_k) - E(r_{k+1})`.
    pub worst_index: Option<usize>,
    /// `dE_integrand` at the two radii bracketing the worst decrease.
    pub worst_de_integrand: Option<[f64; 2]>,
}

/// Default constant in the monotonicity slack `C h^{2/(p+1)}`.
pub const C_MONO: f64 = 5.0;

/// Passes iff `E(r_{k+1}) >= E(r_k) - C h^{2/(p+1)}` for every consecutive pair.
pub fn check_e_monotone(u: &ScalarField, x: Point, radii: &[f64], c_mono: f64) -> Result<MonotoneCheck> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    let records = radii.iter().map(|&r| energy_e(u, x, r)).collect::<Result<Vec<_>>>()?;
    let tolerance = c_mono * u.grid().h().powf(2.0 / (u.p() + 1.0));
    let mut worst = 0.0;
    let mut worst_index = None;
    for (k, w) in records.windows(2).enumerate() {
        let drop = w[0].e - w[1].e;
        if drop > worst {
            worst = drop;
            worst_index = Some(k);
        }
    }
    let mut verdict = Verdict::new("E_monotone", worst <= tolerance, worst, tolerance);
    let defect = solution_defect(u, x, *radii.last().unwrap())?;
    if defect > NOT_A_SOLUTION_DEFECT {
        verdict.note(format!("not-a-solution: relative PDE defect {defect:.3e} in the largest ball"));
    }
    if records.iter().any(|r| r.floored) {
        verdict.note("u^{1-p} evaluated with the regularization floor".to_string());
    }
    let worst_de_integrand = worst_index.map(|k| [records[k].de_integrand, records[k + 1].de_integrand]);
    Ok(MonotoneCheck { verdict, records, worst_index, worst_de_integrand })
}

/// Alternative form of `E` (valid for solutions, `p ≠ 3`):
/// `r^a ∫_{B_r}[(½ + 2/(p-3))|∇u|² + (2/(p-3) - 1/(p-1)) u^{1-p}] - 1/(p-3) d/dr[r^a ∫_{∂B_r} u²]`,
/// with the derivative taken by centered differences over `r ± dr`.
pub fn energy_e_alt(u: &ScalarField, x: Point, r: f64, dr: f64) -> Result<f64> {
    let p = u.p();
    if (p - 3.0).abs() < 1e-12 {
        return Err(Error::Unsupported("alternative form singular at p=3 (it divides by p - 3)".into()));
    }
    if !(dr > 0.0 && dr < r) {
        return Err(Error::InvalidInput(format!("difference step must lie in (0, r), got {dr}")));
    }
    let grid = u.grid();
    let a = energy_exponent(grid.dim(), p);
    let floor = rupture_floor(u);
    let cg = 0.5 + 2.0 / (p - 3.0);
    let cu = 2.0 / (p - 3.0) - 1.0 / (p - 1.0);
    let bulk = ball_integral_with(u, x, r, None, floor, |s| cg * s.grad_sq() + cu * s.u.powf(1.0 - p))?;
    let weighted = |rr: f64| -> Result<f64> {
        let sq = u.map(|v| v * v)?;
        Ok(rr.powf(a) * sphere_integral(&sq, x, rr)?)
    };
    let deriv = (weighted(r + dr)? - weighted(r - dr)?) / (2.0 * dr);
    Ok(r.powf(a) * bulk - deriv / (p - 3.0))
}

/// Density `Θ(x) = lim_{r→0} E(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Theta {
    Value(f64),
    MinusInfinity,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaEstimate {
    pub theta: Theta,
    /// Radii actually used (those at least `4h`), decreasing.
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// Slope of `log(-E)` against `log r` over the radii with `E < 0`.
    pub log_slope: Option<f64>,
}

pub const THETA_CUTOFF: f64 = 50.0;

/// Extrapolates `E(r)` toward the smallest resolvable radius.
///
/// Returns `MinusInfinity` when `E` drops below `-cutoff` at the smallest
/// radius and `-E` grows at least like `r^{2(p-1)/(p+1) - 2 + 0.2}`, the
/// rate at points where `u > 0`. Otherwise the intercept of a linear fit of
/// `E` against `r` over the three smallest radii.
pub fn density_theta(u: &ScalarField, x: Point, radii: &[f64], cutoff: f64) -> Result<ThetaEstimate> {
    let h = u.grid().h();
    let mut rs: Vec<f64> = radii.iter().copied().filter(|&r| r >= 4.0 * h - 1e-12).collect();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    if rs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 radii >= 4h = {:.4e}; got {} usable",
            4.0 * h,
            rs.len()
        )));
    }
    let energies = rs.iter().map(|&r| energy_e(u, x, r).map(|rec| rec.e)).collect::<Result<Vec<_>>>()?;
    let p = u.p();
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        rs.iter().zip(&energies).filter(|(_, &e)| e < 0.0).map(|(&r, &e)| (r.ln(), (-e).ln())).unzip();
    let log_slope = fit_line(&lx, &ly).map(|f| f.slope);
    let threshold = 2.0 * (p - 1.0) / (p + 1.0) - 2.0 + 0.2;
    let e_min = *energies.last().unwrap();
    let theta = if e_min < -cutoff && log_slope.is_some_and(|s| s <= threshold) {
        Theta::MinusInfinity
    } else {
        let n = rs.len();
        let fit = fit_line(&rs[n - 3..], &energies[n - 3..]).expect("three distinct radii");
        Theta::Value(fit.intercept)
    };
    Ok(ThetaEstimate { theta, radii: rs, energies, log_slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Rupture,
    Positive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub kind: PointKind,
    pub theta: ThetaEstimate,
    /// Interpolated `u(x)`.
    pub value: f64,
    /// Direct test `u(x) < h^{2/(p+1)}`.
    pub direct_rupture: bool,
    /// The density and the direct value test disagree.
    pub ambiguous: bool,
}

/// Default radii for density estimates: geometric from `r_max` down to `4h`.
pub fn default_theta_radii(u: &ScalarField, x: Point, count: usize) -> Result<Vec<f64>> {
    let grid = u.grid();
    let h = grid.h();
    let room = grid.distance_to_hull(x) - 2.0 * h;
    let r_max = room.min(0.25);
    let r_min = 4.0 * h;
    if r_max <= r_min {
        return Err(Error::OutOfDomain(format!(
            "center ({}, {}) leaves no room for radii above 4h inside the grid",
            x[0], x[1]
        )));
    }
    let count = count.max(3);
    Ok((0..count).map(|i| r_max * (r_min / r_max).powf(i as f64 / (count - 1) as f64)).collect())
}

/// Rupture point iff `Θ(x)` is finite; positive iff `Θ(x) = -∞`.
pub fn classify_point(u: &ScalarField, x: Point) -> Result<Classification> {
    let radii = default_theta_radii(u, x, 12)?;
    let theta = density_theta(u, x, &radii, THETA_CUTOFF)?;
    let kind = match theta.theta {
        Theta::MinusInfinity => PointKind::Positive,
        Theta::Value(_) => PointKind::Rupture,
    };
    let value = interpolate(u, x)?;
    let direct_rupture = value < u.grid().h().powf(2.0 / (u.p() + 1.0));
    let ambiguous = direct_rupture != (kind == PointKind::Rupture);
    Ok(Classification { kind, theta, value, direct_rupture, ambiguous })
}
