//! Blow-up rescalings `u^λ(y) = λ^{-2/(p+1)} u(x + λy)` about a point and
//! detection of homogeneous limits.
//!
//! Rescaled fields live on one shared reference grid whose closed annulus
//! `η <= |y| <= 1/η` (`η = 1/4`) is where they are compared.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_point, PointKind, Verdict};
use crate::error::{Error, Result};
use crate::field::{ball_integral_with, interpolate_values, DomainKind, Grid, Point, ScalarField};
use crate::profiles::{solve_angular, AngularProfile, DEFAULT_ANGULAR_NODES};

pub const REFERENCE_ETA: f64 = 0.25;
pub const REFERENCE_NODES: usize = 256;

/// Angular Fourier modes kept when fitting a profile.
const PROFILE_MODES: usize = 8;
const PROFILE_RADII: usize = 8;

/// `REFERENCE_NODES²` nodes over `[-4.25, 4.25]²`, so the annulus plus a
/// quadrature margin sits inside the hull. Interior nodes are those of the
/// open annulus shrunk by half a cell.
pub fn reference_grid() -> Arc<Grid> {
    static GRID: OnceLock<Arc<Grid>> = OnceLock::new();
    GRID.get_or_init(|| {
        let n = REFERENCE_NODES;
        let half = 1.0 / REFERENCE_ETA + 0.25;
        let h = 2.0 * half / (n - 1) as f64;
        let interior = (0..n * n)
            .map(|k| {
                let y = [-half + (k / n) as f64 * h, -half + (k % n) as f64 * h];
                let d = y[0].hypot(y[1]);
                d > REFERENCE_ETA + 0.5 * h && d < 1.0 / REFERENCE_ETA - 0.5 * h
            })
            .collect();
        Arc::new(Grid::from_parts(2, &[n, n], h, &[-half, -half], DomainKind::Annulus, interior).expect("valid reference grid"))
    })
    .clone()
}

fn in_annulus(y: Point) -> bool {
    let d = y[0].hypot(y[1]);
    (REFERENCE_ETA - 1e-12..=1.0 / REFERENCE_ETA + 1e-12).contains(&d)
}

/// Largest admissible scale for rescaling about `x`.
pub fn max_lambda(u: &ScalarField, x: Point) -> f64 {
    u.grid().distance_to_hull(x) * REFERENCE_ETA
}

/// `λ^{-d} u(x + λy)` on the reference grid. Nodes off the annulus sample
/// `u` at the radial projection of `y` onto it.
pub fn rescale_with_degree(u: &ScalarField, x: Point, lambda: f64, degree: f64) -> Result<ScalarField> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {lambda}")));
    }
    let max = max_lambda(u, x);
    if lambda > max * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!(
            "annulus of scale {lambda} about ({}, {}) exits the grid; max admissible lambda is {max:.6e}",
            x[0], x[1]
        )));
    }
    let reference = reference_grid();
    let grid = u.grid();
    let factor = lambda.powf(-degree);
    let values = (0..reference.len())
        .into_par_iter()
        .map(|k| {
            let y = reference.coords(k);
            let d = y[0].hypot(y[1]);
            let s = if d < REFERENCE_ETA {
                if d == 0.0 {
                    return [REFERENCE_ETA, 0.0];
                }
                REFERENCE_ETA / d
            } else if d > 1.0 / REFERENCE_ETA {
                1.0 / (REFERENCE_ETA * d)
            } else {
                1.0
            };
            [y[0] * s, y[1] * s]
        })
        .map(|y| {
            let z = [x[0] + lambda * y[0], x[1] + lambda * y[1]];
            interpolate_values(grid, u.values(), z).map(|v| factor * v)
        })
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::OutOfDomain("rescaled sample left the grid hull".into()))?;
    ScalarField::new(reference, values, u.p())
}

/// `u^λ(y) = λ^{-2/(p+1)} u(x + λy)` on the reference grid.
pub fn rescale(u: &ScalarField, x: Point, lambda: f64) -> Result<ScalarField> {
    rescale_with_degree(u, x, lambda, 2.0 / (u.p() + 1.0))
}

/// Sup distance over the reference annulus.
pub fn annulus_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    let g = a.grid();
    (0..g.len())
        .filter(|&k| in_annulus(g.coords(k)))
        .map(|k| (a.values()[k] - b.values()[k]).abs())
        .fold(0.0, f64::max)
}

fn annulus_sup(a: &ScalarField) -> f64 {
    let g = a.grid();
    (0..g.len()).filter(|&k| in_annulus(g.coords(k))).map(|k| a.values()[k].abs()).fold(0.0, f64::max)
}

/// Relative failure of `u(x + ty) = t^d u(x + y)` at `t = 1/2` on the annulus
/// of outer radius `r_out` about `x`.
pub fn degree_deviation(u: &ScalarField, x: Point, degree: f64, r_out: f64) -> Result<f64> {
    let l1 = r_out * REFERENCE_ETA;
    let a = rescale_with_degree(u, x, l1, degree)?;
    let b = rescale_with_degree(u, x, 0.5 * l1, degree)?;
    let sup = annulus_sup(&a);
    Ok(if sup > 0.0 { annulus_distance(&a, &b) / sup } else { 0.0 })
}

/// `∫_{r_in <= |y-x| <= r_out} |y-x|^{2(p-1)/(p+1) - n} (∂_r u - α u/|y-x|)²`.
pub fn homogeneity_deviation(u: &ScalarField, x: Point, r_in: f64, r_out: f64) -> Result<f64> {
    let (weighted, _) = deviation_and_scale(u, x, r_in, r_out)?;
    Ok(weighted)
}

/// The deviation integral and the same integral of `(α u/|y-x|)²` alone,
/// whose ratio is scale invariant.
fn deviation_and_scale(u: &ScalarField, x: Point, r_in: f64, r_out: f64) -> Result<(f64, f64)> {
    if !(r_in > 0.0 && r_in < r_out) {
        return Err(Error::InvalidInput(format!("annulus radii must satisfy 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    let p = u.p();
    let n = u.grid().dim() as f64;
    let alpha = 2.0 / (p + 1.0);
    let w = 2.0 * (p - 1.0) / (p + 1.0) - n;
    let parts = |s: &crate::field::Sample| {
        let d = [s.pos[0] - x[0], s.pos[1] - x[1]];
        let rho = d[0].hypot(d[1]);
        if rho == 0.0 {
            return (0.0, 0.0);
        }
        let dr = (s.grad[0] * d[0] + s.grad[1] * d[1]) / rho;
        let model = alpha * s.u / rho;
        (rho.powf(w) * (dr - model).powi(2), rho.powf(w) * model * model)
    };
    let dev = ball_integral_with(u, x, r_out, Some(r_in), 0.0, |s| parts(s).0)?;
    let scale = ball_integral_with(u, x, r_out, Some(r_in), 0.0, |s| parts(s).1)?;
    Ok((dev, scale))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    /// Strictly decreasing scales.
    pub lambdas: Vec<f64>,
    /// Tolerance on the last successive distance (relative to the sup of the
    /// last field) and on the relative homogeneity deviation.
    pub tol: f64,
    /// Skip the rupture classification of the center.
    pub skip_classification: bool,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig { lambdas: vec![0.25, 0.125, 0.0625, 0.03125], tol: 0.05, skip_classification: false }
    }
}

/// Tolerance for the fitted profile's relative PDE residual, as a multiple of `tol`.
pub const PROFILE_RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    pub lambda: f64,
    /// Relative homogeneity deviation on `[λη, λ/η]`.
    pub deviation: f64,
    /// Sup distance over the annulus to the next rescaled field.
    pub distance_to_next: Option<f64>,
}

/// Rescaled fields and the convergence verdict.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupSequence {
    pub center: Point,
    pub p: f64,
    pub table: Vec<ScaleRow>,
    /// `"homogeneous"` or `"not_homogeneous"`.
    pub verdict: String,
    pub check: Verdict,
    pub profile: AngularProfile,
    /// `max|φ'' + α²φ - φ^{-p}| / max φ^{-p}` for the fitted profile.
    pub profile_residual: f64,
    pub profile_check: Verdict,
    /// Relative sup distance from the fitted profile to the angular solve seeded by it.
    pub solved_profile_distance: Option<f64>,
    #[serde(skip)]
    pub fields: Vec<ScalarField>,
}

impl BlowupSequence {
    pub fn is_homogeneous(&self) -> bool {
        self.verdict == "homogeneous"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("blow-up sequence serializes")
    }
}

fn fourier_smooth(samples: &[f64], modes: usize) -> Vec<f64> {
    let m = samples.len();
    let mut out = vec![0.0; m];
    let mean = samples.iter().sum::<f64>() / m as f64;
    out.iter_mut().for_each(|v| *v = mean);
    for k in 1..=modes.min(m / 2 - 1) {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, s) in samples.iter().enumerate() {
            let t = 2.0 * PI * (k * i) as f64 / m as f64;
            a += s * t.cos();
            b += s * t.sin();
        }
        a *= 2.0 / m as f64;
        b *= 2.0 / m as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let t = 2.0 * PI * (k * i) as f64 / m as f64;
            *o += a * t.cos() + b * t.sin();
        }
    }
    out
}

/// Fits `φ(θ)` with `u^λ ≈ ρ^α φ(θ)` by averaging `u^λ/ρ^α` over radii in
/// `[2η, 1/(2η)]` and keeping the low angular modes.
pub fn fit_profile(u: &ScalarField, x: Point, lambda: f64) -> Result<AngularProfile> {
    let p = u.p();
    let alpha = 2.0 / (p + 1.0);
    let grid = u.grid();
    let (r0, r1) = (2.0 * REFERENCE_ETA, 0.5 / REFERENCE_ETA);
    let radii: Vec<f64> =
        (0..PROFILE_RADII).map(|i| r0 * (r1 / r0).powf(i as f64 / (PROFILE_RADII - 1) as f64)).collect();
    let m = DEFAULT_ANGULAR_NODES;
    let scale = lambda.powf(-alpha);
    let mut samples = vec![0.0; m];
    for (i, s) in samples.iter_mut().enumerate() {
        let t = 2.0 * PI * i as f64 / m as f64;
        let (sn, cs) = t.sin_cos();
        let mut acc = 0.0;
        for &rho in &radii {
            let z = [x[0] + lambda * rho * cs, x[1] + lambda * rho * sn];
            let v = interpolate_values(grid, u.values(), z)
                .ok_or_else(|| Error::OutOfDomain("profile sample left the grid hull".into()))?;
            acc += scale * v / rho.powf(alpha);
        }
        *s = acc / radii.len() as f64;
    }
    AngularProfile::new(p, fourier_smooth(&samples, PROFILE_MODES))
}

fn profile_relative_residual(prof: &AngularProfile) -> f64 {
    if prof.min() <= 0.0 {
        return f64::INFINITY;
    }
    let scale = prof.phi.iter().map(|v| v.powf(-prof.p)).fold(0.0, f64::max);
    prof.residual_norm() / scale
}

/// Rescales about `x` at each scale, measures successive distances and the
/// homogeneity deviation, and fits the angular profile of the last field.
pub fn blowup_analyze(u: &ScalarField, x: Point, cfg: &BlowupConfig) -> Result<BlowupSequence> {
    if u.grid().dim() != 2 {
        return Err(Error::Unsupported("blow-up analysis is implemented for planar grids".into()));
    }
    if cfg.lambdas.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 scales, got {}", cfg.lambdas.len())));
    }
    if cfg.lambdas.windows(2).any(|w| !(w[1] < w[0])) || cfg.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidInput("scales must be positive and strictly decreasing".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be positive, got {}", cfg.tol)));
    }
    if !cfg.skip_classification {
        let class = classify_point(u, x)?;
        if class.kind != PointKind::Rupture {
            return Err(Error::InvalidInput(format!(
                "center ({}, {}) is not a rupture point (density is -infinity, u = {:.4e})",
                x[0], x[1], class.value
            )));
        }
    }
    let fields = cfg.lambdas.iter().map(|&l| rescale(u, x, l)).collect::<Result<Vec<_>>>()?;
    let deviations = cfg
        .lambdas
        .par_iter()
        .map(|&l| {
            let (d, s) = deviation_and_scale(u, x, l * REFERENCE_ETA, l / REFERENCE_ETA)?;
            Ok(if s > 0.0 { d / s } else { d })
        })
        .collect::<Result<Vec<f64>>>()?;
    let distances: Vec<f64> = fields.windows(2).map(|w| annulus_distance(&w[0], &w[1])).collect();
    let sup_last = annulus_sup(fields.last().unwrap());
    let table = cfg
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| ScaleRow { lambda, deviation: deviations[i], distance_to_next: distances.get(i).copied() })
        .collect();
    let last_distance = if sup_last > 0.0 { distances.last().unwrap() / sup_last } else { *distances.last().unwrap() };
    let last_dev = *deviations.last().unwrap();
    let worst = last_distance.max(last_dev);
    let mut check = Verdict::new("homogeneous_limit", worst <= cfg.tol, worst, cfg.tol);
    if distances.windows(2).any(|w| w[1] > w[0]) {
        check.note("successive distances are not monotone");
    }
    let verdict = if check.passed() { "homogeneous" } else { "not_homogeneous" }.to_string();

    let lambda_last = *cfg.lambdas.last().unwrap();
    let profile = fit_profile(u, x, lambda_last)?;
    let profile_residual = profile_relative_residual(&profile);
    let profile_tol = PROFILE_RESIDUAL_FACTOR * cfg.tol;
    let profile_check = Verdict::new("profile_residual", profile_residual <= profile_tol, profile_residual, profile_tol);
    let solved_profile_distance = if profile.min() > 0.0 {
        solve_angular(u.p(), &profile, 1e-10).ok().map(|s| {
            let sup = s.profile.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let d = s.profile.phi.iter().zip(&profile.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            d / sup
        })
    } else {
        None
    };
    Ok(BlowupSequence {
        center: x,
        p: u.p(),
        table,
        verdict,
        check,
        profile,
        profile_residual,
        profile_check,
        solved_profile_distance,
        fields,
    })
}
