use serde::Serialize;

use super::Verdict;
use crate::blowup::degree_deviation;
use crate::error::{Error, Result};
use crate::field::{ball_integral_with, laplacian_at, sphere_integral_with, Point, ScalarField};

/// `H` below this makes `N` undefined.
const H_FLOOR: f64 = 1e-14;

/// Default bound on `‖u Δ_h u‖₁ / ∫(|∇u|² + u²/r²)` for interpreting `N`.
pub const FREQUENCY_GATE_TOL: f64 = 1e-6;

/// Frequency data at one center and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyRecord {
    pub center: Point,
    pub r: f64,
    /// `r^{2-n} ∫_{B_r} |∇u|²`.
    #[serde(rename = "D")]
    pub d: f64,
    /// `r^{1-n} ∫_{∂B_r} u²`.
    #[serde(rename = "H")]
    pub h: f64,
    /// `D / H`, absent when `H` is numerically zero.
    #[serde(rename = "N")]
    pub n: Option<f64>,
    /// Relative size of `u Δ_h u` in the ball.
    pub gate: f64,
    /// `u Δ u` is negligible, so `N` reads as a homogeneity degree.
    pub interpretable: bool,
}

fn gate_value(u: &ScalarField, x: Point, r: f64) -> Result<f64> {
    let grid = u.grid();
    let vals = u.values();
    let shape = grid.shape2();
    let (lo, hi) = grid.window(x, r);
    let mut s = 0.0;
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            let k = i * shape[1] + j;
            let y = grid.coords(k);
            if grid.is_interior(k) && (y[0] - x[0]).hypot(y[1] - x[1]) <= r {
                s += (vals[k] * laplacian_at(grid, vals, k)).abs();
            }
        }
    }
    s *= grid.cell_volume();
    let scale = ball_integral_with(u, x, r, None, 0.0, |p| p.grad_sq() + p.u * p.u / (r * r))?;
    Ok(if scale > 0.0 { s / scale } else if s == 0.0 { 0.0 } else { f64::INFINITY })
}

/// Dirichlet energy, boundary mass and their ratio on `B_r(x)`.
pub fn frequency(u: &ScalarField, x: Point, r: f64, gate_tol: f64) -> Result<FrequencyRecord> {
    let n = u.grid().dim() as f64;
    let dirichlet = ball_integral_with(u, x, r, None, 0.0, |s| s.grad_sq())?;
    let mass = sphere_integral_with(u, x, r, |v, _, _| v * v)?;
    let d = r.powf(2.0 - n) * dirichlet;
    let h = r.powf(1.0 - n) * mass;
    let gate = gate_value(u, x, r)?;
    Ok(FrequencyRecord {
        center: x,
        r,
        d,
        h,
        n: (h >= H_FLOOR).then(|| d / h),
        gate,
        interpretable: gate <= gate_tol,
    })
}

fn check_radii(radii: &[f64], min: usize) -> Result<()> {
    if radii.len() < min {
        return Err(Error::InvalidInput(format!("need at least {min} radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Relative slack for frequency comparisons.
const N_TOL: f64 = 1e-2;

/// Passes iff `N` is nondecreasing within 1%. When `N` is constant within the
/// same tolerance the field is also tested for homogeneity of that degree.
pub fn check_n_monotone(u: &ScalarField, x: Point, radii: &[f64]) -> Result<(Verdict, Vec<FrequencyRecord>)> {
    check_radii(radii, 2)?;
    let records = radii.iter().map(|&r| frequency(u, x, r, FREQUENCY_GATE_TOL)).collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = records.iter().filter_map(|r| r.n).collect();
    if ns.len() < records.len() {
        return Ok((Verdict::withheld("N_monotone", 0.0, N_TOL, "N undefined (H vanishes) at some radius"), records));
    }
    let scale = ns.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = N_TOL * scale;
    let worst = ns.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let mut verdict = Verdict::new("N_monotone", worst <= tol, worst, tol);
    if !records.iter().all(|r| r.interpretable) {
        verdict.pass = None;
        verdict.note("not interpretable: u Δu does not vanish, raw N reported");
        return Ok((verdict, records));
    }
    let (lo, hi) = ns.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= tol {
        let degree = ns.iter().sum::<f64>() / ns.len() as f64;
        let r_max = *radii.last().unwrap();
        match degree_deviation(u, x, degree, r_max) {
            Ok(dev) if dev <= 2.0 * N_TOL => verdict.note(format!("N constant ({degree:.4}); homogeneous of that degree (deviation {dev:.2e})")),
            Ok(dev) => {
                verdict.note(format!("N constant ({degree:.4}) but the field is not homogeneous (deviation {dev:.2e})"));
                verdict.pass = Some(false);
            }
            Err(e) => verdict.note(format!("homogeneity cross-check skipped: {e}")),
        }
    }
    Ok((verdict, records))
}

/// Compares the centered difference of `H` against `2D/r`. Verdict withheld
/// (raw mismatch reported) when `u Δu` does not vanish.
pub fn check_a8(u: &ScalarField, x: Point, radii: &[f64]) -> Result<Verdict> {
    check_radii(radii, 1)?;
    let dr = 2.0 * u.grid().h();
    let mut worst: f64 = 0.0;
    let mut interpretable = true;
    for &r in radii {
        if r <= dr {
            return Err(Error::InvalidInput(format!("radius {r} too small for the difference step {dr}")));
        }
        let rec = frequency(u, x, r, FREQUENCY_GATE_TOL)?;
        let hp = frequency(u, x, r + dr, FREQUENCY_GATE_TOL)?.h;
        let hm = frequency(u, x, r - dr, FREQUENCY_GATE_TOL)?.h;
        let dh = (hp - hm) / (2.0 * dr);
        let rhs = 2.0 * rec.d / r;
        let scale = dh.abs().max(rhs.abs()).max(1e-8 * rec.h / r);
        let mismatch = if scale > 0.0 { (dh - rhs).abs() / scale } else { 0.0 };
        worst = worst.max(mismatch);
        interpretable &= rec.interpretable;
    }
    if !interpretable {
        return Ok(Verdict::withheld("A8", worst, N_TOL, "not interpretable: u Δu does not vanish, raw mismatch reported"));
    }
    Ok(Verdict::new("A8", worst <= N_TOL, worst, N_TOL))
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingCheck {
    pub verdict: Verdict,
    /// `max_r |H(r) / (H(R)(r/R)^{2d}) - 1|`, measuring how close the bound is to equality.
    pub equality_deviation: f64,
    pub n_at_r: Option<f64>,
}

/// Tests `H(r) >= H(R)(r/R)^{2d}(1 - tol)` on the sampled radii, provided
/// `N(R) <= d`; otherwise no verdict is issued.
pub fn check_doubling(u: &ScalarField, x: Point, d: f64, big_r: f64, radii: &[f64]) -> Result<DoublingCheck> {
    check_radii(radii, 1)?;
    if radii.iter().any(|&r| r > big_r) {
        return Err(Error::InvalidInput(format!("sampled radii must not exceed R = {big_r}")));
    }
    let at_r = frequency(u, x, big_r, FREQUENCY_GATE_TOL)?;
    let n_r = at_r.n;
    match n_r {
        Some(n) if n <= d * (1.0 + N_TOL) => {}
        _ => {
            let msg = match n_r {
                Some(n) => format!("hypothesis unmet: N(R) = {n:.4} exceeds d = {d}"),
                None => "hypothesis unmet: N(R) undefined".to_string(),
            };
            return Ok(DoublingCheck {
                verdict: Verdict::withheld("doubling", 0.0, N_TOL, msg),
                equality_deviation: f64::NAN,
                n_at_r: n_r,
            });
        }
    }
    let mut worst: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for &r in radii {
        let h = frequency(u, x, r, FREQUENCY_GATE_TOL)?.h;
        let bound = at_r.h * (r / big_r).powf(2.0 * d);
        let q = h / bound;
        worst = worst.max(1.0 - q);
        dev = dev.max((q - 1.0).abs());
    }
    let mut verdict = Verdict::new("doubling", worst <= N_TOL, worst.max(0.0), N_TOL);
    if !at_r.interpretable {
        verdict.note("u Δu does not vanish; the doubling bound is not implied");
    }
    Ok(DoublingCheck { verdict, equality_deviation: dev, n_at_r: n_r })
}
