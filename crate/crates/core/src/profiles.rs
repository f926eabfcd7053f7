//! Reference solutions: the homogeneous radial solution, angular profiles of
//! homogeneous 2D solutions, and harmonic test fields.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, Point, ScalarField};

/// `u(x) = c |x|^α` with `α = 2/(p+1)` and `c = [α(α+n-2)]^{-1/(p+1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialExact {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub c: f64,
}

pub fn radial_exact(n: usize, p: f64) -> Result<RadialExact> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")));
    }
    if n < 2 {
        return Err(Error::Unsupported(format!(
            "no homogeneous solution exists in dimension {n}: α(α+n-2) must be positive"
        )));
    }
    let alpha = 2.0 / (p + 1.0);
    let c = (alpha * (alpha + n as f64 - 2.0)).powf(-1.0 / (p + 1.0));
    Ok(RadialExact { n, p, alpha, c })
}

impl RadialExact {
    /// Value at a point of the plane, centered at the origin.
    pub fn eval(&self, x: Point) -> f64 {
        self.c * x[0].hypot(x[1]).powf(self.alpha)
    }

    pub fn eval_radius(&self, r: f64) -> f64 {
        self.c * r.powf(self.alpha)
    }

    /// `∂u/∂r` at radius `r > 0`.
    pub fn radial_slope(&self, r: f64) -> f64 {
        self.alpha * self.c * r.powf(self.alpha - 1.0)
    }

    /// Samples the solution centered at `center` onto a 2D grid.
    pub fn sample(&self, grid: Arc<Grid>, center: Point) -> Result<ScalarField> {
        if grid.dim() != 2 {
            return Err(Error::Unsupported("radial sampling needs a 2D grid".into()));
        }
        if self.n != 2 {
            return Err(Error::Unsupported(format!("cannot sample the {}-dimensional solution on a 2D grid", self.n)));
        }
        ScalarField::from_fn(grid, self.p, |x| self.eval([x[0] - center[0], x[1] - center[1]]))
    }
}

/// The constant solution `φ* = ((p+1)²/4)^{1/(p+1)}` of `φ'' + α²φ = φ^{-p}`.
pub fn angular_constant(p: f64) -> f64 {
    ((p + 1.0) * (p + 1.0) / 4.0).powf(1.0 / (p + 1.0))
}

/// Periodic function on a uniform partition of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub p: f64,
    pub alpha: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

pub const DEFAULT_ANGULAR_NODES: usize = 512;

impl AngularProfile {
    pub fn new(p: f64, phi: Vec<f64>) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")));
        }
        if phi.len() < 8 || phi.len() % 2 == 1 {
            return Err(Error::InvalidInput(format!("need an even number of at least 8 angular nodes, got {}", phi.len())));
        }
        crate::field::check_finite(&phi)?;
        let n = phi.len();
        let theta = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        Ok(AngularProfile { p, alpha: 2.0 / (p + 1.0), theta, phi })
    }

    pub fn from_fn(p: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(p, (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect())
    }

    pub fn constant(p: f64, value: f64, n: usize) -> Result<Self> {
        Self::new(p, vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    fn step(&self) -> f64 {
        2.0 * PI / self.phi.len() as f64
    }

    /// Collocation residual `φ'' + α²φ - φ^{-p}`, with `φ''` from the
    /// trigonometric interpolant.
    pub fn residual(&self) -> Vec<f64> {
        let n = self.phi.len();
        let c = second_derivative_stencil(n);
        let a2 = self.alpha * self.alpha;
        (0..n)
            .map(|i| {
                let fi = self.phi[i];
                // Rows of the differentiation matrix sum to zero; subtracting
                // φ_i keeps constants exact.
                let d2: f64 = (1..n).map(|m| c[m] * (self.phi[(i + n - m) % n] - fi)).sum();
                d2 + a2 * fi - fi.powf(-self.p)
            })
            .collect()
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Periodic cubic interpolation at angle `theta`.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.phi.len();
        let t = theta.rem_euclid(2.0 * PI) / self.step();
        let i = t.floor() as isize;
        let s = t - i as f64;
        let at = |k: isize| self.phi[k.rem_euclid(n as isize) as usize];
        let (a, b, c, d) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Four-point Lagrange weights at s in [0, 1).
        let wa = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let wb = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let wc = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let wd = (s + 1.0) * s * (s - 1.0) / 6.0;
        wa * a + wb * b + wc * c + wd * d
    }

    /// `r^α φ(θ)` about `center` sampled onto a 2D grid.
    pub fn extend(&self, grid: Arc<Grid>, center: Point) -> Result<ScalarField> {
        if grid.dim() != 2 {
            return Err(Error::Unsupported("profile extension needs a 2D grid".into()));
        }
        ScalarField::from_fn(grid, self.p, |x| {
            let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
            dx.hypot(dy).powf(self.alpha) * self.eval(dy.atan2(dx))
        })
    }

    pub fn min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> String {
        use crate::field::io::fmt_f64;
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        format!(
            "{{\"p\":{},\"alpha\":{},\"theta\":[{}],\"phi\":[{}]}}\n",
            fmt_f64(self.p),
            fmt_f64(self.alpha),
            list(&self.theta),
            list(&self.phi)
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: AngularProfile = serde_json::from_str(text)?;
        let prof = AngularProfile::new(raw.p, raw.phi)?;
        if raw.theta.len() != prof.theta.len()
            || raw.theta.iter().zip(&prof.theta).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::Format("key \"theta\": expected a uniform partition of [0, 2π)".into()));
        }
        Ok(prof)
    }
}

/// First column of the periodic Fourier second-derivative matrix on `n`
/// (even) equispaced nodes; entry `m` couples nodes `m` apart.
fn second_derivative_stencil(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|m| {
            if m == 0 {
                -PI * PI / (3.0 * h * h) - 1.0 / 6.0
            } else {
                let s = (0.5 * m as f64 * h).sin();
                let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
                sign * 0.5 / (s * s)
            }
        })
        .collect()
}

/// Eigenvalues of the angular Jacobian at or below this magnitude are
/// treated as kernel directions. Near a solution family the kernel
/// eigenvalues are of the order of the distance to the family, while the rest
/// of the spectrum stays an order-one gap away.
pub const KERNEL_CUT: f64 = 1e-3;

/// Result of [`solve_angular`].
#[derive(Debug, Clone)]
pub struct AngularSolve {
    pub profile: AngularProfile,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton collocation for `φ'' + α²φ = φ^{-p}` on the guess's θ grid.
///
/// The Jacobian is symmetric and may be singular: for `p = 3` the positive
/// solutions form the family `φ² = a + b cos θ + c sin θ`, `a² - b² - c² = 4`.
/// Steps are therefore minimum-norm, dropping eigendirections whose
/// eigenvalue is below [`KERNEL_CUT`] or negligible against the largest, and
/// land on the nearest member of such a family. Steps are halved until the iterate stays
/// positive and the residual norm decreases. A profile approaching zero is
/// rejected: positive homogeneous solutions have `φ > 0` on the whole circle.
pub fn solve_angular(p: f64, guess: &AngularProfile, tol: f64) -> Result<AngularSolve> {
    if (guess.p - p).abs() > 0.0 {
        return Err(Error::InvalidInput(format!("guess was built for p = {}, not {p}", guess.p)));
    }
    if guess.phi.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("guess must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = guess.len();
    let stencil = second_derivative_stencil(n);
    let a2 = guess.alpha * guess.alpha;
    let mut prof = guess.clone();
    let mut res = prof.residual();
    let norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let max_iters = 100;
    for it in 0..=max_iters {
        let r_inf = res.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
        if r_inf <= tol {
            if prof.min() < 1e-6 {
                return Err(Error::Diverged {
                    iterations: it,
                    residual: r_inf,
                    reason: "profile touches zero; positive solutions stay away from 0".into(),
                    last: None,
                });
            }
            return Ok(AngularSolve { profile: prof, iterations: it, residual: r_inf });
        }
        if it == max_iters {
            break;
        }
        let jac = Mat::<f64>::from_fn(n, n, |i, j| {
            let mut v = stencil[(i + n - j) % n];
            if i == j {
                v += a2 + p * prof.phi[i].powf(-p - 1.0);
            }
            v
        });
        let Ok(eig) = jac.self_adjoint_eigen(Side::Lower) else { break };
        let (u, lam) = (eig.U(), eig.S().column_vector());
        let cut = (1e-10 * (0..n).fold(0.0f64, |m, k| m.max(lam[k].abs()))).max(KERNEL_CUT);
        let mut d = vec![0.0; n];
        for k in 0..n {
            if lam[k].abs() <= cut {
                continue;
            }
            let coef = -(0..n).map(|i| u[(i, k)] * res[i]).sum::<f64>() / lam[k];
            for (i, di) in d.iter_mut().enumerate() {
                *di += coef * u[(i, k)];
            }
        }
        if d.iter().any(|x| !x.is_finite()) {
            break;
        }
        let r2 = norm2(&res);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = prof.phi.iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
            if trial.iter().all(|&v| v > 0.0) {
                let cand = AngularProfile { phi: trial, ..prof.clone() };
                let cres = cand.residual();
                if norm2(&cres) < (1.0 - 1e-4 * t) * r2 {
                    prof = cand;
                    res = cres;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = res.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    Err(Error::Diverged {
        iterations: max_iters,
        residual,
        reason: if prof.min() < 1e-6 {
            "profile approaches zero; positive solutions stay away from 0".into()
        } else {
            "angular Newton iteration stalled".into()
        },
        last: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicKind {
    Linear,
    QuadraticSaddle,
    AbsX1,
    Constant,
}

/// `x₁`, `x₁² - x₂²`, `|x₁|` or `1` on the grid. The attached exponent is 3;
/// it plays no role for these fields.
pub fn harmonic_test_field(kind: HarmonicKind, grid: Arc<Grid>) -> Result<ScalarField> {
    ScalarField::from_fn(grid, 3.0, move |x| match kind {
        HarmonicKind::Linear => x[0],
        HarmonicKind::QuadraticSaddle => x[0] * x[0] - x[1] * x[1],
        HarmonicKind::AbsX1 => x[0].abs(),
        HarmonicKind::Constant => 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let r = radial_exact(2, 3.0).unwrap();
        assert!((r.c - 2f64.sqrt()).abs() < 1e-15);
        assert!((radial_exact(3, 3.0).unwrap().c - (4.0f64 / 3.0).powf(0.25)).abs() < 1e-15);
        assert!((radial_exact(2, 2.0).unwrap().c - 2.25f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!(matches!(radial_exact(1, 3.0), Err(Error::Unsupported(_))));
        assert!((angular_constant(3.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_on_cubics_locally() {
        let prof = AngularProfile::from_fn(3.0, 64, |t| 2.0 + t.sin()).unwrap();
        for t in [0.01, 1.0, 3.0, 6.2] {
            assert!((prof.eval(t) - (2.0 + t.sin())).abs() < 1e-5);
        }
        assert!((prof.eval(prof.theta[5]) - prof.phi[5]).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let prof = AngularProfile::from_fn(2.0, 16, |t| 1.0 + 0.1 * t.cos()).unwrap();
        assert_eq!(AngularProfile::from_json(&prof.to_json()).unwrap(), prof);
    }
}
