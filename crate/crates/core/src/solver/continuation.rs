//! Pull-in branch of `-Δv = λ (1 - v)^{-p}`, `v = 0` on the boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::newton::{RegularizedNonlinearity, SolveConfig};
use crate::error::{Error, Result};
use crate::field::{laplacian_at, Grid, ScalarField};
use crate::linalg::InteriorOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub arc_s: f64,
    pub lambda: f64,
    pub sup_v: f64,
    pub min_gap: f64,
    /// Discrete Dirichlet energy `∫ ½|∇v|²`.
    pub energy: f64,
    pub fold_flag: bool,
}

/// A turning point of `λ(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    /// Index of the first branch point past the turning point.
    pub index: usize,
    /// Extremum of `λ(s)`, located by bisecting the step that crossed it.
    pub lambda: f64,
    pub arc_s: f64,
    /// Distance from `lambda` to the closest converged branch point found
    /// while bracketing.
    pub error_bound: f64,
    /// True for a maximum of λ (the pull-in fold), false for a minimum.
    pub is_maximum: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SnapshotTrigger {
    Lambda(f64),
    MinGap(f64),
}

/// A stored solution along the branch.
///
/// `u` is the rupture-normalized field `λ^{-1/(p+1)} (1 - v)`, which solves
/// `Δu = u^{-p}` exactly when `v` solves the pull-in problem.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub trigger: SnapshotTrigger,
    pub point: BranchPoint,
    pub v: ScalarField,
    pub u: ScalarField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Initial arclength step (rms norm in `v`, plain in `λ`).
    pub step: f64,
    pub max_step: f64,
    pub stop_gap: f64,
    /// Corrector iterations before a step is declared failed.
    pub corrector_iters: usize,
    /// Consecutive step halvings tolerated before giving up.
    pub max_halvings: usize,
    pub max_points: usize,
    /// A step may shrink the gap by at most this factor.
    pub max_gap_shrink: f64,
    /// Relative accuracy when landing on a gap or λ trigger.
    pub landing_tol: f64,
    pub snapshots: Vec<SnapshotTrigger>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            step: 0.05,
            max_step: 0.2,
            stop_gap: 0.05,
            corrector_iters: 10,
            max_halvings: 10,
            max_points: 5000,
            max_gap_shrink: 0.7,
            landing_tol: 1e-3,
            snapshots: Vec::new(),
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidInput(format!("step must be positive, got {}", self.step)));
        }
        if !(self.max_step >= self.step) {
            return Err(Error::InvalidInput("max_step must be at least step".into()));
        }
        if !(self.stop_gap > 0.0 && self.stop_gap < 1.0) {
            return Err(Error::InvalidInput(format!("stop_gap must lie in (0, 1), got {}", self.stop_gap)));
        }
        if !(self.max_gap_shrink > 0.0 && self.max_gap_shrink < 1.0) {
            return Err(Error::InvalidInput("max_gap_shrink must lie in (0, 1)".into()));
        }
        if !(self.landing_tol > 0.0 && self.landing_tol < 0.1) {
            return Err(Error::InvalidInput("landing_tol must lie in (0, 0.1)".into()));
        }
        for t in &self.snapshots {
            match *t {
                SnapshotTrigger::Lambda(l) if !(l > 0.0 && l.is_finite()) => {
                    return Err(Error::InvalidInput(format!("snapshot lambda must be positive, got {l}")));
                }
                SnapshotTrigger::MinGap(g) if !(g > 0.0 && g < 1.0) => {
                    return Err(Error::InvalidInput(format!("snapshot min_gap must lie in (0, 1), got {g}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub p: f64,
    pub points: Vec<BranchPoint>,
    pub folds: Vec<Fold>,
    pub snapshots: Vec<Snapshot>,
}

impl Branch {
    /// Pull-in threshold estimate: the first maximum of λ along the branch.
    pub fn lambda_star(&self) -> Option<&Fold> {
        self.folds.iter().find(|f| f.is_maximum)
    }

    pub fn snapshot(&self, trigger: SnapshotTrigger) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.trigger == trigger)
    }

    /// CSV with columns `arc_s,lambda,sup_v,min_gap,energy,fold_flag`.
    pub fn to_csv(&self) -> String {
        use crate::field::io::fmt_f64;
        let mut out = String::from("arc_s,lambda,sup_v,min_gap,energy,fold_flag\n");
        for pt in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(pt.arc_s),
                fmt_f64(pt.lambda),
                fmt_f64(pt.sup_v),
                fmt_f64(pt.min_gap),
                fmt_f64(pt.energy),
                u8::from(pt.fold_flag)
            ));
        }
        out
    }
}

/// Discrete pull-in operator over the interior unknowns.
struct Pullin {
    op: InteriorOperator,
    g: RegularizedNonlinearity,
    nodes: Vec<f64>,
}

impl Pullin {
    fn new(grid: Arc<Grid>, p: f64, cfg: &SolveConfig) -> Result<Self> {
        let g = cfg.nonlinearity(&grid, p)?;
        let nodes = vec![0.0; grid.len()];
        Ok(Pullin { op: InteriorOperator::new(grid)?, g, nodes })
    }

    fn n(&self) -> usize {
        self.op.len()
    }

    /// `F = Δ_h v + λ g(1 - v)`.
    fn residual(&mut self, v: &[f64], lambda: f64, out: &mut [f64]) {
        self.op.scatter(v, &mut self.nodes);
        let grid = self.op.grid();
        for ((r, &k), &vi) in out.iter_mut().zip(self.op.unknowns()).zip(v) {
            *r = laplacian_at(grid, &self.nodes, k) + lambda * self.g.value(1.0 - vi);
        }
    }

    /// Factorizes `F_v = Δ_h + λ p (1 - v)^{-p-1}`.
    fn factor(&mut self, v: &[f64], lambda: f64) -> Result<()> {
        let shift: Vec<f64> = v.iter().map(|&vi| -lambda * self.g.derivative(1.0 - vi)).collect();
        self.op.factor(&shift)
    }

    fn f_lambda(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&vi| self.g.value(1.0 - vi)).collect()
    }

    fn touches_floor(&self, v: &[f64]) -> bool {
        v.iter().any(|&vi| self.g.is_floored(1.0 - vi))
    }

    fn node_values(&self, v: &[f64]) -> Vec<f64> {
        let mut nodes = vec![0.0; self.op.grid().len()];
        self.op.scatter(v, &mut nodes);
        nodes
    }

    fn energy(&self, v: &[f64]) -> f64 {
        let nodes = self.node_values(v);
        let grid = self.op.grid();
        let shape = grid.shape();
        let mut sum = 0.0;
        // Each edge between two nodes, at least one of them interior.
        for k in 0..grid.len() {
            let (i, j) = grid.ij(k);
            let mut edge = |m: usize| {
                if grid.is_interior(k) || grid.is_interior(m) {
                    let d = nodes[m] - nodes[k];
                    sum += d * d;
                }
            };
            if i + 1 < shape[0] {
                edge(grid.index(i + 1, j));
            }
            if grid.dim() == 2 && j + 1 < shape[1] {
                edge(grid.index(i, j + 1));
            }
        }
        0.5 * sum * grid.h().powi(grid.dim() as i32 - 2)
    }

    fn point(&self, v: &[f64], lambda: f64, arc_s: f64) -> BranchPoint {
        let sup_v = v.iter().fold(0.0f64, |m, &x| m.max(x));
        BranchPoint { arc_s, lambda, sup_v, min_gap: 1.0 - sup_v, energy: self.energy(v), fold_flag: false }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Clone)]
struct State {
    v: Vec<f64>,
    lambda: f64,
    tv: Vec<f64>,
    tl: f64,
}

struct Corrected {
    v: Vec<f64>,
    lambda: f64,
    /// Tangent from the last corrector factorization, not yet oriented.
    tv: Vec<f64>,
    tl: f64,
    iterations: usize,
}

fn tangent_from(b: &[f64]) -> (Vec<f64>, f64) {
    let scale = 1.0 / (dot(b, b) + 1.0).sqrt();
    (b.iter().map(|x| -x * scale).collect(), scale)
}

/// Predictor-corrector step of arclength `ds` from `st`.
fn step(pb: &mut Pullin, st: &State, ds: f64, cfg: &SolveConfig, iters: usize) -> Option<Corrected> {
    let n = pb.n();
    let mut v: Vec<f64> = st.v.iter().zip(&st.tv).map(|(x, t)| x + ds * t).collect();
    let mut lambda = st.lambda + ds * st.tl;
    let mut f = vec![0.0; n];
    let mut last_b: Option<Vec<f64>> = None;
    for it in 0..=iters {
        if pb.touches_floor(&v) || !lambda.is_finite() {
            return None;
        }
        pb.residual(&v, lambda, &mut f);
        if let Some(b) = &last_b {
            if norm_inf(&f) <= cfg.residual_tol {
                let (tv, tl) = tangent_from(b);
                return Some(Corrected { v, lambda, tv, tl, iterations: it });
            }
        }
        if it == iters {
            return None;
        }
        pb.factor(&v, lambda).ok()?;
        let mut a = f.clone();
        pb.op.solve(&mut a).ok()?;
        let mut b = pb.f_lambda(&v);
        pb.op.solve(&mut b).ok()?;
        let dv: Vec<f64> = v.iter().zip(&st.v).map(|(x, y)| x - y).collect();
        let arc = dot(&st.tv, &dv) + st.tl * (lambda - st.lambda) - ds;
        let denom = st.tl - dot(&st.tv, &b);
        if denom.abs() < 1e-300 {
            return None;
        }
        let dl = (-arc + dot(&st.tv, &a)) / denom;
        for ((x, ai), bi) in v.iter_mut().zip(&a).zip(&b) {
            *x += -ai - dl * bi;
        }
        lambda += dl;
        last_b = Some(b);
    }
    None
}

/// Traces the solution branch from `(λ, v) = (0, 0)` by pseudo-arclength
/// continuation until the minimum gap `1 - max v` reaches `stop_gap`.
pub fn continue_pullin(grid: Arc<Grid>, p: f64, cfg: &SolveConfig, cont: &ContinuationConfig) -> Result<Branch> {
    cfg.validate()?;
    cont.validate()?;
    let mut pb = Pullin::new(grid.clone(), p, cfg)?;
    let n = pb.n();
    let v0 = vec![0.0; n];
    pb.factor(&v0, 0.0)?;
    let mut b = pb.f_lambda(&v0);
    pb.op.solve(&mut b)?;
    let (tv, tl) = tangent_from(&b);
    let mut st = State { v: v0, lambda: 0.0, tv, tl };
    let mut branch = Branch { p, points: vec![pb.point(&st.v, 0.0, 0.0)], folds: Vec::new(), snapshots: Vec::new() };
    let mut pending: Vec<SnapshotTrigger> = cont.snapshots.clone();
    let mut ds = cont.step;
    let mut halvings = 0;
    let mut arc_s = 0.0;
    loop {
        if branch.points.len() >= cont.max_points {
            return Err(Error::Continuation { arc_s, lambda: st.lambda, reason: "point budget exhausted".into() });
        }
        let cur_gap = branch.points.last().unwrap().min_gap;
        let trial = step(&mut pb, &st, ds, cfg, cont.corrector_iters)
            .filter(|c| gap(&c.v) >= cont.max_gap_shrink * cur_gap);
        let Some(mut next) = trial else {
            halvings += 1;
            if halvings > cont.max_halvings {
                return Err(Error::Continuation {
                    arc_s,
                    lambda: st.lambda,
                    reason: format!("corrector failed after {} step halvings", cont.max_halvings),
                });
            }
            ds *= 0.5;
            continue;
        };
        let mut taken = ds;
        let mut hit: Option<SnapshotTrigger> = None;
        let mut targets: Vec<SnapshotTrigger> = pending.clone();
        targets.push(SnapshotTrigger::MinGap(cont.stop_gap));
        if let Some(t) = first_crossing(&targets, &st, cur_gap, &next) {
            let (c, sigma) = land(&mut pb, &st, cur_gap, t, ds, next, cfg, cont)
                .ok_or_else(|| Error::Continuation { arc_s, lambda: st.lambda, reason: "failed to land on a snapshot trigger".into() })?;
            next = c;
            taken = sigma;
            hit = Some(t);
        }
        let iterations = next.iterations;
        // Orient the new tangent along the direction of travel.
        orient(&mut next, &st);
        let new_s = arc_s + taken;
        if new_s <= arc_s {
            return Err(Error::Internal("arclength failed to increase".into()));
        }
        arc_s = new_s;
        let mut pt = pb.point(&next.v, next.lambda, arc_s);
        let turned = next.tl.signum() != st.tl.signum() && st.tl != 0.0;
        pt.fold_flag = turned;
        if turned {
            let (sigma, lambda, error_bound) = refine_fold(&mut pb, &st, taken, &next, cfg, cont.corrector_iters);
            branch.folds.push(Fold {
                index: branch.points.len(),
                lambda,
                arc_s: arc_s - taken + sigma,
                error_bound,
                is_maximum: st.tl > 0.0,
            });
        }
        branch.points.push(pt);
        st = State { v: next.v, lambda: next.lambda, tv: next.tv, tl: next.tl };
        if let Some(t) = hit {
            pending.retain(|x| *x != t);
            if cont.snapshots.contains(&t) {
                branch.snapshots.push(make_snapshot(&pb, &grid, p, &st, t, pt)?);
            }
            if t == SnapshotTrigger::MinGap(cont.stop_gap) {
                break;
            }
        }
        if pt.min_gap <= cont.stop_gap {
            break;
        }
        halvings = 0;
        if iterations <= 3 {
            ds = (ds * 1.5).min(cont.max_step);
        } else if iterations >= 6 {
            ds *= 0.7;
        }
    }
    Ok(branch)
}

fn gap(v: &[f64]) -> f64 {
    1.0 - v.iter().fold(0.0f64, |m, &x| m.max(x))
}

/// First trigger crossed on the way from `st` to `next`.
fn first_crossing(targets: &[SnapshotTrigger], st: &State, cur_gap: f64, next: &Corrected) -> Option<SnapshotTrigger> {
    let new_gap = gap(&next.v);
    let mut best: Option<(f64, SnapshotTrigger)> = None;
    for &t in targets {
        // Fraction of the step at which the trigger is reached, by linear interpolation.
        let frac = match t {
            SnapshotTrigger::MinGap(g) if cur_gap > g && new_gap <= g => (cur_gap - g) / (cur_gap - new_gap),
            SnapshotTrigger::Lambda(l) if (st.lambda - l) * (next.lambda - l) <= 0.0 && st.lambda != l => {
                (l - st.lambda) / (next.lambda - st.lambda)
            }
            _ => continue,
        };
        if best.map_or(true, |(b, _)| frac < b) {
            best = Some((frac, t));
        }
    }
    best.map(|(_, t)| t)
}

/// Secant iteration on the step length so the corrected point sits on the
/// trigger (from below for gap triggers).
#[allow(clippy::too_many_arguments)]
fn land(
    pb: &mut Pullin,
    st: &State,
    cur_gap: f64,
    t: SnapshotTrigger,
    ds: f64,
    full: Corrected,
    cfg: &SolveConfig,
    cont: &ContinuationConfig,
) -> Option<(Corrected, f64)> {
    let tol = cont.landing_tol;
    let (target, scale) = match t {
        SnapshotTrigger::MinGap(g) => (g * (1.0 - 0.5 * tol), g),
        SnapshotTrigger::Lambda(l) => (l, l),
    };
    let measure = |c: &Corrected| match t {
        SnapshotTrigger::MinGap(_) => gap(&c.v),
        SnapshotTrigger::Lambda(_) => c.lambda,
    };
    let start = match t {
        SnapshotTrigger::MinGap(_) => cur_gap,
        SnapshotTrigger::Lambda(_) => st.lambda,
    };
    let accept = |m: f64| (m - target).abs() <= 0.5 * tol * scale;
    let (mut s0, mut f0) = (0.0, start - target);
    let (mut s1, mut f1) = (ds, measure(&full) - target);
    if accept(measure(&full)) {
        return Some((full, ds));
    }
    for _ in 0..30 {
        let mut s = if f1 != f0 { s1 - f1 * (s1 - s0) / (f1 - f0) } else { 0.5 * (s0 + s1) };
        let (lo, hi) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let c = step(pb, st, s, cfg, cont.corrector_iters)?;
        let f = measure(&c) - target;
        if accept(measure(&c)) {
            return Some((c, s));
        }
        // Keep a bracket: replace the end point with the same sign.
        if (f > 0.0) == (f0 > 0.0) {
            s0 = s;
            f0 = f;
        } else {
            s1 = s;
            f1 = f;
        }
    }
    None
}

/// Bisections of the arclength bracket around a fold.
const FOLD_BISECTIONS: usize = 8;

fn orient(c: &mut Corrected, st: &State) {
    if dot(&c.tv, &st.tv) + c.tl * st.tl < 0.0 {
        c.tv.iter_mut().for_each(|x| *x = -*x);
        c.tl = -c.tl;
    }
}

/// Locates the turning point of `λ` inside the step from `st` to `next` (of
/// pseudo-arclength `taken`, tangent already oriented). The bracket is
/// bisected on the sign of `dλ/dσ`, then the extremum of the cubic Hermite
/// interpolant on the final bracket is taken. Returns `(σ, λ, error bound)`,
/// the bound being the distance from the estimate to the nearer-to-fold
/// bracket end.
fn refine_fold(pb: &mut Pullin, st: &State, taken: f64, next: &Corrected, cfg: &SolveConfig, iters: usize) -> (f64, f64, f64) {
    // dλ/dσ: the tangent rescaled by ds/dσ along the predictor direction.
    let slope = |tv: &[f64], tl: f64| tl / (dot(&st.tv, tv) + st.tl * tl);
    let mut a = (0.0, st.lambda, st.tl);
    let mut b = (taken, next.lambda, slope(&next.tv, next.tl));
    for _ in 0..FOLD_BISECTIONS {
        let m = 0.5 * (a.0 + b.0);
        let Some(mut c) = step(pb, st, m, cfg, iters) else { break };
        orient(&mut c, st);
        let sm = slope(&c.tv, c.tl);
        if sm.signum() == a.2.signum() {
            a = (m, c.lambda, sm);
        } else {
            b = (m, c.lambda, sm);
        }
    }
    let (sigma, lambda) = hermite_extremum(a, b);
    let nearest = if a.2 > 0.0 { a.1.max(b.1) } else { a.1.min(b.1) };
    (sigma, lambda, (lambda - nearest).abs())
}

/// Extremum of the cubic with values and slopes `(x, y, y')` at both ends,
/// where the slopes have opposite signs.
fn hermite_extremum(a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64) {
    let w = b.0 - a.0;
    let (y0, y1, m0, m1) = (a.1, b.1, a.2 * w, b.2 * w);
    // p(t) = y0 + m0 t + c2 t² + c3 t³ on t ∈ [0, 1].
    let c2 = 3.0 * (y1 - y0) - 2.0 * m0 - m1;
    let c3 = 2.0 * (y0 - y1) + m0 + m1;
    let eval = |t: f64| y0 + t * (m0 + t * (c2 + t * c3));
    // p'(t) = m0 + 2 c2 t + 3 c3 t², which changes sign on [0, 1].
    let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, m0);
    let dp = |t: f64| qc + t * (qb + t * qa);
    let (mut lo, mut hi) = (0.0, 1.0);
    if dp(lo).signum() == dp(hi).signum() {
        let t = if (y0 - y1) * m0.signum() > 0.0 { 0.0 } else { 1.0 };
        return (a.0 + t * w, eval(t));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dp(mid).signum() == dp(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (a.0 + t * w, eval(t))
}

fn make_snapshot(pb: &Pullin, grid: &Arc<Grid>, p: f64, st: &State, t: SnapshotTrigger, point: BranchPoint) -> Result<Snapshot> {
    let nodes = pb.node_values(&st.v);
    let v = ScalarField::new(grid.clone(), nodes, p)?;
    let scale = st.lambda.powf(-1.0 / (p + 1.0));
    let u = v.map(|x| scale * (1.0 - x))?;
    Ok(Snapshot { trigger: t, point, v, u })
}

/// Solution of the pull-in problem at fixed `λ`, by damped Newton from
/// `guess` (zero by default). Below the fold and from the zero guess this
/// finds the minimal solution.
#[derive(Debug, Clone)]
pub struct PullinSolution {
    pub lambda: f64,
    pub v: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

pub fn solve_pullin(grid: Arc<Grid>, p: f64, lambda: f64, guess: Option<&ScalarField>, cfg: &SolveConfig) -> Result<PullinSolution> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut pb = Pullin::new(grid.clone(), p, cfg)?;
    let n = pb.n();
    let mut v = match guess {
        Some(g) => {
            if g.grid() != grid.as_ref() {
                return Err(Error::InvalidInput("guess lives on a different grid".into()));
            }
            pb.op.gather(g.values())
        }
        None => vec![0.0; n],
    };
    let mut f = vec![0.0; n];
    let mut trial_f = vec![0.0; n];
    pb.residual(&v, lambda, &mut f);
    let norm2 = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    for it in 0..=cfg.max_newton_iters {
        let r = norm_inf(&f);
        if r <= cfg.residual_tol {
            let v = ScalarField::new(grid.clone(), pb.node_values(&v), p)?;
            return Ok(PullinSolution { lambda, v, iterations: it, residual: r });
        }
        if it == cfg.max_newton_iters {
            break;
        }
        pb.factor(&v, lambda)?;
        let mut dv: Vec<f64> = f.iter().map(|x| -x).collect();
        pb.op.solve(&mut dv)?;
        let r2 = norm2(&f);
        let mut t = 1.0;
        let mut ok = false;
        let mut trial = v.clone();
        for _ in 0..=cfg.max_backtracks {
            for ((x, y), d) in trial.iter_mut().zip(&v).zip(&dv) {
                *x = y + t * d;
            }
            pb.residual(&trial, lambda, &mut trial_f);
            if norm2(&trial_f) < (1.0 - 1e-4 * t) * r2 {
                ok = true;
                break;
            }
            t *= cfg.damping;
        }
        if !ok {
            break;
        }
        v = trial;
        std::mem::swap(&mut f, &mut trial_f);
    }
    let residual = norm_inf(&f);
    Err(Error::Diverged {
        iterations: cfg.max_newton_iters,
        residual,
        reason: format!("no solution found at lambda {lambda}"),
        last: ScalarField::new(grid.clone(), pb.node_values(&v), p).ok().map(Box::new),
    })
}
