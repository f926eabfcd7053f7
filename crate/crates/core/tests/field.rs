use std::f64::consts::PI;
use std::sync::Arc;

use rupture_lab::field::{
    ball_integral, ball_integral_with, gradient, laplacian, radial_derivative, sphere_integral, Grid, ScalarField,
};

fn annulus(h: f64) -> Arc<Grid> {
    Arc::new(Grid::annulus([0.0, 0.0], 0.2, 1.0, h).unwrap())
}

fn disk(h: f64) -> Arc<Grid> {
    Arc::new(Grid::disk([0.0, 0.0], 1.0, h).unwrap())
}

fn radial(g: Arc<Grid>) -> ScalarField {
    ScalarField::from_fn(g, 3.0, |x| 2f64.sqrt() * x[0].hypot(x[1]).sqrt()).unwrap()
}

fn gradient_error(h: f64) -> f64 {
    let g = annulus(h);
    let u = radial(g.clone());
    let grad = gradient(&u).unwrap();
    g.interior_nodes()
        .map(|k| {
            let x = g.coords(k);
            let r = x[0].hypot(x[1]);
            // ∇(√2 r^{1/2}) = (√2/2) r^{-3/2} x.
            let s = 0.5 * 2f64.sqrt() * r.powf(-1.5);
            let d = grad.at(k);
            (d[0] - s * x[0]).abs().max((d[1] - s * x[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn gradient_of_radial_solution_is_second_order() {
    let (e1, e2) = (gradient_error(1.0 / 128.0), gradient_error(1.0 / 256.0));
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "errors {e1:.3e} {e2:.3e}, ratio {ratio}");
}

fn pde_residual(h: f64) -> f64 {
    let g = annulus(h);
    let u = radial(g.clone());
    let lap = laplacian(&u).unwrap();
    g.interior_nodes().map(|k| (lap.values()[k] - u.values()[k].powi(-3)).abs()).fold(0.0, f64::max)
}

#[test]
fn radial_solution_residual_is_second_order() {
    let (e1, e2) = (pde_residual(1.0 / 128.0), pde_residual(1.0 / 256.0));
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "residuals {e1:.3e} {e2:.3e}, ratio {ratio}");
}

#[test]
fn ball_integrals_match_closed_forms() {
    let h = 1.0 / 512.0;
    let g = disk(h);
    let one = ScalarField::constant(g.clone(), 3.0, 1.0).unwrap();
    let area = ball_integral(&one, [0.0, 0.0], 0.5, None).unwrap();
    assert!((area - 0.25 * PI).abs() <= 2.0 * h, "area {area}");

    let u = radial(g);
    // ∫_{B_r} (√2 ρ^{1/2})^{-3} = √2 π r^{1/2}.
    let exact = 2f64.sqrt() * PI * 0.5f64.sqrt();
    let floor = h.sqrt() / 100.0;
    let up = ball_integral_with(&u, [0.0, 0.0], 0.5, None, floor, |s| s.u.powi(-3)).unwrap();
    assert!((up - exact).abs() <= 0.02 * exact, "{up} vs {exact}");
    // ∫_{B_1} √2 ρ^{1/2} = 4√2π/5.
    let exact = 4.0 * 2f64.sqrt() * PI / 5.0;
    let m = ball_integral(&u, [0.0, 0.0], 1.0, None).unwrap();
    assert!((m - exact).abs() <= 0.02 * exact, "{m} vs {exact}");
}

#[test]
fn sphere_integrals_match_closed_forms() {
    let g = disk(1.0 / 128.0);
    let one = ScalarField::constant(g.clone(), 3.0, 1.0).unwrap();
    assert!((sphere_integral(&one, [0.0, 0.0], 0.5).unwrap() - PI).abs() <= 0.01 * PI);
    let x1sq = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0]).unwrap();
    assert!((sphere_integral(&x1sq, [0.0, 0.0], 1.0).unwrap() - PI).abs() <= 0.01 * PI);
    let usq = radial(g).map(|v| v * v).unwrap();
    for r in [0.1, 0.37, 0.8] {
        let exact = 4.0 * PI * r * r;
        assert!((sphere_integral(&usq, [0.0, 0.0], r).unwrap() - exact).abs() <= 0.01 * exact);
    }
}

fn radial_derivative_error(h: f64) -> f64 {
    let u = radial(annulus(h));
    let r: f64 = 0.6;
    let exact = 0.5 * 2f64.sqrt() / r.sqrt();
    radial_derivative(&u, [0.0, 0.0], r).unwrap().values.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max)
}

#[test]
fn radial_derivatives() {
    let g = disk(1.0 / 128.0);
    let sq = ScalarField::from_fn(g.clone(), 3.0, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
    for v in radial_derivative(&sq, [0.0, 0.0], 0.4).unwrap().values {
        assert!((v - 0.8).abs() < 1e-3);
    }
    let x1 = ScalarField::from_fn(g, 3.0, |x| x[0]).unwrap();
    let s = radial_derivative(&x1, [0.0, 0.0], 0.95).unwrap();
    for (pt, v) in s.points.iter().zip(&s.values) {
        let cos = pt[0] / pt[0].hypot(pt[1]);
        assert!((v - cos).abs() < 1e-12);
    }
    // The interpolated gradient on the radial solution converges at second order.
    let (e1, e2) = (radial_derivative_error(1.0 / 64.0), radial_derivative_error(1.0 / 128.0));
    assert!(e2 < e1 && e1 / e2 > 3.0, "{e1:.3e} {e2:.3e}");
}

#[test]
fn operators_are_linear() {
    let g = disk(1.0 / 32.0);
    let f = ScalarField::from_fn(g.clone(), 2.0, |x| (3.0 * x[0]).sin() * x[1].exp()).unwrap();
    let k = ScalarField::from_fn(g.clone(), 2.0, |x| x[0].powi(3) - x[1]).unwrap();
    let (a, b) = (1.7, -0.3);
    let comb = f.lincomb(a, &k, b).unwrap();
    let (lf, lk, lc) = (laplacian(&f).unwrap(), laplacian(&k).unwrap(), laplacian(&comb).unwrap());
    for i in g.interior_nodes() {
        let expect = a * lf.values()[i] + b * lk.values()[i];
        assert!((lc.values()[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }
    let (gf, gk, gc) = (gradient(&f).unwrap(), gradient(&k).unwrap(), gradient(&comb).unwrap());
    for i in 0..g.len() {
        for c in 0..2 {
            let expect = a * gf.component(c)[i] + b * gk.component(c)[i];
            assert!((gc.component(c)[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn unit_ball_measure_converges() {
    let err = |h: f64| {
        let one = ScalarField::constant(disk(h), 3.0, 1.0).unwrap();
        let r = 0.61;
        (ball_integral(&one, [0.013, -0.007], r, None).unwrap() / (r * r) - PI).abs()
    };
    let errs: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0].iter().map(|&h| err(h)).collect();
    // Observed order from a least-squares fit of log error against log h.
    let xs: Vec<f64> = (0..4).map(|i| -(i as f64) * 2f64.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let fit = rupture_lab::numerics::fit_line(&xs, &ys).unwrap();
    assert!(fit.slope >= 1.0, "errors {errs:?}, order {}", fit.slope);
}

#[test]
fn shell_identity() {
    let h = 1.0 / 256.0;
    let g = disk(h);
    let f = ScalarField::from_fn(g, 3.0, |x| 1.0 + x[0] * x[0] + 0.5 * (2.0 * x[1]).sin()).unwrap();
    let x = [0.05, -0.1];
    for (r, delta) in [(0.5, 0.02), (0.7, 0.05), (0.3, 0.01)] {
        let shell = ball_integral(&f, x, r, None).unwrap() - ball_integral(&f, x, r - delta, None).unwrap();
        let s = sphere_integral(&f, x, r).unwrap();
        let gap = (shell - delta * s).abs();
        // C δ(δ + h) with C = 10 max|f|.
        assert!(gap <= 10.0 * 2.5 * delta * (delta + h), "r={r} δ={delta}: {gap:.3e}");
    }
}
