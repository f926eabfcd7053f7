use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rupture_lab::blowup::{annulus_distance, reference_grid, rescale};
use rupture_lab::diagnostics::{
    default_theta_radii, density_theta, energy_e, energy_exponent, frequency, Theta, THETA_CUTOFF,
};
use rupture_lab::field::io::{field_from_json, field_to_json};
use rupture_lab::field::{ball_integral, gradient, laplacian, Grid, ScalarField};
use rupture_lab::profiles::{angular_constant, radial_exact, solve_angular, AngularProfile};
use rupture_lab::solver::RegularizedNonlinearity;

fn disk(h: f64) -> Arc<Grid> {
    Arc::new(Grid::disk([0.0, 0.0], 1.0, h).unwrap())
}

fn coarse() -> Arc<Grid> {
    static G: OnceLock<Arc<Grid>> = OnceLock::new();
    G.get_or_init(|| disk(1.0 / 32.0)).clone()
}

fn radial_fine() -> &'static ScalarField {
    static U: OnceLock<ScalarField> = OnceLock::new();
    U.get_or_init(|| radial_exact(2, 3.0).unwrap().sample(disk(1.0 / 256.0), [0.0, 0.0]).unwrap())
}

/// Smooth field `c0 + c1 x + c2 y + c3 xy + c4 sin(3x) cos(2y)`.
fn smooth(g: Arc<Grid>, c: [f64; 5]) -> ScalarField {
    ScalarField::from_fn(g, 3.0, move |x| {
        c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[1] + c[4] * (3.0 * x[0]).sin() * (2.0 * x[1]).cos()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-2.0f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn differential_operators_are_linear(c1 in coeffs(), c2 in coeffs(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (f, g) = (smooth(coarse(), c1), smooth(coarse(), c2));
        let combo = f.lincomb(a, &g, b).unwrap();
        let (lf, lg, lc) = (laplacian(&f).unwrap(), laplacian(&g).unwrap(), laplacian(&combo).unwrap());
        let scale = 1.0 + lf.interior_max_abs() + lg.interior_max_abs();
        for k in coarse().interior_nodes() {
            let want = a * lf.values()[k] + b * lg.values()[k];
            prop_assert!((lc.values()[k] - want).abs() <= 1e-12 * scale * (1.0 + a.abs() + b.abs()));
        }
        let (gf, gg, gc) = (gradient(&f).unwrap(), gradient(&g).unwrap(), gradient(&combo).unwrap());
        for axis in 0..2 {
            for k in 0..coarse().len() {
                let want = a * gf.component(axis)[k] + b * gg.component(axis)[k];
                prop_assert!((gc.component(axis)[k] - want).abs() <= 1e-11 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn ball_integral_grows_with_radius(c in coeffs(), r1 in 0.05f64..0.5, dr in 0.0f64..0.25, cx in -0.2f64..0.2, cy in -0.2f64..0.2) {
        let f = smooth(coarse(), c).map(|v| v.abs()).unwrap();
        let small = ball_integral(&f, [cx, cy], r1, None).unwrap();
        let big = ball_integral(&f, [cx, cy], r1 + dr, None).unwrap();
        prop_assert!(big >= small - 1e-14);
    }

    #[test]
    fn field_json_round_trips_bit_exactly(c in coeffs(), p in 1.01f64..9.0) {
        let f = smooth(coarse(), c).with_p(p).unwrap();
        let back = field_from_json(&field_to_json(&f)).unwrap();
        prop_assert_eq!(back.grid(), f.grid());
        prop_assert_eq!(back.p().to_bits(), p.to_bits());
        prop_assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn regularized_nonlinearity_is_floored_power(p in 1.01f64..8.0, delta in 1e-6f64..0.5, u1 in 1e-9f64..3.0, u2 in 1e-9f64..3.0) {
        let g = RegularizedNonlinearity::new(p, delta).unwrap();
        prop_assert!((g.value(u1) - u1.max(delta).powf(-p)).abs() <= 1e-12 * g.value(u1));
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(g.value(lo) >= g.value(hi));
        prop_assert!(g.derivative(u1) <= 0.0);
    }

    #[test]
    fn radial_constant_identity(p in 1.05f64..10.0, n in 2usize..5) {
        let r = radial_exact(n, p).unwrap();
        let alpha = 2.0 / (p + 1.0);
        prop_assert!((r.c.powf(p + 1.0) * alpha * (alpha + n as f64 - 2.0) - 1.0).abs() < 1e-11);
        if n == 2 {
            prop_assert!((r.c - angular_constant(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_assembled_from_its_quadratures(c in coeffs(), r in 0.1f64..0.7) {
        let u = smooth(coarse(), c).map(|v| 0.5 + v.abs()).unwrap();
        let rec = energy_e(&u, [0.0, 0.0], r).unwrap();
        let a = energy_exponent(2, 3.0);
        let want = r.powf(a) * rec.bulk - r.powf(a - 1.0) / 4.0 * rec.boundary_raw;
        prop_assert!((rec.e - want).abs() <= 1e-12 * (1.0 + want.abs()));
        prop_assert!(rec.de_integrand >= 0.0);
    }

    #[test]
    fn frequency_is_invariant_under_positive_scaling(c in coeffs(), a in 0.01f64..100.0, r in 0.2f64..0.7) {
        let u = smooth(coarse(), c);
        let base = frequency(&u, [0.0, 0.0], r, 1e-6).unwrap();
        let scaled = frequency(&u.map(|v| a * v).unwrap(), [0.0, 0.0], r, 1e-6 * a * a).unwrap();
        prop_assert!(base.d >= 0.0 && base.h >= 0.0);
        prop_assert!((scaled.d - a * a * base.d).abs() <= 1e-12 * a * a * (1.0 + base.d));
        prop_assert!((scaled.h - a * a * base.h).abs() <= 1e-12 * a * a * (1.0 + base.h));
        match (base.n, scaled.n) {
            (Some(n0), Some(n1)) => prop_assert!((n0 - n1).abs() <= 1e-12 * (1.0 + n0.abs())),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn radial_is_a_fixed_point_of_every_rescaling(lambda in 0.02f64..0.25) {
        let u = radial_fine();
        let exact = radial_exact(2, 3.0).unwrap();
        let target = ScalarField::from_fn(reference_grid(), 3.0, |y| exact.eval(y)).unwrap();
        let d = annulus_distance(&rescale(u, [0.0, 0.0], lambda).unwrap(), &target);
        let h = u.grid().h();
        let curvature = exact.c * exact.alpha * (1.0 - exact.alpha) * (0.25 * lambda).powf(exact.alpha - 2.0);
        prop_assert!(d < h * h * curvature * lambda.powf(-exact.alpha));
    }

    #[test]
    fn angular_solve_is_rotation_equivariant(shift in 0usize..512, amp in 0.05f64..0.3) {
        let n = 512;
        let s = angular_constant(3.0);
        let base = AngularProfile::from_fn(3.0, n, |t| s * (1.0 + amp * t.cos())).unwrap();
        let a = solve_angular(3.0, &base, 1e-10).unwrap().profile;
        let rotated: Vec<f64> = (0..n).map(|i| base.phi[(i + shift) % n]).collect();
        let b = solve_angular(3.0, &AngularProfile::new(3.0, rotated).unwrap(), 1e-10).unwrap().profile;
        let diff = (0..n).map(|i| (b.phi[i] - a.phi[(i + shift) % n]).abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "{diff:.3e}");
        prop_assert!(b.min() > 0.0);
    }
}

fn theta_at(u: &ScalarField, x: [f64; 2]) -> Theta {
    let radii = default_theta_radii(u, x, 8).unwrap();
    density_theta(u, x, &radii, THETA_CUTOFF).unwrap().theta
}

#[test]
fn density_is_upper_semicontinuous_at_a_rupture_point() {
    let u = radial_fine();
    let Theta::Value(at_zero) = theta_at(u, [0.0, 0.0]) else { panic!("rupture point has finite density") };
    assert!((at_zero + PI).abs() < 0.05 * PI, "{at_zero}");
    let tol = 0.05 * PI;
    for d in [0.2, 0.1, 0.05] {
        for k in 0..6 {
            let t = k as f64 * PI / 3.0;
            match theta_at(u, [d * t.cos(), d * t.sin()]) {
                Theta::MinusInfinity => {}
                Theta::Value(v) => assert!(v <= at_zero + tol, "d={d} t={t}: {v} vs {at_zero}"),
            }
        }
    }
}
