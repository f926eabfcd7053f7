use std::ffi::{CStr, CString};
use std::ptr;

use rupture_lab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rl_last_error()) }.to_string_lossy().into_owned()
}

fn annulus() -> RlDomain {
    RlDomain {
        kind: RlDomainKind::RL_DOMAIN_ANNULUS,
        origin: [0.0; 2],
        extent: [0.0; 2],
        center: [0.0, 0.0],
        inner: 0.2,
        outer: 1.0,
    }
}

fn disk(radius: f64) -> RlDomain {
    RlDomain { kind: RlDomainKind::RL_DOMAIN_DISK, outer: radius, ..annulus() }
}

#[test]
fn solve_recovers_radial_solution() {
    let dom = annulus();
    unsafe {
        let mut exact = ptr::null_mut();
        assert_eq!(rl_field_radial_exact(&dom, 1.0 / 32.0, 3.0, &mut exact), RlStatus::RL_OK);
        let mut sol = ptr::null_mut();
        let (mut iters, mut res) = (0usize, 0.0);
        assert_eq!(rl_solve_dirichlet(exact, 0, 0.0, &mut sol, &mut iters, &mut res), RlStatus::RL_OK, "{}", last_error());
        assert!(res <= 1e-8 && iters > 0);
        let (mut a, mut na, mut b, mut nb) = (ptr::null(), 0usize, ptr::null(), 0usize);
        assert_eq!(rl_field_values(exact, &mut a, &mut na), RlStatus::RL_OK);
        assert_eq!(rl_field_values(sol, &mut b, &mut nb), RlStatus::RL_OK);
        assert_eq!(na, nb);
        let (a, b) = (std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb));
        let err = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // Second-order discretization error at h = 1/32.
        assert!(err < 5e-3, "max error {err}");
        rl_field_free(exact);
        rl_field_free(sol);
    }
}

#[test]
fn failed_solve_returns_last_iterate() {
    let dom = annulus();
    unsafe {
        let mut bc = ptr::null_mut();
        assert_eq!(rl_field_radial_exact(&dom, 1.0 / 16.0, 3.0, &mut bc), RlStatus::RL_OK);
        let mut sol = ptr::null_mut();
        let mut iters = 0usize;
        let st = rl_solve_dirichlet(bc, 1, 1e-14, &mut sol, &mut iters, ptr::null_mut());
        assert_eq!(st, RlStatus::RL_NUMERICAL);
        assert!(last_error().contains("Newton"), "{}", last_error());
        assert!(!sol.is_null());
        assert_eq!(iters, 1);
        rl_field_free(sol);
        rl_field_free(bc);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut f = ptr::null_mut();
        let mut bad = annulus();
        bad.inner = 2.0;
        assert_eq!(rl_field_radial_exact(&bad, 0.1, 3.0, &mut f), RlStatus::RL_INVALID_GRID);
        assert!(f.is_null());
        assert_eq!(rl_field_radial_exact(&annulus(), 0.1, 0.5, &mut f), RlStatus::RL_INVALID_INPUT);
        assert!(last_error().contains("p must exceed 1"), "{}", last_error());
        assert_eq!(rl_field_radial_exact(ptr::null(), 0.1, 3.0, &mut f), RlStatus::RL_NULL_POINTER);
        assert_eq!(last_error(), "domain is NULL");
        let missing = CString::new("/nonexistent/field.json").unwrap();
        assert_eq!(rl_field_read(missing.as_ptr(), &mut f), RlStatus::RL_IO);

        assert_eq!(rl_field_radial_exact(&disk(1.0), 1.0 / 16.0, 3.0, &mut f), RlStatus::RL_OK);
        assert!(last_error().is_empty());
        let mut e = 0.0;
        assert_eq!(rl_energy(f, 0.9, 0.0, 0.5, &mut e), RlStatus::RL_OUT_OF_DOMAIN);
        rl_field_free(f);
    }
}

#[test]
fn values_round_trip_through_a_file() {
    let dom = RlDomain { kind: RlDomainKind::RL_DOMAIN_RECTANGLE, origin: [0.0, 0.0], extent: [1.0, 0.5], ..annulus() };
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("f.json").to_str().unwrap()).unwrap();
    unsafe {
        let (mut rows, mut cols) = (0usize, 0usize);
        assert_eq!(rl_domain_shape(&dom, 0.125, &mut rows, &mut cols), RlStatus::RL_OK);
        assert_eq!((rows, cols), (9, 5));
        let vals: Vec<f64> = (0..rows * cols).map(|k| 1.0 + (k as f64 * 0.37).sin()).collect();
        let mut f = ptr::null_mut();
        assert_eq!(rl_field_new(&dom, 0.125, 2.0, vals.as_ptr(), vals.len() - 1, &mut f), RlStatus::RL_INVALID_INPUT);
        assert_eq!(rl_field_new(&dom, 0.125, 2.0, vals.as_ptr(), vals.len(), &mut f), RlStatus::RL_OK);
        assert_eq!(rl_field_write(f, path.as_ptr()), RlStatus::RL_OK);
        let mut g = ptr::null_mut();
        assert_eq!(rl_field_read(path.as_ptr(), &mut g), RlStatus::RL_OK);
        let (mut ptr_, mut len) = (ptr::null(), 0usize);
        rl_field_values(g, &mut ptr_, &mut len);
        assert_eq!(std::slice::from_raw_parts(ptr_, len), &vals[..]);
        let (mut p, mut h) = (0.0, 0.0);
        rl_field_params(g, &mut p, &mut h);
        assert_eq!((p, h), (2.0, 0.125));
        rl_field_free(f);
        rl_field_free(g);
        rl_field_free(ptr::null_mut());
    }
}

#[test]
fn diagnostics_on_the_radial_solution() {
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(rl_field_radial_exact(&disk(1.0), 1.0 / 128.0, 3.0, &mut u), RlStatus::RL_OK);
        let mut e = 0.0;
        assert_eq!(rl_energy(u, 0.0, 0.0, 0.3, &mut e), RlStatus::RL_OK);
        assert!((e + std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI, "E = {e}");
        let mut fr = RlFrequency::default();
        assert_eq!(rl_frequency(u, 0.0, 0.0, 0.3, &mut fr), RlStatus::RL_OK);
        assert!(fr.interpretable == 0 && fr.h > 0.0);
        let mut rupture = -1;
        assert_eq!(rl_classify_point(u, 0.0, 0.0, &mut rupture), RlStatus::RL_OK);
        assert_eq!(rupture, 1);
        let mut s = 0.0;
        assert_eq!(rl_holder_seminorm(u, 0.5, 200_000, 0, &mut s), RlStatus::RL_OK);
        assert!((s - 2f64.sqrt()).abs() < 0.03, "seminorm {s}");
        let mut count = 0usize;
        assert_eq!(rl_rupture_components(u, 0.2, &mut count), RlStatus::RL_OK);
        assert_eq!(count, 1);
        let taus = [0.4, 0.3, 0.2, 0.15];
        let mut slope = f64::NAN;
        assert_eq!(rl_rupture_dimension(u, taus.as_ptr(), taus.len(), &mut slope), RlStatus::RL_OK);
        assert!(slope.abs() <= 0.15, "slope {slope}");
        let lambdas = [0.1, 0.05];
        let (mut hom, mut worst) = (0, 0.0);
        assert_eq!(rl_blowup(u, 0.0, 0.0, lambdas.as_ptr(), 2, 0.05, &mut hom, &mut worst), RlStatus::RL_OK, "{}", last_error());
        assert_eq!(hom, 1, "worst {worst}");
        rl_field_free(u);
    }
}

#[test]
fn continuation_reports_a_fold() {
    let (mut ls, mut eb) = (0.0, 0.0);
    let st = unsafe { rl_continue_pullin(&disk(1.0), 1.0 / 16.0, 2.0, 0.3, &mut ls, &mut eb) };
    assert_eq!(st, RlStatus::RL_OK, "{}", last_error());
    // Coarse grid: within a few percent of the continuum threshold 0.789.
    assert!((ls - 0.789).abs() < 0.05, "lambda* {ls}");
    assert!(eb >= 0.0 && eb < 1e-3);
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(rl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rupture_lab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 15);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
    }
    assert!(header.contains("typedef struct RlField RlField;"));
}
