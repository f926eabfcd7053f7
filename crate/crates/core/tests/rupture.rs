use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rupture_lab::field::{Grid, ScalarField};
use rupture_lab::profiles::radial_exact;
use rupture_lab::rupture::{
    box_dimension, components_csv, discreteness_check, sublevel, sweep_dimension, LevelMask, COMPONENTS_HEADER,
    POINT_DIMENSION_TOL,
};
use rupture_lab::solver::{continue_pullin, ContinuationConfig, SolveConfig, SnapshotTrigger};

const H: f64 = 1.0 / 256.0;

fn disk() -> Arc<Grid> {
    static G: OnceLock<Arc<Grid>> = OnceLock::new();
    G.get_or_init(|| Arc::new(Grid::disk([0.0, 0.0], 1.0, H).unwrap())).clone()
}

fn radial() -> &'static ScalarField {
    static U: OnceLock<ScalarField> = OnceLock::new();
    U.get_or_init(|| radial_exact(2, 3.0).unwrap().sample(disk(), [0.0, 0.0]).unwrap())
}

fn radial_taus() -> Vec<f64> {
    [0.1f64, 0.05, 0.025, 0.0125].iter().map(|r| 2f64.sqrt() * r.sqrt()).collect()
}

#[test]
fn sublevel_of_radial_is_a_small_disk() {
    let m = sublevel(radial(), 2f64.sqrt() * 0.05f64.sqrt()).unwrap();
    assert_eq!(m.components.len(), 1);
    let c = &m.components[0];
    assert!(c.nodes.contains(&disk().nearest_node([0.0, 0.0])));
    assert!(c.diameter <= 0.11 && c.diameter >= 0.09, "{}", c.diameter);
    assert!(c.centroid[0].abs() < 1e-12 && c.centroid[1].abs() < 1e-12);
}

#[test]
fn sublevel_trivial_cases() {
    let one = ScalarField::constant(disk(), 3.0, 1.0).unwrap();
    assert!(sublevel(&one, 0.5).unwrap().is_empty());
    let full = sublevel(&one, 2.0).unwrap();
    assert_eq!(full.count(), disk().interior_nodes().count());
    assert_eq!(full.components.len(), 1);
    assert!(sublevel(&one, 0.0).is_err());
    assert!(sublevel(&one, f64::NAN).is_err());
}

#[test]
fn three_points_have_dimension_zero() {
    let g = disk();
    let nodes: Vec<usize> = [[0.1, 0.1], [-0.4, 0.2], [0.3, -0.5]].iter().map(|&x| g.nearest_node(x)).collect();
    let mask = LevelMask::from_nodes(g, 1.0, &nodes).unwrap();
    let scales: Vec<f64> = (0..5).map(|i| 0.2 * 0.5f64.powi(i)).collect();
    let d = box_dimension(&mask, &scales).unwrap();
    assert!(d.slope.unwrap().abs() <= 0.15, "{d:?}");
}

#[test]
fn segment_has_dimension_one() {
    let g = disk();
    let line: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let x = g.coords(k);
            x[1].abs() <= H * 0.5 && x[0].abs() <= 0.5
        })
        .collect();
    let mask = LevelMask::from_nodes(g, 1.0, &line).unwrap();
    let scales: Vec<f64> = (0..6).map(|i| 0.2 * 0.5f64.powi(i)).collect();
    let d = box_dimension(&mask, &scales).unwrap();
    assert!((d.slope.unwrap() - 1.0).abs() <= 0.15, "{d:?}");
    assert!(d.counts.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn box_dimension_preconditions() {
    let g = disk();
    let empty = LevelMask::from_nodes(g.clone(), 1.0, &[]).unwrap();
    let scales = [0.2, 0.1, 0.05, 0.02];
    let d = box_dimension(&empty, &scales).unwrap();
    assert!(d.slope.is_none());
    assert!(box_dimension(&empty, &[0.2, 0.1, 0.05]).is_err());
    assert!(box_dimension(&empty, &[0.2, 0.15, 0.1, 0.05]).is_err());
    assert!(LevelMask::from_nodes(g.clone(), 1.0, &[g.len()]).is_err());
}

#[test]
fn radial_diameter_scales_like_tau_squared() {
    let d = discreteness_check(radial(), &radial_taus()).unwrap();
    assert!(d.verdict.passed(), "{:?}", d.verdict);
    assert!(d.counts.iter().all(|&n| n == 1));
    // {u <= τ} is the disk of radius (τ/c)², so diameter/τ² = 2/c² = 1.
    for m in &d.masks {
        let ratio = m.components[0].diameter / (m.tau * m.tau);
        assert!((0.5..=2.0).contains(&ratio), "τ={}: {ratio}", m.tau);
    }
}

#[test]
fn two_bumps_give_two_components() {
    let ex = radial_exact(2, 3.0).unwrap();
    let two = ScalarField::from_fn(disk(), 3.0, |x| ex.eval([x[0] - 0.4, x[1]]).min(ex.eval([x[0] + 0.4, x[1]]))).unwrap();
    let d = discreteness_check(&two, &radial_taus()).unwrap();
    assert!(d.verdict.passed(), "{:?}", d.verdict);
    assert!(d.counts.iter().all(|&n| n == 2));
}

fn valley() -> ScalarField {
    ScalarField::from_fn(disk(), 3.0, |x| {
        let dx = (x[0].abs() - 0.3).max(0.0);
        dx.hypot(x[1]).sqrt()
    })
    .unwrap()
}

#[test]
fn degenerate_valley_fails() {
    let d = discreteness_check(&valley(), &[0.3, 0.2, 0.1, 0.05]).unwrap();
    assert!(!d.verdict.passed(), "{:?}", d.verdict);
    let s = sweep_dimension(&valley(), &[0.3, 0.2, 0.1, 0.05]).unwrap();
    assert!(s.slope.unwrap() > POINT_DIMENSION_TOL, "{s:?}");
}

#[test]
fn radial_sweep_has_slope_zero() {
    let s = sweep_dimension(radial(), &radial_taus()).unwrap();
    assert!(s.counts.iter().all(|&n| n == 1));
    assert!(s.slope.unwrap().abs() < 1e-12);
}

#[test]
fn discreteness_preconditions() {
    assert!(discreteness_check(radial(), &[0.3, 0.2]).is_err());
    assert!(discreteness_check(radial(), &[0.1, 0.2, 0.3]).is_err());
    assert!(sweep_dimension(radial(), &[0.1, 0.1, 0.05]).is_err());
}

#[test]
fn components_csv_layout() {
    let d = discreteness_check(radial(), &radial_taus()).unwrap();
    let csv = components_csv(&d.masks);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(COMPONENTS_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for (row, m) in rows.iter().zip(&d.masks) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 6);
        assert_eq!(f[0], "0");
        assert_eq!(f[4].parse::<usize>().unwrap(), m.components[0].node_count);
        assert_eq!(f[5].parse::<f64>().unwrap(), m.tau);
    }
    assert_eq!(d.masks[0].components_csv().lines().count(), 2);
}

#[test]
fn verdict_is_invariant_under_cell_translation() {
    let ex = radial_exact(2, 3.0).unwrap();
    let taus = radial_taus();
    let mut verdicts = Vec::new();
    for shift in [0.0, 3.0 * H, -5.0 * H] {
        let g = Arc::new(Grid::rectangle([-1.0 + shift, -1.0], [2.0, 2.0], H).unwrap());
        let u = ScalarField::from_fn(g, 3.0, |x| ex.eval([x[0] - shift, x[1]])).unwrap();
        let d = discreteness_check(&u, &taus).unwrap();
        verdicts.push((d.verdict.passed(), d.counts.clone(), d.verdict.worst_violation));
    }
    for v in &verdicts[1..] {
        assert_eq!(v.0, verdicts[0].0);
        assert_eq!(v.1, verdicts[0].1);
        assert!((v.2 - verdicts[0].2).abs() < 1e-9);
    }
}

#[test]
fn near_rupture_snapshot_is_discrete() {
    let g = Arc::new(Grid::disk([0.0, 0.0], 1.0, 1.0 / 64.0).unwrap());
    let cont = ContinuationConfig { stop_gap: 0.05, snapshots: vec![SnapshotTrigger::MinGap(0.05)], ..Default::default() };
    let b = continue_pullin(g, 2.0, &SolveConfig::default(), &cont).unwrap();
    let u = &b.snapshot(SnapshotTrigger::MinGap(0.05)).unwrap().u;
    let (_, umin) = u.interior_min().unwrap();
    let taus = [8.0 * umin, 4.0 * umin, 2.0 * umin];
    let s = sweep_dimension(u, &taus).unwrap();
    assert!(s.slope.unwrap() <= POINT_DIMENSION_TOL, "{s:?}");
    let d = discreteness_check(u, &taus).unwrap();
    assert!(d.counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", d.counts);
}

/// Nodes on a coarse lattice of spacing `gap` cells, chosen by `picks`.
fn scattered(g: &Grid, picks: &[(u8, u8)], gap: usize) -> Vec<usize> {
    let n = g.shape()[0];
    let slots = (n - 1) / gap;
    let mut nodes: Vec<usize> =
        picks.iter().map(|&(a, b)| g.index((a as usize % slots) * gap, (b as usize % slots) * gap)).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isolated_points_have_dimension_zero(picks in prop::collection::vec((any::<u8>(), any::<u8>()), 1..=20)) {
        let g = Arc::new(Grid::rectangle([0.0, 0.0], [1.0, 1.0], 1.0 / 256.0).unwrap());
        // ε ∈ [2h, 20h]; points sit at least 21 cells apart in each
        // coordinate, so no box ever holds two of them.
        let scales: Vec<f64> = (0..5).map(|i| 20.0 * g.h() * 10f64.powf(-(i as f64) / 4.0)).collect();
        let nodes = scattered(&g, &picks, 21);
        let mask = LevelMask::from_nodes(g, 1.0, &nodes).unwrap();
        let d = box_dimension(&mask, &scales).unwrap();
        prop_assert!(d.slope.unwrap().abs() <= 0.15);
        prop_assert!(d.counts.iter().all(|&c| c == nodes.len()));
    }

    #[test]
    fn masks_are_nested(t1 in 0.05f64..1.5, t2 in 0.05f64..1.5) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = sublevel(radial(), lo).unwrap();
        let b = sublevel(radial(), hi).unwrap();
        prop_assert!(a.mask.iter().zip(&b.mask).all(|(x, y)| !*x || *y));
    }

    #[test]
    fn component_count_does_not_grow_as_tau_shrinks(
        centers in prop::collection::vec((-0.6f64..0.6, -0.6f64..0.6), 1..5),
        t1 in 0.2f64..0.8,
        shrink in 0.3f64..0.95,
    ) {
        // Minimum of radial bumps: every sublevel set is a union of disks,
        // and disks that overlap at τ₂ ⊂ τ₁ also overlap at τ₁.
        let ex = radial_exact(2, 3.0).unwrap();
        let g = Arc::new(Grid::disk([0.0, 0.0], 1.0, 1.0 / 64.0).unwrap());
        let u = ScalarField::from_fn(g, 3.0, |x| {
            centers.iter().map(|&(a, b)| ex.eval([x[0] - a, x[1] - b])).fold(f64::INFINITY, f64::min)
        }).unwrap();
        let big = sublevel(&u, t1).unwrap();
        let small = sublevel(&u, t1 * shrink).unwrap();
        prop_assert!(small.components.len() <= big.components.len() + centers.len() - 1);
        prop_assert!(small.components.len() <= centers.len());
    }
}
