use std::sync::Arc;

use onephase_core::cone::{shoot_profile, SymmetrySplit};
use onephase_core::grid::{
    classify_point, free_boundary, minimize, regularity_scale, weiss_series, FreeBoundaryCurve,
    GridError, GridField, GridGeometry, MinimizeOptions, PointClass, Trace,
};
use proptest::prelude::*;

fn line(c: f64, half: f64) -> FreeBoundaryCurve {
    FreeBoundaryCurve {
        polylines: vec![vec![[c, -half], [c, half]]],
        deficits: vec![vec![0.0, 0.0]],
        h: 0.0,
    }
}

fn flat_solve(h: f64, c: f64, extension_start: bool) -> GridField {
    let opts = MinimizeOptions {
        extension_start,
        ..MinimizeOptions::default()
    };
    minimize(
        GridGeometry::planar_disk(1.0, h),
        &Trace::flat([1.0, 0.0], c),
        &opts,
    )
    .unwrap()
}

#[test]
fn flat_front_lies_within_two_cells() {
    let h = 1.0 / 128.0;
    for c in [0.1, 0.3, -0.2] {
        let u = flat_solve(h, c, false);
        let curve = free_boundary(&u).unwrap().restricted(|p| p[1].abs() <= 0.5);
        let err = curve.hausdorff(&line(c, 0.5));
        assert!(err <= 2.0 * h, "c = {c}: {} h", err / h);
    }
}

#[test]
fn flat_weiss_density_is_half_ball() {
    let h = 1.0 / 128.0;
    let u = flat_solve(h, 0.1, false);
    let w = weiss_series(&u, [0.1, 0.0], &[0.2, 0.3, 0.4]).unwrap();
    for v in &w.values {
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 5.0 * h, "{v}");
    }
}

#[test]
fn zero_and_constant_traces() {
    let geom = GridGeometry::planar_disk(1.0, 1.0 / 32.0);
    let u = minimize(geom, &Trace::Zero, &MinimizeOptions::default()).unwrap();
    assert!(u.values().iter().all(|v| *v == 0.0));
    assert_eq!(u.energy(), 0.0);
    let u = minimize(geom, &Trace::Constant(1.0), &MinimizeOptions::default()).unwrap();
    assert!(matches!(free_boundary(&u), Err(GridError::EmptyBoundary)));
}

#[test]
fn lower_data_give_lower_minimizers() {
    let h = 1.0 / 64.0;
    let low = flat_solve(h, 0.15, true);
    let high = flat_solve(h, 0.05, true);
    for (a, b) in low.values().iter().zip(high.values()) {
        assert!(*a <= b + 1e-9, "{a} > {b}");
    }
    assert!(low.energy() < high.energy());
}

#[test]
fn signed_extension_is_exact_for_half_planes() {
    let geom = GridGeometry::planar_square(1.0, 1.0 / 32.0);
    let probe = GridField::from_values(geom, vec![0.0; 0]).unwrap_err();
    assert!(matches!(probe, GridError::SizeMismatch { .. }));
    let lat = onephase_core::grid::Lattice::new(geom).unwrap();
    let c = 0.123;
    let values: Vec<f64> = (0..lat.len())
        .map(|id| (lat.position_of(id)[0] - c).max(0.0))
        .collect();
    let u = GridField::from_values(geom, values).unwrap();
    let mut touched = 0;
    for (id, s) in u.signed_values().iter().enumerate() {
        if u.values()[id] == 0.0 && *s != 0.0 {
            touched += 1;
            assert!((s - (lat.position_of(id)[0] - c)).abs() < 1e-12);
        }
    }
    // One extended node per lattice row except the two outermost.
    assert!(touched >= lat.ny - 2, "{touched}");
}

#[test]
fn cone_vertex_is_singular_and_planar_fronts_are_not() {
    let split = SymmetrySplit::new(1, 6).unwrap();
    let profile = Arc::new(shoot_profile::<f64>(7, split, 1e-10).unwrap());
    let geom = GridGeometry::double_polar(split, 1.0, 1.0 / 128.0);
    let gap = 0.5 * (profile.weiss_density / geom.flat_density() - 1.0);
    let u = minimize(geom, &Trace::Cone(profile), &MinimizeOptions::default()).unwrap();
    let c = classify_point(&u, [0.0, 0.0], gap).unwrap();
    assert_eq!(c.class, PointClass::Singular, "{c:?}");
    let deep = classify_point(&u, [0.05, 0.5], gap).unwrap();
    assert_eq!(deep.class, PointClass::Interior);

    let flat = flat_solve(1.0 / 128.0, 0.1, true);
    let curve = free_boundary(&flat).unwrap();
    for p in curve.vertices().filter(|p| p[1].abs() < 0.4).step_by(7) {
        let c = classify_point(&flat, p, 0.25).unwrap();
        assert_eq!(c.class, PointClass::Regular, "{p:?} {c:?}");
    }
}

/// `u = 1 + (x^2 - y^2) / 2` sampled on `geom`, rescaled by `r`.
fn saddle(geom: GridGeometry, r: f64) -> GridField {
    let lat = onephase_core::grid::Lattice::new(geom).unwrap();
    let values = (0..lat.len())
        .map(|id| {
            let [x, y] = lat.position_of(id);
            let (x, y) = (r * x, r * y);
            (1.0 + 0.5 * (x * x - y * y)) / r
        })
        .collect();
    GridField::from_values(geom, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn regularity_scale_rescales(r in 0.5f64..2.0, px in -0.3f64..0.3, py in -0.3f64..0.3) {
        let h = 1.0 / 64.0;
        let base = GridGeometry::planar_disk(1.0, h);
        let scaled = GridGeometry::planar_disk(1.0 / r, h / r);
        let u = saddle(base, 1.0);
        let ur = saddle(scaled, r);
        let a = regularity_scale(&u, [px, py]);
        let b = regularity_scale(&ur, [px / r, py / r]);
        prop_assert!((b - a / r).abs() <= 2.0 * h / r, "{b} vs {}", a / r);
    }
}
