use onephase_core::grid::{minimize, GridGeometry, MinimizeOptions, Trace};
use onephase_core::sweep::{
    check_ordering, difference_diagnostics, fit_loglog, fit_separation_exponents, log_grid,
    run_family, FamilySpec, SweepError,
};
use proptest::prelude::*;

fn flat_family(h: f64, t_grid: Vec<f64>) -> FamilySpec {
    FamilySpec {
        base: Trace::flat([1.0, 0.0], 0.0),
        t_grid,
        geometry: GridGeometry::planar_disk(1.0, h),
        options: MinimizeOptions::default(),
        probe_window: [0.0, 0.5],
        singular_probes: Vec::new(),
        relative_gap: 0.25,
        weiss_radii: Vec::new(),
    }
}

#[test]
fn flat_translates_separate_linearly() {
    let h = 1.0 / 128.0;
    let spec = flat_family(h, vec![0.0, 0.03, 0.06, 0.09, 0.12]);
    let report = run_family(&spec).unwrap();
    assert!(report.summaries.iter().all(|s| s.error.is_none()));
    assert!(report.summaries.iter().all(|s| s.singular.is_empty()));
    for p in report.pairs.iter().filter(|p| p.resolved) {
        let gap = p.fb_distance.unwrap();
        assert!((gap - (p.t - p.s)).abs() <= 2.0 * h, "{p:?}");
    }
    let c = report.linear_constant.unwrap();
    assert!(c > 0.5 && c < 1.5, "{c}");
    let fit = report.linear_fit.as_ref().unwrap();
    assert!((fit.slope - 1.0).abs() < 0.1, "{}", fit.slope);
    assert!(matches!(
        report.cleaning_distances(),
        Err(SweepError::NoSingularPoint)
    ));
}

#[test]
fn swapped_members_violate_ordering() {
    let h = 1.0 / 64.0;
    let geom = GridGeometry::planar_disk(1.0, h);
    let opts = MinimizeOptions::default();
    let low = minimize(geom, &Trace::flat([1.0, 0.0], 0.1), &opts).unwrap();
    let high = minimize(geom, &Trace::flat([1.0, 0.0], 0.0), &opts).unwrap();
    check_ordering(&[(0.0, &low), (0.1, &high)], [0.0, 0.5]).unwrap();
    assert!(matches!(
        check_ordering(&[(0.0, &high), (0.1, &low)], [0.0, 0.5]),
        Err(SweepError::OrderingViolation { .. })
    ));
}

#[test]
fn too_few_pairs_cannot_be_fitted() {
    let report = run_family(&flat_family(1.0 / 32.0, vec![0.0, 0.2])).unwrap();
    let (linear, superlinear) = fit_separation_exponents(&report);
    assert!(matches!(linear, Err(SweepError::InsufficientPairs { .. })));
    assert!(matches!(superlinear, Err(SweepError::NoSingularPoint)));
    assert!(matches!(
        fit_loglog(&[[0.1, 0.1], [0.2, 0.2]]),
        Err(SweepError::InsufficientPairs { needed: 4, got: 2 })
    ));
}

#[test]
fn invalid_families_are_rejected() {
    let h = 1.0 / 32.0;
    for grid in [vec![0.0], vec![0.0, 1e-5], vec![0.1, 0.05], vec![0.0, 1.5]] {
        assert!(matches!(
            flat_family(h, grid).validate(),
            Err(SweepError::InvalidFamily(_))
        ));
    }
    let mut spec = flat_family(h, vec![0.0, 0.1]);
    spec.probe_window = [0.5, 0.5];
    assert!(spec.validate().is_err());
}

#[test]
fn flat_translates_have_unit_harnack_ratio() {
    let h = 1.0 / 128.0;
    let geom = GridGeometry::planar_disk(1.0, h);
    let opts = MinimizeOptions::default();
    let u = minimize(geom, &Trace::flat([1.0, 0.0], 0.0), &opts).unwrap();
    let v = minimize(geom, &Trace::flat([1.0, 0.0], -0.05), &opts).unwrap();
    let diag = difference_diagnostics(&u, &v, 0.25, &[0.2, 0.3, 0.4]).unwrap();
    for a in &diag.annuli {
        assert!(a.nodes > 0);
        assert!(
            (a.inf - 0.05).abs() < 2.0 * h && (a.sup - 0.05).abs() < 2.0 * h,
            "{a:?}"
        );
    }
    assert!(diag.max_harnack_ratio() < 1.1);
    // No node has a regularity scale of ten radii.
    assert!(matches!(
        difference_diagnostics(&u, &v, 10.0, &[0.2]),
        Err(SweepError::EmptyAnnulus { .. })
    ));
}

proptest! {
    #[test]
    fn log_grid_is_increasing_and_floored(lo in 1e-5f64..1e-2, span in 1.5f64..100.0, n in 2usize..20, floor in 0.0f64..1e-3) {
        let hi = (lo * span).min(0.9);
        let g = log_grid(lo, hi, n, floor);
        prop_assert!(!g.is_empty() && g.len() <= n);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.iter().all(|t| *t >= floor && *t >= lo * (1.0 - 1e-12)));
        prop_assert!((g.last().unwrap() - hi.max(floor)).abs() <= 1e-12 * hi);
    }
}
