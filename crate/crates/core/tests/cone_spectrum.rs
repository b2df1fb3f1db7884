use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use onephase_core::cone::{section_integrals, shoot_profile, weiss_density, SymmetrySplit};
use onephase_core::grid::GridGeometry;
use onephase_core::spectrum::{
    gamma_roots, principal_eigenvalue, principal_eigenvalue_with, rayleigh_quotient,
    SpectrumOptions,
};
use proptest::prelude::*;
use serde::Deserialize;
use statrs::function::beta::{beta, beta_reg};

#[derive(Deserialize)]
struct OracleCone {
    theta_fb: f64,
    #[serde(rename = "H")]
    mean_curvature: f64,
    g_pole: f64,
    hessian_sq: Option<f64>,
    mean_curv_total: Option<f64>,
    weiss_density: Option<f64>,
    half_ball: Option<f64>,
}

fn oracle() -> BTreeMap<String, OracleCone> {
    serde_json::from_str(include_str!("golden/cone_oracle.json")).unwrap()
}

fn parse_key(key: &str) -> (usize, SymmetrySplit) {
    let nums: Vec<usize> = key
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    (nums[0], SymmetrySplit::new(nums[1], nums[2]).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn profiles_match_the_high_precision_oracle() {
    for (key, o) in oracle() {
        let (d, split) = parse_key(&key);
        let p = shoot_profile::<f64>(d, split, 1e-10).unwrap();
        assert!((p.theta_fb - o.theta_fb).abs() < 1e-8, "{key} theta_fb");
        assert!(rel(p.mean_curvature, o.mean_curvature) < 1e-8, "{key} H");
        assert!(
            (p.g.last().unwrap() - o.g_pole).abs() < 1e-8,
            "{key} g(pi/2)"
        );
        if let Some(w) = o.weiss_density {
            assert!(rel(p.weiss_density, w) < 1e-8, "{key} density");
        }
        if let (Some(hs), Some(mc)) = (o.hessian_sq, o.mean_curv_total) {
            let s = section_integrals(&p).unwrap();
            assert!(rel(s.hessian_sq, hs) < 1e-6, "{key} hessian");
            assert!(
                rel(s.mean_curv_total, mc) < 1e-8,
                "{key} mean curvature total"
            );
        }
        if let Some(half) = o.half_ball {
            let flat = GridGeometry::double_polar(split, 1.0, 0.01).flat_density();
            assert!(rel(flat, half) < 1e-12, "{key} half ball");
        }
    }
}

#[test]
fn four_three_cone_has_closed_form_data() {
    let p = shoot_profile::<f64>(7, SymmetrySplit::new(4, 3).unwrap(), 1e-10).unwrap();
    assert!((p.theta_fb - 0.5f64.atan()).abs() < 1e-9);
    assert!((p.mean_curvature - 2.5).abs() < 1e-8);
}

/// `|{U > 0} ∩ B_1|` through the regularized incomplete beta function.
fn density_by_beta(d: usize, split: SymmetrySplit, theta_fb: f64) -> f64 {
    let (a, b) = (split.k as f64 / 2.0, split.m as f64 / 2.0);
    let angular = 0.5 * beta(a, b) * (1.0 - beta_reg(a, b, theta_fb.sin().powi(2)));
    split.orbit_area::<f64>() * angular / d as f64
}

fn admissible_split() -> impl Strategy<Value = (usize, SymmetrySplit)> {
    (4usize..=12)
        .prop_flat_map(|d| (Just(d), 1..d))
        .prop_map(|(d, m)| (d, SymmetrySplit::new(m, d - m).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_invariants((d, split) in admissible_split()) {
        let p = shoot_profile::<f64>(d, split, 1e-10).unwrap();
        prop_assert!(p.theta_fb >= 0.0 && p.theta_fb < FRAC_PI_2);
        prop_assert!(p.theta.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((p.theta.last().unwrap() - FRAC_PI_2).abs() < 1e-12);
        prop_assert!(p.g[0].abs() < 1e-12);
        prop_assert!(p.g[1..].iter().all(|g| *g > 0.0));
        prop_assert!(p.ode_residual() < 1e-6, "residual {}", p.ode_residual());
        prop_assert!(p.curvature_mismatch() < 1e-8);
        let w = weiss_density(&p).unwrap();
        prop_assert!(rel(w, density_by_beta(d, split, p.theta_fb)) < 1e-8);
    }

    #[test]
    fn exponents_solve_the_indicial_equation(d in 3usize..=20, frac in 0.0f64..1.0) {
        let lambda = frac * ((d - 2) as f64).powi(2) / 4.0;
        let (lo, hi) = gamma_roots(lambda, d).unwrap();
        for g in [lo, hi] {
            prop_assert!((g * (g - d as f64 + 2.0) + lambda).abs() < 1e-12);
        }
        prop_assert!((lo + hi - (d - 2) as f64).abs() < 1e-12);
        prop_assert!(lo <= hi);
    }

    #[test]
    fn eigenfunction_minimizes_the_quotient(bump in -0.3f64..0.3, freq in 1usize..6) {
        let p = shoot_profile::<f64>(7, SymmetrySplit::new(1, 6).unwrap(), 1e-10).unwrap();
        let eig = principal_eigenvalue(&p, 512).unwrap();
        let n = eig.theta.len() - 1;
        let f: Vec<f64> = eig
            .phi
            .iter()
            .enumerate()
            .map(|(i, v)| v + bump * (freq as f64 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let q = rayleigh_quotient(&p, &f).unwrap();
        // The quotient is bounded below by -lambda, attained at phi.
        prop_assert!(q.value >= -eig.lambda - 1e-6, "{} < {}", q.value, -eig.lambda);
    }
}

#[test]
fn single_and_double_precision_agree() {
    let split = SymmetrySplit::new(1, 6).unwrap();
    let p64 = shoot_profile::<f64>(7, split, 1e-10).unwrap();
    let p32 = shoot_profile::<f32>(7, split, 1e-5).unwrap();
    assert!((p32.theta_fb as f64 - p64.theta_fb).abs() < 1e-4);
    let loose = SpectrumOptions {
        tolerance: 1e-2,
        max_n: 1024,
    };
    let e32 = principal_eigenvalue_with(&p32, 256, loose).unwrap();
    let e64 = principal_eigenvalue(&p64, 1024).unwrap();
    assert!((e32.lambda as f64 - e64.lambda).abs() < 1e-2);
}

#[test]
fn flat_split_has_constant_eigenfunction() {
    for d in [7, 12, 14] {
        let p = shoot_profile::<f64>(d, SymmetrySplit::flat(d), 1e-10).unwrap();
        let e = principal_eigenvalue(&p, 1024).unwrap();
        assert!(e.lambda.abs() < 1e-7, "d = {d}: {}", e.lambda);
        let worst = e.phi.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "d = {d}: |phi - 1| = {worst}");
    }
}
