use std::fs;

use onephase_core::cone::{shoot_profile, SymmetrySplit};
use onephase_core::grid::{minimize, MinimizeOptions, Trace};
use onephase_core::GridGeometry;
use onephase_io::{
    format_real, read_field_snapshot, sha256_file, write_csv, write_field_snapshot, write_profile,
    IoError, Manifest,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn reals_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = format_real(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn seventeen_significant_digits(x in 1e-300f64..1e300) {
        let s = format_real(x);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        prop_assert_eq!(mantissa.len(), 17);
    }
}

#[test]
fn csv_uses_lf_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let rows = || (0..5).map(|i| vec![i.to_string(), format_real(0.1 * i as f64)]);
    let a = write_csv(&dir.path().join("a.csv"), &["i", "x"], rows()).unwrap();
    let b = write_csv(&dir.path().join("b.csv"), &["i", "x"], rows()).unwrap();
    assert_eq!(a.sha256, b.sha256);
    let text = fs::read_to_string(&a.path).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("i,x\n0,0.0000000000000000e0\n"));
    assert_eq!(sha256_file(&a.path).unwrap(), a.sha256);
}

#[test]
fn profile_files_carry_header_keys() {
    let dir = tempfile::tempdir().unwrap();
    let split = SymmetrySplit::new(1, 6).unwrap();
    let profile = shoot_profile::<f64>(7, split, 1e-10).unwrap();
    let files = write_profile(dir.path(), "p", &profile).unwrap();
    assert_eq!(files.len(), 2);
    let header: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&files[1].path).unwrap()).unwrap();
    for key in [
        "d",
        "m",
        "k",
        "theta_fb",
        "H",
        "weiss_density",
        "admissible",
    ] {
        assert!(header.get(key).is_some(), "missing {key}");
    }
    assert_eq!(header["m"], 1);
    let csv = fs::read_to_string(&files[0].path).unwrap();
    assert!(csv.starts_with("theta,g,g_prime\n"));
    assert_eq!(csv.lines().count(), profile.theta.len() + 1);
}

#[test]
fn snapshot_round_trips_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let geom = GridGeometry::planar_disk(1.0, 1.0 / 32.0);
    let field = minimize(
        geom,
        &Trace::flat([1.0, 0.0], 0.1),
        &MinimizeOptions::default(),
    )
    .unwrap();
    let [bin, side] = write_field_snapshot(dir.path(), "u", &field).unwrap();
    assert_eq!(bin.bytes, 8 * field.values().len());
    let back = read_field_snapshot(&bin.path).unwrap();
    assert_eq!(back.values(), field.values());
    assert_eq!(back.energy().to_bits(), field.energy().to_bits());

    let mut manifest = Manifest::default();
    manifest.extend([bin.clone(), side]);
    let listing = manifest.render(dir.path());
    assert_eq!(listing.lines().count(), 2);
    assert!(listing.contains(&format!("{}  u.bin", bin.sha256)));

    let mut bytes = fs::read(&bin.path).unwrap();
    bytes[0] ^= 1;
    fs::write(&bin.path, bytes).unwrap();
    assert!(matches!(
        read_field_snapshot(&bin.path),
        Err(IoError::HashMismatch { .. })
    ));
}
