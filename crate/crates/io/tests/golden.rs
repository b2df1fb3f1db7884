use onephase_io::{compare, reference_golden, regression_check, GoldenFile, IoError, Provenance};

#[test]
fn reference_values_are_carried_verbatim() {
    let g = reference_golden();
    let lambdas = [5.70, 6.70, 7.70, 8.70, 9.70, 10.70, 11.70, 12.70];
    let gammas = [
        1.7573, 1.4839, 1.3672, 1.2985, 1.2523, 1.2189, 1.1934, 1.1734,
    ];
    for (i, d) in (7..=14).enumerate() {
        let l = g.get(&format!("lambda.d{d}")).unwrap();
        assert_eq!(l.value, lambdas[i]);
        assert_eq!(l.provenance, Provenance::PublishedTable);
        assert_eq!(l.tolerance, 0.02);
        let gm = g.get(&format!("gamma.d{d}")).unwrap();
        assert_eq!(gm.value, gammas[i]);
        assert_eq!(gm.tolerance, 5e-3);
    }
    assert!(g.records.iter().all(|r| !r.anchor.is_empty()));
    assert!(g
        .records
        .iter()
        .any(|r| r.provenance == Provenance::DerivedOracle));
    assert!(g
        .records
        .iter()
        .any(|r| r.provenance == Provenance::Trivial));
}

#[test]
fn identical_files_have_zero_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, reference_golden().to_json()).unwrap();
    let report = regression_check(&path, &path).unwrap();
    assert!(report.passed());
    assert_eq!(report.max_relative, 0.0);
    assert_eq!(report.deviations.len(), reference_golden().records.len());
}

#[test]
fn perturbed_lambda_fails_by_key() {
    let golden = reference_golden();
    let mut produced = golden.clone();
    let r = produced
        .records
        .iter_mut()
        .find(|r| r.key == "lambda.d7")
        .unwrap();
    r.value += 0.03;
    let report = compare(&golden, &produced).unwrap();
    assert!(!report.passed());
    let failing: Vec<_> = report.failures().map(|d| d.key.as_str()).collect();
    assert_eq!(failing, ["lambda.d7"]);
    assert!(report.diff().contains("lambda.d7"));
    assert!((report.max_relative - 0.03 / 5.70).abs() < 1e-12);
}

#[test]
fn missing_oracle_record_is_named() {
    let golden = reference_golden();
    let mut produced = golden.clone();
    produced.records.retain(|r| r.key != "theta_fb.d9_m1_k8");
    match compare(&golden, &produced) {
        Err(IoError::MissingKey(k)) => assert_eq!(k, "theta_fb.d9_m1_k8"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn wrong_shapes_are_schema_mismatches() {
    assert!(matches!(
        GoldenFile::parse(r#"{"schema":"onephase-golden/1","records":[{"key":"x"}]}"#),
        Err(IoError::SchemaMismatch(_))
    ));
    assert!(matches!(
        GoldenFile::parse(r#"{"schema":"other/2","records":[]}"#),
        Err(IoError::SchemaMismatch(_))
    ));
    let mut dup = reference_golden();
    dup.records.push(dup.records[0].clone());
    assert!(matches!(
        GoldenFile::parse(&dup.to_json()),
        Err(IoError::SchemaMismatch(_))
    ));
}

#[test]
fn restriction_keeps_requested_dimensions() {
    let g = reference_golden().restricted(7, 7);
    assert!(g.records.iter().all(|r| r.d == 7));
    assert!(g.get("weiss_density.d7_m1_k6").is_some());
}
