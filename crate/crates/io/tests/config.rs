use onephase_core::SymmetrySplit;
use onephase_io::{Command, IoError, RunConfig};
use proptest::prelude::*;

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        Just(Command::Cone),
        Just(Command::Spectrum),
        Just(Command::Table),
        Just(Command::Solve),
        Just(Command::Sweep),
        Just(Command::Diagnose),
    ]
}

proptest! {
    #[test]
    fn config_round_trips(
        cmd in command(),
        dims in prop::collection::vec(2usize..=64, 0..4),
        m in 1usize..8,
        k in 1usize..8,
        n in 16usize..100_000,
        radius in 0.1f64..10.0,
        cells in 4.0f64..4096.0,
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::new(cmd);
        cfg.dims = dims;
        cfg.splits = vec![SymmetrySplit::new(m, k).unwrap()];
        cfg.n = n;
        cfg.grid.radius = radius;
        cfg.grid.h = radius / cells;
        cfg.seed = seed;
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v: serde_json::Value =
        serde_json::from_str(&RunConfig::new(Command::Solve).to_json()).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(RunConfig::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value =
        serde_json::from_str(&RunConfig::new(Command::Solve).to_json()).unwrap();
    v["grid"]["omega"] = serde_json::json!(1.9);
    assert!(RunConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn out_of_range_values_name_the_field() {
    let mut cfg = RunConfig::new(Command::Solve);
    cfg.grid.h = 0.5;
    match cfg.validate() {
        Err(IoError::InvalidConfig { field, .. }) => assert_eq!(field, "grid.h"),
        other => panic!("unexpected {other:?}"),
    }
    let mut cfg = RunConfig::new(Command::Table);
    cfg.dims = vec![1];
    assert!(matches!(
        cfg.validate(),
        Err(IoError::InvalidConfig { field: "dims", .. })
    ));
}

#[test]
fn load_reads_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let cfg = RunConfig::new(Command::Sweep);
    std::fs::write(&path, cfg.to_json()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}
