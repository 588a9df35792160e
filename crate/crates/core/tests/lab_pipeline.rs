use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use qedlab::electron::PotentialSpec;
use qedlab::lab::experiments::ladder_drift;
use qedlab::lab::report::load_report;
use qedlab::lab::{
    decay_experiment, load_config, persist_report, rho, run_verification_suite, save_config,
    ExperimentConfig, Status, Tier,
};

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn hash_ignores_key_order() {
    let cfg = ExperimentConfig::desk();
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
    let obj = value.as_object_mut().unwrap();
    let mut entries: Vec<_> = std::mem::take(obj).into_iter().collect();
    entries.reverse();
    obj.extend(entries);
    let shuffled = ExperimentConfig::from_json(&value.to_string()).unwrap();
    assert_eq!(shuffled.hash(), cfg.hash());

    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn malformed_config_lists_every_problem() {
    let mut cfg = ExperimentConfig::desk();
    cfg.d = 2;
    cfg.n = 7;
    let err = ExperimentConfig::from_json(&cfg.to_json().unwrap())
        .unwrap_err()
        .to_string();
    assert!(err.contains("d:") && err.contains("n:"), "{err}");
}

#[test]
fn report_round_trip_and_csv() {
    let cfg = ExperimentConfig::desk();
    let rows = run_verification_suite(&cfg, Tier::Fast);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.config_hash == cfg.hash()));

    let dir = tempfile::tempdir().unwrap();
    persist_report(&rows, dir.path()).unwrap();
    // Info rows carry NaN targets, so compare through the serialized form.
    let json = |r: &[qedlab::lab::ReportRow]| serde_json::to_string(r).unwrap();
    assert_eq!(json(&load_report(dir.path()).unwrap()), json(&rows));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_qedlab");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("desk.json");
    save_config(&ExperimentConfig::desk(), &cfg_path).unwrap();

    let ok = Command::new(bin)
        .args(["verify", "--config"])
        .stdout(std::process::Stdio::null())
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("out/report.csv").exists());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "d": 2}"#).unwrap();
    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("bad_out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn decoupled_decay_rate_grows_with_coupling() {
    let mut cfg = load_config(&configs().join("decay_e0.json")).unwrap();
    cfg.n = 128;
    let mut rates = Vec::new();
    for gamma in [0.3, 0.5, 0.8] {
        cfg.potential = PotentialSpec::SoftCoulomb { gamma, s: 1.0 };
        let (model, out) = decay_experiment(&cfg);
        assert!(out.rows.iter().all(|r| r.status != Status::Fail), "{gamma}");
        rates.push(model.expect("bound state").a_fit);
    }
    assert!(rates.windows(2).all(|w| w[1] > w[0]), "{rates:?}");
}

proptest! {
    #[test]
    fn drift_is_non_negative(c in prop::collection::vec(0.0f64..10.0, 1..8)) {
        prop_assert!(ladder_drift(&c) >= 0.0);
    }

    #[test]
    fn drift_vanishes_on_non_increasing_ladders(mut c in prop::collection::vec(0.01f64..10.0, 1..8)) {
        c.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert!(ladder_drift(&c) < 1e-12);
    }

    #[test]
    fn rho_monotone_below_one(a in 0.0f64..0.999, da in 0.0f64..0.5) {
        let b = (a + da).min(0.9999);
        prop_assert!(rho(a) <= rho(b));
        prop_assert!((0.0..=1.0).contains(&rho(a)));
    }

    #[test]
    fn config_round_trip(seed in any::<u64>(), charge in -2.0f64..2.0, n_max in 0usize..4) {
        let mut cfg = ExperimentConfig::desk();
        cfg.seed = seed;
        cfg.charge = charge;
        cfg.n_max = n_max;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}
