use halflie::harness::{list_experiments, run, ExperimentConfig, ExperimentKind};
use halflie::Error;
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn halflie(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_halflie")).args(args).output().expect("binary runs")
}

fn quick(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.seed = Some(seed);
    c
}

#[test]
fn catalog_lists_all_eight() {
    let names: Vec<_> = list_experiments().iter().map(|e| e.name).collect();
    assert_eq!(
        names,
        ["jets-selftest", "group-validate", "shoot", "bvp-distance", "curvature-table", "completeness", "noloss", "nondegeneracy"]
    );
    let out = halflie(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    let out = halflie(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 8);
    assert_eq!(v[3]["name"], "bvp-distance");
}

#[test]
fn shipped_configs_are_valid() {
    let mut seen = std::collections::BTreeSet::new();
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen.insert(cfg.experiment.name());
        }
    }
    assert_eq!(seen.len(), 8, "{seen:?}");
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let mut shoot = quick(ExperimentKind::Shoot, 3);
    shoot.options.t = Some(1.0);
    shoot.options.lagrangian = Some(true);
    let mut curv = quick(ExperimentKind::CurvatureTable, 9);
    curv.options.samples = Some(10);
    let mut jets = quick(ExperimentKind::JetsSelftest, 2);
    jets.options.samples = Some(20);
    jets.options.bound_samples = Some(50);
    let mut noloss = ExperimentConfig::new(ExperimentKind::Noloss);
    noloss.options.t = Some(0.25);
    for cfg in [shoot, curv, jets, quick(ExperimentKind::GroupValidate, 1), noloss] {
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert!(a.pass(), "{}", a.summary());
        assert_eq!(a.artifacts, b.artifacts);
        assert_eq!(a.to_json(), b.to_json());
    }
}

#[test]
fn seed_changes_randomized_output() {
    let mut a = quick(ExperimentKind::CurvatureTable, 1);
    a.options.samples = Some(3);
    let mut b = a.clone();
    b.seed = Some(2);
    assert_ne!(run(&a).unwrap().artifacts, run(&b).unwrap().artifacts);
}

#[test]
fn bad_options_are_config_errors() {
    let mut c = quick(ExperimentKind::Shoot, 1);
    c.options.u0 = Some(vec![1.0, 2.0]);
    assert!(matches!(run(&c), Err(Error::Config(_))));
    let e = ExperimentConfig::parse("experiment = \"noloss\"\n[model]\nkind = \"diffeo\"\n").unwrap_err();
    assert!(matches!(e, Error::Config(_)));
}

#[test]
fn exit_status_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let missing_seed = dir.path().join("missing_seed.toml");
    std::fs::write(&missing_seed, "experiment = \"bvp-distance\"\n").unwrap();
    assert_eq!(halflie(&["run", missing_seed.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let good = dir.path().join("noloss.toml");
    std::fs::write(&good, "experiment = \"noloss\"\noutput = \"nl\"\n[options]\nt = 0.25\n").unwrap();
    let res = halflie(&["run", good.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(dir.path().join("nl.csv")).unwrap();
    assert!(csv.starts_with("metric,t,velocity_exponent"));
    assert_eq!(csv.lines().count(), 6);
    assert!(dir.path().join("nl.report.json").exists());

    // A large amplitude steepens the truncated spectrum beyond the exponent tolerance.
    let failing = dir.path().join("steep.toml");
    std::fs::write(&failing, "experiment = \"noloss\"\noutput = \"steep\"\n[options]\namplitude = 0.3\n").unwrap();
    assert_eq!(halflie(&["run", failing.to_str().unwrap(), "--out", out]).status.code(), Some(1));

    let seeded = dir.path().join("curv.toml");
    std::fs::write(&seeded, "experiment = \"curvature-table\"\nseed = 1\n[options]\nsamples = 2\n").unwrap();
    let a = halflie(&["run", seeded.to_str().unwrap(), "--out", out, "--seed", "5", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 5);
}
