use std::path::Path;
use std::process::{Command, Output};

fn sabf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sabf")).args(args).output().expect("binary runs")
}

fn config_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_every_shipped_config() {
    for name in ["capacity.toml", "pattern.toml", "power.toml", "planar.toml", "robust.toml", "baseline.toml"] {
        let out = sabf(&["validate", &config_path(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let resolved = String::from_utf8(out.stdout).unwrap();
        // The resolved form is itself a valid config with the same hash.
        let cfg = sabf::harness::load_config(&resolved).unwrap();
        let original = sabf::harness::load_config(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap();
        assert_eq!(cfg.hash(), original.hash(), "{name}");
    }
}

#[test]
fn run_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "kind = \"capacity\"\n[layout]\nnodes = 4\nplacement = \"fekete\"\n[sweep]\nvalues = [0.0, 10.0]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = sabf(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--trials", "2", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed.len(), 3);
    for f in ["capacity.csv", "capacity_trials.csv", "capacity.meta.json"] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("capacity.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["trials"], 2);
    let trials = std::fs::read_to_string(out_dir.join("capacity_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 2);
}

#[test]
fn deploy_prints_positions() {
    let out = sabf(&["deploy", "--nodes", "4", "--placement", "fekete"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals.len(), 4);
    assert_eq!((vals[0], vals[3]), (-1.0, 1.0));
    assert!((vals[2] - 5f64.sqrt().recip()).abs() < 1e-9);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "kind = \"pattern\"\ntrials = 3\n").unwrap();
    let out = sabf(&["validate", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = sabf(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!out.status.success());
}
