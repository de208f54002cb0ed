use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rill"))
        .args(args)
        .env_remove("RILL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn run_into(dir: &Path) -> Output {
    rill(&[
        "run",
        "--width",
        "16",
        "--depth",
        "5",
        "--steps",
        "60",
        "--eta",
        "0.5,2",
        "--seed",
        "9",
        "--stats",
        "load_histogram,correlation,switching,flood,catastrophe,definetti",
        "--snapshot-times",
        "10,60",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn run_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_into(a.path()).status.success());
    assert!(run_into(b.path()).status.success());
    let sub = "eta_0.5";
    let mut names: Vec<_> = fs::read_dir(a.path().join(sub)).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join(sub).join(&name)).unwrap();
        let y = fs::read(b.path().join(sub).join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["conservation"]["violations"], 0);
}

#[test]
fn odd_width_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = rill(&["run", "--width", "5", "--depth", "3", "--steps", "4", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`width`"));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "width = 8\ndepth = 3\nsteps = 4\nwetness = 3\n").unwrap();
    let out = rill(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`wetness`"));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "width = 8\ndepth = 3\nsteps = 4\neta = 1.5\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = rill(&["run", "--config", cfg.to_str().unwrap(), "--steps", "7", "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["steps"], 7);
    assert_eq!(manifest["parameters"]["eta"][0], 1.5);
}

#[test]
fn oracle_prints_the_exact_law() {
    let out = rill(&["oracle", "--depth", "2", "--time", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("load"));
    let probs: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    // Row 2 carries 1, 2 or 3 units with probabilities 1/4, 1/2, 1/4.
    assert_eq!(probs.len(), 3);
    assert!((probs[0] - 0.25).abs() < 1e-12);

    let brute = rill(&["oracle", "--depth", "2", "--time", "5", "--bruteforce"]);
    assert_eq!(String::from_utf8(brute.stdout).unwrap(), text);
}

#[test]
fn experiment_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = rill(&["experiment", "fig3", "--scale", "0.001", "--seed", "3", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d = dir.path().join("fig3");
    assert!(d.join("load_histogram.csv").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["preset"], "fig3");
}

#[test]
fn verify_fast_runs() {
    let out = rill(&["verify", "fast", "--seed", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 9);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
}
