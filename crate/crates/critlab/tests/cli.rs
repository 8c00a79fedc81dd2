//! End-to-end runs of the `critlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DISK: &str = "[distribution]\nkind = \"uniform-disk\"\nradius = 1.0\n";

fn critlab(dir: &Path, experiment: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{experiment}-{}.toml", extra.len()));
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_critlab"))
        .arg(experiment)
        .arg("--config")
        .arg(&path)
        .args(extra)
        .env_remove("CRITLAB_WORKERS")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn passing_run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = format!("experiment = \"decouple-check\"\nk = 3\nn_list = [5, 12]\nseeds = [0, 1]\ntrials = 3\n{DISK}");
    let out = critlab(dir.path(), "decouple-check", &cfg, &["--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS decoupling_identity"));

    let csv = fs::read_to_string(out_dir.join("decouple-check.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,k,instance,abs_h,abs_product,rel_err"));
    assert_eq!(lines.count(), 12);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["experiment"], "decouple-check");
    assert_eq!(manifest["outputs"][0]["rows"], 12);
    assert_eq!(manifest["config"]["n_list"], serde_json::json!([5, 12]));
    assert!(manifest["started_at"].as_str().unwrap() <= manifest["finished_at"].as_str().unwrap());
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // two close sizes cannot shrink the distance threefold
    let cfg = format!("experiment = \"convergence\"\nk = 1\nn_list = [30, 31]\nseeds = [0]\n{DISK}");
    let out = critlab(dir.path(), "convergence", &cfg, &["--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL convergence"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("convergence", format!("n_list = []\n{DISK}"), "n_list"),
        ("convergence", "n_list = [10, 20]\n".to_string(), "distribution"),
        ("convergence", format!("n_list = [20, 10]\n{DISK}"), "ascending"),
        ("convergence", format!("n_list = [10]\nk = 1\nk = 2\n{DISK}"), "line 3"),
        ("convergence", format!("experiment = \"bogus\"\nn_list = [10]\n{DISK}"), "jensen-audit"),
        ("smallball", format!("n_list = [10]\ntrials = 10\n{DISK}"), "trials"),
    ];
    for (experiment, cfg, needle) in cases {
        let out = critlab(dir.path(), experiment, &cfg, &[]);
        assert_eq!(out.status.code(), Some(2), "{cfg}");
        assert!(stderr(&out).contains(needle), "{cfg}: {}", stderr(&out));
    }
}

#[test]
fn every_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = critlab(dir.path(), "convergence", "n_list = [3, 2]\nmetric = \"nope\"\nbogus = 1\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for needle in ["ascending", "metric", "bogus", "distribution"] {
        assert!(err.contains(needle), "missing {needle}: {err}");
    }
}

#[test]
fn unknown_experiment_names_the_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = critlab(dir.path(), "bogus", &format!("n_list = [10]\n{DISK}"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for name in ["convergence", "jensen-audit", "smallball", "decouple-check", "maxlog", "lln"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn single_seed_single_n_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("one");
    let cfg = format!("experiment = \"convergence\"\nk = 2\nn_list = [32]\nseeds = [4, 5, 6]\n{DISK}");
    let out = critlab(dir.path(), "convergence", &cfg, &["--seed", "9", "--out", out_dir.to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "seed,n,k,metric,distance,certified,wall_ms");
    assert!(lines[1].starts_with("9,32,2,sliced_w1,"));
}

#[test]
fn output_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("experiment = \"jensen-audit\"\nk = 2\nn_list = [8, 30]\nseeds = [0, 1, 2]\ntrials = 4\n{DISK}");
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "4", "1"].iter().enumerate() {
        let out_dir = dir.path().join(format!("w{i}"));
        let out = critlab(dir.path(), "jensen-audit", &cfg, &["--workers", workers, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        csvs.push(fs::read(out_dir.join("jensen-audit.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lln.toml");
    fs::write(&path, format!("n_list = [16, 64]\nseeds = [0]\ntrials = 2\n{DISK}")).unwrap();
    let out_dir = dir.path().join("env");
    let out = Command::new(env!("CARGO_BIN_EXE_critlab"))
        .args(["lln", "--config", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .env("CRITLAB_WORKERS", "3")
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["workers"], 3);
}
