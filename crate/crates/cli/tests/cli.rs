use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn shrinkdyn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinkdyn")).arg("--out").arg(out).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinkdyn(dir.path(), &["spectrum", "--surface", "circle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest(dir.path())["passed"], Value::Bool(true));
}

#[test]
fn failed_assertion_exits_one() {
    // the F drop along φ₁ is half of λ₁s², so the λ₁s² comparison fails
    let dir = tempfile::tempdir().unwrap();
    let o = shrinkdyn(dir.path(), &["experiment", "entropy_decrease"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("failed drop_vs_lambda1"));
    assert_eq!(manifest(dir.path())["passed"], Value::Bool(false));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinkdyn(dir.path(), &["experiment", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown experiment"));
    let o = shrinkdyn(dir.path(), &["experiment", "gap", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shrinkdyn(dir.path(), &["all", "--suite", "huge"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shrinkdyn(dir.path(), &["spectrum", "--surface", "cube"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shrinkdyn(dir.path(), &["bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[run]\nseed = 3\n\n[cone]\ntrials = \"many\"\n").unwrap();
    let o = shrinkdyn(dir.path(), &["--config", cfg.to_str().unwrap(), "flow"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.toml") && err.contains("line 5"), "{err}");

    std::fs::write(&cfg, "[run]\nseed = = 3\n").unwrap();
    let o = shrinkdyn(dir.path(), &["--config", cfg.to_str().unwrap(), "flow"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = shrinkdyn(dir.path(), &["--config", dir.path().join("missing.toml").to_str().unwrap(), "flow"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.toml");
    std::fs::write(&cfg, "[ancient]\nsizes = [1e-3, 1e-4, 1e-5]\n").unwrap();
    let o = shrinkdyn(dir.path(), &["--config", cfg.to_str().unwrap(), "experiment", "ancient"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("numeric failure"));
}

#[test]
fn manifest_covers_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("in.toml");
    std::fs::write(&cfg, "[run]\nseed = 11\n").unwrap();
    let out = dir.path().join("run");
    let o = shrinkdyn(&out, &["--config", cfg.to_str().unwrap(), "experiment", "transplant"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["seed"], 11);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let listed: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap().to_string()).collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(on_disk, sorted);
    for e in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(e["path"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(e["sha256"].as_str().unwrap(), hex);
    }
    let config_hash = m["outputs"].as_array().unwrap().iter().find(|e| e["path"] == "config.toml").unwrap()["sha256"].clone();
    assert_eq!(m["config_sha256"], config_hash);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("transplant.json")).unwrap()).unwrap();
    assert_eq!(report["manifest"], "manifest.json");
    for a in report["artifacts"].as_array().unwrap() {
        assert!(listed.contains(&a.as_str().unwrap().to_string()));
    }
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = shrinkdyn(out, &["--seed", "5", "experiment", "cone", "--trials", "6"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    for e in ma["outputs"].as_array().unwrap() {
        let p = e["path"].as_str().unwrap();
        assert_eq!(std::fs::read(a.join(p)).unwrap(), std::fs::read(b.join(p)).unwrap(), "{p}");
    }
}
