//! Black-box checks of the command-line binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gdgesn"))
}

#[test]
fn gen_is_reproducible_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "gen".to_string(),
            "--out".into(),
            dir.path().join(out).display().to_string(),
            "--graphs-per-class".into(),
            "5".into(),
            "--vertices".into(),
            "12".into(),
            "--timesteps".into(),
            "8".into(),
            "--seed".into(),
            "42".into(),
        ]
    };
    for out in ["a", "b"] {
        let st = bin().args(args(out)).output().unwrap();
        assert!(st.status.success());
    }
    for file in ["meta.json", "graphs.jsonl"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical gen runs");
    }
}

#[test]
fn gen_rejects_empty_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "--out"])
        .arg(dir.path().join("d"))
        .args(["--graphs-per-class", "0", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("graphs_per_class"), "stderr: {stderr}");
}

#[test]
fn cv_rejects_single_fold() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let st = bin()
        .args(["gen", "--out"])
        .arg(&data)
        .args([
            "--graphs-per-class",
            "5",
            "--vertices",
            "12",
            "--timesteps",
            "8",
            "--seed",
            "42",
        ])
        .output()
        .unwrap();
    assert!(st.status.success());

    let out = bin()
        .args(["cv", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("r"))
        .args(["--folds", "1", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("folds"), "stderr: {stderr}");
}

#[test]
fn stats_reports_dataset_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let st = bin()
        .args(["gen", "--out"])
        .arg(&data)
        .args([
            "--graphs-per-class",
            "4",
            "--vertices",
            "10",
            "--timesteps",
            "6",
            "--classes",
            "0.3,0.6,0.9",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(st.status.success());

    let out = bin().args(["stats", "--data"]).arg(&data).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("graphs: 12"), "stdout: {stdout}");
    assert!(stdout.contains("classes: 3"), "stdout: {stdout}");
    assert!(stdout.contains("vertices: 10"), "stdout: {stdout}");
}

#[test]
fn cv_on_missing_dataset_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["cv", "--data"])
        .arg(dir.path().join("nope"))
        .arg("--out")
        .arg(dir.path().join("r"))
        .args(["--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
