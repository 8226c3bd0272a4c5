//! End-to-end tests of the binary: exit codes, the documented error paths,
//! and byte-level reproducibility of artifacts across runs and worker
//! counts. Heavy subcommands run at the smallest supported grid.

use std::path::Path;
use std::process::{Command, Output};

fn radmax(args: &[&str], dir: &Path, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radmax"));
    cmd.args(args).current_dir(dir).env_remove("RADMAX_WORKERS");
    if let Some(w) = workers {
        cmd.env("RADMAX_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing artifact {name}: {e}"))
}

fn write_tent(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tent.json");
    std::fs::write(
        &path,
        r#"{"dimension": 2, "grid": [0.0, 1.0], "values": [1.0, 0.0]}"#,
    )
    .unwrap();
    path
}

#[test]
fn eval_tent_origin_row_equals_the_profile_value() {
    let dir = tempfile::tempdir().unwrap();
    write_tent(dir.path());
    let out = radmax(
        &["eval", "tent.json", "--dimension", "2", "--grid", "64", "--out", "arts"],
        dir.path(),
        None,
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(read(&dir.path().join("arts"), "eval_tent_m.csv")).unwrap();
    let first = csv
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with("s,"))
        .expect("data row");
    let mut cols = first.split(',');
    let s: f64 = cols.next().unwrap().parse().unwrap();
    let value: f64 = cols.next().unwrap().parse().unwrap();
    assert_eq!(s, 0.0, "first row is the origin sample");
    assert!(
        (value - 1.0).abs() <= 1e-8,
        "maximal value at the origin of a decreasing tent is its peak, got {value}"
    );
    assert!(csv.starts_with("# config="), "artifact embeds the config hash");
    assert!(dir.path().join("arts/eval_tent_m.json").exists());
    assert!(dir.path().join("arts/eval_tent_m.svg").exists());
}

#[test]
fn eval_with_missing_profile_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = radmax(&["eval", "no-such-profile.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("no-such-profile.json"),
        "diagnostic names the path, got: {stderr}"
    );
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"grid": 64, "girth": 2}"#).unwrap();
    write_tent(dir.path());
    let out = radmax(
        &["eval", "tent.json", "--config", "bad.json"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json"), "diagnostic names the config, got: {stderr}");
}

#[test]
fn verify_artifacts_are_byte_identical_across_runs_and_worker_counts() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    let args = ["verify", "--grid", "64", "--seed", "7", "--out", "arts"];
    let run1 = radmax(&args, one.path(), Some("1"));
    let run2 = radmax(&args, two.path(), Some("2"));
    assert_eq!(
        run1.status.code(),
        run2.status.code(),
        "exit codes must not depend on reruns or worker count"
    );
    for name in ["verification.json", "verification.csv"] {
        let a = read(&one.path().join("arts"), name);
        let b = read(&two.path().join("arts"), name);
        assert_eq!(a, b, "{name} differs between runs");
    }
    assert_eq!(run1.stdout, run2.stdout, "criterion listing differs between runs");
}

#[test]
fn eval_artifacts_are_byte_identical_across_runs() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    for dir in [one.path(), two.path()] {
        write_tent(dir);
    }
    let args = [
        "eval", "tent.json", "--dimension", "3", "--grid", "96", "--seed", "11", "--out", "arts",
        "--operator", "mi",
    ];
    let run1 = radmax(&args, one.path(), Some("2"));
    let run2 = radmax(&args, two.path(), Some("1"));
    assert!(run1.status.success() && run2.status.success());
    for name in ["eval_tent_mi.csv", "eval_tent_mi.json", "eval_tent_mi.svg"] {
        let a = read(&one.path().join("arts"), name);
        let b = read(&two.path().join("arts"), name);
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn explore_mtilde_writes_trend_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = radmax(
        &["explore-mtilde", "--seed", "7", "--out", "arts"],
        dir.path(),
        None,
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let trends = String::from_utf8(read(&dir.path().join("arts"), "mtilde_trends.csv")).unwrap();
    assert!(trends.starts_with("# config="));
    assert!(trends.lines().count() > 3, "trend rows present");
    assert!(dir.path().join("arts/mtilde_points.csv").exists());
    assert!(dir.path().join("arts/mtilde_trends.json").exists());
    assert!(dir.path().join("arts/mtilde_trends.svg").exists());
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(
        summary.contains("growing families: none"),
        "no family may grow monotonically across doublings, got: {summary}"
    );
}

#[test]
fn oracle_smoke_passes_at_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = radmax(
        &["oracle", "--grid", "64", "--seed", "7", "--out", "arts"],
        dir.path(),
        None,
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "oracle audit: {stdout} {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = String::from_utf8(read(&dir.path().join("arts"), "oracle.json")).unwrap();
    assert!(report.contains("\"passed\": true"), "report: {report}");
}
