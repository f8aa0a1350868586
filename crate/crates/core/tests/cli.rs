//! The `toruscl` binary: exit codes, report files, cache handling.

use std::path::Path;
use std::process::{Command, Output};

fn toruscl(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toruscl"))
        .args(args)
        .env("TORUSCL_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn field_command_reports_class_group() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruscl(dir.path(), &["field", "--d", "-5", "--s", "inf", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("class_group: Z/2"), "{text}");
    assert!(text.contains("PASS"));
}

#[test]
fn bad_input_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruscl(dir.path(), &["field", "--d", "12"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d must be squarefree"));
    let o = toruscl(dir.path(), &["field", "--d", "-5", "--s", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn job_file_schema_errors_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    std::fs::write(&job, r#"{"task":"torus_class_group","base":"Q","splitting":{"quadratic":-5},"lattice":"gm"}"#).unwrap();
    let o = toruscl(dir.path(), &["torus", "--job", job.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"S\""));
}

#[test]
fn inconclusive_budget_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    // A prime bound below the generation bound leaves C^N uncertified.
    std::fs::write(
        &job,
        r#"{"format_version":1,"task":"verify_suite","suite":"c85","fields":[-23],"budgets":{"prime_bound":2}}"#,
    )
    .unwrap();
    let o = toruscl(dir.path(), &["torus", "--job", job.to_str().unwrap(), "--format", "text"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("INCONCLUSIVE"));
}

#[test]
fn reports_are_byte_identical_cold_warm_and_repeated() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let job = dir.path().join("job.json");
    std::fs::write(
        &job,
        r#"{"format_version":1,"task":"capitulation","base":{"quadratic":-5},"splitting":{"biquadratic":[-5,-1]},"S":["inf"]}"#,
    )
    .unwrap();
    let mut reports = Vec::new();
    for i in 0..4 {
        let out = dir.path().join(format!("r{i}.json"));
        let o = toruscl(&cache, &["torus", "--job", job.to_str().unwrap(), "--report", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        reports.push(std::fs::read(&out).unwrap());
        if i == 0 {
            assert!(std::fs::read_dir(&cache).unwrap().count() > 0, "cold run populates the cache");
        }
    }
    assert!(reports.iter().all(|r| r == &reports[0]));

    let o = toruscl(&cache, &["cache", "--clear"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 0);
    let out = dir.path().join("cold.json");
    toruscl(&cache, &["torus", "--job", job.to_str().unwrap(), "--report", out.to_str().unwrap()]);
    assert_eq!(std::fs::read(&out).unwrap(), reports[0]);
}

#[test]
fn verify_accepts_negative_discriminants() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruscl(dir.path(), &["verify", "--suite", "t61", "--fields", "-4,-5,-23,2"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdicts"].as_array().unwrap().len(), 8);
    assert_eq!(report["format_version"], 1);
}

#[test]
fn cache_dir_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other");
    toruscl(dir.path(), &["--cache-dir", other.to_str().unwrap(), "field", "--d", "-23"]);
    assert!(std::fs::read_dir(&other).unwrap().count() > 0);
    let o = toruscl(dir.path(), &["cache", "--dir", other.to_str().unwrap(), "--clear"]);
    assert!(stdout(&o).starts_with("removed 2"));
}
