use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn easytime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_easytime")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = easytime(&["validate", path(&models().join("olympic.et"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("0 errors"));

    let bad = easytime(&["validate", path(&models().join("invalid/NotASimplePath.json"))]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("NotASimplePath"));

    assert_eq!(easytime(&["validate", "missing.et"]).status.code(), Some(3));
    assert_eq!(easytime(&["validate", "model.txt"]).status.code(), Some(2));
    assert_eq!(easytime(&["validate"]).status.code(), Some(2));
    assert_eq!(easytime(&["compile", "--bogus"]).status.code(), Some(2));
}

#[test]
fn syntax_errors_exit_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.et");
    std::fs::write(&file, "competition \"x\";\nagent 1 auto \"a\";\nphase swim s laps 0 agent 1;\n").unwrap();
    let out = easytime(&["validate", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3:19"));
}

#[test]
fn every_command_has_help() {
    for cmd in ["validate", "fmt", "convert", "compile", "simulate", "replay", "serve"] {
        let out = easytime(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(stdout(&out).contains("Usage"), "{cmd}");
    }
}

#[test]
fn fmt_rewrites_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.et");
    std::fs::copy(models().join("olympic.et"), &file).unwrap();
    assert!(easytime(&["fmt", path(&file)]).status.success());
    let once = std::fs::read_to_string(&file).unwrap();
    assert!(!once.contains("//"));
    assert!(easytime(&["fmt", path(&file)]).status.success());
    assert_eq!(std::fs::read_to_string(&file).unwrap(), once);
    assert_eq!(stdout(&easytime(&["fmt", "--stdout", path(&file)])), once);
}

#[test]
fn convert_notes_dropped_layout() {
    let out = easytime(&["convert", path(&models().join("olympic.json")), "--to", "dsl"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("positions"));
    assert!(stdout(&out).starts_with("competition \"Olympic Triathlon\";\n"));
}

#[test]
fn simulate_writes_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("race.log");
    let out = easytime(&[
        "simulate",
        path(&models().join("olympic.et")),
        "--seed",
        "7",
        "--competitors",
        "5",
        "--out",
        path(&log),
    ]);
    assert!(out.status.success());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("race.log.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["competitors"], 5);
    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(manifest["events"], lines.lines().filter(|l| !l.starts_with('#')).count());
}

#[test]
fn truncated_log_leaves_bibs_on_course_without_rank() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("olympic.et");
    let log = dir.path().join("race.log");
    assert!(easytime(&["simulate", path(&model), "--seed", "42", "--competitors", "50", "--out", path(&log)])
        .status
        .success());
    let kept: String = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with('#') || l.split(';').nth(2).is_some_and(|mp| mp.parse::<u32>().unwrap() <= 2))
        .map(|l| format!("{l}\n"))
        .collect();
    let truncated = dir.path().join("truncated.log");
    std::fs::write(&truncated, kept).unwrap();
    let results = dir.path().join("results.json");
    let out = easytime(&[
        "replay",
        path(&model),
        "--events",
        path(&truncated),
        "--results-out",
        path(&results),
    ]);
    assert!(out.status.success());
    let table: Value = serde_json::from_str(&std::fs::read_to_string(&results).unwrap()).unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert_eq!(row["status"], "OnCourse");
        assert!(row["rank"].is_null());
        assert!(row["total"].is_null());
    }
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().skip(1).all(|l| l.trim_start().starts_with('-')));
}

#[test]
fn replay_honours_roster_and_debounce_flags() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.et");
    std::fs::write(&model, "competition \"Z\"; agent 1 auto \"a\"; run r laps 2 agent 1;").unwrap();
    let log = dir.path().join("e.log");
    std::fs::write(&log, "0;1;0;1\n60000;1;1;1\n65000;1;1;1\n").unwrap();
    let results = dir.path().join("r.json");
    let run = |extra: &[&str]| {
        let mut args = vec!["replay", path(&model), "--events", path(&log), "--results-out", path(&results)];
        args.extend_from_slice(extra);
        assert!(easytime(&args).status.success());
        serde_json::from_str::<Value>(&std::fs::read_to_string(&results).unwrap()).unwrap()
    };
    let table = run(&[]);
    assert_eq!(table["rows"][0]["status"], "OnCourse");
    let table = run(&["--debounce-ms", "1000"]);
    assert_eq!(table["rows"][0]["total"], 65000);
    let table = run(&["--roster", "1,2"]);
    assert_eq!(table["rows"][1]["status"], "NotStarted");
}
