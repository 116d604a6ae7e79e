use std::path::Path;
use std::process::{Command, Output};

use treelab::EngineReport;

fn treelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn schreier_dot_has_every_vertex() {
    let out = treelab(&["schreier", "--group", "grigorchuk", "--level", "3", "--format", "dot"]);
    assert!(out.status.success());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    let nodes = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
    assert_eq!(nodes, 8);
    assert!(dot.contains("label=\"b\""));
}

#[test]
fn growth_scenario_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "growth.json",
        r#"{"group": "grigorchuk", "task": {"growth": {"ray": "(1)", "radius": 64}}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = treelab(&["run", "--scenario", &sc, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("growth.csv")).unwrap();
    assert!(csv.starts_with("radius,max_ball,min_ball,base_ball\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["fit"]["degree"], 1);
    assert!(report["verdict"].as_str().unwrap().contains("radius 64"));
}

#[test]
fn malformed_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "bad.json", r#"{"group": "grigorchuk", "task": {"growth": {}}}"#);
    let out = treelab(&["run", "--scenario", &sc]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("group spec error: scenario"));
    let out = treelab(&["schreier", "--group", "no_such_group", "--level", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn refutation_exit_code() {
    let out = treelab(&["displace", "build", "--group", "grigorchuk", "--p", "a", "--expect-confirmed"]);
    assert_eq!(out.status.code(), Some(2));
    let out = treelab(&["displace", "build", "--group", "grigorchuk", "--p", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let out = treelab(&[
        "confine",
        "check",
        "--group",
        "grigorchuk",
        "--p",
        "b,c,d",
        "--oracle",
        "rigid_stabilizer:0",
        "--level",
        "3",
        "--expect-confirmed",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn displacement_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("d");
    let out = treelab(&[
        "displace",
        "build",
        "--group",
        "adding_machine",
        "--p",
        "a",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cfg = out_dir.join("config.json");
    let out = treelab(&["displace", "verify", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        "germ.json",
        r#"{"group": "gupta_sidki_3", "task": {"germ": {"ray": "(2)", "radius": 6}}}"#,
    );
    let a = treelab(&["run", "--scenario", &sc]);
    let b = treelab(&["run", "--scenario", &sc]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn engine_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("engine");
    let out = treelab(&[
        "engine",
        "run",
        "--group",
        "grigorchuk",
        "--p",
        "b,c,d",
        "--oracle",
        "point_stabilizer:(1)",
        "--level",
        "8",
        "--expect-confirmed",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("engine.json")).unwrap();
    let report: EngineReport = serde_json::from_str(&text).unwrap();
    assert!(report.all_passed);
    assert_eq!(treelab::export::to_json(&report).unwrap(), text);
}

#[test]
fn bratteli_profile_csv() {
    let out = treelab(&[
        "bratteli",
        "profile",
        "--group",
        "adding_machine",
        "--element",
        "a",
        "--depth",
        "10",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.ends_with(",1")));
}
