//! End-to-end checks of the `ponfog` binary: subcommand output, golden
//! files, and exit-code contract (0 ok, 1 validation failure, 2 usage/config
//! error).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ponfog"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn topo_emits_the_golden_document_and_exits_zero() {
    let out = run(&["topo"]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(fixtures().join("topo_default.json")).unwrap();
    assert_eq!(stdout(&out), golden);

    // Byte-identical across runs.
    let again = run(&["topo"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn topo_dot_is_a_digraph() {
    let out = run(&["topo", "--format", "dot"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("digraph pon_fog {"));
    assert!(text.contains("awgr5"));
}

#[test]
fn rwa_prints_a_seven_by_seven_matrix_with_six_wavelengths() {
    let out = run(&["rwa"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with(",G1,G2,G3,G4,G5,G6,OLT\n"));
    assert!(text.lines().last().unwrap().starts_with("OLT,"));
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(stderr.contains("6 wavelengths"));
}

#[test]
fn rwa_verify_accepts_the_bundled_table() {
    let table = fixtures().join("table1.csv");
    let out = run(&["rwa", "--verify", table.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "valid (6 wavelengths)\n");
}

#[test]
fn rwa_verify_lists_violations_and_exits_one() {
    let table = std::fs::read_to_string(fixtures().join("table1.csv")).unwrap();
    let mutated = table.replace("G1,-,L3,L2,L5,L4,L1,L6", "G1,-,L2,L2,L5,L4,L1,L6");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mutated.csv");
    std::fs::write(&path, mutated).unwrap();

    let out = run(&["rwa", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("row-clash"));
    assert!(text.contains("column-clash"));
}

#[test]
fn power_reports_the_savings_anchor() {
    let out = run(&["power"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["savings"], serde_json::json!(0.8056));
    assert_eq!(doc["pon_fog"]["total_w"], serde_json::json!(510.0));
    assert_eq!(doc["spine_leaf"]["total_w"], serde_json::json!(2624.0));
}

#[test]
fn sweep_matches_the_golden_csv_and_writes_gnuplot_data() {
    let dir = tempfile::tempdir().unwrap();
    let dat = dir.path().join("sweep.dat");
    let out = run(&[
        "sweep",
        "--servers",
        "96,192,384,768,1536",
        "--gnuplot",
        dat.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(fixtures().join("sweep_default.csv")).unwrap();
    assert_eq!(stdout(&out), golden);

    let plot = std::fs::read_to_string(&dat).unwrap();
    assert!(plot.starts_with("# n_servers pon_fog_w spine_leaf_w savings\n"));
    assert!(plot.contains("96 510.0 2624.0 0.8056"));
}

#[test]
fn sweep_with_no_servers_prints_just_the_header() {
    let out = run(&["sweep", "--servers", ""]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "n_servers,pon_fog_w,spine_leaf_w,savings\n");
}

#[test]
fn sim_replays_the_walkthrough_with_the_published_wavelengths() {
    let fixtures = fixtures();
    let out = run(&[
        "sim",
        "--workload",
        fixtures.join("workload_g3_g5.csv").to_str().unwrap(),
        "--config",
        fixtures.join("config_table1.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains(r#""kind":"request-sent","flow":1,"wavelength":4,"from":"G3","to":"OLT""#));
    assert!(text.contains(r#""kind":"grant-sent","flow":1,"wavelength":3,"from":"OLT","to":"G3""#));
    assert!(text.contains(r#""kind":"grant-sent","flow":1,"wavelength":1,"from":"OLT","to":"G5""#));
    assert!(text.contains(r#""kind":"data-start","flow":1,"wavelength":6,"from":"G3","to":"G5""#));
    assert!(text.contains(r#""control_messages":3"#));
}

#[test]
fn sim_contention_trace_matches_the_golden_file() {
    let fixtures = fixtures();
    let out = run(&[
        "sim",
        "--workload",
        fixtures.join("workload_contention.csv").to_str().unwrap(),
        "--config",
        fixtures.join("config_table1.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(fixtures.join("golden_contention_trace.jsonl")).unwrap();
    let text = stdout(&out);
    let (trace_part, stats_part) = text.rsplit_once("{\"kind\":\"stats\"").unwrap();
    assert_eq!(trace_part, golden);
    assert!(stats_part.contains(r#""queueing_us":99"#));
}

#[test]
fn sim_stats_only_suppresses_the_trace() {
    let fixtures = fixtures();
    let out = run(&[
        "sim",
        "--workload",
        fixtures.join("workload_g3_g5.csv").to_str().unwrap(),
        "--stats-only",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("{\"kind\":\"stats\""));
}

#[test]
fn sim_with_empty_workload_reports_zero_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(
        &path,
        "flow_id,src_cell,src_group,src_server,dst_cell,dst_group,dst_server,size_bits,arrival_us\n",
    )
    .unwrap();
    let out = run(&["sim", "--workload", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "no trace lines, only stats");
    assert!(text.contains(r#""flows_submitted":0"#));
    assert!(text.contains(r#""control_messages":0"#));
}

#[test]
fn sim_rejects_bad_workload_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "flow_id,src_cell,src_group,src_server,dst_cell,dst_group,dst_server,size_bits,arrival_us\n1,1,9,1,2,3,1,100,0\n",
    )
    .unwrap();
    let out = run(&["sim", "--workload", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(stderr.contains("line 2"));
}

#[test]
fn malformed_config_exits_two_with_a_pointed_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"topology": {"cells": "three"}}"#).unwrap();
    let out = run(&["topo", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(stderr.contains("line 1"));
}

#[test]
fn out_flag_redirects_output_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    let out = run(&["rwa", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with(",G1,G2,G3,G4,G5,G6,OLT\n"));
}

#[test]
fn four_cell_config_yields_128_servers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("four.json");
    std::fs::write(&path, r#"{"topology": {"cells": 4}}"#).unwrap();
    let out = run(&["topo", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let servers: usize = doc["cells"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| c["groups"].as_array().unwrap())
        .map(|g| g["servers"].as_array().unwrap().len())
        .sum();
    assert_eq!(servers, 128);
}
