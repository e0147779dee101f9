// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use axomap::formats::{read_dataset, read_netlist};
use axomap::report::write_correlation_csv;
use axomap_core::charac::Metric;
use axomap_core::stats::correlation_report;

fn axomap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axomap")).args(args).output().expect("spawn axomap")
}

fn ok(args: &[&str]) {
    let out = axomap(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_writes_expected_operators() {
    let dir = tempfile::tempdir().unwrap();
    let mul = dir.path().join("mul8.json");
    ok(&["gen", "--mul", "8", "--signed", "-o", p(&mul)]);
    assert_eq!(read_netlist(&mul).unwrap().removable_count(), 36);
    let add = dir.path().join("add3.json");
    ok(&["gen", "--add", "3", "-o", p(&add)]);
    assert_eq!(read_netlist(&add).unwrap().removable_count(), 3);
}

#[test]
fn malformed_width_fails_with_message() {
    for args in [&["gen", "--mul", "eight"][..], &["gen", "--mul", "0"], &["gen", "--mul", "4", "--add", "3"]] {
        let out = axomap(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn json_status_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let out = axomap(&["--json", "--out-dir", p(dir.path()), "gen", "--add", "2"]);
    assert!(out.status.success());
    let status: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(status["status"], "ok");
    assert_eq!(status["code"], 0);
    let out = axomap(&["--json", "analyze", "--dataset", p(&dir.path().join("missing.csv"))]);
    let status: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(status["status"], "error");
    assert_eq!(out.status.code(), Some(status["code"].as_i64().unwrap() as i32));
}

#[test]
fn characterize_full_corners_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let nl = dir.path().join("mul4.json");
    ok(&["gen", "--mul", "4", "--signed", "-o", p(&nl)]);

    let full = dir.path().join("full.csv");
    ok(&["--seed", "5", "characterize", "--netlist", p(&nl), "-o", p(&full)]);
    assert_eq!(read_dataset(&full, "m", 10).unwrap().len(), 1024);

    let corners = dir.path().join("corners.csv");
    ok(&["characterize", "--netlist", p(&nl), "--n-random", "0", "--patterns", "none", "-o", p(&corners)]);
    let ds = read_dataset(&corners, "m", 10).unwrap();
    let mut configs: Vec<String> = ds.configs().map(|c| c.to_bitstring()).collect();
    configs.sort();
    assert_eq!(configs, ["0000000000", "1111111111"]);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        ok(&["--seed", "9", "characterize", "--netlist", p(&nl), "--n-random", "100", "--patterns", "none", "-o", p(path)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn analyze_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let nl = dir.path().join("mul4.json");
    let data = dir.path().join("data.csv");
    ok(&["gen", "--mul", "4", "--signed", "-o", p(&nl)]);
    ok(&["characterize", "--netlist", p(&nl), "-o", p(&data)]);
    let out = dir.path().join("analysis");
    ok(&["--out-dir", p(&out), "analyze", "--dataset", p(&data), "--metrics", "pdplut"]);

    let ds = read_dataset(&data, "data", 10).unwrap();
    let rep = correlation_report(&ds, Metric::Pdplut).unwrap();
    assert_eq!(rep.ranking.len(), 45);
    let expected = dir.path().join("expected.csv");
    write_correlation_csv(&expected, &rep).unwrap();
    assert_eq!(fs::read(out.join("correlation_pdplut.csv")).unwrap(), fs::read(&expected).unwrap());
    for i in 0..10 {
        for j in 0..10 {
            assert_eq!(rep.get(i, j).to_bits(), rep.get(j, i).to_bits());
        }
    }
    assert!(fs::read_to_string(out.join("heatmap_pdplut.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn fit_and_map_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let nl = dir.path().join("mul4.json");
    let data = dir.path().join("data.csv");
    ok(&["gen", "--mul", "4", "--signed", "-o", p(&nl)]);
    ok(&["characterize", "--netlist", p(&nl), "-o", p(&data)]);
    let out = dir.path().join("o");
    ok(&["--out-dir", p(&out), "fit", "--dataset", p(&data), "--kinds", "poly,tree-ensemble"]);
    assert!(out.join("model_pdplut_poly.json").is_file());
    assert!(out.join("model_avg_abs_rel_err_tree_ensemble.json").is_file());
    assert_eq!(fs::read_to_string(out.join("fit_report.csv")).unwrap().lines().count(), 5);
    ok(&["--out-dir", p(&out), "map", "--dataset", p(&data), "--const-sf", "0.8"]);
    let pool: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("pool_sf0.8.json")).unwrap()).unwrap();
    assert!(pool.is_object());
    assert!(!fs::read_to_string(out.join("pool_sf0.8.txt")).unwrap().is_empty());
}

#[test]
fn dse_from_an_existing_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let nl = dir.path().join("mul4.json");
    let data = dir.path().join("data.csv");
    ok(&["gen", "--mul", "4", "--signed", "-o", p(&nl)]);
    ok(&["characterize", "--netlist", p(&nl), "-o", p(&data)]);
    let out = dir.path().join("dse");
    ok(&[
        "--out-dir",
        p(&out),
        "dse",
        "--netlist",
        p(&nl),
        "--dataset",
        p(&data),
        "--const-sf",
        "0.8",
        "--n-seeds",
        "2",
        "--pop-size",
        "8",
        "--max-generations",
        "4",
        "--schedule",
        "0,5",
    ]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(out.join("dse_sf0.8").join("hv_trajectory.csv").is_file());
}

#[test]
fn mismatched_dataset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let nl = dir.path().join("add3.json");
    let mul = dir.path().join("mul4.json");
    let data = dir.path().join("data.csv");
    ok(&["gen", "--add", "3", "-o", p(&nl)]);
    ok(&["gen", "--mul", "4", "-o", p(&mul)]);
    ok(&["characterize", "--netlist", p(&mul), "--n-random", "20", "-o", p(&data)]);
    let out = axomap(&["--out-dir", p(dir.path()), "dse", "--netlist", p(&nl), "--dataset", p(&data)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn app_search_writes_bounded_hypervolumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("app");
    ok(&[
        "--out-dir",
        p(&out),
        "app",
        "--kernel",
        "gemv_classify",
        "--n-random",
        "150",
        "--patterns",
        "none",
        "--const-sf",
        "0.8",
        "--n-seeds",
        "2",
        "--pop-size",
        "16",
        "--max-generations",
        "5",
        "--schedule",
        "0,18",
        "--solver",
        "heuristic",
    ]);
    assert!(out.join("app_dataset.csv").is_file());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for line in summary.lines().skip(1) {
        for hv in line.split(',').skip(2) {
            let hv: f64 = hv.parse().unwrap();
            assert!((0.0..=1.0).contains(&hv), "{line}");
        }
    }
}
