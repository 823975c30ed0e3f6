use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conngraph::io;
use serde_json::Value;
use tempfile::TempDir;

fn conngraph(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conngraph"))
        .args(args)
        .arg("--quiet")
        .env("CONNGRAPH_OUT_ROOT", root.join("runs"))
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], root: &Path) -> Output {
    let out = conngraph(args, root);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_path(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

#[test]
fn generate_is_deterministic_and_connected() {
    let tmp = TempDir::new().unwrap();
    let args = |dir: &str| {
        vec![
            "generate", "--n", "40", "--q", "0.1", "--s", "3", "--count", "3", "--burn-in", "5000",
            "--thinning", "500", "--seed", "11", "--out-dir", dir,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let v = args(dir.to_str().unwrap());
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>(), tmp.path());
    }
    let positions = fs::read_to_string(a.join("positions.csv")).unwrap();
    assert_eq!(positions, fs::read_to_string(b.join("positions.csv")).unwrap());
    for k in 0..3 {
        let name = format!("graph-{k:04}.edges");
        let edges = fs::read_to_string(a.join(&name)).unwrap();
        assert_eq!(edges, fs::read_to_string(b.join(&name)).unwrap());
        let g = io::graph_from_files(&edges, &positions).unwrap();
        assert_eq!(g.node_count(), 40);
        assert!(g.is_connected(), "{name} is disconnected");
    }
    let manifest = json(a.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "generate");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["s"], 3.0);
}

#[test]
fn default_run_directory_lives_under_the_output_root() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["generate", "--n", "10", "--q", "0.4", "--s", "1", "--burn-in", "10", "--thinning", "1"], tmp.path());
    let dir = stdout_path(&out);
    assert!(dir.starts_with(tmp.path().join("runs")));
    let name = dir.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("generate-"), "{name}");
    assert!(dir.join("manifest.json").is_file());
}

#[test]
fn chain_trace_has_one_row_per_record_and_stays_connected() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("c");
    ok(
        &[
            "chain", "--n", "30", "--q", "0.2", "--s", "2", "--iterations", "5000", "--stat-cadence", "250",
            "--path-length", "--out-dir", dir.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let text = fs::read_to_string(dir.join("trace.csv")).unwrap();
    let rows = io::parse_trace_csv(&text).unwrap();
    assert_eq!(rows.len(), 5000 / 250 + 1);
    assert!(rows.iter().all(|r| r.connected));
    assert!(rows.iter().all(|r| r.stats.avg_path_length.is_some()));
    assert_eq!(rows.last().unwrap().iteration, 5000);
    let final_graph =
        io::graph_from_files(&fs::read_to_string(dir.join("final.edges")).unwrap(), &fs::read_to_string(dir.join("positions.csv")).unwrap())
            .unwrap();
    assert!(final_graph.is_connected());
    assert_eq!(io::trace_csv_string(&rows, true), text);
}

fn synthetic_trace(path: &Path, degree: impl Fn(f64) -> f64) {
    let mut text = String::from("iteration,avg_degree,avg_edge_length,acc_add,acc_remove,rej_disconnect,rej_ratio,connected\n");
    for k in 0..=200u64 {
        let x = (k * 500) as f64;
        writeln!(text, "{},{},{},0,0,0,0,true", k * 500, degree(x), 0.3 + 0.05 * (-x / 30_000.0).exp()).unwrap();
    }
    fs::write(path, text).unwrap();
}

#[test]
fn diagnose_recovers_a_noise_free_curve() {
    let tmp = TempDir::new().unwrap();
    let trace = tmp.path().join("trace.csv");
    synthetic_trace(&trace, |x| 4.0 - 1.5 * (-x / 12_000.0).exp());
    let out = ok(&["diagnose", trace.to_str().unwrap(), "--out-dir", tmp.path().join("d").to_str().unwrap()], tmp.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let fit = &report["traces"][0]["series"][0]["fit"];
    let close = |v: &Value, want: f64| (v.as_f64().unwrap() - want).abs() <= 0.01 * want.abs();
    assert!(close(&fit["c"], 4.0), "{fit}");
    assert!(close(&fit["a"], -1.5), "{fit}");
    assert!(close(&fit["b"], 1.0 / 12_000.0), "{fit}");
    // Slowest series sets the thinning: 1 / B = 30000 for edge length.
    let thinning = report["recommended_thinning"].as_u64().unwrap();
    assert!((29_700..=30_300).contains(&thinning), "{thinning}");
    let burn_in = report["recommended_burn_in"].as_f64().unwrap();
    let want = (0.05 / (1e-3 * 0.3f64)).ln() * 30_000.0;
    assert!((burn_in - want).abs() <= 0.01 * want, "{burn_in} vs {want}");
    assert_eq!(json(tmp.path().join("d/report.json")), report);
}

#[test]
fn diagnose_flags_a_flat_series() {
    let tmp = TempDir::new().unwrap();
    let trace = tmp.path().join("trace.csv");
    synthetic_trace(&trace, |_| 2.5);
    let out = ok(&["diagnose", trace.to_str().unwrap(), "--out-dir", tmp.path().join("d").to_str().unwrap()], tmp.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let degree = &report["traces"][0]["series"][0];
    assert_eq!(degree["statistic"], "avg_degree");
    assert!(degree["k_conv"].is_null());
    assert!(degree["warning"].as_str().unwrap().contains("unidentifiable"), "{degree}");
    assert!(!report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn generate_reads_burn_in_from_a_diagnose_report() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("report.json");
    fs::write(&report, r#"{"recommended_burn_in": 1234, "recommended_thinning": 56}"#).unwrap();
    let dir = tmp.path().join("g");
    ok(
        &["generate", "--n", "12", "--q", "0.3", "--s", "1", "--from-diagnose", report.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()],
        tmp.path(),
    );
    let manifest = json(dir.join("manifest.json"));
    assert_eq!(manifest["config"]["burn_in"], 1234);
    assert_eq!(manifest["config"]["thinning"], 56);
}

#[test]
fn diagnose_on_a_missing_file_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let out = conngraph(&["diagnose", tmp.path().join("nope.csv").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_proportion_grows_with_q_for_ger() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    ok(
        &[
            "sweep", "--n", "40", "--samples", "200", "--s-values", "0", "--q-values", "0.05,0.1,0.2,0.4",
            "--out-dir", dir.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let sidecar = json(dir.join("sweep.json"));
    let props: Vec<f64> = sidecar["points"].as_array().unwrap().iter().map(|p| p["proportion"].as_f64().unwrap()).collect();
    assert_eq!(props.len(), 4);
    assert!(props.windows(2).all(|w| w[0] <= w[1]), "{props:?}");
    assert_eq!(sidecar["trend"]["over"], "q");
    assert!(sidecar["trend"]["z"].as_f64().unwrap() > 3.0);
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sweep_needs_exactly_one_grid_mode() {
    let tmp = TempDir::new().unwrap();
    let out = conngraph(&["sweep", "--n", "20"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = conngraph(&["sweep", "--q-values", "0.1", "--mean-degree", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synthetic_scaling_recovers_exponent_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("sc");
    ok(&["scaling", "--synthetic", "--out-dir", dir.to_str().unwrap()], tmp.path());
    let report = json(dir.join("scaling.json"));
    assert_eq!(report["synthetic"], true);
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    for r in results {
        let e = r["exponent"].as_f64().unwrap();
        assert!((e - 2.0).abs() < 1e-3, "{e}");
    }
    assert!(dir.join("fits.csv").is_file());
    assert!(dir.join("mean_traces.csv").is_file());
}

#[test]
fn validate_passes_on_four_nodes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("v");
    let out = ok(&["validate", "--n", "4", "--samples", "40000", "--seed", "3", "--out-dir", dir.to_str().unwrap()], tmp.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["tv_mcmc_exact"].as_f64().unwrap() <= 0.02);
    let oracle = io::parse_oracle_csv(&fs::read_to_string(dir.join("oracle.csv")).unwrap(), 4).unwrap();
    assert_eq!(oracle.masses.len(), report["connected_graphs"].as_u64().unwrap() as usize);
}

#[test]
fn validate_on_two_nodes_is_exact() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["validate", "--n", "2", "--samples", "500", "--out-dir", tmp.path().join("v").to_str().unwrap()], tmp.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["connected_graphs"], 1);
    assert_eq!(report["tv_mcmc_exact"], 0.0);
}

#[test]
fn validate_catches_swapped_ratios() {
    let tmp = TempDir::new().unwrap();
    let out = conngraph(&["validate", "--n", "4", "--samples", "20000", "--swap-ratios", "--out-dir", tmp.path().join("v").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
    assert!(tmp.path().join("v/report.json").is_file());
}

#[test]
fn validate_accepts_fixed_positions() {
    let tmp = TempDir::new().unwrap();
    let positions = tmp.path().join("pos.csv");
    fs::write(&positions, "node,x,y\n0,0.1,0.1\n1,0.9,0.1\n2,0.5,0.9\n").unwrap();
    let dir = tmp.path().join("v");
    let out = ok(
        &["validate", "--positions", positions.to_str().unwrap(), "--samples", "20000", "--out-dir", dir.to_str().unwrap()],
        tmp.path(),
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 3);
    assert_eq!(report["connected_graphs"], 4);
    let written = io::parse_positions_csv(&fs::read_to_string(dir.join("positions.csv")).unwrap()).unwrap();
    assert_eq!(written, io::parse_positions_csv(&fs::read_to_string(&positions).unwrap()).unwrap());
}

#[test]
fn validate_rejects_graphs_too_large_to_enumerate() {
    let tmp = TempDir::new().unwrap();
    let out = conngraph(&["validate", "--n", "7"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 25, "q": 0.3, "s": 2.0, "iterations": 800, "stat_cadence": 100}"#).unwrap();
    let dir = tmp.path().join("c");
    ok(
        &["chain", "--config", cfg.to_str().unwrap(), "--q", "0.15", "--out-dir", dir.to_str().unwrap()],
        tmp.path(),
    );
    let config = &json(dir.join("manifest.json"))["config"];
    assert_eq!(config["n"], 25);
    assert_eq!(config["q"], 0.15);
    assert_eq!(config["iterations"], 800);
    assert_eq!(config["model"], "waxman");
    let rows = io::parse_trace_csv(&fs::read_to_string(dir.join("trace.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"iteratons": 800}"#).unwrap();
    let out = conngraph(&["chain", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteratons"));
}

#[test]
fn waxman_needs_an_explicit_decay() {
    let tmp = TempDir::new().unwrap();
    let out = conngraph(&["chain", "--n", "10", "--q", "0.3"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`s`"));
    ok(&["chain", "--model", "ger", "--n", "10", "--q", "0.3", "--iterations", "100", "--out-dir", tmp.path().join("g").to_str().unwrap()], tmp.path());
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(conngraph(&["frobnicate"], tmp.path()).status.code(), Some(1));
    assert_eq!(conngraph(&["chain", "--q", "0"], tmp.path()).status.code(), Some(1));
    assert_eq!(conngraph(&["chain", "--model", "erdos"], tmp.path()).status.code(), Some(1));
    assert_eq!(conngraph(&["generate", "--n", "10"], tmp.path()).status.code(), Some(1));
    assert_eq!(Command::new(env!("CARGO_BIN_EXE_conngraph")).arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn refuses_to_write_into_a_non_empty_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("busy");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("keep.txt"), "precious").unwrap();
    let out = conngraph(
        &["generate", "--n", "10", "--q", "0.4", "--s", "1", "--burn-in", "10", "--thinning", "1", "--out-dir", dir.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fs::read_to_string(dir.join("keep.txt")).unwrap(), "precious");
    assert!(!dir.join("manifest.json").exists());
}
