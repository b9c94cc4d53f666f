//! End-to-end tests of the command-line surface: exit codes, file formats,
//! sidecars, determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_slabrad")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("slabrad-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

const N2_CONFIG: &str = r#"{
  "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001 },
  "state": { "type": "coherent", "basis": "layer", "amplitudes": [[0.7, 0.0], [0.7, 0.0]] },
  "detector": { "z": 2.0, "t_start": 0.0, "t_stop": 30000.0, "n_samples": 16, "side": "positive" },
  "oracle": { "enabled": false }
}"#;

#[test]
fn modes_double_layer_four_certified_rows() {
    let dir = scratch_dir("modes2");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 5, "header + 4 rows: {text}");
    assert!(lines[0].starts_with("label,omega_m,gamma_m,paired"));
    for row in &lines[1..] {
        assert!(row.contains("true"), "pairing flag: {row}");
    }
}

#[test]
fn modes_triple_layer_six_rows() {
    let dir = scratch_dir("modes3");
    let cfg = write_config(
        &dir,
        "n3.json",
        r#"{
          "params": { "n_layers": 3, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [0, 1, 0] },
          "oracle": { "enabled": false }
        }"#,
    );
    let out = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim().lines().count(), 7);
}

#[test]
fn modes_monolayer_half_rate() {
    let dir = scratch_dir("modes1");
    let cfg = write_config(
        &dir,
        "n1.json",
        r#"{
          "params": { "n_layers": 1, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1] },
          "oracle": { "enabled": false }
        }"#,
    );
    let out = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 3);
    let gamma: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((gamma / 5e-5 - 1.0).abs() < 1e-3, "Gamma = {gamma}");
}

#[test]
fn field_fock_state_zero_envelope() {
    let dir = scratch_dir("fockfield");
    let cfg = write_config(
        &dir,
        "fock.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 1] },
          "detector": { "z": 2.0, "t_start": 0.0, "t_stop": 20000.0, "n_samples": 9, "side": "positive" },
          "oracle": { "enabled": false }
        }"#,
    );
    let out = run(&["field", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.trim().lines().skip(1) {
        let cells: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cells[1], 0.0);
        assert_eq!(cells[2], 0.0);
    }
}

#[test]
fn field_precone_rows_exactly_zero() {
    let dir = scratch_dir("precone");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out = run(&["field", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut saw_pre = false;
    let mut saw_post = false;
    for row in text.trim().lines().skip(1) {
        let cells: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        if cells[0] < 2.0 {
            saw_pre = true;
            assert_eq!(cells[1], 0.0, "pre-cone row {row}");
            assert_eq!(cells[2], 0.0);
        } else if cells[1].abs() + cells[2].abs() > 0.0 {
            saw_post = true;
        }
    }
    assert!(saw_pre && saw_post);
}

#[test]
fn flux_components_and_sidecar() {
    let dir = scratch_dir("flux");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out_path = dir.join("flux.csv");
    let out = run(&[
        "flux",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("t,flux_total,flux_comp_1,flux_comp_2,flux_comp_3"));
    let side = std::fs::read_to_string(dir.join("flux.csv.meta.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&side).unwrap();
    assert!(meta["config_hash"].is_string());
    assert_eq!(meta["extra"]["components"].as_array().unwrap().len(), 3);
    // decay rates of the three pair components
    let rates: Vec<f64> = meta["extra"]["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["decay_rate"].as_f64().unwrap())
        .collect();
    assert!((rates[0] / 2e-4 - 1.0).abs() < 1e-2);
}

#[test]
fn identical_config_byte_identical_output() {
    let dir = scratch_dir("determinism");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let a = run(&["field", "--config", cfg.to_str().unwrap()]);
    let b = run(&["field", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["modes", "--config", cfg.to_str().unwrap()]);
    let d = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = scratch_dir("badkey");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001, "bogus": 1 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] }
        }"#,
    );
    let out = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detector_inside_slab_is_config_error() {
    let dir = scratch_dir("inslab");
    let cfg = write_config(
        &dir,
        "inside.json",
        r#"{
          "params": { "n_layers": 3, "delta0": 0.8, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0, 0] },
          "detector": { "z": 0.5, "t_start": 0.0, "t_stop": 100.0, "n_samples": 4, "side": "positive" },
          "oracle": { "enabled": false }
        }"#,
    );
    let out = run(&["field", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_only_skips_certification() {
    let dir = scratch_dir("seeds");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out = run(&["modes", "--config", cfg.to_str().unwrap(), "--seed-only"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim().lines().count(), 5);
    // no certification boxes in seed-only mode
    assert!(text.lines().nth(1).unwrap().contains("null"));
}

#[test]
fn json_format_emits_rows_and_meta() {
    let dir = scratch_dir("json");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out = run(&["modes", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert_eq!(doc["meta"]["n_layers"], 2);
    assert!(doc["meta"]["units"]["flux_unit_definition"].as_str().unwrap().contains("eta"));
}

#[test]
fn sweep_n_reproduces_superradiance_ladder() {
    let dir = scratch_dir("sweep");
    let cfg = write_config(
        &dir,
        "sweep.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] },
          "oracle": { "enabled": false },
          "sweep": { "kind": "n", "values": [1, 2, 3] }
        }"#,
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ratios: Vec<f64> = text
        .trim()
        .lines()
        .skip(1)
        .map(|row| row.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for (i, r) in ratios.iter().enumerate() {
        assert!((r / (i + 1) as f64 - 1.0).abs() < 1e-2, "ratio {r} at N={}", i + 1);
    }
}

#[test]
fn sweep_delta0_quadratic_subradiant_scaling() {
    let dir = scratch_dir("sweepd");
    let cfg = write_config(
        &dir,
        "sweepd.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] },
          "oracle": { "enabled": false },
          "sweep": { "kind": "delta0", "values": [0.005, 0.01, 0.02, 0.04] }
        }"#,
    );
    let out_path = dir.join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.csv.meta.json")).unwrap())
            .unwrap();
    let slope = meta["extra"]["subradiant_log_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() <= 0.05, "slope {slope}");
}

#[test]
fn sweep_g_linear_superradiant_scaling() {
    let dir = scratch_dir("sweepg");
    let cfg = write_config(
        &dir,
        "sweepg.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.01, "g": 0.0001 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] },
          "oracle": { "enabled": false },
          "sweep": { "kind": "g", "values": [0.00005, 0.0001, 0.0002, 0.0004] }
        }"#,
    );
    let out_path = dir.join("sweepg.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweepg.csv.meta.json")).unwrap())
            .unwrap();
    let slope = meta["extra"]["superradiant_log_slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() <= 0.02, "slope {slope}");
}

#[test]
fn validate_passes_without_oracle() {
    let dir = scratch_dir("validate");
    let cfg = write_config(&dir, "n2.json", N2_CONFIG);
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_pass"], true);
}

#[test]
fn validate_rejects_coarse_bath_with_guidance() {
    let dir = scratch_dir("coarse");
    let cfg = write_config(
        &dir,
        "coarse.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.05, "g": 0.02 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] },
          "oracle": { "dt": 0.5 }
        }"#,
    );
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dt"), "message should name the violated knob: {err}");
}

#[test]
fn missing_config_flag_is_config_error() {
    let out = run(&["modes"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_failure_exits_one() {
    // Far outside the perturbative regime the seed-agreement checks fail;
    // the report is still written and the exit code distinguishes a failed
    // check from a config error.
    let dir = scratch_dir("valfail");
    let cfg = write_config(
        &dir,
        "loose.json",
        r#"{
          "params": { "n_layers": 2, "delta0": 0.4, "g": 0.04 },
          "state": { "type": "fock", "basis": "k", "occupations": [1, 0] },
          "oracle": { "enabled": false }
        }"#,
    );
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_pass"], false);
}
