use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use darcyflow::config::load_config;
use darcyflow::discretization::residual_history;
use darcyflow::io::tensor;
use serde_json::Value;

const SMALL: &str = "[grid]\nnx = 8\nny = 8\nnz = 3\n[schedule]\nn_steps = 3\n";

fn darcyflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darcyflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn error_line(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {err:?}");
    serde_json::from_str(lines[0]).expect("error line is JSON")
}

fn setup(text: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

#[test]
fn residual_of_own_simulation_is_below_tolerance() {
    let dir = setup(SMALL);
    let d = dir.path();
    darcyflow(d, &["--config", "run.toml", "--out", "sim", "simulate"]);
    let report = stdout_json(&darcyflow(d, &["--config", "run.toml", "residual", "--series", "sim"]));
    let loss = report["physics_loss"].as_f64().unwrap();
    assert!(loss <= 1e-12, "loss {loss}");
    assert_eq!(report["steps"].as_array().unwrap().len(), 3);
}

#[test]
fn residual_tensors_match_library() {
    let dir = setup(SMALL);
    let d = dir.path();
    assert!(darcyflow(d, &["--config", "run.toml", "--out", "sim", "simulate"]).status.success());
    let out = darcyflow(d, &["--config", "run.toml", "--out", "res", "residual", "--series", "sim", "--residual-out"]);
    stdout_json(&out);

    let loaded = load_config(&d.join("run.toml"), None).unwrap();
    let series = tensor::read_series(&d.join("sim")).unwrap();
    let history = residual_history(&series, &loaded.sim).unwrap();
    let (water, header) = tensor::read_tensor(&d.join("res/residual_water.bin")).unwrap();
    assert_eq!(header.dims, vec![3, 3, 8, 8]);
    assert_eq!(header.units, "kg/(m3 s)");
    let expected: Vec<u64> = history.iter().flat_map(|h| h[0].values.iter().map(|v| v.to_bits())).collect();
    assert_eq!(water.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), expected);
}

#[test]
fn provenance_alone_reproduces_the_run() {
    let dir = setup(SMALL);
    let d = dir.path();
    assert!(darcyflow(d, &["--config", "run.toml", "--seed", "9", "--out", "a", "simulate"]).status.success());
    let prov: Value = serde_json::from_slice(&fs::read(d.join("a/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 9);
    fs::write(d.join("echo.toml"), prov["config_toml"].as_str().unwrap()).unwrap();
    assert!(darcyflow(d, &["--config", "echo.toml", "--out", "b", "simulate"]).status.success());
    for f in ["pressure.bin", "sat_w.bin", "times.bin", "perm.bin"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn metrics_are_symmetric() {
    let dir = setup(SMALL);
    let d = dir.path();
    darcyflow(d, &["--config", "run.toml", "--seed", "1", "--out", "s1", "simulate"]);
    darcyflow(d, &["--config", "run.toml", "--seed", "2", "--out", "s2", "simulate"]);
    let ab = stdout_json(&darcyflow(d, &["metrics", "--a", "s1", "--b", "s2"]));
    let ba = stdout_json(&darcyflow(d, &["metrics", "--a", "s2", "--b", "s1"]));
    assert_eq!(ab["pressure"], ba["pressure"]);
    assert_eq!(ab["sat_w"], ba["sat_w"]);
    assert!(ab["pressure"]["mae"].as_f64().unwrap() > 0.0);
}

#[test]
fn wells_csv_has_contract_header() {
    let dir = setup(SMALL);
    let d = dir.path();
    darcyflow(d, &["--config", "run.toml", "--out", "sim", "simulate"]);
    let out = darcyflow(d, &["--config", "run.toml", "--out", "w", "wells", "--series", "sim"]);
    let summary = stdout_json(&out);
    // 5 wells x 2 phases x 4 slices
    assert_eq!(summary["rows"], 40);
    let text = fs::read_to_string(d.join("w/production.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "well,phase,step,time_days,rate_kg_per_s,cumulative_kg");

    let curves = stdout_json(&darcyflow(d, &["--out", "plots", "plot", "--production", "w/production.csv"]));
    assert_eq!(curves["curves"].as_array().unwrap().len(), 5);
}

#[test]
fn heatmap_is_one_pixel_per_cell() {
    let dir = setup("[grid]\nnx = 40\nny = 40\nnz = 1\n[schedule]\nn_steps = 1\n");
    let d = dir.path();
    assert!(darcyflow(d, &["--config", "run.toml", "--out", "sim", "simulate"]).status.success());
    let out = stdout_json(&darcyflow(d, &["--out", "img", "plot", "--series", "sim", "--step", "1"]));
    assert_eq!((out["info"]["width"].as_u64(), out["info"]["height"].as_u64()), (Some(40), Some(40)));
    let bytes = fs::read(d.join("img/pressure_t1_k0.ppm")).unwrap();
    assert!(bytes.starts_with(b"P6\n40 40\n255\n"));
    assert_eq!(bytes.len(), b"P6\n40 40\n255\n".len() + 40 * 40 * 3);
}

#[test]
fn generate_is_deterministic() {
    let dir = setup(SMALL);
    let d = dir.path();
    let a = stdout_json(&darcyflow(d, &["--config", "run.toml", "--seed", "4", "--out", "g1", "generate", "--count", "2"]));
    stdout_json(&darcyflow(d, &["--config", "run.toml", "--seed", "4", "--out", "g2", "generate", "--count", "2"]));
    assert_eq!(a["realizations"][1]["seed"], 5);
    for f in ["seed_4/perm.bin", "seed_5/poro.bin"] {
        assert_eq!(fs::read(d.join("g1").join(f)).unwrap(), fs::read(d.join("g2").join(f)).unwrap());
    }
}

#[test]
fn errors_are_single_json_lines() {
    let dir = setup(SMALL);
    let d = dir.path();

    let missing = darcyflow(d, &["residual", "--series", "nowhere"]);
    assert_eq!(missing.status.code(), Some(1));
    let e = error_line(&missing);
    assert_eq!(e["error"]["kind"], "io");
    assert!(e["error"]["message"].as_str().unwrap().contains("nowhere"));

    darcyflow(d, &["--config", "run.toml", "--out", "sim", "simulate"]);
    let p = d.join("sim/pressure.bin");
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
    let truncated = darcyflow(d, &["--config", "run.toml", "residual", "--series", "sim"]);
    assert_eq!(truncated.status.code(), Some(1));
    let e = error_line(&truncated);
    assert_eq!(e["error"]["kind"], "format");
    let msg = e["error"]["message"].as_str().unwrap();
    assert!(msg.contains(&format!("expected {} bytes", bytes.len())), "{msg}");

    fs::write(d.join("bad.toml"), "[grid]\nnx = 0\n").unwrap();
    let invalid = darcyflow(d, &["--config", "bad.toml", "--out", "x", "simulate"]);
    assert_eq!(invalid.status.code(), Some(1));
    assert_eq!(error_line(&invalid)["error"]["kind"], "config");

    let usage = darcyflow(d, &["simulate", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_line(&usage)["error"]["kind"], "usage");

    let no_out = darcyflow(d, &["simulate"]);
    assert_eq!(no_out.status.code(), Some(1));
    assert_eq!(error_line(&no_out)["error"]["kind"], "invalid-argument");
}
