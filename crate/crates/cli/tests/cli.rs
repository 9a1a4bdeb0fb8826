//! End-to-end command behaviour: exit codes, JSON shapes, family round-trips
//! through files, and the scan surface.

use std::process::{Command, Output};

use serde_json::Value;

fn qboson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qboson"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn verify_passes_for_seeded_family() {
    let out = qboson(&[
        "verify", "--epsilon", "+1", "--m", "2", "--da", "4", "--db", "4", "--modes", "2",
        "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["realization"]["span_dim"], 8);
    assert_eq!(report["realization"]["nilpotency_order"][0], 3);
}

#[test]
fn verify_rejects_oversized_blocks() {
    let out = qboson(&["verify", "--m", "3", "--da", "2", "--db", "4", "--modes", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_requires_dimensions() {
    let out = qboson(&["verify", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = qboson(&["single", "--m", "3", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tampered_family_fails_with_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.json");
    let out = qboson(&[
        "verify", "--epsilon", "+1", "--m", "2", "--da", "4", "--db", "4", "--modes", "2",
        "--seed", "7", "--dump-family",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    // loading the dumped family verbatim still verifies
    let out = qboson(&["verify", "--family", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // corrupt one matrix entry
    let mut family: Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    family["matrices"][0]["re"][0][0] = Value::from(0.9);
    std::fs::write(&path, serde_json::to_string(&family).unwrap()).unwrap();

    let out = qboson(&["verify", "--family", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(false));
    let failed = report["family_validation"]["failed_checks"]
        .as_array()
        .unwrap();
    assert!(!failed.is_empty(), "no failing check named");
}

#[test]
fn single_matches_closed_forms() {
    let out = qboson(&["single", "--m", "3", "--bits"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let measures = &report["measures"];
    assert_eq!(measures["rank"], 3);
    assert!((measures["schmidt_number"].as_f64().unwrap() - 3.0).abs() < 1e-10);
    assert!((measures["entropy_nats"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-10);
    assert!((measures["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let bits = measures["entropy_bits"].as_f64().unwrap();
    assert!((bits - 3f64.log2()).abs() < 1e-10);
}

#[test]
fn coherent_with_oracle_agrees() {
    let out = qboson(&["coherent", "--m", "2", "--amp", "0.5", "--with-oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let dk = report["delta"]["schmidt_number"].as_f64().unwrap();
    let ds = report["delta"]["entropy_nats"].as_f64().unwrap();
    assert!(dk < 1e-8, "K delta {dk}");
    assert!(ds < 1e-8, "S delta {ds}");
}

#[test]
fn state_command_round_trips_wavefunction() {
    // equal superposition of two singly occupied modes, m = 2
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wf.json");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let wavefunction = serde_json::json!({
        "epsilon": 1,
        "m": 2,
        "modes": ["g1", "g2"],
        "amplitudes": [
            { "config": { "g1": 1 }, "re": r, "im": 0.0 },
            { "config": { "g2": 1 }, "re": r, "im": 0.0 },
        ],
    });
    std::fs::write(&path, wavefunction.to_string()).unwrap();

    let out = qboson(&["state", "--input", path.to_str().unwrap(), "--with-oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert!((report["measures"]["schmidt_number"].as_f64().unwrap() - 4.0).abs() < 1e-8);
    assert!(
        (report["measures"]["entropy_nats"].as_f64().unwrap() - 4f64.ln()).abs() < 1e-8
    );
    assert!(report["delta"]["schmidt_number"].as_f64().unwrap() < 1e-8);

    // unnormalized input is a check failure unless --renormalize is given
    let bad = serde_json::json!({
        "epsilon": 1,
        "m": 2,
        "modes": ["g1"],
        "amplitudes": [ { "config": { "g1": 1 }, "re": 0.5, "im": 0.0 } ],
    });
    std::fs::write(&path, bad.to_string()).unwrap();
    let out = qboson(&["state", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = qboson(&["state", "--input", path.to_str().unwrap(), "--renormalize"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn scan_single_entropy_is_log_m() {
    let out = qboson(&["scan", "--target", "single", "--m-range", "1:10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let s_col = header.iter().position(|&h| h == "entropy_nats").unwrap();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let m = (i + 1) as f64;
        let s: f64 = fields[s_col].parse().unwrap();
        assert!((s - m.ln()).abs() < 1e-10, "m={m}: S={s}");
    }
}

#[test]
fn scan_empty_grid_is_header_only() {
    let out = qboson(&["scan", "--target", "fock", "--m-range", "5:4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("epsilon,m,occupation"));
}

#[test]
fn scan_records_row_errors() {
    // fermionic occupation above m fails per-row with exit 1
    let out = qboson(&[
        "scan", "--target", "fock", "--epsilon", "+1", "--m", "2", "--occupation-range", "1:3",
        "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].contains("nilpotent"));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let on_stdout = qboson(&["fock", "--epsilon", "-1", "--m", "3", "--occupation", "2"]);
    let to_file = qboson(&[
        "fock", "--epsilon", "-1", "--m", "3", "--occupation", "2", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, on_stdout.stdout);
}

#[test]
fn oracle_single_matches_uniform_measures() {
    for m in ["1", "2", "4"] {
        let out = qboson(&["oracle", "--kind", "single", "--m", m, "--seed", "9"]);
        assert_eq!(out.status.code(), Some(0));
        let report = stdout_json(&out);
        assert_eq!(report["pass"], Value::Bool(true));
    }
}
