use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbnorm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cbnorm")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn c(re: f64, im: f64) -> Value {
    json!([re, im])
}

fn identity(n: usize) -> Value {
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()))
            .collect(),
    )
}

fn phase(theta: f64) -> Value {
    json!([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(theta.cos(), theta.sin())]])
}

fn kraus_problem(n: usize, ops: Vec<Value>) -> Value {
    json!({"version": "1", "kind": "kraus", "dim_in": n, "dim_out": n, "payload": {"kraus": ops}})
}

fn unitary_pair(theta: f64) -> Value {
    json!({
        "version": "1", "kind": "channel_pair", "dim_in": 2, "dim_out": 2,
        "payload": {
            "first": {"kind": "kraus", "payload": {"kraus": [identity(2)]}},
            "second": {"kind": "kraus", "payload": {"kraus": [phase(theta)]}}
        }
    })
}

fn transpose_choi() -> Value {
    // J[(a,i),(b,j)] = δ_aj δ_ib for the transpose on C^2: the swap operator.
    let mut rows = vec![vec![c(0.0, 0.0); 4]; 4];
    for a in 0..2 {
        for i in 0..2 {
            rows[a * 2 + i][i * 2 + a] = c(1.0, 0.0);
        }
    }
    json!({"version": "1", "kind": "choi", "dim_in": 2, "dim_out": 2, "payload": {"choi": rows}})
}

#[test]
fn identity_channel_has_unit_diamond_norm() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "id.json", &kraus_problem(2, vec![identity(2)]));
    let out = run(&["compute", "--input", s(&input), "--norm", "diamond"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["method"], "general_sdp");
    assert!(v.get("wall_time_seconds").is_none());
}

#[test]
fn identical_channels_are_at_distance_zero() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "same.json", &unitary_pair(0.0));
    let out = run(&["compute", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["method"], "channel_diff_sdp");
    assert!(v["value"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn quarter_turn_phase_gate_distance() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "phase.json", &unitary_pair(std::f64::consts::FRAC_PI_2));
    for method in ["auto", "general", "channel-diff"] {
        let out = run(&["compute", "--input", s(&input), "--method", method]);
        assert_eq!(out.status.code(), Some(0));
        let v = stdout_json(&out)["value"].as_f64().unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-5, "{method}: {v}");
    }
}

#[test]
fn compute_then_certify_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", &transpose_choi());
    let cert = dir.path().join("cert.json");
    let result = dir.path().join("result.json");
    for norm in ["diamond", "cb-spectral"] {
        let out = run(&[
            "compute",
            "--input",
            s(&input),
            "--norm",
            norm,
            "--certificate",
            s(&cert),
            "--output",
            s(&result),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
        assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
        for source in [&cert, &result] {
            let out = run(&[
                "certify",
                "--input",
                s(&input),
                "--certificate",
                s(source),
                "--tol",
                "1e-8",
            ]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
            let report = stdout_json(&out);
            assert_eq!(report["valid"], true);
            assert!(report["lower_bound"].as_f64().unwrap() <= report["upper_bound"].as_f64().unwrap());
        }
    }
}

#[test]
fn corrupted_certificate_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", &transpose_choi());
    let cert = dir.path().join("cert.json");
    let out = run(&["compute", "--input", s(&input), "--certificate", s(&cert)]);
    assert_eq!(out.status.code(), Some(0));
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    v["z"][0][0] = c(-1.0, 0.0);
    let bad = write(&dir, "bad.json", &v);
    let out = run(&["certify", "--input", s(&input), "--certificate", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    assert_eq!(report["valid"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn certificate_for_another_map_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let small = write(&dir, "small.json", &transpose_choi());
    let big = write(&dir, "big.json", &kraus_problem(3, vec![identity(3)]));
    let cert = dir.path().join("cert.json");
    assert_eq!(
        run(&["compute", "--input", s(&small), "--certificate", s(&cert)])
            .status
            .code(),
        Some(0)
    );
    let out = run(&["certify", "--input", s(&big), "--certificate", s(&cert)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_names_the_field() {
    let dir = TempDir::new().unwrap();
    let mut p = kraus_problem(2, vec![identity(2)]);
    p["payload"]["kraus"][0][1][0] = json!("oops");
    let input = write(&dir, "bad.json", &p);
    let out = run(&["compute", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("payload.kraus[0][1][0]"), "{err}");

    let mut p = kraus_problem(2, vec![identity(2)]);
    p["dim_in"] = json!(-1);
    let input = write(&dir, "bad_dim.json", &p);
    let out = run(&["compute", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim_in"));

    let mut p = kraus_problem(2, vec![identity(2)]);
    p["version"] = json!("9");
    let input = write(&dir, "bad_version.json", &p);
    assert_eq!(run(&["compute", "--input", s(&input)]).status.code(), Some(1));
}

#[test]
fn wrong_shape_is_reported_with_its_path() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "shape.json", &kraus_problem(3, vec![identity(2)]));
    let out = run(&["compute", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("payload.kraus[0]"));
}

#[test]
fn outputs_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", &transpose_choi());
    let a = run(&["compute", "--input", s(&input), "--restarts", "3", "--seed", "7"]);
    let b = run(&["compute", "--input", s(&input), "--restarts", "3", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout_json(&a)["oracle_lower_bound"].as_f64().unwrap() <= 2.0 + 1e-9);
}

#[test]
fn timing_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "id.json", &kraus_problem(2, vec![identity(2)]));
    let out = run(&["compute", "--input", s(&input), "--timing"]);
    assert!(stdout_json(&out)["wall_time_seconds"].as_f64().is_some());
}

#[test]
fn iteration_log_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", &transpose_choi());
    let out = run(&["compute", "--input", s(&input), "--verbose"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iter"));
    stdout_json(&out);
}

#[test]
fn conversions_preserve_the_map() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &kraus_problem(2, vec![identity(2)]));
    let choi = dir.path().join("choi.json");
    assert_eq!(
        run(&["convert", "--input", s(&id), "--to", "choi", "--output", s(&choi)])
            .status
            .code(),
        Some(0)
    );
    let out = run(&["convert", "--input", s(&choi), "--to", "kraus"]);
    assert_eq!(out.status.code(), Some(0));
    let back = stdout_json(&out);
    assert_eq!(back["kind"], "kraus");
    let ops = back["payload"]["kraus"].as_array().unwrap();
    assert_eq!(ops.len(), 1);
    // A single Kraus operator of the identity channel is a phase times 1.
    let k = &ops[0];
    let d0 = (k[0][0][0].as_f64().unwrap(), k[0][0][1].as_f64().unwrap());
    let d1 = (k[1][1][0].as_f64().unwrap(), k[1][1][1].as_f64().unwrap());
    assert!((d0.0 - d1.0).abs() < 1e-10 && (d0.1 - d1.1).abs() < 1e-10);
    assert!((d0.0 * d0.0 + d0.1 * d0.1 - 1.0).abs() < 1e-10);
    assert!(k[0][1][0].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn choi_of_rank_three_gives_three_environment_dimensions() {
    let dir = TempDir::new().unwrap();
    // Three orthogonal Pauli terms.
    let x = json!([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
    let z = json!([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]);
    let input = write(&dir, "rank3.json", &kraus_problem(2, vec![identity(2), x, z]));
    let choi = dir.path().join("choi.json");
    assert_eq!(
        run(&["convert", "--input", s(&input), "--to", "choi", "--output", s(&choi)])
            .status
            .code(),
        Some(0)
    );
    let out = run(&["convert", "--input", s(&choi), "--to", "stinespring"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["payload"]["dim_env"], 3);
}

#[test]
fn zero_map_converts_and_has_zero_norm() {
    let dir = TempDir::new().unwrap();
    let zero = json!([[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
    let input = write(&dir, "zero.json", &kraus_problem(2, vec![zero]));
    for to in ["choi", "kraus", "stinespring"] {
        let out = run(&["convert", "--input", s(&input), "--to", to]);
        assert_eq!(out.status.code(), Some(0), "{to}");
        let converted = write(&dir, &format!("zero_{to}.json"), &stdout_json(&out));
        let res = run(&["compute", "--input", s(&converted)]);
        assert_eq!(res.status.code(), Some(0));
        assert_eq!(stdout_json(&res)["value"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn fidelity_command() {
    let dir = TempDir::new().unwrap();
    let p = json!([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
    let q = json!([[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]]);
    let file = json!({"version": "1", "kind": "fidelity", "dim_in": 2, "dim_out": 2, "payload": {"p": p, "q": q}});
    let input = write(&dir, "f.json", &file);
    let out = run(&["fidelity", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["fidelity_squared"].as_f64().unwrap() - 0.5).abs() < 1e-7);
    assert!((v["alberti_bound"].as_f64().unwrap() - 0.5).abs() < 1e-5);

    let same = json!({"version": "1", "kind": "fidelity", "dim_in": 2, "dim_out": 2, "payload": {"p": q, "q": q}});
    let input = write(&dir, "same.json", &same);
    let v = stdout_json(&run(&["fidelity", "--input", s(&input)]));
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn check_channel_reports_without_failing() {
    let dir = TempDir::new().unwrap();
    let two = json!([[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]]);
    let input = write(&dir, "scaled.json", &kraus_problem(2, vec![two]));
    let out = run(&["check-channel", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["is_tp"], false);
    assert_eq!(v["is_cp"], true);

    let input = write(&dir, "t.json", &transpose_choi());
    let v = stdout_json(&run(&["check-channel", "--input", s(&input)]));
    assert_eq!(v["is_cp"], false);
    assert_eq!(v["is_tp"], true);

    let input = write(&dir, "pair.json", &unitary_pair(1.0));
    let v = stdout_json(&run(&["check-channel", "--input", s(&input)]));
    assert_eq!(v["first"]["is_channel"], true);
    assert_eq!(v["second"]["is_channel"], true);
}

#[test]
fn channel_pair_of_non_channels_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let mut p = unitary_pair(1.0);
    p["payload"]["second"] = json!({"kind": "kraus", "payload": {"kraus": [phase(1.0), identity(2)]}});
    let input = write(&dir, "pair.json", &p);
    let out = run(&["compute", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("payload"));
}

#[test]
fn unreachable_tolerance_gives_exit_two() {
    // A tolerance below what the solver can reach forces a non-optimal stop.
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "phase.json", &unitary_pair(1.0));
    let out = run(&[
        "compute",
        "--input",
        s(&input),
        "--method",
        "general",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert!(v["lower_bound"].as_f64().unwrap() <= v["upper_bound"].as_f64().unwrap());
}
