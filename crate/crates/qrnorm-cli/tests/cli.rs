use std::process::{Command, Output};

use serde_json::Value;

fn qrnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrnorm")).args(args).output().expect("spawn qrnorm")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn value(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("no numeric '{key}' in {v}"))
}

#[test]
fn compute_mana_of_strange_state() {
    let out = qrnorm(&["compute", "mana", "--state", "zoo:S", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!((value(&v, "linear") - 5.0 / 3.0).abs() < 1e-11);
    assert!((value(&v, "value") - (5.0f64 / 3.0).log2()).abs() < 1e-11);
}

#[test]
fn compute_negativity_of_phi2() {
    let out = qrnorm(&["compute", "negativity", "--state", "zoo:phi2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((value(&json_of(&out), "value") - 2.0).abs() < 1e-11);
}

#[test]
fn copies_flag_tensors_the_state() {
    let out = qrnorm(&["compute", "negativity", "--state", "zoo:phi2", "--copies", "3", "--format", "json"]);
    assert!((value(&json_of(&out), "value") - 8.0).abs() < 1e-9);
}

#[test]
fn tempered_needs_a_norm() {
    assert_eq!(qrnorm(&["compute", "tempered", "--state", "zoo:omega3"]).status.code(), Some(2));
    let out = qrnorm(&["compute", "tempered", "--state", "zoo:omega3", "--norm", "reshuffled-negativity", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((value(&json_of(&out), "linear") - 2.0).abs() < 1e-6);
}

#[test]
fn malformed_state_file_is_an_input_error() {
    let dir = std::env::temp_dir().join(format!("qrnorm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.json");
    std::fs::write(&p, "{\"rows\": 2,\n  \"cols\": ").unwrap();
    let out = qrnorm(&["compute", "negativity", "--state", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn state_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("qrnorm-cli-rt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("phi2.json");
    let op = qrnorm::states::max_entangled(2).unwrap();
    std::fs::write(&p, serde_json::to_string(&op.to_json()).unwrap()).unwrap();
    let out = qrnorm(&["compute", "reshuffled-negativity", "--state", p.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((value(&json_of(&out), "value") - 2.0).abs() < 1e-11);
}

#[test]
fn unknown_flag_and_negative_tolerance_rejected() {
    assert_eq!(qrnorm(&["compute", "mana", "--state", "zoo:S", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(qrnorm(&["compute", "mana", "--state", "zoo:S", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(qrnorm(&["compute", "no-such-monotone", "--state", "zoo:S"]).status.code(), Some(2));
}

#[test]
fn config_file_overrides_and_rejects_unknown_keys() {
    let dir = std::env::temp_dir().join(format!("qrnorm-cli-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.cfg");
    std::fs::write(&good, "# tighter\ngap_tol = 1e-10\nmax_iter=200\n").unwrap();
    assert_eq!(qrnorm(&["solve", "sample:lp", "--config", good.to_str().unwrap()]).status.code(), Some(0));
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "gap_tol=1e-9\nverbose=1\n").unwrap();
    let out = qrnorm(&["solve", "sample:lp", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn max_iter_cap_is_a_solver_failure() {
    let dir = std::env::temp_dir().join(format!("qrnorm-cli-cap-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cap.cfg");
    std::fs::write(&cfg, "max_iter=2\n").unwrap();
    assert_eq!(qrnorm(&["solve", "sample:omega3", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn bundled_samples_solve() {
    let lp = json_of(&qrnorm(&["solve", "sample:lp", "--format", "json"]));
    assert_eq!(lp["status"], "optimal");
    assert!((value(&lp, "primal_value") - 1.0).abs() < 1e-8);
    let om = json_of(&qrnorm(&["solve", "sample:omega3", "--format", "json"]));
    assert!((value(&om, "primal_value") - 2.0).abs() < 1e-6);
    let inf = qrnorm(&["solve", "sample:infeasible", "--format", "json"]);
    assert_eq!(inf.status.code(), Some(0));
    let inf = json_of(&inf);
    assert_eq!(inf["status"], "infeasible");
    assert_eq!(inf["certificate"], "primal-infeasible");
}

#[test]
fn dump_then_solve_matches_sample() {
    let dir = std::env::temp_dir().join(format!("qrnorm-cli-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("om.dump");
    let out = qrnorm(&["dump", "tempered", "--state", "zoo:omega3", "--norm", "negativity", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&qrnorm(&["solve", p.to_str().unwrap(), "--format", "json"]));
    assert!((value(&v, "primal_value") - 2.0).abs() < 1e-6);
}

#[test]
fn norm_table_report_passes() {
    let out = qrnorm(&["report", "norm-table", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["all_passed"], true);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["status"] == "pass"));
}

#[test]
fn norrell_report_passes() {
    let out = qrnorm(&["report", "norrell-split", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["all_passed"], true);
}

#[test]
fn irreversibility_reports() {
    let cases = [
        ("qutrit-magic", "irreversible", 0.96),
        ("qubit-magic-conditional", "conditionally irreversible", 0.85),
        ("entanglement-omega", "irreversible", 0.59),
    ];
    for (s, verdict, cap) in cases {
        let out = qrnorm(&["report", &format!("irreversibility:{s}"), "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{s}");
        let v = json_of(&out);
        assert_eq!(v["verdict"], verdict);
        assert!(value(&v, "product") <= cap, "{s}: {}", v["product"]);
        assert_eq!(v["bounds"].as_array().unwrap().len(), 2);
    }
    let v = json_of(&qrnorm(&["report", "irreversibility:qubit-magic-conditional", "--format", "json"]));
    assert!(v["conditional_on"].is_string());
    assert_eq!(qrnorm(&["report", "irreversibility:bogus"]).status.code(), Some(2));
}

#[test]
fn wigner_table_csv_layout() {
    let out = qrnorm(&["wigner-table", "--state", "zoo:N", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 4, "{text}");
}

#[test]
fn stab_export_counts() {
    for (n, count) in [(1, 6), (2, 60), (3, 1080)] {
        let v = json_of(&qrnorm(&["stab-export", "--qubits", &n.to_string()]));
        assert_eq!(v["count"], count);
    }
    assert_eq!(qrnorm(&["stab-export", "--qubits", "4"]).status.code(), Some(2));
}

#[test]
fn csv_output_of_a_report() {
    let out = qrnorm(&["report", "irreversibility:qutrit-magic", "--format", "csv"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("direction,formula,rate,value"), "{text}");
}
