//! End-to-end checks on the `curvepair` binary: pinned outputs, exit codes,
//! and agreement between output formats and routes.

use serde_json::Value;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_curvepair"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
    )
}

fn json(stdout: &str) -> Value {
    serde_json::from_str(stdout.trim()).expect("stdout is one JSON value")
}

#[test]
fn normalize_word_reaches_the_klein_fiber_with_a_handle() {
    let (code, out, _) = run(&["pair", "normalize", "S2L + 4*RP2L"]);
    assert_eq!(code, 0);
    assert_eq!(
        json(&out),
        serde_json::json!({
            "variant": "non_sep_two_sided",
            "cap": { "orientable": true, "genus": 1 },
            "total_orientable": false
        })
    );
}

#[test]
fn dp2_report_shape_is_pinned() {
    let (code, out, _) = run(&["check", "dp2", "--a", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), r#"{"self_pairing":4,"p_a":3,"forced":true}"#);
}

#[test]
fn golden_table_comparison_passes() {
    let (code, _, err) = run(&["table", "--emax", "6", "--bound", "10", "--golden"]);
    assert_eq!(code, 0, "stderr: {err}");
}

#[test]
fn word_parse_failures_exit_two() {
    let (code, _, err) = run(&["pair", "normalize", "GARBAGE + X"]);
    assert_eq!(code, 2);
    assert_eq!(json(&err)["kind"], "parse");

    let (code, _, err) = run(&["mmp", "simulate", "--end-state", "nonsense:9"]);
    assert_eq!(code, 2);
    assert_eq!(json(&err)["kind"], "parse");
}

#[test]
fn clap_usage_errors_exit_two() {
    let (code, _, _) = run(&["no-such-subcommand"]);
    assert_eq!(code, 2);
}

#[test]
fn domain_failures_exit_one() {
    // The null-homotopic pair has no construction plan.
    let (code, _, err) = run(&["witness", "--pair", "T2NULL"]);
    assert_eq!(code, 1);
    assert_eq!(json(&err)["kind"], "domain");

    // Side tags are rejected on a non-separating base at evaluation time.
    let (code, _, err) = run(&["pair", "normalize", "T2L + L:RP2"]);
    assert_eq!(code, 1);
    assert_eq!(json(&err)["kind"], "domain");
}

#[test]
fn classify_splits_the_verdicts() {
    let (code, out, _) = run(&["classify", "--pair", "T2NULL"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "not_approximable");

    let (code, out, _) = run(&["classify", "--pair", "KF + 5*RP2"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "approximable");
    assert_eq!(v["witness"]["plan"], "mmp");
}

#[test]
fn witness_json_round_trips_through_the_library_types() {
    let (code, out, _) = run(&["witness", "--pair", "KL + 3*RP2L"]);
    assert_eq!(code, 0);
    let plan: curvepair::enumerate::ConstructionPlan =
        serde_json::from_str(out.trim()).expect("plan parses back");
    assert_eq!(serde_json::to_value(&plan).unwrap(), json(&out));
}

#[test]
fn simulate_trace_starts_at_the_end_state() {
    let (code, out, _) = run(&[
        "mmp",
        "simulate",
        "--end-state",
        "p2-conic",
        "--steps",
        "real-off:left,real-on,conj-off",
    ]);
    assert_eq!(code, 0);
    let rows = json(&out);
    let rows = rows.as_array().expect("array of rows");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["step"], "p2-conic");
    assert_eq!(rows[0]["csq"], 4);
    // real-off keeps the self-intersection, real-on drops it by one.
    assert_eq!(rows[1]["csq"], 4);
    assert_eq!(rows[2]["csq"], 3);
    assert_eq!(rows[2]["pair"]["variant"], "one_sided");
}

#[test]
fn lattice_report_matches_hand_computation() {
    let (code, out, _) = run(&[
        "lattice", "--base", "p2", "--class", "6", "--blowups", "R*,R*,C,R",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    // 6² − 1 − 1 − 0 − 0 = 34; p_a = (34 + 6·(−3) + 1 + 1)/2 + 1 = 10.
    assert_eq!(v["rank"], 6);
    assert_eq!(v["self_int"], "34");
    assert_eq!(v["p_a"], 10);
    assert_eq!(v["real_topology"], "NonOr(4)");
    assert_eq!(v["conjugation_invariant"], true);
}

#[test]
fn oracle_and_algebra_agree_through_the_binary() {
    for word in ["KL + RP2", "S2L + L:RP2 + R:T2", "T2L + 3*RP2"] {
        let (code, oracle, _) = run(&["oracle", "pair", word]);
        assert_eq!(code, 0);
        let (code, algebra, _) = run(&["pair", "normalize", word]);
        assert_eq!(code, 0);
        assert_eq!(json(&oracle), json(&algebra), "word {word}");
    }
}

#[test]
fn table_formats_carry_the_same_rows() {
    let (code, as_json, _) = run(&["table", "--emax", "8"]);
    assert_eq!(code, 0);
    let (code, as_text, _) = run(&["table", "--emax", "8", "--format", "text"]);
    assert_eq!(code, 0);

    let table: curvepair::enumerate::TypeTable =
        serde_json::from_str(as_json.trim()).expect("table parses back");
    assert_eq!(format!("{table}"), as_text, "text format is the Display of the JSON data");
}

#[test]
fn diffeo_table_verification_has_no_silent_assertions() {
    let (code, out, _) = run(&["pair", "table", "--rmax", "4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["r_max"], 4);
    // The disputed elementary line surfaces as a discrepancy, never a pass.
    assert!(!v["discrepancies"].as_array().unwrap().is_empty());
}
