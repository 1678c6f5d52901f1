use std::path::PathBuf;

use omega_cli::{run, Outcome, EXIT_FAIL, EXIT_GUARD, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn omega(args: &[&str]) -> (Outcome, Value) {
    let mut argv = vec!["omega".to_string()];
    argv.extend(args.iter().map(|a| if a.ends_with(".json") { fixture(a) } else { a.to_string() }));
    let out = run(argv);
    let report = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out, report)
}

#[test]
fn envelope_fields() {
    let (out, r) = omega(&["dec", "verify", "example-double-edge.json", "--seed", "7"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(r["tool"], "omega");
    assert_eq!(r["command"], "dec verify");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["version"], omega_cli::VERSION);
    let digest = r["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert_eq!(r["result"]["matches_expected"], true);
    assert!(out.stderr.is_empty());
}

#[test]
fn dec_contract_double_edge() {
    let (out, r) = omega(&["dec", "contract", "example-double-edge.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["exact"], true);
    let terms = r["result"]["polynomial"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 5);
}

#[test]
fn dec_symmetrize_modes() {
    let (out, r) = omega(&["dec", "symmetrize", "double-edge-free-terms.json", "--mode", "free"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(r["result"]["contracts_to_input"], true);
    let (out, r) = omega(&["dec", "symmetrize", "minus-sign-terms.json", "--mode", "blending"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(r["result"]["difference_matches_input"], true);
    // the single-edge swap is not free on multifacets
    let (out, r) = omega(&["dec", "symmetrize", "minus-sign-terms.json", "--mode", "free"]);
    assert_eq!(out.code, EXIT_FAIL);
    assert_eq!(r["error"]["kind"], "rejected");
}

#[test]
fn pos_bound_prints_18() {
    let (out, r) = omega(&["pos", "bound", "--m", "1", "--d", "2", "--n", "1", "--g", "2", "--pretty"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["bound"], 18);
    assert!(out.stderr.contains("18"));
}

#[test]
fn family_check_exit_codes() {
    let (out, r) = omega(&["family", "check", "planted.json", "--n-max", "6"]);
    assert_eq!(out.code, EXIT_FAIL);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["result"]["first_violation"]["n"], 1);
    assert_eq!(r["result"]["first_violation"]["witness"], serde_json::json!([1, 2]));
    assert!(r["result"]["disclaimer"].as_str().unwrap().contains("undecidable"));

    let (out, r) = omega(&["family", "check", "nonnegative-family.json", "--n-max", "5"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["first_violation"], Value::Null);

    let (out, _) = omega(&["family", "check", "nonnegative-family.json", "--n-max", "40", "--max-assignments", "100"]);
    assert_eq!(out.code, EXIT_GUARD);
    let (out, _) = omega(&["family", "check", "missing.json", "--n-max", "2"]);
    assert_eq!(out.code, EXIT_USAGE);
    let (out, _) = omega(&["family", "check", "planted.json", "--n-max", "1", "--n-min", "3"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn usage_errors() {
    let (out, r) = omega(&["frobnicate"]);
    assert_eq!(out.code, EXIT_USAGE);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "usage");
    let (out, _) = omega(&["--help"]);
    assert_eq!(out.code, EXIT_OK);
    let (out, _) = omega(&["dec", "verify", "circle5.json"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn complex_and_action() {
    let (out, r) = omega(&["complex", "info", "circle5.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["vertices"], 5);
    assert_eq!(r["result"]["connected"], true);
    let (out, r) = omega(&["action", "check", "circle5.json", "circle5-rotation.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["order"], 5);
    assert_eq!(r["result"]["free"], true);
    let (out, r) = omega(&["action", "check", "double-edge.json", "double-edge-vertex-swap.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["free"], false);
    let (out, r) = omega(&["action", "refine", "double-edge.json", "double-edge-vertex-swap.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["free"], true);
}

#[test]
fn positivity_commands() {
    let (out, r) = omega(&["pos", "gram-map", "gram-bell.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["psd"], true);
    let (out, r) = omega(&["pos", "sos-family", "gram-bell.json", "double-edge.json", "double-edge-vertex-swap.json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert!(r["result"]["sum_of_squares_error"].as_f64().unwrap() < 1e-9);
    let (out, r) = omega(&["pos", "factorizable", "double-edge.json", "double-edge-fixed-vertices.json", "--index-size", "2"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["factorizable"], true);
}

#[test]
fn bridge_commands() {
    let (out, r) = omega(&["bridge", "to-poly", "distance4.json"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["polynomial"]["sites"], serde_json::json!([4, 4]));
    let (out, r) = omega(&["bridge", "separations", "--m", "4", "6"]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(r["result"]["rows"][0]["rank"], 3);
    assert_eq!(r["result"]["rows"][0]["nn_lower_bound"], 2);
}

#[test]
fn approx_run_reports_budget() {
    let (out, r) = omega(&["approx", "run", "witness-double-edge.json", "--epsilon", "0.5", "--seed", "3"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(r["result"]["budget"], 1748 * 2);
    assert!(r["result"]["error_schatten2"].as_f64().unwrap() < 0.5);
    assert!(r["result"]["terms_used"].as_u64().unwrap() <= 1748 * 2);
    let (out, _) = omega(&["approx", "run", "witness-double-edge.json", "--epsilon", "-1"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        &["approx", "run", "witness-double-edge.json", "--epsilon", "0.5", "--seed", "11"][..],
        &["bridge", "separations", "--m", "5", "--seed", "2"][..],
        &["family", "check", "planted.json", "--n-max", "3"][..],
    ] {
        let (a, _) = omega(args);
        let (b, _) = omega(args);
        assert_eq!(a, b);
    }
}
