use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hidfact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_in(dir: &tempfile::TempDir, name: &str) -> (PathBuf, String) {
    let p = dir.path().join(name);
    let s = p.display().to_string();
    (p, s)
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["infer", "--net", "x.json"]).status.code(), Some(1));
    assert_eq!(run(&["bench", "cat", "--orderings", "some"]).status.code(), Some(1));
    assert_eq!(run(&["bench", "cat", "--orderings", "sample:0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_input_exits_two() {
    assert_eq!(run(&["cliques", "--net", "/nonexistent.json"]).status.code(), Some(2));
    let out = run(&["infer", "--net", &fixture("chain.json"), "--query", "Q"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["mbh", "--function", &fixture("chain.json"), "--node", "A"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let (p, s) = path_in(&dir, "broken.json");
    fs::write(&p, "{\"variables\": [").unwrap();
    assert_eq!(run(&["cliques", "--net", &s]).status.code(), Some(2));
}

#[test]
fn budget_errors_exit_three() {
    let out = run(&["mbh", "--function", &fixture("big.json"), "--max-rects", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BUDGET_EXCEEDED"));

    // A stopped search still prints its best verified base.
    let out = run(&["mbh", "--function", &fixture("add3x3.json"), "--max-nodes", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let base = stdout_json(&out);
    assert_eq!(base["statistics"]["optimal"], Value::Bool(false));
}

#[test]
fn mbh_base_feeds_factorize_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = path_in(&dir, "base.json");
    let (fact_path, fact) = path_in(&dir, "fact.json");
    let net = fixture("add3x3.json");

    let out = run(&["mbh", "--function", &net, "--out", &base]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "factorize",
        "--net",
        &net,
        "--node",
        "Y",
        "--base",
        &base,
        "--out",
        &fact,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Y: 6 hidden states"));

    let out = run(&["verify", "--net", &net, "--factorized", &fact]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report[0]["valid"], Value::Bool(true));
    assert_eq!(report[0]["hidden_states"], 6);

    // Emitted networks are themselves valid inputs.
    let out = run(&["cliques", "--net", &fact]);
    assert!(out.status.success());
    let text = fs::read_to_string(&fact_path).unwrap();
    let (_, again) = path_in(&dir, "again.json");
    let out = run(&["factorize", "--net", &fact, "--out", &again]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("again.json")).unwrap(), text);
}

#[test]
fn tampered_factorization_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (fact_path, fact) = path_in(&dir, "fact.json");
    let net = fixture("add2x2.json");
    assert!(run(&["factorize", "--net", &net, "--out", &fact]).status.success());

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&fact_path).unwrap()).unwrap();
    let cell = &mut doc["factorized"][0]["form"]["h"][0][0];
    *cell = Value::from(cell.as_i64().unwrap() + 1);
    fs::write(&fact_path, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = run(&["verify", "--net", &net, "--factorized", &fact]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report[0]["valid"], Value::Bool(false));
    assert_eq!(report[0]["first_mismatch"]["child_state"], 0);
}

#[test]
fn trivial_factorization_has_one_state_per_configuration() {
    let out = run(&["factorize", "--net", &fixture("add3x3.json"), "--trivial"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Y: 9 hidden states"));
    assert_eq!(
        run(&[
            "factorize",
            "--net",
            &fixture("add3x3.json"),
            "--trivial",
            "--node",
            "Y",
            "--base",
            "b.json"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn infer_matches_hand_computation() {
    let net = fixture("chain.json");
    let out = run(&["infer", "--net", &net, "--query", "A"]);
    let m = stdout_json(&out);
    assert_eq!(m["variables"], serde_json::json!(["A"]));
    let v: Vec<f64> = serde_json::from_value(m["values"].clone()).unwrap();
    assert!((v[0] - 0.3).abs() < 1e-12 && (v[1] - 0.7).abs() < 1e-12);

    // M = NOT A, so P(A=0 | C=1) is proportional to 0.3 * P(C=1 | M=1).
    let expected = 0.3 * 0.75 / (0.3 * 0.75 + 0.7 * 0.1);
    for t in ["none", "factorize", "divorce"] {
        let out = run(&[
            "infer",
            "--net",
            &net,
            "--evidence",
            &fixture("chain_evidence.json"),
            "--query",
            "A",
            "--transform",
            t,
        ]);
        assert!(out.status.success(), "{t}");
        let v: Vec<f64> = serde_json::from_value(stdout_json(&out)["values"].clone()).unwrap();
        assert!((v[0] - expected).abs() < 1e-12, "{t}: {v:?}");
    }
}

#[test]
fn joint_query_is_over_sorted_scope() {
    let out = run(&["infer", "--net", &fixture("chain.json"), "--query", "M,A"]);
    let m = stdout_json(&out);
    assert_eq!(m["variables"], serde_json::json!(["A", "M"]));
    let values: Vec<f64> = serde_json::from_value(m["values"].clone()).unwrap();
    assert_eq!(values, vec![0.0, 0.3, 0.7, 0.0]);
}

#[test]
fn factorization_shrinks_star_cliques() {
    let net = fixture("star.json");
    let plain = stdout_json(&run(&["cliques", "--net", &net]));
    let fact = stdout_json(&run(&["cliques", "--net", &net, "--transform", "factorize"]));
    assert!(fact["max"].as_u64().unwrap() < plain["max"].as_u64().unwrap());
    assert_eq!(fact["max"], 4);
}

#[test]
fn implication_formula_factorizes() {
    let net = fixture("implication.json");
    let dir = tempfile::tempdir().unwrap();
    let (_, fact) = path_in(&dir, "fact.json");
    let out = run(&["factorize", "--net", &net, "--out", &fact]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run(&["verify", "--net", &net, "--factorized", &fact]).status.success());
}

#[test]
fn sampled_orderings_bench() {
    let out = run(&["bench", "cat", "--tasks", "2", "--orderings", "sample:3"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().next(), Some("method,r,avg_total_clique_size,min,max"));
    assert_eq!(text.lines().count(), 1 + 3 * 3);
}
