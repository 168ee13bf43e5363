use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptive-contracts"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_fixtures() {
    for name in [
        "alpaca_eval.json",
        "randomization_witness.json",
        "uninformative_signal.json",
    ] {
        let out = run(&["validate", fixture(name).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}");
        assert_eq!(json(&out)["errors"], Value::Array(vec![]));
    }
}

#[test]
fn validate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write(dir.path(), "garbage.json", "{ not json");
    assert_eq!(code(&run(&["validate", garbage.to_str().unwrap()])), 2);

    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("alpaca_eval.json")).unwrap())
            .unwrap();
    v["q0"][0][0] = Value::from(0.5);
    let bad = write(dir.path(), "bad.json", &v.to_string());
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!json(&out)["errors"].as_array().unwrap().is_empty());
    assert_eq!(code(&run(&["solve", bad.to_str().unwrap()])), 2);

    v["q0"][0][0] = Value::from(0.21);
    v["surprise"] = Value::from(1);
    let extra = write(dir.path(), "extra.json", &v.to_string());
    assert_eq!(code(&run(&["validate", extra.to_str().unwrap()])), 2);
}

#[test]
fn solve_alpaca() {
    let path = fixture("alpaca_eval.json");
    let out = run(&["solve", path.to_str().unwrap(), "--target", "3"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["target"], 2);
    assert_eq!(r["target_label"], "GPT-4o");
    assert!((r["utility"].as_f64().unwrap() - 1.00362).abs() < 1e-4);
    assert_eq!(r["contract"]["p"], serde_json::json!([1.0, 0.0]));

    let best = json(&run(&[
        "solve",
        path.to_str().unwrap(),
        "--algorithm",
        "brute-force",
    ]));
    assert_eq!(best["target"], 2);
    assert!((best["utility"].as_f64().unwrap() - r["utility"].as_f64().unwrap()).abs() < 1e-9);

    assert_eq!(
        code(&run(&["solve", path.to_str().unwrap(), "--target", "0"])),
        2
    );
    assert_eq!(
        code(&run(&["solve", path.to_str().unwrap(), "--target", "4"])),
        2
    );
}

#[test]
fn solve_randomized_variants() {
    let path = fixture("randomization_witness.json");
    let p = path.to_str().unwrap();
    let sup = json(&run(&[
        "solve",
        p,
        "--variant",
        "comi-sup",
        "--target",
        "3",
    ]));
    assert!((sup["total_cost"].as_f64().unwrap() - 6.0).abs() < 1e-6);
    assert_eq!(sup["attained"], false);
    let coni = json(&run(&["solve", p, "--variant", "coni", "--target", "3"]));
    let cost = coni["total_cost"].as_f64().unwrap();
    assert!((6.0..6.6 - 1e-3).contains(&cost), "{cost}");
}

#[test]
fn infeasible_target_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Both actions look identical, so the costlier one cannot be induced.
    let text = r#"{
      "schema_version": 1,
      "actions": [{"label": "a", "cost": 0.0}, {"label": "b", "cost": 1.0}],
      "signals": [{"label": "s", "inspection_cost": 0.1, "outcomes": 2}],
      "q0": [[1.0], [1.0]],
      "qk": [[[0.5, 0.5], [0.5, 0.5]]],
      "rewards": [[0.0, 1.0]]
    }"#;
    let p = write(dir.path(), "flat.json", text);
    let out = run(&["solve", p.to_str().unwrap(), "--target", "2"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn guards_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let wide = dir.path().join("wide.json");
    let out = run(&[
        "generate",
        "--kind",
        "binomial",
        "--initial",
        "6",
        "--refined",
        "2",
        "--delta",
        "10",
        "--out",
        wide.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "solve",
        wide.to_str().unwrap(),
        "--variant",
        "uni",
        "--target",
        "6",
    ]);
    assert_eq!(code(&out), 4);

    let huge = dir.path().join("huge.json");
    run(&[
        "generate",
        "--kind",
        "binomial",
        "--initial",
        "20",
        "--refined",
        "1",
        "--delta",
        "1",
        "--out",
        huge.to_str().unwrap(),
    ]);
    let out = run(&[
        "solve",
        huge.to_str().unwrap(),
        "--algorithm",
        "brute-force",
        "--target",
        "6",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn generate_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "g.txt", "# path\n0 1\n1 2\n");
    let out = run(&[
        "generate",
        "--kind",
        "graph",
        "--edges",
        edges.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let g = json(&out);
    // Three vertices + dummy signals; one action per edge plus the target.
    assert_eq!(g["signals"].as_array().unwrap().len(), 4);
    assert_eq!(g["actions"].as_array().unwrap().len(), 3);

    let out = run(&["generate", "--kind", "beta-binomial", "--rho", "0.2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["generate", "--kind", "beta-binomial"])), 2);

    let base = ["generate", "--kind", "binomial", "--dirichlet-alpha", "100"];
    assert_eq!(code(&run(&base)), 2);
    let mut seeded = base.to_vec();
    seeded.extend(["--seed", "7"]);
    let a = run(&seeded);
    let b = run(&seeded);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let plain = run(&["generate", "--kind", "binomial"]);
    assert_ne!(a.stdout, plain.stdout);
}

#[test]
fn transform_prune_and_always_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let ct = write(
        dir.path(),
        "ct.json",
        r#"{"p": [1.0, 1.0], "s": [0.0, 0.0], "t": [[0.0, 1.0], [0.0, 0.0]]}"#,
    );
    let inst = fixture("alpaca_eval.json");
    let out = run(&[
        "transform",
        inst.to_str().unwrap(),
        "--contract",
        ct.to_str().unwrap(),
        "--op",
        "prune",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["p"], serde_json::json!([1.0, 0.0]));

    let out = run(&[
        "transform",
        inst.to_str().unwrap(),
        "--contract",
        ct.to_str().unwrap(),
        "--op",
        "scale-down",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweeps_write_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "--jobs",
        "2",
        "sweep",
        "--experiment",
        "alpaca",
        "--parameter",
        "inspection-cost",
        "--grid",
        "0.5,1,2",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("alpaca_inspection_cost.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("value,target,target_label,utility"));
    assert_eq!(lines.count(), 3);
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("alpaca_inspection_cost.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 3);

    let out = run(&[
        "sweep",
        "--experiment",
        "swebench-policy",
        "--grid",
        "25,100,1000",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("swebench-policy_delta.csv")).unwrap();
    assert!(
        csv.contains("inspect-full-success") && csv.contains("no-inspection"),
        "{csv}"
    );

    let out = run(&[
        "sweep",
        "--experiment",
        "swebench-heatmap",
        "--initial-range",
        "1-2",
        "--refined-range",
        "0,5",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("swebench-heatmap_design.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let empty = run(&[
        "sweep",
        "--experiment",
        "alpaca",
        "--grid",
        "",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code(&empty), 2);
    let unsorted = run(&[
        "sweep",
        "--experiment",
        "alpaca",
        "--grid",
        "2,1",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(code(&unsorted), 2);
}
