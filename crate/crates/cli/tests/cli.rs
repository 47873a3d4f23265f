use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmarg")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

#[test]
fn stats_reports_both_models() {
    let out = run(&[
        "stats",
        "--facts",
        &fixture("friends.facts"),
        "--formulas",
        &fixture("friends.formulas"),
        "--width",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let rows = v["formulas"].as_array().unwrap();
    let pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r["model_a"]["exact"].as_str().unwrap(), r["model_b"]["exact"].as_str().unwrap()))
        .collect();
    assert_eq!(pairs, [("1/3", "1/2"), ("2/3", "2/3")]);
}

#[test]
fn stats_csv_has_a_header_and_one_row_per_formula() {
    let out = run(&[
        "--format",
        "csv",
        "stats",
        "--facts",
        &fixture("friends.facts"),
        "--formulas",
        &fixture("friends.formulas"),
        "--width",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("formula,model_a_exact"));
}

#[test]
fn width_above_the_domain_is_a_domain_error() {
    let out = run(&[
        "stats",
        "--facts",
        &fixture("friends.facts"),
        "--formulas",
        &fixture("friends.formulas"),
        "--width",
        "4",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&["stats"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    let out = run(&[
        "maxent",
        "--constraints",
        &fixture("pigeonhole.constraints"),
        "--size",
        "2",
        "--model",
        "a",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--width"));
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn pigeonhole_fits_at_two_and_fails_at_three() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let ok = run(&[
        "maxent",
        "--constraints",
        &fixture("pigeonhole.constraints"),
        "--size",
        "2",
        "--model",
        "a",
        "--width",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&ok), 0);
    assert_eq!(std::fs::read(&model).unwrap(), ok.stdout);
    let v = json(&ok);
    assert_eq!(v["kind"], "A");
    assert!(v["grad_norm"].as_f64().unwrap() < 1e-9);
    assert!((v["achieved_marginals"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let bad = run(&[
        "maxent",
        "--constraints",
        &fixture("pigeonhole.constraints"),
        "--size",
        "3",
        "--model",
        "a",
        "--width",
        "2",
    ]);
    assert_eq!(code(&bad), 2);
    let v = json(&bad);
    assert_eq!(v["status"], "not_realizable");
    assert_eq!(v["diagnosis"]["realizable"], false);
    assert!((v["diagnosis"]["distance"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn pipeline_beyond_the_cap_reports_estimates_then_exits_three() {
    let out = run(&[
        "pipeline",
        "--facts",
        &fixture("path.facts"),
        "--formulas",
        &fixture("path.formulas"),
        "--target-n",
        "6",
        "--model",
        "a",
        "--width",
        "2",
    ]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["status"], "cap_exceeded");
    assert_eq!(v["level"], 2);
    let est: Vec<&str> = v["estimates"].as_array().unwrap().iter().map(|e| e["exact"].as_str().unwrap()).collect();
    assert_eq!(est, ["7/15", "8/15"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn polytope_queries_and_constraint_targets() {
    let out = run(&[
        "polytope",
        "--formulas",
        &fixture("pigeonhole.constraints"),
        "--size",
        "3",
        "--model",
        "a",
        "--width",
        "2",
        "--theta",
        "1/3",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let q = v["queries"].as_array().unwrap();
    assert_eq!(q.len(), 2);
    assert_eq!(q[0]["realizable"], false);
    assert_eq!(q[1]["realizable"], true);
    let exact: Vec<&str> = v["exact_vertices"].as_array().unwrap().iter().map(|r| r[0].as_str().unwrap()).collect();
    assert_eq!(exact, ["0", "2/3"]);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = [
        "estimate",
        "--ground-truth",
        &fixture("triangle3.facts"),
        "--m",
        "2",
        "--target-n",
        "3",
        "--constraints",
        &fixture("triangle3.constraints"),
        "--model",
        "a",
        "--width",
        "2",
        "--trials",
        "25",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["per_trial"].as_array().unwrap().len(), 25);

    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.facts");
    let y = dir.path().join("y.facts");
    for out in [&x, &y] {
        let r = run(&[
            "expand",
            "--facts",
            &fixture("path.facts"),
            "--level",
            "3",
            "--noise",
            "0.2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&r), 0);
    }
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
}

#[test]
fn expansion_roundtrips_through_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.facts");
    let r = run(&[
        "expand",
        "--facts",
        &fixture("friends.facts"),
        "--level",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    assert_eq!(json(&r)["constants"].as_array().unwrap().len(), 6);
    let s = run(&[
        "stats",
        "--facts",
        out.to_str().unwrap(),
        "--formulas",
        &fixture("friends.formulas"),
        "--width",
        "2",
    ]);
    assert_eq!(code(&s), 0);
    // base model A values are 1/3 and 2/3; the difference bound at n=3, k=2 is 1/3
    let v = json(&s);
    let a: Vec<&str> = (0..2).map(|i| v["formulas"][i]["model_a"]["exact"].as_str().unwrap()).collect();
    assert_eq!(a, ["7/15", "11/15"]);
    for (i, base) in [1.0 / 3.0, 2.0 / 3.0].into_iter().enumerate() {
        let got = v["formulas"][i]["model_a"]["decimal"].as_f64().unwrap();
        assert!((got - base).abs() <= 1.0 / 3.0);
    }
}

#[test]
fn verify_runs_a_selected_suite() {
    let out = run(&["verify", "--suite", "prop3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 1);
    assert_eq!(code(&run(&["verify", "--suite", "nonsense"])), 1);
}

#[test]
fn verify_flags_a_corrupted_fixture() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    std::fs::write(dir.path().join("friends.facts"), "@constants alice, bob, eve\nfr(alice, bob)\nsm(bob)\n").unwrap();
    let out = run(&["verify", "--suite", "examples", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["failed_suites"][0], "examples");
    assert!(String::from_utf8_lossy(&out.stderr).contains("examples"));
}
