//! End-to-end CLI tests: exit-code contract, JSON schemas, and
//! byte-comparison (after JSON canonicalization) of the documented
//! examples against checked-in expected output.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_walkspec"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn expected(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/expected")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn run(args: &[String]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn argv(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn docs_examples_match_expected_output() {
    // canonicalized (parsed) JSON comparison of the documented examples
    let cases: Vec<(Vec<String>, &str)> = vec![
        (
            argv(&["spectrum", &data("simple.json"), "-n", "4"]),
            "spectrum_simple_n4.json",
        ),
        (
            argv(&[
                "spectrum",
                &data("biased_a.json"),
                "-n",
                "30",
                "--compare",
                &data("biased_b.json"),
            ]),
            "compare_pair_n30.json",
        ),
        (
            argv(&["guarantee", "-e", "2", "-f", "3"]),
            "guarantee_2_3.json",
        ),
        (
            argv(&["guarantee", "-e", "5", "-f", "5"]),
            "guarantee_5_5.json",
        ),
        (argv(&["tables", "--n", "21"]), "tables_n21.json"),
        (
            argv(&["spectrum", &data("lazy.json"), "-n", "2", "--u1-dims"]),
            "spectrum_lazy_u1.json",
        ),
        (
            argv(&["reconstruct", &data("spectrum_449.json"), "-f", "2"]),
            "reconstruct_449.json",
        ),
    ];
    for (args, expect_file) in cases {
        let out = run(&args);
        assert!(out.status.success(), "{args:?}: {out:?}");
        assert_eq!(
            stdout_json(&out),
            expected(expect_file),
            "output drifted for {args:?}"
        );
    }
}

#[test]
fn spectrum_exit_codes() {
    let out = run(&argv(&["spectrum", &data("bad_mass.json"), "-n", "4"]));
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "validation");
    assert!(v["message"].as_str().unwrap().contains("sum to"));
}

#[test]
fn reconstruct_e1_and_refusal() {
    // spectrum route recovers {-1: 2/3, 2: 1/3} with verdict TheoremClean
    let out = run(&argv(&[
        "reconstruct",
        &data("spectrum_449.json"),
        "-f",
        "2",
    ]));
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["shape"]["coeffs"]["-1"], "2/3");
    assert_eq!(v["shape"]["coeffs"]["2"], "1/3");
    assert_eq!(v["guarantee"]["verdict"], "TheoremClean");

    // diff series of an X_{2,4} shape: lattice collision, exit 3
    let diff_file = std::env::temp_dir().join("walkspec_cli_diff24.json");
    let out = run(&argv(&[
        "series",
        &data("shape24.json"),
        "--what",
        "diff-infinity",
        "--order",
        "8",
        "--precision",
        "128",
    ]));
    assert!(out.status.success());
    std::fs::write(&diff_file, &out.stdout).unwrap();
    let out = run(&argv(&[
        "reconstruct",
        diff_file.to_str().unwrap(),
        "-e",
        "2",
        "-f",
        "4",
    ]));
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "refusal");
}

#[test]
fn series_roundtrip_through_cli() {
    // gamma branches of the asymmetric (1,2) shape reconstruct the shape
    let branches_file = std::env::temp_dir().join("walkspec_cli_branches12.json");
    let out = run(&argv(&[
        "series",
        &data("asym12.json"),
        "--what",
        "branches",
        "--order",
        "6",
        "--precision",
        "192",
    ]));
    assert!(out.status.success());
    std::fs::write(&branches_file, &out.stdout).unwrap();
    let out = run(&argv(&[
        "reconstruct",
        branches_file.to_str().unwrap(),
        "--kappa0",
        "0",
        "--precision",
        "192",
    ]));
    assert!(out.status.success(), "{out:?}");
    let v = stdout_json(&out);
    assert_eq!(v["shape"]["coeffs"]["-1"], "2/3");
    assert_eq!(v["shape"]["coeffs"]["2"], "1/3");
}

#[test]
fn asymptotics_pass_and_biased_rejection() {
    let out = run(&argv(&[
        "asymptotics",
        &data("lazy.json"),
        "-m",
        "1",
        "--precision",
        "128",
    ]));
    assert!(out.status.success(), "{out:?}");
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let fitted = v["fitted_prefactor"].as_f64().unwrap();
    assert!((fitted - 0.5641895835477563).abs() < 1e-4);
    assert_eq!(v["prefactor_matches"], "(2 pi J_2)^{-1/2}");

    let out = run(&argv(&[
        "asymptotics",
        &data("biased_a.json"),
        "-m",
        "1",
        "--precision",
        "96",
    ]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_degenerate_point() {
    let out = run(&argv(&["certify", &data("degenerate_point.json")]));
    assert!(out.status.success(), "{out:?}");
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "Degenerate");

    let out = run(&argv(&["certify", &data("simple.json")]));
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "Transposition");
}

#[test]
fn simulate_is_reproducible_via_cli() {
    let args = argv(&[
        "simulate",
        &data("simple.json"),
        "-n",
        "3",
        "--samples",
        "20000",
        "--seed",
        "7",
    ]);
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "byte-identical across runs");
    let v = stdout_json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["samples"], 20000);
}

#[test]
fn search_streams_results() {
    let out = run(&argv(&[
        "search",
        "-e",
        "1",
        "-f",
        "2",
        "--moments",
        "6",
        "--denominator-bound",
        "7",
    ]));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect();
    let summary = lines.last().unwrap();
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["candidates"], 0);
    assert!(summary["construction_related"].as_u64().unwrap() >= 1);
    // the scale-equivalent pair appears as a rescaling-related line
    let has_scale = lines
        .iter()
        .any(|l| l["kind"] == "related" && l["relation"].get("Rescaled").is_some());
    assert!(has_scale, "{text}");
}

#[test]
fn env_var_precision_accepted() {
    let out = bin()
        .env("WALKSPEC_PRECISION", "96")
        .args([
            "series",
            &data("simple.json"),
            "--what",
            "diff-infinity",
            "--order",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["precision"], 96);
    assert_eq!(v["direction"], "infinity");
    assert_eq!(v["base_exponent"], "-1");
}

#[test]
fn tables_query_empty_for_untabulated_degree() {
    let out = run(&argv(&["tables", "--n", "7"]));
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 0);
}
