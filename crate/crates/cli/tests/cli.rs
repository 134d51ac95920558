use std::path::PathBuf;
use std::process::{Command, Output};

use hmmerg_cli::{parse_args, Check, Command as Sub};
use serde_json::Value;

fn model(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../../models");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn hmmerg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmmerg")).args(args).output().expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn parses_conditions_flags() {
    let cli = parse_args(["hmmerg", "conditions", "--model", "parity.json", "--check", "KR", "--max-len", "64"]).unwrap();
    match cli.command {
        Sub::Conditions { check, max_len, .. } => {
            assert_eq!(check, Check::Kr);
            assert_eq!(max_len, 64);
        }
        other => panic!("parsed {other:?}"),
    }
    let cli = parse_args(["hmmerg", "verdict", "--model", "m.json", "--seed", "7"]).unwrap();
    assert_eq!(cli.common.seed, 7);
    assert_eq!(cli.command.name(), "verdict");
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert!(parse_args(["hmmerg", "frobnicate"]).is_err());
    assert_eq!(hmmerg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn parity_k_fails_certified() {
    let out = hmmerg(&["conditions", "--model", &model("parity.json"), "--check", "K"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["command"], "conditions");
    assert_eq!(v["seed"], 0);
    assert!(v["tool_version"].is_string());
    assert_eq!(v["result"]["status"], "FailsCertified");
}

#[test]
fn parity_verdict_is_certified_non_uniqueness() {
    let out = hmmerg(&["verdict", "--model", &model("parity.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["result"]["status"], "NotUniquelyErgodic");
    assert_eq!(v["result"]["certainty"], "certified");
}

#[test]
fn parity_filter_swaps_the_prior() {
    let out = hmmerg(&["filter", "--model", &model("parity.json"), "--prior", "0.3,0.7", "--word", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let post = &v["result"]["posteriors"][1];
    assert!((post[0].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!((post[1].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn prior_must_sum_to_one() {
    let out = hmmerg(&["filter", "--model", &model("parity.json"), "--prior", "0.3,0.6", "--word", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let ok = hmmerg(&["filter", "--model", &model("parity.json"), "--prior", "0.3,0.7000000001", "--word", "0"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn unknown_label_is_a_usage_error() {
    let out = hmmerg(&["filter", "--model", &model("parity.json"), "--word", "0,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_likelihood_is_a_domain_error_with_json_on_stderr() {
    let out = hmmerg(&["filter", "--model", &model("fully_observed.json"), "--prior", "1,0", "--word", "a,a,b,b"]);
    assert_eq!(out.status.code(), Some(0));
    let out = hmmerg(&["filter", "--model", &model("parity.json"), "--prior", "1,0", "--word", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sparse.json");
    std::fs::write(
        &path,
        r#"{"states":["a","b"],"observations":["u","v"],"M":{"u":[[0.5,0.5],[0,0]],"v":[[0,0],[0.5,0.5]]}}"#,
    )
    .unwrap();
    let out = hmmerg(&["filter", "--model", path.to_str().unwrap(), "--prior", "1,0", "--word", "v"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "filter");
}

#[test]
fn invalid_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"states":["a","b"],"observations":["u"],"M":{"u":[[0.5,0.4],[0,1]]}}"#).unwrap();
    let out = hmmerg(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_out(&out);
    assert_eq!(report["result"]["ok"], false);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(hmmerg(&["verdict", "--model", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn csv_where_tabular_and_usage_error_elsewhere() {
    let out = hmmerg(&["stability", "--model", &model("parity.json"), "--mu", "1,0", "--horizon", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,gap"));
    assert!(lines.all(|l| l.ends_with(",1")));
    assert_eq!(hmmerg(&["conditions", "--model", &model("parity.json"), "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec!["verdict", "--seed", "3"],
        vec!["conditions", "--check", "all"],
        vec!["simulate", "--length", "50", "--seed", "9"],
        vec!["entropy", "--horizon", "2000"],
    ] {
        let mut a = args.clone();
        a.extend(["--model", "PLACEHOLDER"]);
        let path = model("fully_observed.json");
        let a: Vec<&str> = a.iter().map(|s| if *s == "PLACEHOLDER" { path.as_str() } else { s }).collect();
        let first = hmmerg(&a);
        let second = hmmerg(&a);
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("entropy.json");
    let out = hmmerg(&["entropy", "--model", &model("parity.json"), "--horizon", "100", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!((v["result"]["estimate"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn witness_and_invariant_commands() {
    let out = hmmerg(&["witness", "--model", &model("fully_observed.json"), "--word", "a", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_out(&out)["result"]["verified_bound"], 0.0);

    let out = hmmerg(&["witness", "--model", &model("single_observation.json"), "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json_out(&out)["result"]["verified_bound"].as_f64().unwrap() <= 0.1);

    let out = hmmerg(&["invariant", "--model", &model("parity.json"), "--start", "spread"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    assert_eq!(v["result"]["status"], "converged");
    assert_eq!(v["result"]["residual"], 0.0);
}

#[test]
fn minmax_gap_on_parity_is_one() {
    let out = hmmerg(&["stability", "--model", &model("parity.json"), "--minmax", "--window", "20", "--horizon", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let gaps = v["result"]["gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 181);
    assert!(gaps.iter().all(|g| g.as_f64() == Some(1.0)));
}

#[test]
fn all_conditions_include_condition_c_when_a_witness_exists() {
    let out = hmmerg(&["conditions", "--model", &model("fully_observed.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_out(&out);
    let names: Vec<&str> = v["result"]["reports"].as_array().unwrap().iter().map(|r| r["condition"].as_str().unwrap()).collect();
    assert_eq!(names, ["N", "O", "UO", "K", "KR", "C"]);
    assert!(v["result"]["reports"][0].get("elapsed_ms").is_none());

    let out = hmmerg(&["conditions", "--model", &model("parity.json")]);
    let v = json_out(&out);
    assert_eq!(v["result"]["skipped"][0]["condition"], "C");
}
