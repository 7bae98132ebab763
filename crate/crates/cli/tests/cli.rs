use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn ktsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktsel")).args(args).output().unwrap()
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write_csv(dir: &std::path::Path, body: &str) -> String {
    let path = dir.join("in.csv");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn missing_file_reports_io_error() {
    let out = ktsel(&["select", "--input", "/definitely/not/here.csv", "--theta", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "io");
}

#[test]
fn bad_flag_reports_usage_error() {
    let out = ktsel(&["select", "--theta", "abc"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
}

#[test]
fn help_succeeds() {
    let out = ktsel(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("select"));
}

#[test]
fn csv_problems_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("a,b,y\n1,?,1\n2,3,-1\n", "missing_value"),
        ("a,b,y\n1,x,1\n2,3,-1\n", "parse"),
        ("a,b,y\n1,2,1\n2,3,0\n", "label"),
        ("a,b,y\n1,2,1\n2,3,1\n", "label_balance"),
        ("a,b,y\n", "no_data"),
    ];
    for (body, kind) in cases {
        let input = write_csv(dir.path(), body);
        let out = ktsel(&["select", "--input", &input, "--theta", "1"]);
        assert_eq!(error_json(&out)["error"]["kind"], kind, "{body:?}");
    }
}

#[test]
fn invalid_options_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "a,b,y\n0,1,1\n1,0,1\n3,2,-1\n2,5,-1\n");
    let out = ktsel(&["export", "--input", &input, "--theta", "1", "--format", "xml"]);
    assert_eq!(error_json(&out)["error"]["kind"], "unsupported_format");
    let out = ktsel(&["select", "--input", &input, "--theta", "3"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid");
    let out = ktsel(&["select", "--input", &input, "--theta", "1", "--method", "lasso"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid");
    let out = ktsel(&["svm", "train", "--input", &input, "--features", "0", "--gamma", "wide"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid");
}

#[test]
fn constant_columns_are_dropped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "a,k,b,y\n0,7,1,1\n1,7,0,1\n3,7,2,-1\n2,7,5,-1\n");
    let out = ktsel(&["select", "--input", &input, "--theta", "1", "--method", "brute"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dropped"], serde_json::json!(["k"]));
    assert_eq!(v["feature_names"], serde_json::json!(["a", "b"]));
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["opt_gap"], 0.0);
}

#[test]
fn zero_time_limit_returns_incumbent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(ktsel(&["gen", "--n-train", "30", "--p", "8", "--theta-star", "2", "--out", d]).status.success());
    let train = dir.path().join("train.csv");
    let out = ktsel(&["select", "--input", train.to_str().unwrap(), "--theta", "3", "--time-limit", "0"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "time_limit");
    assert_eq!(v["nodes"], 0);
    assert!(v["upper_bound"].as_f64().unwrap() >= v["lower_bound"].as_f64().unwrap());
}

#[test]
fn gen_then_train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &str| d.join(p).to_str().unwrap().to_owned();
    assert!(ktsel(&["gen", "--n-train", "40", "--n-test", "40", "--p", "4", "--theta-star", "1", "--seed", "2", "--out", &s("data")]).status.success());
    let meta: Value = serde_json::from_str(&fs::read_to_string(d.join("data/meta.json")).unwrap()).unwrap();
    let relevant = meta["relevant"][0].as_u64().unwrap().to_string();
    assert!(ktsel(&["svm", "train", "--input", &s("data/train.csv"), "--features", &relevant, "--C", "1", "--output", &s("m.json")]).status.success());
    let out = ktsel(&["svm", "predict", "--model", &s("m.json"), "--input", &s("data/test.csv")]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // One well-separated relevant feature.
    assert!(v["accuracy"].as_f64().unwrap() > 0.9, "{v}");
    assert_eq!(v["predictions"].as_array().unwrap().len(), 40);
}
