use std::process::{Command, Output};

use serde_json::Value;

const CEV: [&str; 10] = ["--model", "cev", "--alpha", "0.5", "--sigma", "0.5", "--rate", "0.05", "--spot", "1"];

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bessel-credit")).args(args).output().expect("run bessel-credit")
}

fn with_cev(cmd: &str, extra: &[&str]) -> Vec<String> {
    let mut a = vec![cmd.to_string()];
    a.extend(CEV.iter().chain(extra).map(|s| s.to_string()));
    a
}

fn run(args: &[String]) -> (i32, Value, String) {
    let a: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = bin(&a);
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = serde_json::from_str(&text).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), doc, text)
}

#[test]
fn price_document_has_parity_and_full_precision() {
    let (code, doc, text) = run(&with_cev("price", &["--strike", "1", "--maturity", "1"]));
    assert_eq!(code, 0, "{text}");
    for key in ["inputs", "result", "method", "error_estimate", "runtime_ms"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["method"], "closed-form");
    let r = &doc["result"];
    assert!(r["parity_residual"].as_f64().unwrap().abs() < 1e-10);
    assert!(r["call"].as_f64().unwrap() > r["put"].as_f64().unwrap() - 1.0);
    let call_line = text.lines().find(|l| l.contains("\"call\"")).unwrap();
    let digits = call_line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    assert!(digits.contains('e') && digits.split('e').next().unwrap().trim_start_matches('-').len() == 18, "{digits}");
}

#[test]
fn default_curve_csv_is_nondecreasing() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let (code, _, text) = run(&with_cev("default-curve", &["--grid", "0.5:5:0.5", "--csv", csv.to_str().unwrap()]));
    assert_eq!(code, 0, "{text}");
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("T,probability"));
    let p: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(p.len(), 10);
    assert!(p.windows(2).all(|w| w[1] >= w[0]));
    assert!(p[0] > 0.0 && p[9] < 1.0);
}

#[test]
fn option_grid_csv_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "cev", "alpha": 0.5, "sigma": 0.5, "rate": 0.05, "strikes": [0.8, 1.2], "maturities": [1, 2]}"#).unwrap();
    let csv = dir.path().join("grid.csv");
    let out = dir.path().join("out.json");
    let o = bin(&["price", "--config", cfg.to_str().unwrap(), "--set", "spot=1.1", "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["inputs"]["spot"].as_f64(), Some(1.1));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("K,T,call,put,parity_residual\n"));
    assert_eq!(body.lines().count(), 5);
}

#[test]
fn unknown_key_is_a_validation_error() {
    let (code, doc, _) = run(&with_cev("price", &["--strike", "1", "--maturity", "1", "--strik", "2"]));
    assert_eq!(code, 1);
    assert_eq!(doc["error"]["reason"], "config");
    let (code, doc, _) = run(&with_cev("price", &["--strike", "-1", "--maturity", "1"]));
    assert_eq!(code, 1);
    assert_eq!(doc["error"]["reason"], "domain");
}

#[test]
fn eds_needs_the_cev_model() {
    let args: Vec<String> = [
        "eds", "--model", "tc", "--alpha", "0.5", "--rate", "0.05", "--clock", "integrated-cir", "--clock.kappa", "1",
        "--clock.theta", "1", "--clock.eta", "0.5", "--clock.y0", "1", "--maturity", "1", "--trigger", "0.5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let (code, doc, _) = run(&args);
    assert_eq!(code, 1);
    assert_eq!(doc["error"]["reason"], "config");
}

#[test]
fn cds_and_eds_quotes() {
    let (code, cds, text) = run(&with_cev("cds", &["--maturity", "3", "--recovery", "0"]));
    assert_eq!(code, 0, "{text}");
    let (code, eds, text) = run(&with_cev("eds", &["--maturity", "3", "--trigger", "0.5"]));
    assert_eq!(code, 0, "{text}");
    assert!(eds["result"]["coupon"].as_f64().unwrap() >= cds["result"]["coupon"].as_f64().unwrap());
    assert_eq!(eds["method"], "inversion");
}

#[test]
fn selftest_perturbation_is_caught() {
    let ok = bin(&["selftest", "--only", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin(&["selftest", "--only", "1", "--perturb", "Wronskian"]);
    assert_ne!(bad.status.code(), Some(0));
    let report = String::from_utf8(bad.stdout).unwrap();
    assert!(report.lines().any(|l| l.contains("FAIL") && l.contains("Wronskian")), "{report}");
}
