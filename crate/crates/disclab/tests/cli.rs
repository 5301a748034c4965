//! End-to-end runs of the `disclab` binary.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn disclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disclab")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = disclab(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn temp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("disclab-it-{}-{name}", std::process::id()))
}

#[test]
fn nehari_condition_for_hille_coefficient() {
    let v = report(&["condition", "--kind", "nehari", "--coeff", "hille:gamma=1.0"]);
    assert_eq!(v["schema"], 1);
    let r = &v["result"]["reports"][0];
    assert!((r["value"].as_f64().unwrap() - 5.0).abs() < 0.05, "{r}");
    assert_eq!(r["divergence_flag"], false);
    assert!(v["grid"].is_object());
}

#[test]
fn hille_zero_table() {
    let csv = temp("zeros.csv");
    let v = report(&["zeros", "--example", "hille:gamma=1.0", "--count", "20", "--csv", csv.to_str().unwrap()]);
    let zeros = v["result"]["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 20);
    for (k, z) in zeros.iter().enumerate() {
        let x = z["x"].as_f64().unwrap();
        let reference = (k as f64 * PI / 2.0).tanh();
        // Past k = 9 the rounding of x near 1 exceeds 1e-9 in t; the gaps cover those zeros.
        if k <= 9 {
            assert!((x - reference).abs() < 1e-9, "k={k}: {x} vs {reference}");
        }
        if k > 0 {
            assert!((z["gap"].as_f64().unwrap() - PI / 2.0).abs() < 1e-8, "k={k}");
        }
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(lines.next(), Some("k,t,x,gap,reference_x,error"));
    assert_eq!(text.matches("\r\n").count(), 21);
    std::fs::remove_file(csv).ok();
}

#[test]
fn green_identity_suite() {
    let v = report(&["identities", "--suite", "green", "--weight", "standard:alpha=0"]);
    let text = v["result"].to_string();
    let max = v["result"]["max_residual"].as_f64().unwrap_or_else(|| panic!("{text}"));
    assert!(max < 1e-8, "{text}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["experiment", "--name", "corpus", "--seed", "7", "--order", "16"];
    let a = disclab(&args);
    let b = disclab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = disclab(&["experiment", "--name", "corpus", "--seed", "8", "--order", "16"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn saved_config_reproduces_the_report() {
    let first = temp("first.json");
    let args = ["norm", "--kind", "bloch", "--function", "geometric:w=0.5", "--order", "32"];
    let out = disclab(&[&args[..], &["--output", first.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    let cfg = temp("config.json");
    let mut config = v["config"].clone();
    config["output"] = Value::Null;
    std::fs::write(&cfg, config.to_string()).unwrap();
    let again = disclab(&["norm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    let v2: Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(v["result"], v2["result"]);
    std::fs::remove_file(first).ok();
    std::fs::remove_file(cfg).ok();
}

#[test]
fn grid_refinement_reuses_the_previous_value() {
    let base = ["norm", "--kind", "bloch", "--function", "binomial:a=0.5,s=0.25", "--order", "32"];
    let v0 = report(&base);
    let v1 = report(&[&base[..], &["--grid-refine"]].concat());
    assert_eq!(v1["result"]["estimate"]["value_coarse"], v0["result"]["estimate"]["value"]);
}

#[test]
fn exit_codes() {
    assert_eq!(disclab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(disclab(&["condition", "--kind", "nope", "--coeff", "poly:1"]).status.code(), Some(2));
    assert_eq!(disclab(&["norm", "--kind", "hp", "--function", "poly:1", "--p", "2", "--r-max", "1.5"]).status.code(), Some(2));
    let singular = ["condition", "--kind", "nehari", "--coeff", "exp-singular", "--order", "4096", "--angular", "1024"];
    let out = disclab(&singular);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(disclab(&[&singular[..], &["--strict"]].concat()).status.code(), Some(3));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_disclab"))
        .args(["condition", "--kind", "nehari", "--coeff", "poly:1"])
        .env("DISCLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}
