use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gconvex::cli::ExperimentConfig;
use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn run(command: &str, cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gconvex"))
        .args([command, "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn report(out: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{command}.report.json"))).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_shipped_config_succeeds() {
    for cmd in ["gexp", "gbsde", "convexity", "jensen", "replimit", "oracle-check"] {
        let out = TempDir::new().unwrap();
        let o = run(cmd, &config(cmd), out.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let rep = report(out.path(), cmd);
        assert_eq!(rep["status"], "ok");
        assert_eq!(rep["command"], cmd);
        assert!(out.path().join(format!("{cmd}.data.csv")).exists());
    }
}

#[test]
fn gexp_of_square() {
    let out = TempDir::new().unwrap();
    run("gexp", &config("gexp"), out.path());
    let v = report(out.path(), "gexp")["results"]["value"].as_f64().unwrap();
    assert!((v - 2.0).abs() <= 1e-2, "{v}");
    let csv = std::fs::read_to_string(out.path().join("gexp.data.csv")).unwrap();
    assert!(csv.starts_with("x,u\n"));
    assert_eq!(csv.lines().count(), 402);
}

#[test]
fn convexity_verdict_is_data() {
    let out = TempDir::new().unwrap();
    let o = run("convexity", &config("convexity"), out.path());
    assert_eq!(o.status.code(), Some(0));
    let rep = report(out.path(), "convexity");
    assert_eq!(rep["results"]["verdict"], "fails");
    let witnesses = rep["results"]["witnesses"].as_array().unwrap();
    assert!(witnesses.iter().any(|w| w["y"] == 0.0 && w["z"] == 1.0 && w["gap"].as_f64().unwrap() < 0.0));
}

#[test]
fn malformed_expression_names_the_field_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("replimit")).unwrap().replace("\"t\": 0.0", "\"t\": 0.0, \"h\": \"2*\"");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = run("replimit", &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("config error in h:"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    for (bad, field) in [
        ("\"nodes\": 401", "\"nodes\": 401, \"dx\": 0.1"),
        ("\"schema_version\": 1", "\"schema_version\": \"one\""),
        ("\"phi\": \"x^2\"", "\"phi\": \"sin(\""),
    ] {
        let text = std::fs::read_to_string(config("gexp")).unwrap().replace(bad, field);
        let cfg = write_config(dir.path(), &text);
        let o = run("gexp", &cfg, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(1), "{field}");
    }
    let o = run("gexp", &dir.path().join("missing.json"), dir.path());
    assert_eq!(o.status.code(), Some(1));
    // a command missing its inputs
    let o = run("jensen", &config("gexp"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("h"));
}

#[test]
fn numerical_failure_exits_two_with_report() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("gbsde"))
        .unwrap()
        .replace("\"g\": \"-y\"", "\"g\": \"5*y\"");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = run("gbsde", &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let rep = report(&out, "gbsde");
    assert_eq!(rep["status"], "error");
    assert!(rep["error"].as_str().unwrap().contains("ipschitz"), "{}", rep["error"]);
    assert!(!out.join("gbsde.data.csv").exists());
}

#[test]
fn failed_expectation_exits_two() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("gexp")).unwrap().replace("\"value\": 2.0", "\"value\": 3.0");
    let cfg = write_config(dir.path(), &text);
    let o = run("gexp", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(dir.path(), "gexp")["status"], "check_failed");
}

#[test]
fn identical_configs_give_identical_csv() {
    for cmd in ["gbsde", "convexity", "replimit"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        run(cmd, &config(cmd), a.path());
        run(cmd, &config(cmd), b.path());
        let name = format!("{cmd}.data.csv");
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn threads_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("gbsde")).unwrap().replace("\"seed\": 42", "\"seed\": 42, \"threads\": 4");
    let cfg = write_config(dir.path(), &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run("gbsde", &config("gbsde"), &a);
    run("gbsde", &cfg, &b);
    assert_eq!(std::fs::read(a.join("gbsde.data.csv")).unwrap(), std::fs::read(b.join("gbsde.data.csv")).unwrap());
}

#[test]
fn echoed_config_round_trips() {
    for cmd in ["gexp", "gbsde", "convexity", "replimit"] {
        let out = TempDir::new().unwrap();
        run(cmd, &config(cmd), out.path());
        let echoed = report(out.path(), cmd)["config"].to_string();
        let original = ExperimentConfig::from_json(&std::fs::read_to_string(config(cmd)).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::from_json(&echoed).unwrap(), original, "{cmd}");
    }
}

#[test]
fn usage_errors() {
    let o = Command::new(env!("CARGO_BIN_EXE_gconvex")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_gconvex")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
