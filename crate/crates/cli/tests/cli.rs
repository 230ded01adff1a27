use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transverse"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("TRANSVERSE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn without_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"generated_at\"")).collect::<Vec<_>>().join("\n")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn verify_passes_on_carriere_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("carriere_verify.toml");
    let ra = run(&["verify"], &cfg, &a);
    let rb = run(&["verify"], &cfg, &b);
    assert_eq!(ra.status.code(), Some(0), "{}", String::from_utf8_lossy(&ra.stderr));
    assert_eq!(rb.status.code(), Some(0));
    let ja = std::fs::read_to_string(a.join("report.json")).unwrap();
    let jb = std::fs::read_to_string(b.join("report.json")).unwrap();
    assert_eq!(without_timestamp(&ja), without_timestamp(&jb));
    assert_eq!(std::fs::read(a.join("schema.txt")).unwrap(), std::fs::read(b.join("schema.txt")).unwrap());

    let r = report(&a);
    assert_eq!(r["pass"], Value::Bool(true));
    let goldens = r["goldens"].as_array().unwrap();
    assert!(!goldens.is_empty());
    for g in goldens {
        let tag = g["provenance"].as_str().unwrap();
        assert!(["[PAPER]", "[DERIVED]", "[TRIVIAL]"].contains(&tag), "{tag}");
    }
    assert!(goldens.iter().any(|g| g["provenance"] == "[PAPER]"));
}

#[test]
fn flow_on_carriere_writes_a_deterministic_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("carriere_flow.toml");
    assert_eq!(run(&["flow"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["flow"], &cfg, &b).status.code(), Some(0));
    let ta = std::fs::read_to_string(a.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read_to_string(b.join("trace.csv")).unwrap());
    let ja = std::fs::read_to_string(a.join("report.json")).unwrap();
    let jb = std::fs::read_to_string(b.join("report.json")).unwrap();
    assert_eq!(without_timestamp(&ja), without_timestamp(&jb));

    let mut lines = ta.lines();
    assert_eq!(lines.next(), Some("t,min_S_Q,max_S_Q,lambda_Q,normalized_lambda_Q,monotonicity_flag,spd_ok"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    let lambdas: Vec<f64> = rows.iter().map(|r| r.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    let r = report(&a);
    assert_eq!(r["closed_form"]["pass"], Value::Bool(true));
    assert_eq!(r["lambda_monotone"], Value::Bool(true));
}

#[test]
fn mutated_connection_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["verify"], &configs().join("carriere_mutated.toml"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let r = report(tmp.path());
    assert_eq!(r["pass"], Value::Bool(false));
    let failed: Vec<&str> = r["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failed.contains(&"operators/weitzenbock"), "{failed:?}");
}

#[test]
fn sphere_flow_halts_with_blow_up_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["flow"], &configs().join("sphere_flow.toml"), tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("last good time"), "{stderr}");
    let t = report(tmp.path())["last_good_time"].as_f64().unwrap();
    assert!(t > 0.45 && t <= 0.5, "{t}");
    assert!(tmp.path().join("trace.csv").exists());
}

#[test]
fn exhausted_iteration_budget_exits_with_code_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "scenario = \"flat_torus\"\nresolution = 12\n[functional]\nevaluate = [\"mu_Q\"]\nsigma = [0.1]\nmax_iterations = 1\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run(&["functional"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(4));
    let r = report(&out_dir);
    assert_eq!(r["converged"], Value::Bool(false));
    assert_eq!(r["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn functional_on_carriere_matches_its_goldens() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["functional"], &configs().join("carriere_functional.toml"), tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert!(r["goldens"].as_array().unwrap().iter().all(|g| g["pass"] == Value::Bool(true)));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cases = [
        ("low.toml", "scenario = \"carriere\"\nresolution = 4\n", "resolution", ":2:"),
        ("unknown.toml", "scenario = \"carriere\"\nfoo = 1\n", "foo", ""),
        ("mismatch.toml", "scenario = \"carriere\"\ncommand = \"flow\"\n", "flow", ""),
        ("scenario.toml", "scenario = \"klein\"\n", "scenario", ":1:"),
    ];
    for (name, text, needle, line) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let out = run(&["verify"], &cfg, &out_dir);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle) && stderr.contains(line), "{name}: {stderr}");
    }
    let missing = run(&["verify"], &tmp.path().join("absent.toml"), &out_dir);
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = Command::new(env!("CARGO_BIN_EXE_transverse")).args(["verify", "--bogus"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "scenario = \"flat_torus\"\nresolution = 8\n[functional]\nevaluate = [\"F_Q\"]\n[output]\ndir = \"from-config\"\n",
    );
    let bin = env!("CARGO_BIN_EXE_transverse");

    let status = Command::new(bin)
        .args(["functional", "--config"])
        .arg(&cfg)
        .env_remove("TRANSVERSE_OUT_DIR")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(tmp.path().join("from-config/report.json").exists());

    let env_dir = tmp.path().join("from-env");
    let status =
        Command::new(bin).args(["functional", "--config"]).arg(&cfg).env("TRANSVERSE_OUT_DIR", &env_dir).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(env_dir.join("report.json").exists());

    let flag_dir = tmp.path().join("from-flag");
    let status = Command::new(bin)
        .args(["functional", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("TRANSVERSE_OUT_DIR", tmp.path().join("unused"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(flag_dir.join("report.json").exists());
    assert!(!tmp.path().join("unused").exists());
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "scenario = \"flat_torus\"\nresolution = 8\n[functional]\nevaluate = [\"F_Q\"]\n");
    let out_dir = tmp.path().join("out");
    let out = run(&["functional", "--seed", "77"], &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out_dir)["seed"], 77);
}
