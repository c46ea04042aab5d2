use std::path::{Path, PathBuf};

use perpint::cli::main_with_args;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["perpint"];
    v.extend_from_slice(args);
    main_with_args(v)
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn finding<'a>(r: &'a serde_json::Value, key: &str) -> &'a str {
    r["data"]["findings"].as_array().unwrap().iter().find(|f| f["key"] == key).unwrap()["value"].as_str().unwrap()
}

#[test]
fn exponential_config_reports_finite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("exp");
    let cfg = configs().join("exp_exponential.toml");
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(finding(&r, "f0.potential_integral"), "finite");
    assert_eq!(finding(&r, "f0.diagnosis"), "finite");
}

#[test]
fn lattice_sine_config_flags_disagreement() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sine");
    let cfg = configs().join("exp_lattice_sine.toml");
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(finding(&r, "lattice_sine.disagreement"), "true");
    assert_eq!(finding(&r, "f0.dk"), "infinite");
}

#[test]
fn every_artifact_embeds_digest_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("meta");
    let cfg = configs().join("exp_exponential.toml");
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99"]), 0);
    let digest = report(&out)["config_digest"].as_str().unwrap().to_string();
    for e in std::fs::read_dir(&out).unwrap() {
        let p = e.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        if p.extension().unwrap() == "csv" {
            assert!(text.contains(&format!("# config_digest={digest}")), "{}", p.display());
            assert!(text.contains("# seed=99"), "{}", p.display());
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_digest"], digest.as_str());
            assert_eq!(v["seed"], 99);
        }
    }
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = \"not a number\"\npaths = 3\n").unwrap();
    let out = tmp.path().join("never");
    assert_eq!(run(&["run", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert!(!out.exists());
    // missing section for the requested command
    let cfg = configs().join("exp_lattice_sine.toml");
    assert_eq!(run(&["scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert!(!out.exists());
    assert_eq!(run(&["run"]), 2);
}

#[test]
fn rejected_model_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("neg.toml");
    std::fs::write(
        &cfg,
        "seed = 1\npaths = 10\nhorizon = 5.0\nstep = 0.01\nmodel = { kind = \"drifted_bm\", drift = -1.0, var = 1.0 }\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 3);
    assert!(!out.exists());
}

#[test]
fn uncertifiable_trap_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("transient_trap.toml"))
        .unwrap()
        .replace("table_paths = 100000", "table_paths = 500")
        .replace("paths = 10000", "paths = 100");
    let cfg = tmp.path().join("trap.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["counterexample", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 4);
    let failures = &report(&out)["data"]["failures"];
    assert!(failures[0].as_str().unwrap().contains("depth n ="));
}

#[test]
fn simulate_writes_paths_and_passages() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.toml");
    std::fs::write(
        &cfg,
        "seed = 5\npaths = 200\nhorizon = 10.0\nmodel = { kind = \"lattice_cpp\", rate = 2.0, span = 1.0 }\n\
         [simulate]\ndump = 2\nlevels = [2.5, 5.5]\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]), 0);
    let passages = std::fs::read_to_string(out.join("passages.csv")).unwrap();
    // lattice overshoot over a half-integer level is exactly 0.5
    let row = passages.lines().find(|l| l.starts_with("2.5,")).unwrap();
    assert_eq!(row.split(',').nth(3).unwrap(), "0.5");
}
