use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_loctime");

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn loctime(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LOCTIME_OUT_DIR").output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).unwrap()
}

const TWO_STATE: &str = "experiment = \"identities\"\nmodel = { family = \"two_state\", a = 1.0, b = 1.0 }\n";

#[test]
fn identities_on_two_state_pass_with_tiny_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_STATE);
    let out_dir = tmp.path().join("out");
    let out = loctime(&["identities", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out_dir);
    assert_eq!(s["passed"], Value::Bool(true));
    assert!(s["results"]["max_violation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(s["artifact_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config"]["model"]["family"], "two_state");
    for c in s["checks"].as_array().unwrap() {
        for key in ["name", "target", "estimate", "se", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "check lacks {key}");
        }
    }
    assert!(out_dir.join("log.txt").exists());
}

#[test]
fn isomorphism_rejects_nonreversible_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"isomorphism\"\nmodel = { family = \"cycle_walk\", n = 3, p = 2.0, q = 1.0 }\n",
    );
    let out_dir = tmp.path().join("out");
    let out = loctime(&["isomorphism", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_record(&out)["kind"], "NotSymmetric");
    let s = summary(&out_dir);
    assert_eq!(s["error"]["kind"], "NotSymmetric");
    assert_eq!(s["passed"], Value::Bool(false));
}

#[test]
fn clt_output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"clt\"\nmodel = { family = \"cycle_walk\", n = 3, p = 2.0, q = 1.0 }\n\
         [params]\nreps = 400\nn_schedule = [5.0, 25.0]\n",
    );
    let mut summaries = Vec::new();
    for workers in ["1", "4"] {
        let out_dir = tmp.path().join(format!("w{workers}"));
        let out = loctime(&[
            "clt",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "7",
            "--workers",
            workers,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
        let mut s = summary(&out_dir);
        assert_eq!(s["runtime"]["workers"].as_u64().unwrap(), workers.parse::<u64>().unwrap());
        s.as_object_mut().unwrap().remove("runtime");
        let csv = std::fs::read_to_string(out_dir.join("tables/clt_moments.csv")).unwrap();
        summaries.push((serde_json::to_string(&s).unwrap(), csv));
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn list_models_names_all_families() {
    let out = loctime(&["list-models"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["family"].as_str().unwrap()).collect();
    for f in ["two_state", "birth_death", "cycle_walk", "jump_cycle", "custom"] {
        assert!(names.contains(&f), "missing {f}");
    }
}

#[test]
fn validate_names_the_negative_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"identities\"\nmodel = { family = \"birth_death\", n = 3, birth = [1.0, -2.0], death = 1.0 }\n",
    );
    let out = loctime(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = stderr_record(&out);
    assert_eq!(r["kind"], "ConfigError");
    assert!(r["field"].as_str().unwrap().starts_with("model.birth"), "{r}");
}

#[test]
fn validate_rejects_disconnected_generator() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"identities\"\n\
         model = { family = \"custom\", rates = [[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 0.0]] }\n",
    );
    let out = loctime(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_record(&out)["kind"], "NonIrreducible");
}

#[test]
fn validate_prints_resolved_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_STATE);
    let out = loctime(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["plan"]["experiment"], "identities");
    assert_eq!(v["plan"]["tolerance"].as_f64(), Some(1e-8));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("{TWO_STATE}[params]\nrepz = 3\n"));
    let out = loctime(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_event_budget_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "experiment = \"excursions\"\nmodel = { family = \"two_state\", a = 1.0, b = 1.0 }\n[params]\nlevel = 1000.0\nblocks = 1\nbudget = 10\n",
    );
    let out_dir = tmp.path().join("out");
    let out = loctime(&["excursions", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_record(&out)["kind"], "BudgetExceeded");
}

#[test]
fn positional_experiment_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_STATE);
    let out_dir = tmp.path().join("out");
    let out = loctime(&["entropy", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out_dir)["experiment"], "entropy");
    let bad = loctime(&["nonsense", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_STATE);
    let out_dir = tmp.path().join("from-env");
    let out = Command::new(BIN)
        .args(["identities", "--config", cfg.to_str().unwrap()])
        .env("LOCTIME_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn tables_have_headers_and_full_precision_floats() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_STATE);
    let out_dir = tmp.path().join("out");
    let out = loctime(&["potentials", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(out_dir.join("tables/killed_densities.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("state,0,1"));
    // u_T0(1,1) = 2 exactly.
    assert!(csv.contains("2.0000000000000000e0"), "{csv}");
    let text = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let u = v["results"]["resolvent"][0]["u_base_row"][0].as_f64().unwrap();
    assert_eq!(u, 4.0 / 3.0, "round trip must be exact");
    assert!(text.contains("1.3333333333333333e0"));
}
