#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use common::Repo;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn suitsmell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suitsmell")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = suitsmell(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn smell_rows<'a>(v: &'a Value, table: &str, smell: &str) -> Vec<&'a Value> {
    v[table].as_array().unwrap().iter().filter(|r| r["smell"] == smell).collect()
}

const CLEAN: &str = "*** Test Cases ***\nT\n    Submit\n*** Keywords ***\nSubmit\n    Click Button    a\n    Title Should Be    x\n";

fn sleepy() -> String {
    CLEAN.replace("a\n", "a\n    Sleep    2s\n")
}

#[test]
fn snapshot_of_the_login_suite() {
    let root = fixtures();
    let v = json(&["--root", root.to_str().unwrap()]);
    assert_eq!(v["meta"]["mode"], "snapshot");
    assert_eq!(v["meta"]["smells"].as_array().unwrap().len(), 16);
    let mm = smell_rows(&v, "findings", "MM");
    assert_eq!(mm.len(), 1);
    assert_eq!(mm[0]["count"], 1);
    assert_eq!(mm[0]["denominator"], 7);
    assert_eq!(mm[0]["density"].to_string(), "0.1429");
    assert_eq!(smell_rows(&v, "findings", "LoE")[0]["count"], 0);
    assert!(v["actions"].as_array().unwrap().is_empty());
}

#[test]
fn smell_filter_applies_to_every_table() {
    let root = fixtures();
    let v = json(&["--root", root.to_str().unwrap(), "--smells", "SC,MM"]);
    assert_eq!(v["meta"]["smells"], serde_json::json!(["MM", "SC"]));
    for table in ["findings", "summaries"] {
        for row in v[table].as_array().unwrap() {
            assert!(row["smell"] == "SC" || row["smell"] == "MM", "{row}");
        }
    }
    let bad = suitsmell(&["--root", root.to_str().unwrap(), "--smells", "XX"]);
    assert!(!bad.status.success());
}

#[test]
fn missing_root_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("report.json");
    let out = suitsmell(&[
        "--root",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!out_file.exists());
}

#[test]
fn history_of_a_fixed_sleep() {
    let mut repo = Repo::new();
    repo.commit(&[("t.robot", Some(&sleepy()))], "add");
    repo.commit(&[("t.robot", Some(&sleepy().replace("x\n", "x\n    Log    done\n")))], "log");
    repo.commit(&[("README", Some("docs"))], "docs only");
    repo.commit(&[("t.robot", Some(CLEAN))], "fix");
    let out = suitsmell(&["--mode", "history", "--root", repo.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"rate\": 0.5000"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["meta"]["versions"], 3);
    let series: Vec<u64> = smell_rows(&v, "timeseries", "SS")
        .iter()
        .map(|r| r["symptoms"].as_u64().unwrap())
        .collect();
    assert_eq!(series, [1, 1, 0]);
    let actions = smell_rows(&v, "actions", "SS");
    assert_eq!(actions.len(), 1);
    let rate = &smell_rows(&v, "rates", "SS")[0];
    assert_eq!(rate["actions"], 1);
    assert_eq!(rate["symptoms"], 2);
    assert_eq!(rate["rate"], 0.5);
}

#[test]
fn single_version_history_has_no_actions() {
    let mut repo = Repo::new();
    repo.commit(&[("t.robot", Some(&sleepy()))], "add");
    let v = json(&["--mode", "history", "--root", repo.path().to_str().unwrap()]);
    assert_eq!(v["meta"]["versions"], 1);
    assert!(v["actions"].as_array().unwrap().is_empty());
    assert!(v["meta"]["similarities"].as_array().unwrap().is_empty());
}

#[test]
fn derived_threshold_is_recorded() {
    let root = fixtures();
    let v = json(&["--root", root.to_str().unwrap(), "--threshold-derive", "long-steps"]);
    let meta = &v["meta"];
    assert!(meta["threshold_derivation"].is_object(), "{meta}");
    assert!(meta["long_step_threshold"].as_u64().unwrap() >= 1);
}

#[test]
fn help_lists_flags_and_unknown_flags_fail() {
    let out = suitsmell(&["--help"]);
    assert!(out.status.success());
    let help = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--mode",
        "--root",
        "--catalog",
        "--format",
        "--out",
        "--smells",
        "--long-step-threshold",
        "--threshold-derive",
        "--langs",
        "--clone-type",
        "--jobs",
        "--log-level",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    assert!(!suitsmell(&["--frobnicate"]).status.success());
}

#[test]
fn csv_writes_a_directory_of_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let root = fixtures();
    let out = suitsmell(&["--root", root.to_str().unwrap(), "--format", "csv", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["meta", "findings", "actions", "rates", "timeseries", "summaries"] {
        assert!(out_dir.join(format!("{name}.csv")).is_file(), "{name}.csv");
    }
    let findings = std::fs::read_to_string(out_dir.join("findings.csv")).unwrap();
    assert!(findings.starts_with("version,file,test,smell,count,denominator,density\n"));
    assert!(findings.contains(",MM,1,7,0.1429\n"));
    let no_out = suitsmell(&["--root", root.to_str().unwrap(), "--format", "csv"]);
    assert!(!no_out.status.success());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("suites")).unwrap();
    std::fs::copy(fixtures().join("login.robot"), dir.path().join("suites/login.robot")).unwrap();
    let cfg = dir.path().join("suitsmell.conf");
    std::fs::write(&cfg, "root = suites\nsmells = SC\nlong-step-threshold = 4\n").unwrap();
    let v = json(&["--config", cfg.to_str().unwrap(), "--long-step-threshold", "7"]);
    assert_eq!(v["meta"]["smells"], serde_json::json!(["SC"]));
    assert_eq!(v["meta"]["long_step_threshold"], 7);

    std::fs::write(&cfg, "root = suites\nshade = blue\n").unwrap();
    assert!(!suitsmell(&["--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixtures();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4"].iter().enumerate() {
        let path = dir.path().join(format!("r{i}.json"));
        let out = suitsmell(&["--root", root.to_str().unwrap(), "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
