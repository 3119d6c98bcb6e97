mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use isoguard::synth::SyntheticSpec;

fn isoguard(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoguard"))
        .args(args)
        .env("ISOGUARD_THREADS", threads)
        .output()
        .unwrap()
}

fn config_file(dir: &Path) -> String {
    let input = common::synthetic_file(&dir.join("data"), &SyntheticSpec { seed: 6, ..Default::default() });
    let path = dir.join("c.json");
    fs::write(&path, serde_json::to_string(&common::synthetic_config(&input)).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    let out = isoguard(&["frobnicate"], "1");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let out = isoguard(&["pipeline", "--seed", "1", "--out", dir.path().to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("configuration is required") && err.contains("Usage"), "{err}");

    let cfg = config_file(dir.path());
    let out = isoguard(&["pipeline", "--config", &cfg, "--out", dir.path().join("r").to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(1), "a seed is required");

    let out = isoguard(&["pipeline", "--config", &cfg, "--seed", "1", "--out", "x"], "lots");
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(isoguard(&["--help"], "1").status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"input": "absent.csv"}"#).unwrap();
    let out = isoguard(&["pipeline", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", dir.path().join("r").to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage ingest"));

    fs::write(&cfg, r#"{"input": "absent.csv", "colour": "blue"}"#).unwrap();
    let out = isoguard(&["pipeline", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", "r"], "1");
    assert_eq!(out.status.code(), Some(2), "unknown config keys are a contract error");
}

#[test]
fn stages_reproduce_the_monolithic_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let whole = dir.path().join("whole");
    let staged = dir.path().join("staged");
    let out = isoguard(&["pipeline", "--config", &cfg, "--seed", "11", "--out", whole.to_str().unwrap()], "3");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let s = staged.to_str().unwrap();
    let out = isoguard(&["ingest", "--config", &cfg, "--seed", "11", "--out", s], "1");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for stage in ["select", "detect", "train", "evaluate"] {
        let out = isoguard(&[stage, "--out", s], "2");
        assert_eq!(out.status.code(), Some(0), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&whole).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 21);
    for name in names {
        if name == "config.resolved.json" {
            let read = |d: &Path| -> serde_json::Value {
                let mut v: serde_json::Value = serde_json::from_slice(&fs::read(d.join(&name)).unwrap()).unwrap();
                v.as_object_mut().unwrap().remove("output");
                v
            };
            assert_eq!(read(&whole), read(&staged));
            continue;
        }
        assert_eq!(fs::read(whole.join(&name)).unwrap(), fs::read(staged.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn later_stages_need_earlier_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let s = dir.path().join("s");
    let out = isoguard(&["detect", "--config", &cfg, "--seed", "1", "--out", s.to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("split.json"));
}

#[test]
fn synth_writes_data_and_mask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let out = isoguard(&["synth", "--seed", "4", "--out", d.to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(0));
    assert!(d.join("synthetic.csv").is_file() && d.join("injected_mask.csv").is_file());

    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"n_informative": 0}"#).unwrap();
    let out = isoguard(&["synth", "--config", spec.to_str().unwrap(), "--out", d.to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(2));

    let k = dir.path().join("k");
    let out = isoguard(&["synth", "--kdd-like", "--seed", "1", "--out", k.to_str().unwrap()], "1");
    assert_eq!(out.status.code(), Some(0));
    let header = fs::read_to_string(k.join("synthetic.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 42);
}
