use std::path::Path;
use std::process::{Command, Output};

use graspbench::dataset::write_dataset;
use graspbench::eval::PredictionSet;
use graspbench::{GraspPose, Sample};
use serde_json::Value;

fn graspbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graspbench")).args(args).output().expect("running graspbench")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("structured error on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

/// Four samples, one grasp each; predictions hit three of them.
fn fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let mut samples = Vec::new();
    let mut preds = Vec::new();
    for i in 0..4 {
        let mut sample = Sample::new(format!("s{i}"), 200, 200);
        sample.object_category = Some(format!("cat{}", i % 2));
        let gt = GraspPose::new(100.0, 100.0, 10.0 * i as f64, 20.0, 40.0).unwrap();
        sample.grasps_pos.push(gt.to_quad());
        let pred = if i == 3 { GraspPose::new(100.0, 100.0, gt.theta + 45.0, 20.0, 40.0).unwrap() } else { gt };
        preds.push((sample.id.clone(), vec![pred]));
        samples.push(sample);
    }
    let data = dir.join("fixture.jsonl");
    write_dataset(&data, &samples).unwrap();
    let pred_path = dir.join("predictions.json");
    PredictionSet::from_poses(&preds.into_iter().collect()).save(&pred_path).unwrap();
    (data, pred_path)
}

#[test]
fn evaluate_prints_accuracy_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, preds) = fixture(tmp.path());
    let out_dir = tmp.path().join("eval");
    let out = graspbench(&["evaluate", "--input", s(&data), "--predictions", s(&preds), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.trim() == "accuracy 0.75"), "{stdout}");
    let report = read_json(&out_dir.join("eval_report.json"));
    assert_eq!(report["accuracy"], 0.75);
    assert_eq!(read_json(&out_dir.join("run_config.json"))["command"], "evaluate");
}

#[test]
fn evaluate_reports_missing_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture(tmp.path());
    let preds = tmp.path().join("partial.json");
    std::fs::write(&preds, r#"{"predictions": {"s0": [[100, 100, 0, 20, 40]]}}"#).unwrap();
    let out = graspbench(&["evaluate", "--input", s(&data), "--predictions", s(&preds), "--out", s(tmp.path())]);
    assert!(!out.status.success());
    assert_eq!(error_kind(&out), "missing_prediction");
}

#[test]
fn canonical_convert_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (input, out) in [(data.as_path(), a.as_path()), (&a.join("dataset.jsonl"), b.as_path())] {
        let r = graspbench(&["convert", "--format", "canonical", "--input", s(input), "--out", s(out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(std::fs::read(a.join("dataset.jsonl")).unwrap(), std::fs::read(b.join("dataset.jsonl")).unwrap());
}

#[test]
fn empty_directory_is_a_structured_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = graspbench(&["convert", "--input", s(tmp.path()), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "empty_dataset");
}

#[test]
fn split_is_deterministic_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture(tmp.path());
    let run = |name: &str| {
        let out_dir = tmp.path().join(name);
        let r = graspbench(&["--seed", "7", "split", "--input", s(&data), "--out", s(&out_dir)]);
        assert!(r.status.success());
        (std::fs::read(out_dir.join("split.json")).unwrap(), std::fs::read(out_dir.join("test.jsonl")).unwrap())
    };
    assert_eq!(run("x"), run("y"));
}

#[test]
fn config_file_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = fixture(tmp.path());
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mode": "object_wise", "seed": 3}"#).unwrap();
    let out_dir = tmp.path().join("split");
    let r = graspbench(&["--config", s(&cfg), "split", "--input", s(&data), "--out", s(&out_dir)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let split = read_json(&out_dir.join("split.json"));
    assert_eq!(split["mode"], "object_wise");
    assert_eq!(split["seed"], 3);
    let run = read_json(&out_dir.join("run_config.json"));
    assert_eq!(run["seed"], 3);
    assert_eq!(run["args"]["mode"], "object_wise");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"batchez": 3}"#).unwrap();
    let out = graspbench(&["--config", s(&cfg), "gradcheck", "--batches", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("batchez"));
}

#[test]
fn failed_gradient_check_exits_nonzero() {
    let out = graspbench(&["gradcheck", "--batches", "2", "--tolerance", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "check_failed");
}
