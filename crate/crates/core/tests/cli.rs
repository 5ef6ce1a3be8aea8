use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_shapecl");

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let out = dir.join("out");
    write_config(
        dir,
        &format!(
            r#"{{"out": "{}", "epochs": 2, "net": {{"h1": 8, "h2": 16, "h3": 8}},
                "bench": {{"classes": 4, "train_per_class": 4, "test_per_class": 2, "points": 32}}{extra}}}"#,
            out.display()
        ),
    )
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn bench_writes_manifest_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let (code, stdout) = run(&["bench", "--config", &cfg]);
    assert_eq!(code, 0);
    assert!(Path::new(stdout.trim()).exists());
    let first = tree_bytes(&dir.path().join("out/bench"));
    fs::remove_dir_all(dir.path().join("out")).unwrap();
    assert_eq!(run(&["bench", "--config", &cfg]).0, 0);
    assert_eq!(tree_bytes(&dir.path().join("out/bench")), first);
    assert_eq!(first.len(), 1 + 4 * 6);
}

#[test]
fn default_bench_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let (code, _) = run(&["bench", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.join("bench/manifest.json").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("sub");
    assert_eq!(run(&["bench", "--out", out.to_str().unwrap()]).0, 3);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"k": 12}"#);
    assert_eq!(run(&["bench", "--config", &bad]).0, 2);
    assert_eq!(run(&["bench", "--mode", "herding"]).0, 2);
    assert_eq!(run(&["train", "--alpha", "-1"]).0, 2);
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nothing");
    assert_eq!(run(&["train", "--out", out.to_str().unwrap()]).0, 3);
}

#[test]
fn config_echo_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "seed": 11, "mode": "raw_exemplar""#);
    let (code, canonical) = run(&["config", "--config", &cfg]);
    assert_eq!(code, 0);
    let again = write_config(dir.path(), &canonical);
    assert_eq!(run(&["config", "--config", &again]).1, canonical);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "seed": 11"#);
    let (_, text) = run(&[
        "config", "--config", &cfg, "--seed", "5", "--mode", "joint", "--k", "3", "--alpha", "0.5",
        "--n-s", "4", "--lambda", "0.2", "--epochs", "7",
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["mode"], "joint");
    assert_eq!(v["k"], 3);
    assert_eq!(v["alpha"], 0.5);
    assert_eq!(v["n_s"], 4);
    assert_eq!(v["loss"]["lambda"], 0.2);
    assert_eq!(v["epochs"], 7);
    assert_eq!(v["bench"]["classes"], 4);
}

#[test]
fn train_writes_metrics_summary_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    assert_eq!(run(&["bench", "--config", &cfg]).0, 0);
    assert_eq!(run(&["train", "--config", &cfg]).0, 0);
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "session,seen_classes,accuracy");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("2,4,"));

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["memory_units"], 12);
    assert!(summary["forgetting_rate"].is_number());
    let (_, canonical) = run(&["config", "--config", &cfg]);
    let echoed: Value = serde_json::from_str(&canonical).unwrap();
    assert_eq!(summary["config"], echoed);
    assert!(out.join("run.log").exists());
    assert!(out.join("model.mirn").exists());
}

#[test]
fn models_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["bench", "--out", o]).0, 0);
    assert_eq!(run(&["models", "--out", o]).0, 0);

    let index: Value =
        serde_json::from_str(&fs::read_to_string(out.join("models/models.json")).unwrap()).unwrap();
    assert_eq!(index["total"]["units"], 24);
    assert_eq!(index["models"].as_array().unwrap().len(), 8);

    let model = out.join("models/sphere.mir3");
    let (code, text) = run(&["inspect", model.to_str().unwrap()]);
    assert_eq!(code, 0);
    let info: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(info["class_id"], "sphere");
    assert_eq!(info["n"], 256);
    assert_eq!(info["k"], 2);
    assert_eq!(info["sigmas"].as_array().unwrap().len(), 2);
    assert!(info["orthonormality_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(info["footprint"]["floats"], 2306);

    let bytes = fs::read(&model).unwrap();
    let cut = dir.path().join("cut.mir3");
    fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    assert_eq!(run(&["inspect", cut.to_str().unwrap()]).0, 5);
    assert_eq!(
        run(&["inspect", dir.path().join("absent.mir3").to_str().unwrap()]).0,
        3
    );
}

#[test]
fn replay_beats_finetune_on_default_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"out": "{}", "joint_reference": false}}"#,
            out.display()
        ),
    );
    assert_eq!(run(&["bench", "--config", &cfg]).0, 0);
    let mut a_last = Vec::new();
    for mode in ["finetune", "replay"] {
        assert_eq!(run(&["train", "--config", &cfg, "--mode", mode]).0, 0);
        let s: Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        a_last.push(s["a_last"].as_f64().unwrap());
    }
    assert!(a_last[1] > a_last[0], "{a_last:?}");
}
