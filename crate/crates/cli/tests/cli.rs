use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_eeg-inception");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("EEGI_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", "data", "--n-per-class", "6", "--time-len", "64"];
    args.extend_from_slice(extra);
    let out = run(dir, &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn params_prints_the_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["params"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "204002");

    let out = run(dir.path(), &["params", "--depth", "6"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "51386");

    let out = run(dir.path(), &["params", "--blocks"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["initial", "intermediate_5", "residual_2", "head"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["train", "--no-such-flag"])), 1);
    assert_eq!(code(&run(dir.path(), &["params", "--threads", "0"])), 1);
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), &["--seed", "3"]);
    synth(b.path(), &["--seed", "3"]);
    for f in ["data/trials.json", "data/trials.bin"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 1\n[train]\nepochz = 3\n").unwrap();
    let out = run(dir.path(), &["--config", "run.toml", "params"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("epochz"));
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["train", "--data", "nowhere.json", "--out", "run"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nowhere.json"));
}

#[test]
fn non_finite_samples_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let blob = dir.path().join("data/trials.bin");
    let mut bytes = fs::read(&blob).unwrap();
    bytes[8..12].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(&blob, bytes).unwrap();
    let out = run(dir.path(), &["train", "--data", "data/trials.json", "--out", "run", "--epochs", "1"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn divergence_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let out = run(
        dir.path(),
        &["train", "--data", "data/trials.json", "--out", "run", "--depth", "2", "--time-len", "64", "--epochs", "3", "--lr", "1e36"],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"));
}

#[test]
fn train_then_eval_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--seed", "4"]);
    let out = run(
        dir.path(),
        &["train", "--data", "data/trials.json", "--out", "run", "--depth", "2", "--time-len", "64", "--epochs", "2", "--seed", "4"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["model.bin", "history.csv", "config.resolved", "timing.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    let history = fs::read_to_string(dir.path().join("run/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);

    let out = run(dir.path(), &["eval", "--data", "data/trials.json", "--model", "run/model.bin", "--out", "run"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("run/metrics.json")).unwrap()).unwrap();
    let acc = metrics["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let roc = fs::read_to_string(dir.path().join("run/roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr,threshold"));
}

#[test]
fn filter_export_writes_sections() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["filter-export", "--output", "hp.sos"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!fs::read_to_string(dir.path().join("hp.sos")).unwrap().trim().is_empty());
}
