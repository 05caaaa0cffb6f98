//! End-to-end tests of the `ictal` binary: exit codes, file outputs, and
//! rerun determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn ictal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ictal"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn ictal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Small but spectrally valid dataset: the default bins reach 180 Hz, so
/// the sampling rate stays at 400 Hz and only duration/channels shrink.
fn synth_args<'a>(out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "synth",
        "--out",
        out,
        "--seed",
        seed,
        "--preictal",
        "4",
        "--interictal",
        "4",
        "--channels",
        "2",
        "--duration-s",
        "2",
    ]
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn synth_is_byte_identical_across_reruns() {
    let dir = tempdir().unwrap();
    let a = ictal(dir.path(), &synth_args("a", "7"));
    assert!(a.status.success(), "{}", stderr(&a));
    let b = ictal(dir.path(), &synth_args("b", "7"));
    assert!(b.status.success(), "{}", stderr(&b));
    let fa = dir_bytes(&dir.path().join("a"));
    let fb = dir_bytes(&dir.path().join("b"));
    assert_eq!(fa.len(), 10); // 8 clips + manifest + resolved config
    for ((name_a, bytes_a), (name_b, bytes_b)) in fa.iter().zip(&fb) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between reruns");
    }
}

#[test]
fn missing_out_flag_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let out = ictal(dir.path(), &["synth", "--preictal", "1", "--interictal", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn train_without_an_input_source_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let out = ictal(dir.path(), &["train", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn extract_row_count_and_header_follow_the_contract() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "3"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    let out = ictal(
        dir.path(),
        &[
            "extract",
            "--manifest",
            "data/manifest.tsv",
            "--out",
            "feats",
            "--window-seconds",
            "1",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("feats/features.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // 8 clips x 2 windows of 1 s each
    assert_eq!(lines.len(), 1 + 16);
    assert!(lines[0].starts_with("clip_id,window_index,label,ch0_psi0"));
    assert!(lines[0].ends_with("ch1_std"));
    let fields = lines[1].split(',').count();
    assert_eq!(fields, 3 + 2 * 9);
}

#[test]
fn extract_refuses_an_empty_manifest_without_writing() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("empty.tsv"), "# nothing\n").unwrap();
    let out = ictal(
        dir.path(),
        &["extract", "--manifest", "empty.tsv", "--out", "feats"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("feats/features.csv").exists());
}

fn train_args<'a>(manifest: &'a str, out: &'a str, seed: &'a str, epochs: &'a str) -> Vec<&'a str> {
    vec![
        "train",
        "--manifest",
        manifest,
        "--out",
        out,
        "--seed",
        seed,
        "--epochs",
        epochs,
        "--train-fraction",
        "0.75",
        "--batch-size",
        "4",
        "--hidden-size",
        "8",
        "--window-seconds",
        "1",
    ]
}

#[test]
fn training_is_deterministic_and_zero_epochs_keeps_the_init() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "11"));
    assert!(synth.status.success(), "{}", stderr(&synth));

    for (out, epochs) in [("r0a", "0"), ("r0b", "0"), ("r2", "2")] {
        let run = ictal(dir.path(), &train_args("data/manifest.tsv", out, "5", epochs));
        assert!(run.status.success(), "{}", stderr(&run));
    }
    let a = fs::read(dir.path().join("r0a/checkpoint.blsm")).unwrap();
    let b = fs::read(dir.path().join("r0b/checkpoint.blsm")).unwrap();
    let c = fs::read(dir.path().join("r2/checkpoint.blsm")).unwrap();
    assert_eq!(a, b, "same seed, zero epochs: checkpoints must match");
    assert_ne!(a, c, "training moved the parameters");

    // zero epochs: log holds only the header
    let log = fs::read_to_string(dir.path().join("r0a/train_log.csv")).unwrap();
    assert_eq!(log.trim(), "epoch,mean_loss,train_auc");
}

#[test]
fn evaluate_on_the_training_split_reproduces_the_logged_auc() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "13"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    let run = ictal(dir.path(), &train_args("data/manifest.tsv", "run", "13", "8"));
    assert!(run.status.success(), "{}", stderr(&run));

    let log = fs::read_to_string(dir.path().join("run/train_log.csv")).unwrap();
    let last = log.lines().last().unwrap();
    let logged_auc: f64 = last.split(',').nth(2).unwrap().parse().unwrap();

    let eval = ictal(
        dir.path(),
        &[
            "evaluate",
            "--checkpoint",
            "run/checkpoint.blsm",
            "--manifest",
            "run/train_manifest.tsv",
            "--out",
            "eval_train",
            "--window-seconds",
            "1",
        ],
    );
    assert!(eval.status.success(), "{}", stderr(&eval));
    let text = stdout(&eval);
    let printed: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("test_auc = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        (printed - logged_auc).abs() <= 1e-9,
        "evaluate said {printed}, train log said {logged_auc}"
    );
}

#[test]
fn evaluate_rejects_a_single_class_test_set() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "17"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    let run = ictal(dir.path(), &train_args("data/manifest.tsv", "run", "17", "1"));
    assert!(run.status.success(), "{}", stderr(&run));

    // keep only preictal lines
    let manifest = fs::read_to_string(dir.path().join("data/manifest.tsv")).unwrap();
    let single: String = manifest
        .lines()
        .filter(|l| l.ends_with("preictal") && !l.ends_with("interictal"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("data/single.tsv"), single).unwrap();

    let eval = ictal(
        dir.path(),
        &[
            "evaluate",
            "--checkpoint",
            "run/checkpoint.blsm",
            "--manifest",
            "data/single.tsv",
            "--out",
            "eval_single",
            "--window-seconds",
            "1",
        ],
    );
    assert_eq!(eval.status.code(), Some(1));
    assert!(
        stderr(&eval).contains("AUC undefined"),
        "stderr: {}",
        stderr(&eval)
    );
}

#[test]
fn train_from_a_feature_cache_matches_the_raw_pipeline() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "23"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    let extract = ictal(
        dir.path(),
        &[
            "extract",
            "--manifest",
            "data/manifest.tsv",
            "--out",
            "feats",
            "--window-seconds",
            "1",
        ],
    );
    assert!(extract.status.success(), "{}", stderr(&extract));

    let raw = ictal(dir.path(), &train_args("data/manifest.tsv", "run_raw", "29", "3"));
    assert!(raw.status.success(), "{}", stderr(&raw));
    let cached = ictal(
        dir.path(),
        &[
            "train",
            "--features",
            "feats/features.csv",
            "--out",
            "run_cached",
            "--seed",
            "29",
            "--epochs",
            "3",
            "--train-fraction",
            "0.75",
            "--batch-size",
            "4",
            "--hidden-size",
            "8",
        ],
    );
    assert!(cached.status.success(), "{}", stderr(&cached));

    // the cache stores full-precision floats and the split shuffle only
    // depends on (count, fraction, seed), so both routes match bitwise
    let a = fs::read(dir.path().join("run_raw/checkpoint.blsm")).unwrap();
    let b = fs::read(dir.path().join("run_cached/checkpoint.blsm")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("run_cached/test_features.csv").exists());
}

#[test]
fn config_file_applies_and_flags_win() {
    let dir = tempdir().unwrap();
    let synth = ictal(dir.path(), &synth_args("data", "31"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    fs::write(
        dir.path().join("run.conf"),
        "epochs = 1\nhidden_size = 8\nbatch_size = 4\nwindow_seconds = 1\ntrain_fraction = 0.75\nseed = 31\n",
    )
    .unwrap();

    // config alone: one epoch in the log
    let from_file = ictal(
        dir.path(),
        &["train", "--manifest", "data/manifest.tsv", "--out", "cfg_run", "--config", "run.conf"],
    );
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    let log = fs::read_to_string(dir.path().join("cfg_run/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);

    // a flag overrides the file
    let flag_wins = ictal(
        dir.path(),
        &[
            "train",
            "--manifest",
            "data/manifest.tsv",
            "--out",
            "flag_run",
            "--config",
            "run.conf",
            "--epochs",
            "3",
        ],
    );
    assert!(flag_wins.status.success(), "{}", stderr(&flag_wins));
    let log = fs::read_to_string(dir.path().join("flag_run/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let resolved = fs::read_to_string(dir.path().join("flag_run/resolved_config.txt")).unwrap();
    assert!(resolved.contains("epochs = 3"));
    assert!(resolved.contains("hidden_size = 8"));
}

#[test]
fn roc_command_recomputes_auc_from_scores() {
    let dir = tempdir().unwrap();
    fs::write(
        dir.path().join("scores.csv"),
        "clip_id,label,score\na,preictal,0.9\nb,preictal,0.8\nc,interictal,0.3\nd,interictal,0.1\n",
    )
    .unwrap();
    let out = ictal(
        dir.path(),
        &["roc", "--scores", "scores.csv", "--out", "roc_out"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("auc = 1"));
    let csv = fs::read_to_string(dir.path().join("roc_out/roc.csv")).unwrap();
    assert!(csv.lines().next().unwrap() == "threshold,fpr,tpr");
    assert!(csv.trim_end().ends_with("# auc=1"));
    assert!(dir.path().join("roc_out/roc.svg").exists());
}
