//! Drive the installed binary end to end on a tiny synthetic experiment.

use std::path::Path;
use std::process::Command;

fn visemic(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_visemic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(root: &Path) -> std::path::PathBuf {
    let toml = format!(
        r#"
seed = 21
output = "{out}"

[data]
corpus = "{corpus}"
train_per_speaker = 8

[features]
streams = ["dct_spatial"]
dct_coeffs = 16

[classifier]
n_bags = 3

[decode]
ranks = [1, 6]

[synthetic]
n_classes = 6
feature_dim = 6
class_separation = 10.0
frames_per_state = 3.0
frames_per_utterance = 18
n_utterances = 40
seed = 33
"#,
        out = root.join("out").display(),
        corpus = root.join("corpus/manifest.json").display(),
    );
    let path = root.join("config.toml");
    std::fs::write(&path, toml).unwrap();
    path
}

#[test]
fn full_cli_flow() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let cfg = config.to_str().unwrap();
    let corpus_dir = dir.path().join("corpus");

    let out = visemic(&["synth", "--config", cfg, "--out", corpus_dir.to_str().unwrap()]);
    assert!(out.status.success(), "synth: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("40 utterances"));

    let out = visemic(&["extract", "--config", cfg]);
    assert!(out.status.success(), "extract: {}", String::from_utf8_lossy(&out.stderr));

    let out = visemic(&["train", "--config", cfg]);
    assert!(out.status.success(), "train: {}", String::from_utf8_lossy(&out.stderr));

    let out = visemic(&["decode", "--config", cfg]);
    assert!(out.status.success(), "decode: {}", String::from_utf8_lossy(&out.stderr));

    let out = visemic(&["evaluate", "--config", cfg]);
    assert!(out.status.success(), "evaluate: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("phoneme acc"), "unexpected output: {stdout}");

    let out = visemic(&["build-vocab", "--config", cfg, "--target", "5"]);
    assert!(out.status.success(), "build-vocab: {}", String::from_utf8_lossy(&out.stderr));

    let model = dir
        .path()
        .join("out/models/identity/ensemble.vsem")
        .into_os_string()
        .into_string()
        .unwrap();
    let manifest = corpus_dir.join("manifest.json");
    let out = visemic(&[
        "model",
        "inspect",
        "--model",
        &model,
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "inspect: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sil"));
}

#[test]
fn missing_config_fails_with_nonzero_exit() {
    let out = visemic(&["extract", "--config", "/nonexistent/config.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn baseline_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let cfg = config.to_str().unwrap();
    let corpus_dir = dir.path().join("corpus");
    assert!(visemic(&["synth", "--config", cfg, "--out", corpus_dir.to_str().unwrap()])
        .status
        .success());
    assert!(visemic(&["extract", "--config", cfg]).status.success());
    assert!(visemic(&["train", "--config", cfg]).status.success());
    let out = visemic(&["decode", "--config", cfg, "--baseline"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("identity_baseline"));
}
