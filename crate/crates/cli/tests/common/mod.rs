#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_auscult");

pub fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(BIN).args(args).output().expect("the binary starts")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Runs a command that must succeed and returns its stdout.
pub fn ok<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> String {
    let out = run(args);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    stdout(&out)
}

/// `synth` followed by `extract`; returns the feature CSV path.
pub fn corpus_features(dir: &Path, normal: usize, dysphagic: usize, separation: f64, seed: u64) -> std::path::PathBuf {
    let corpus = dir.join(format!("corpus_{seed}_{separation}"));
    let features = dir.join(format!("features_{seed}_{separation}.csv"));
    ok(&[
        "synth".to_string(),
        "--out".into(),
        p(&corpus),
        "--normal".into(),
        normal.to_string(),
        "--dysphagic".into(),
        dysphagic.to_string(),
        "--separation".into(),
        separation.to_string(),
        "--seed".into(),
        seed.to_string(),
    ]);
    ok(&["extract".to_string(), "--annotations".into(), p(&corpus.join("annotations.csv")), "--out".into(), p(&features)]);
    features
}
