use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigcascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn last_line(out: &Output) -> String {
    stdout(out).lines().last().unwrap_or_default().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EMPTY_MODEL: &str = "sigcascade-model 1\nkind tree-boost\nn_features 5\nbase_score -50.0\n\
threshold 0.0\nlinear none\ntrees 0\nend\n";

#[test]
fn cascade_writes_trace_model_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "cascade", "--synth", "default", "--measure", "ams2", "--variant", "fresh", "--T", "5",
        "--seed", "7", "--out-dir", s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(last_line(&out).starts_with("status=ok command=cascade rounds=5"));

    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "round,u_prev,weighted_error,train_sig,val_sig,u_next");
    assert!(lines.len() - 1 <= 5);
    assert!(!trace.contains('\r'));

    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("data_source = synth:default"));
    assert!(manifest.contains("max_rounds = 5"));
    assert!(manifest.contains("seed = 7"));
    assert!(dir.path().join("model.txt").exists());
}

#[test]
fn data_file_hash_matches_and_input_is_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("events.csv");
    let data = sigcascade::data::synthesize(&sigcascade::data::SynthConfig {
        n_signal: 300,
        n_background: 300,
        missing_rate: 0.1,
        ..Default::default()
    })
    .unwrap();
    sigcascade::data::write_csv(&data, &csv).unwrap();
    let before = std::fs::read(&csv).unwrap();

    let out_dir = dir.path().join("run");
    let sub = dir.path().join("sub.csv");
    let out = run(&[
        "cascade", "--data", s(&csv), "--T", "3", "--out-dir", s(&out_dir), "--submission", s(&sub),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&csv).unwrap(), before);

    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    let digest = hex::encode(Sha256::digest(&before));
    assert!(manifest.contains(&format!("data_sha256 = {digest}")), "{manifest}");
    assert!(manifest.contains("rows = 600"));

    let submission = std::fs::read_to_string(&sub).unwrap();
    assert!(submission.starts_with("EventId,RankOrder,Class\n"));
    assert_eq!(submission.lines().count(), 601);
}

#[test]
fn missing_config_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let out = run(&[
        "cascade", "--config", s(&dir.path().join("absent.cfg")), "--synth", "default",
        "--out-dir", s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
    assert_eq!(last_line(&out), "status=error command=cascade exit=1");
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "max_rounds = 3\nnot_a_key = 1\n").unwrap();
    let out = run(&["cascade", "--config", s(&cfg), "--synth", "default", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));

    let out = run(&["cascade", "--synth", "default", "--u0=-1", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["cascade", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["cascade", "--synth", "default", "--variant", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "max_rounds = 3\nextra_rounds_after_stall = 10\nlearner_rounds = 10\nseed = 4\n")
        .unwrap();
    let a = dir.path().join("a");
    let out = run(&["cascade", "--config", s(&cfg), "--synth", "default", "--out-dir", s(&a)]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("max_rounds = 3") && manifest.contains("learner_rounds = 10"));
    assert!(manifest.contains("seed = 4"));

    let b = dir.path().join("b");
    let out = run(&[
        "cascade", "--config", s(&cfg), "--synth", "default", "--T", "2", "--seed", "9", "--out-dir", s(&b),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = std::fs::read_to_string(b.join("manifest.txt")).unwrap();
    assert!(manifest.contains("max_rounds = 2") && manifest.contains("learner_rounds = 10"));
    assert!(manifest.contains("seed = 9"));
    let trace = std::fs::read_to_string(b.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["cascade", "--data", s(&dir.path().join("missing.csv")), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "EventId,x0,Weight,Label\n1,0.5,-1.0,s\n2,0.1,1.0,b\n").unwrap();
    let out = run(&["cascade", "--data", s(&bad), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_summary_mode_matches_reference() {
    let out = run(&["eval", "--summary", "100,400", "--b-reg", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let line = last_line(&out);
    assert!(line.contains("ams2=4.81077"), "{line}");
    assert!(line.contains("ams3=5.00000"), "{line}");
}

#[test]
fn eval_of_model_selecting_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("empty.txt");
    std::fs::write(&model, EMPTY_MODEL).unwrap();
    let sub = dir.path().join("sub.csv");
    let out = run(&["eval", "--model", s(&model), "--synth", "default", "--submission", s(&sub)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let line = last_line(&out);
    assert!(line.contains("s=0 b=0 b_reg=10.0000 ams2=0 ams3=0"), "{line}");
    let text = std::fs::read_to_string(&sub).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",b")));
}

#[test]
fn eval_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("empty.txt");
    std::fs::write(&model, EMPTY_MODEL).unwrap();
    let out = run(&["eval", "--model", s(&model), "--synth", "dim=3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_passes_and_fault_fails() {
    let out = run(&["check", "--instances", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(last_line(&out), "status=ok command=check passed=5 failed=0");

    let out = run(&["check", "--instances", "100", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(4));
    let text = stdout(&out);
    assert!(text.contains("FAIL fenchel-young gap"));
    assert!(text.contains("first failing instance: ams2-faulty"));
    assert_eq!(last_line(&out), "status=error command=check exit=4");
}
