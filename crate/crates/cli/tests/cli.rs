use std::path::Path;
use std::process::{Command, Output};

fn dgad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgad"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic edge list with block labels.
fn synth(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("sbm.txt");
    let o = dgad(&[
        "synth",
        "--out",
        s(&out),
        "--nodes",
        "40",
        "--snapshots",
        "6",
        "--p-in",
        "0.3",
        "--p-out",
        "0.02",
        "--activity",
        "0.5",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn ingest_reports_snapshot_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("edges.txt");
    std::fs::write(
        &input,
        "% comment\n1 2 1 10\n2 3 1 11\n3 4 1 12\n1 2 1 13\n4 5 1 14\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = dgad(&[
        "ingest",
        "--input",
        s(&input),
        "--snapshot-size",
        "2",
        "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("T=2 n=5 m=4"), "{}", stdout(&o));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn missing_input_exits_2_and_names_path() {
    let o = dgad(&["ingest", "--input", "/nonexistent/edges.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("/nonexistent/edges.txt"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn zero_snapshot_size_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("edges.txt");
    std::fs::write(&input, "1 2 1 10\n").unwrap();
    let o = dgad(&["ingest", "--input", s(&input), "--snapshot-size", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn help_lists_defaults() {
    let o = dgad(&["train", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in [
        "--tau",
        "[default: 2]",
        "--snapshot-size",
        "[default: 1000]",
        "--lr",
        "[default: 0.001]",
    ] {
        assert!(text.contains(needle), "missing {needle} in help:\n{text}");
    }
}

#[test]
fn unknown_flag_exits_1() {
    assert_eq!(dgad(&["train", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn train_then_evaluate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    let blocks = format!("{}.blocks.json", s(&input));
    let out = dir.path().join("run");
    let common = ["--per-timestamp", "--dim", "8", "--epochs", "3"];

    let mut train = vec!["train", "--input", s(&input), "--out-dir", s(&out)];
    train.extend(common);
    let o = dgad(&train);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["checkpoint.json", "loss.csv", "train_manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let evaluate = || {
        let o = dgad(&[
            "evaluate",
            "--input",
            s(&input),
            "--out-dir",
            s(&out),
            "--blocks",
            &blocks,
            "--roc",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("mean AUC"));
        let scores = std::fs::read(out.join("scores.csv")).unwrap();
        let mut report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
        report.as_object_mut().unwrap().remove("runtime_seconds");
        (scores, report)
    };
    let first = evaluate();
    let second = evaluate();
    assert_eq!(first, second);
    assert!(out.join("roc.csv").exists());
    let header = String::from_utf8_lossy(&first.0)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "snapshot,src,dst,label,score");
}

#[test]
fn evaluate_without_checkpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    let out = dir.path().join("empty");
    let o = dgad(&["evaluate", "--input", s(&input), "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("checkpoint.json"), "{}", stderr(&o));
}

#[test]
fn anomaly_fraction_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    let out = dir.path().join("run");
    let o = dgad(&[
        "run",
        "--input",
        s(&input),
        "--out-dir",
        s(&out),
        "--snapshot-size",
        "30",
        "--dim",
        "8",
        "--epochs",
        "1",
        "--anomaly-pct",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
