//! End-to-end runs of the `sslsop` binary: the full synth -> validate ->
//! train -> predict -> experiment workflow plus the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn sslsop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sslsop"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

const SYNTH_SPEC: &str = r#"{
    "clusters": 2,
    "points_per_cluster": 15,
    "input_dim": 3,
    "space": { "type": "balanced-taxonomy", "branching": 2, "depth": 2 },
    "noise": 0.0,
    "seed": 7,
    "opposed_rules": true
}"#;

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "spec.json", SYNTH_SPEC);

    let out = sslsop(&["synth", "spec.json", "-o", "data.json"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = sslsop(&["validate", "data.json"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("valid: 30 points"));

    let out = sslsop(
        &[
            "train",
            "data.json",
            "--k",
            "5",
            "--C",
            "0.1",
            "--eta",
            "0.1",
            "--iters",
            "15",
            "-o",
            "model.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = sslsop(
        &["predict", "model.json", "data.json", "-o", "preds.json"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let preds = std::fs::read_to_string(dir.path().join("preds.json")).unwrap();
    assert!(preds.contains("\"predictions\""));
    assert!(String::from_utf8_lossy(&out.stdout).contains("average loss over 30"));
}

#[test]
fn experiment_and_baseline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        r#"{{
            "data": {{ "synth": {} }},
            "folds": 3,
            "labeled_fraction": 0.5,
            "seed": 11,
            "k": 5, "c": 0.1, "eta": 0.1, "iters": 10
        }}"#,
        SYNTH_SPEC
    );
    write(dir.path(), "exp.json", &config);

    let out = sslsop(
        &["experiment", "exp.json", "-o", "results.json"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let results = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
    assert!(results.contains("\"method\": \"sslsop\""));

    let out = sslsop(
        &[
            "experiment",
            "exp.json",
            "--baseline",
            "-o",
            "baseline.csv",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("baseline.csv")).unwrap();
    assert!(csv.starts_with("fold,loss\n"));
    assert_eq!(csv.lines().count(), 4); // header + 3 folds
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = sslsop(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = sslsop(&[], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = sslsop(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    let out = sslsop(&["validate", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    write(
        dir.path(),
        "bad.json",
        r#"{
            "space": { "type": "balanced-taxonomy", "branching": 2, "depth": 1 },
            "points": [ { "input": [0.0] } ]
        }"#,
    );
    let out = sslsop(&["validate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no labeled points"));
}

#[test]
fn numeric_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tiny.json",
        r#"{
            "space": { "type": "balanced-taxonomy", "branching": 2, "depth": 1 },
            "points": [
                { "input": [1.0], "truth": "n.0" },
                { "input": [2.0], "truth": "n.1" }
            ]
        }"#,
    );
    // An absurd step size overflows the weights within a few iterations.
    let out = sslsop(
        &[
            "train",
            "tiny.json",
            "--k",
            "2",
            "--eta",
            "1e300",
            "--iters",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // The same failure inside an experiment fold keeps the numeric code.
    let config = format!(
        r#"{{
            "data": {{ "synth": {} }},
            "folds": 3, "labeled_fraction": 1.0, "seed": 4,
            "k": 5, "eta": 1e300, "iters": 5
        }}"#,
        SYNTH_SPEC
    );
    write(dir.path(), "bad_exp.json", &config);
    let out = sslsop(&["experiment", "bad_exp.json", "-o", "r.json"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("fold 0"), "{stderr}");
}

#[test]
fn predict_rejects_mismatched_spaces() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "spec.json", SYNTH_SPEC);
    sslsop(&["synth", "spec.json", "-o", "data.json"], dir.path());
    let out = sslsop(
        &[
            "train",
            "data.json",
            "--k",
            "3",
            "--iters",
            "2",
            "-o",
            "model.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());

    write(
        dir.path(),
        "other.json",
        r#"{
            "space": { "type": "sequence", "alphabet": ["a", "b"], "length": 3 },
            "points": [ { "input": [[0.0], [0.1], [0.2]], "truth": ["a", "a", "b"] } ]
        }"#,
    );
    let out = sslsop(&["predict", "model.json", "other.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("output space"));
}
