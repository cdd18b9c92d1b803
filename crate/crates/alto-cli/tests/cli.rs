//! End-to-end tests of the binary: exit codes, artifact placement, and the
//! shape of the emitted tables.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alto_core::harness::{report_from_json, trace_from_csv, RunStatus};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alto"))
}

/// Runs the binary with `ALTO_OUT_DIR` pointed at `out_dir`.
fn run_cli(out_dir: &Path, args: &[&str]) -> Output {
    binary()
        .args(args)
        .env("ALTO_OUT_DIR", out_dir)
        .output()
        .expect("binary should launch")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn read_artifact(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("expected artifact {name}: {e}"))
}

const CONTRACTING_QUADRATIC: &str = r#"{
  "problem": { "name": "quadratic", "curvatures": [1.0], "optimum": [0.0], "start": [1.0] },
  "optimizer": { "kind": "sgd", "config": { "eta": { "type": "constant", "value": 0.1 } } },
  "run": { "seed": 7, "steps": 50, "record_every": 10 }
}"#;

/// Plain gradient descent at eta * curvature = 8 has growth factor 7 per
/// step, so the loss overflows to infinity well inside the budget.
const EXPLODING_QUADRATIC: &str = r#"{
  "problem": { "name": "quadratic", "curvatures": [4.0], "optimum": [0.0], "start": [1.0] },
  "optimizer": { "kind": "sgd", "config": { "eta": { "type": "constant", "value": 2.0 } } },
  "run": { "seed": 7, "steps": 400, "record_every": 50 }
}"#;

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "contract.json", CONTRACTING_QUADRATIC);
    let output = run_cli(dir.path(), &["run", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("contract: CONVERGED steps=50"), "{stdout}");

    let trace = read_artifact(dir.path(), "contract.trace.csv");
    let rows = trace_from_csv(&trace).unwrap();
    assert_eq!(rows.len(), 6); // steps 0, 10, 20, 30, 40, 50
    assert!(rows.iter().all(|(id, _)| id == "contract"));

    let report = report_from_json(&read_artifact(dir.path(), "contract.report.json")).unwrap();
    assert_eq!(report.status, RunStatus::Converged);
    assert_eq!(report.summary.steps_taken, 50);

    let jsonl = read_artifact(dir.path(), "contract.trace.jsonl");
    assert_eq!(jsonl.lines().count(), 6);
    // No epochs and no sharpness were configured, so those files are absent.
    assert!(!dir.path().join("contract.epochs.csv").exists());
    assert!(!dir.path().join("contract.sharpness.csv").exists());
}

#[test]
fn diverged_run_exits_two_with_artifacts_intact() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "explode.json", EXPLODING_QUADRATIC);
    let output = run_cli(dir.path(), &["run", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let report = report_from_json(&read_artifact(dir.path(), "explode.report.json")).unwrap();
    assert_eq!(report.status, RunStatus::Diverged);
    assert!(report.summary.final_loss.is_finite());
}

#[test]
fn config_mistakes_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // Malformed JSON.
    let bad_json = write_config(dir.path(), "bad.json", "{ not json");
    let output = run_cli(dir.path(), &["run", bad_json.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!String::from_utf8(output.stderr).unwrap().is_empty());

    // Unknown hyperparameter name.
    let typo = CONTRACTING_QUADRATIC.replace("\"seed\"", "\"sede\"");
    let typo_path = write_config(dir.path(), "typo.json", &typo);
    let output = run_cli(dir.path(), &["run", typo_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));

    // Missing file.
    let output = run_cli(dir.path(), &["run", "no-such-config.json"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_cli(dir.path(), &[]);
    assert_eq!(output.status.code(), Some(1));
    let output = run_cli(dir.path(), &["--help"]);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn compare_aligns_runs_and_dedupes_labels() {
    let dir = tempfile::tempdir().unwrap();
    let sgd = write_config(dir.path(), "a.json", CONTRACTING_QUADRATIC);
    let sgd_again = write_config(dir.path(), "b.json", CONTRACTING_QUADRATIC);
    let momentum = write_config(
        dir.path(),
        "c.json",
        &CONTRACTING_QUADRATIC.replace("\"sgd\"", "\"momentum-sgd\""),
    );
    let output = run_cli(
        dir.path(),
        &[
            "compare",
            sgd.to_str().unwrap(),
            sgd_again.to_str().unwrap(),
            momentum.to_str().unwrap(),
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");

    let trace = read_artifact(dir.path(), "compare.trace.csv");
    assert!(trace.starts_with("step,sgd_loss,sgd-2_loss,momentum-sgd_loss\n"), "{trace}");
    let summary = read_artifact(dir.path(), "compare.summary.csv");
    assert!(summary.contains("\nsgd,CONVERGED,50,"), "{summary}");
    assert!(summary.contains("\nsgd-2,CONVERGED,50,"), "{summary}");
    assert!(summary.contains("\nmomentum-sgd,CONVERGED,50,"), "{summary}");
    assert!(dir.path().join("compare.report.json").exists());
}

#[test]
fn compare_rejects_mismatched_problems() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.json", CONTRACTING_QUADRATIC);
    let different_problem = CONTRACTING_QUADRATIC.replace("[1.0]", "[2.0]");
    let b = write_config(dir.path(), "b.json", &different_problem);
    let output = run_cli(dir.path(), &["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("problem"), "{stderr}");

    // A single config is a usage error.
    let output = run_cli(dir.path(), &["compare", a.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn compare_exits_two_when_any_entry_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let stable = write_config(dir.path(), "stable.json", EXPLODING_QUADRATIC);
    let unstable = write_config(
        dir.path(),
        "unstable.json",
        &EXPLODING_QUADRATIC.replace("\"sgd\"", "\"momentum-sgd\""),
    );
    // Momentum at beta2 = 0.9 keeps eta * c = 8 under its threshold of
    // 2 * (1 + beta2) / eta... the plain run still explodes, so the pair
    // mixes one CONVERGED and one DIVERGED entry.
    let output = run_cli(
        dir.path(),
        &["compare", stable.to_str().unwrap(), unstable.to_str().unwrap()],
    );
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn sweep_marks_inadmissible_cells_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    // A 400-step budget gives the eta = 8.0 cell room to overflow.
    let long_base = CONTRACTING_QUADRATIC.replace("\"steps\": 50", "\"steps\": 400");
    let base = write_config(dir.path(), "base.json", &long_base);
    let grid = write_config(
        dir.path(),
        "grid.json",
        r#"{ "alpha": [0.0, 200.0], "eta": [0.1, 8.0] }"#,
    );
    let output = run_cli(
        dir.path(),
        &["sweep", base.to_str().unwrap(), "--grid", grid.to_str().unwrap()],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let table = read_artifact(dir.path(), "sweep.csv");
    assert_eq!(table.matches("SKIPPED").count(), 2); // alpha = 200 at both etas
    assert_eq!(table.matches("CONVERGED").count(), 1);
    assert_eq!(table.matches("DIVERGED").count(), 1); // eta * c = 8 explodes
    assert!(dir.path().join("sweep.json").exists());
}

#[test]
fn diagnose_forces_sharpness_and_drift_cadences() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "probe.json", CONTRACTING_QUADRATIC);
    let output = run_cli(dir.path(), &["diagnose", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    // 50 steps => sharpness every 5 steps => 11 estimates including step 0.
    let sharpness = read_artifact(dir.path(), "probe.diagnose.sharpness.csv");
    assert_eq!(sharpness.lines().count(), 12);
    let trace = read_artifact(dir.path(), "probe.diagnose.trace.csv");
    let rows = trace_from_csv(&trace).unwrap();
    assert!(rows.iter().any(|(_, r)| r.windowed_drift.is_some()));
    assert!(rows.iter().any(|(_, r)| r.lambda_max.is_some()));
}

#[test]
fn trace2d_records_every_step_with_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let rosenbrock = r#"{
      "problem": { "name": "rosenbrock", "start": [-1.2, 1.0] },
      "optimizer": { "kind": "sgd", "config": { "eta": { "type": "constant", "value": 0.001 } } },
      "run": { "seed": 3, "steps": 25, "record_every": 5 }
    }"#;
    let config = write_config(dir.path(), "banana.json", rosenbrock);
    let output = run_cli(dir.path(), &["trace2d", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let trace = read_artifact(dir.path(), "banana.trace2d.csv");
    let rows = trace_from_csv(&trace).unwrap();
    // record_every is overridden to 1: all 26 rows, each with coordinates.
    assert_eq!(rows.len(), 26);
    assert!(rows.iter().all(|(_, r)| r.theta.as_ref().map(Vec::len) == Some(2)));

    // 1-D problems are rejected up front.
    let config_1d = write_config(dir.path(), "flat.json", CONTRACTING_QUADRATIC);
    let output = run_cli(dir.path(), &["trace2d", config_1d.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn output_directory_is_created_on_demand() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "contract.json", CONTRACTING_QUADRATIC);
    let nested = dir.path().join("artifacts/run-1");
    let output = run_cli(&nested, &["run", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(nested.join("contract.trace.csv").exists());
}
