//! Command-line front end for the experiment harness.
//!
//! Subcommands take JSON configuration files and write flat CSV/JSON/JSONL
//! artifacts into the directory named by `ALTO_OUT_DIR` (default: the
//! current directory). Exit codes: 0 on success, 2 when any run terminated
//! DIVERGED, 1 on configuration or I/O errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use alto_core::harness::{
    compare_runs, compare_summary_csv, comparison_csv, epochs_to_csv, report_to_json,
    run_experiment, run_sweep, sharpness_to_csv, sweep_csv, trace_to_csv, trace_to_jsonl,
    CompareConfig, ExperimentConfig, LabeledOptimizer, ProblemSpec, RunReport, RunStatus,
    SweepConfig, SweepGrid,
};

/// Environment variable naming the artifact output directory.
const OUT_DIR_VAR: &str = "ALTO_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "alto",
    version,
    about = "Deterministic optimizer experiments: runs, comparisons, sweeps, diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace, report, and loss curves.
    Run {
        /// Experiment configuration (JSON).
        config: PathBuf,
    },
    /// Run several configurations that share a problem and budget, and
    /// write per-step aligned losses plus a summary table.
    Compare {
        /// Two or more experiment configurations (JSON) differing only in
        /// their optimizer section.
        #[arg(num_args = 2.., required = true)]
        configs: Vec<PathBuf>,
    },
    /// Expand a hyperparameter grid around a base configuration; cells
    /// violating the exploration-factor constraint are marked SKIPPED.
    Sweep {
        /// Base experiment configuration (JSON).
        config: PathBuf,
        /// Grid axes over alpha, beta1, eta, and batch size (JSON).
        #[arg(long)]
        grid: PathBuf,
    },
    /// Run with diagnostics forced on: a sharpness cadence of a tenth of
    /// the budget and a drift window of 10, unless the configuration
    /// already sets them.
    Diagnose {
        /// Experiment configuration (JSON).
        config: PathBuf,
    },
    /// Dense trajectory dump for a 2-D problem: every step recorded with
    /// its coordinates.
    Trace2d {
        /// Experiment configuration (JSON) for a 2-dimensional problem.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; anything else is a
            // usage mistake and exits with the config-error code.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Whether every constituent run finished its budget.
enum Outcome {
    Clean,
    Diverged,
}

fn dispatch(command: &Command) -> Result<Outcome> {
    let out_dir = output_dir()?;
    match command {
        Command::Run { config } => cmd_run(config, &out_dir),
        Command::Compare { configs } => cmd_compare(configs, &out_dir),
        Command::Sweep { config, grid } => cmd_sweep(config, grid, &out_dir),
        Command::Diagnose { config } => cmd_diagnose(config, &out_dir),
        Command::Trace2d { config } => cmd_trace2d(config, &out_dir),
    }
}

fn output_dir() -> Result<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Artifact base name: the configuration file's stem.
fn stem_of(path: &Path) -> Result<String> {
    match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) if !stem.is_empty() => Ok(stem.to_string()),
        _ => bail!("cannot derive an artifact name from {}", path.display()),
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes the full artifact set for one finished run and prints its
/// one-line summary.
fn emit_run(report: &RunReport, stem: &str, out_dir: &Path) -> Result<()> {
    write_artifact(
        out_dir,
        &format!("{stem}.trace.csv"),
        &trace_to_csv(stem, &report.records),
    )?;
    write_artifact(
        out_dir,
        &format!("{stem}.trace.jsonl"),
        &trace_to_jsonl(stem, &report.records)?,
    )?;
    write_artifact(out_dir, &format!("{stem}.report.json"), &report_to_json(report)?)?;
    if !report.epoch_losses.is_empty() {
        write_artifact(
            out_dir,
            &format!("{stem}.epochs.csv"),
            &epochs_to_csv(&report.epoch_losses),
        )?;
    }
    if !report.sharpness.is_empty() {
        write_artifact(
            out_dir,
            &format!("{stem}.sharpness.csv"),
            &sharpness_to_csv(&report.sharpness),
        )?;
    }
    println!(
        "{stem}: {} steps={} final_loss={:.6e} best_loss={:.6e} ({:.2}s)",
        report.status,
        report.summary.steps_taken,
        report.summary.final_loss,
        report.summary.best_loss,
        report.summary.wall_clock_secs,
    );
    Ok(())
}

fn status_outcome(statuses: impl IntoIterator<Item = RunStatus>) -> Outcome {
    if statuses.into_iter().any(|s| s == RunStatus::Diverged) {
        Outcome::Diverged
    } else {
        Outcome::Clean
    }
}

fn cmd_run(config_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let config = read_config(config_path)?;
    let report = run_experiment(&config)?;
    emit_run(&report, &stem_of(config_path)?, out_dir)?;
    Ok(status_outcome([report.status]))
}

fn cmd_diagnose(config_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let mut config = read_config(config_path)?;
    if config.diagnostics.sharpness_every == 0 {
        config.diagnostics.sharpness_every = (budget_steps(&config)? / 10).max(1);
    }
    if config.diagnostics.drift_window == 0 {
        config.diagnostics.drift_window = 10;
    }
    let report = run_experiment(&config)?;
    emit_run(&report, &format!("{}.diagnose", stem_of(config_path)?), out_dir)?;
    Ok(status_outcome([report.status]))
}

/// Total step budget implied by the run section, expanding epochs through
/// the dataset size.
fn budget_steps(config: &ExperimentConfig) -> Result<u64> {
    if let Some(steps) = config.run.steps {
        return Ok(steps);
    }
    let epochs = config
        .run
        .epochs
        .context("run needs either steps or epochs")?;
    let batch = config
        .run
        .batch_size
        .context("epoch budgets need a batch size")? as u64;
    let n_train = match &config.problem {
        ProblemSpec::SinMlp { n_train, .. } => *n_train as u64,
        _ => bail!("epoch budgets need a dataset-backed problem"),
    };
    Ok(epochs * n_train.div_ceil(batch))
}

fn cmd_trace2d(config_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let mut config = read_config(config_path)?;
    let dim = config.problem.dim()?;
    if dim != 2 {
        bail!("trace2d needs a 2-dimensional problem, got dimension {dim}");
    }
    config.run.record_every = 1;
    config.run.record_params = true;
    let stem = stem_of(config_path)?;
    let report = run_experiment(&config)?;
    write_artifact(
        out_dir,
        &format!("{stem}.trace2d.csv"),
        &trace_to_csv(&stem, &report.records),
    )?;
    println!(
        "{stem}: {} steps={} rows={}",
        report.status,
        report.summary.steps_taken,
        report.records.len(),
    );
    Ok(status_outcome([report.status]))
}

fn cmd_compare(config_paths: &[PathBuf], out_dir: &Path) -> Result<Outcome> {
    let mut configs = Vec::with_capacity(config_paths.len());
    for path in config_paths {
        configs.push((path, read_config(path)?));
    }
    let compare = assemble_comparison(&configs)?;
    let report = compare_runs(&compare)?;
    write_artifact(out_dir, "compare.trace.csv", &comparison_csv(&report))?;
    write_artifact(out_dir, "compare.summary.csv", &compare_summary_csv(&report))?;
    let json = serde_json::to_string_pretty(&report).context("serializing comparison report")?;
    write_artifact(out_dir, "compare.report.json", &format!("{json}\n"))?;
    for (label, entry) in &report.entries {
        println!(
            "{label}: {} steps={} final_loss={:.6e}",
            entry.status, entry.summary.steps_taken, entry.summary.final_loss,
        );
    }
    Ok(status_outcome(report.entries.iter().map(|(_, r)| r.status)))
}

/// Merges N single-run configurations into one comparison. They must agree
/// on everything except the optimizer section; labels come from the
/// optimizer names, suffixed when a name repeats.
fn assemble_comparison(configs: &[(&PathBuf, ExperimentConfig)]) -> Result<CompareConfig> {
    let (first_path, first) = &configs[0];
    for (path, config) in &configs[1..] {
        for (section, a, b) in [
            (
                "problem",
                serde_json::to_value(&first.problem)?,
                serde_json::to_value(&config.problem)?,
            ),
            (
                "run",
                serde_json::to_value(&first.run)?,
                serde_json::to_value(&config.run)?,
            ),
            (
                "diagnostics",
                serde_json::to_value(&first.diagnostics)?,
                serde_json::to_value(&config.diagnostics)?,
            ),
        ] {
            if a != b {
                bail!(
                    "comparison inputs must share the {section} section, but {} and {} differ",
                    first_path.display(),
                    path.display()
                );
            }
        }
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut optimizers = Vec::with_capacity(configs.len());
    for (_, config) in configs {
        let name = config.optimizer.kind.name();
        let seen = counts.entry(name).or_insert(0);
        *seen += 1;
        let label = if *seen == 1 {
            name.to_string()
        } else {
            format!("{name}-{seen}")
        };
        optimizers.push(LabeledOptimizer {
            label,
            kind: config.optimizer.kind,
            config: config.optimizer.config.clone(),
        });
    }
    Ok(CompareConfig {
        problem: first.problem.clone(),
        run: first.run.clone(),
        diagnostics: first.diagnostics.clone(),
        optimizers,
    })
}

fn cmd_sweep(config_path: &Path, grid_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let base = read_config(config_path)?;
    let grid_text = std::fs::read_to_string(grid_path)
        .with_context(|| format!("reading {}", grid_path.display()))?;
    let grid: SweepGrid = serde_json::from_str(&grid_text)
        .with_context(|| format!("parsing {}", grid_path.display()))?;
    let sweep = SweepConfig { base, grid };
    let report = run_sweep(&sweep)?;
    write_artifact(out_dir, "sweep.csv", &sweep_csv(&report))?;
    let json = serde_json::to_string_pretty(&report).context("serializing sweep report")?;
    write_artifact(out_dir, "sweep.json", &format!("{json}\n"))?;
    println!("sweep: {} cells", report.cells.len());
    // A completed sweep is a success even when individual cells diverged;
    // the per-cell statuses are the result, not an error.
    Ok(Outcome::Clean)
}
