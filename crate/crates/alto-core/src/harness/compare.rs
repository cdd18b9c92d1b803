//! Side-by-side comparison of several optimizers on one problem: every entry
//! shares the problem, seed, budget, and diagnostics, so differences in the
//! traces are attributable to the update rules alone. Entries run in
//! parallel; each run is independently seeded and deterministic, so the
//! result is identical to running them sequentially.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DiagnosticsSpec, ExperimentConfig, OptimizerSpec, ProblemSpec, RunSpec};
use super::emit::fmt_value;
use super::run::{run_experiment, RunReport};
use crate::error::{Error, Result};

/// One optimizer entry in a comparison, with a display label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledOptimizer {
    pub label: String,
    pub kind: crate::optim::OptimizerKind,
    pub config: crate::config::OptimizerConfig,
}

/// A comparison: one problem and run budget, two or more optimizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub problem: ProblemSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    pub optimizers: Vec<LabeledOptimizer>,
}

impl CompareConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: CompareConfig =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("comparison: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("comparison serializes");
        text.push('\n');
        text
    }

    /// Per-entry experiment configuration.
    pub fn experiment(&self, entry: &LabeledOptimizer) -> ExperimentConfig {
        ExperimentConfig {
            problem: self.problem.clone(),
            optimizer: OptimizerSpec {
                kind: entry.kind,
                config: entry.config.clone(),
            },
            run: self.run.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.optimizers.len() < 2 {
            return Err(Error::config(
                "a comparison needs at least two optimizers",
            ));
        }
        for entry in &self.optimizers {
            if entry.label.is_empty()
                || entry.label.contains(',')
                || entry.label.contains('\n')
            {
                return Err(Error::config(format!(
                    "label {:?} must be nonempty and free of commas/newlines",
                    entry.label
                )));
            }
            self.experiment(entry).validate()?;
        }
        let mut labels: Vec<&str> = self.optimizers.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.optimizers.len() {
            return Err(Error::config("comparison labels must be unique"));
        }
        Ok(())
    }
}

/// All per-entry reports, in the configured order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub entries: Vec<(String, RunReport)>,
}

/// Runs every entry of the comparison (in parallel) and collects the reports
/// in the configured order.
pub fn compare_runs(config: &CompareConfig) -> Result<CompareReport> {
    config.validate()?;
    let entries: Vec<(String, RunReport)> = config
        .optimizers
        .par_iter()
        .map(|entry| {
            run_experiment(&config.experiment(entry)).map(|report| (entry.label.clone(), report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport { entries })
}

/// Aligned per-step loss table: one `step` column plus a loss column per
/// entry. Rows are the union of recorded steps; entries that have no row at
/// a step (for example after diverging) leave the field empty.
pub fn comparison_csv(report: &CompareReport) -> String {
    let mut out = String::from("step");
    for (label, _) in &report.entries {
        out.push_str(&format!(",{label}_loss"));
    }
    out.push('\n');
    let mut rows: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
    let width = report.entries.len();
    for (i, (_, run)) in report.entries.iter().enumerate() {
        for record in &run.records {
            rows.entry(record.step).or_insert_with(|| vec![None; width])[i] = Some(record.loss);
        }
    }
    for (step, losses) in rows {
        out.push_str(&step.to_string());
        for loss in losses {
            out.push(',');
            if let Some(loss) = loss {
                out.push_str(&fmt_value(loss));
            }
        }
        out.push('\n');
    }
    out
}

/// One summary row per entry: label, status, steps, final and best loss.
pub fn compare_summary_csv(report: &CompareReport) -> String {
    let mut out = String::from("label,status,steps_taken,final_loss,best_loss\n");
    for (label, run) in &report.entries {
        out.push_str(&format!(
            "{label},{},{},{},{}\n",
            run.status,
            run.summary.steps_taken,
            fmt_value(run.summary.final_loss),
            fmt_value(run.summary.best_loss)
        ));
    }
    out
}
