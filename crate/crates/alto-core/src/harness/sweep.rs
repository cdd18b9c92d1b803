//! Grid sweeps over exploration factor, adaptor memory, learning rate, and
//! batch size. Every cell reuses the base configuration and the same run
//! seed, so cell outcomes depend only on the swept values — never on the
//! order cells are enumerated or executed in. Cells whose configuration is
//! inadmissible (for example an exploration factor at or beyond the
//! geometric-series limit) are reported as skipped instead of failing the
//! whole sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::config::ExperimentConfig;
use super::emit::fmt_value;
use super::run::{run_experiment, RunStatus};
use crate::error::{Error, Result};
use crate::schedule::EtaSchedule;

/// Value lists per swept axis; an empty list keeps the base configuration's
/// value for that axis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha: Vec<f64>,
    pub beta1: Vec<f64>,
    pub eta: Vec<f64>,
    pub batch_size: Vec<usize>,
}

/// A sweep: a fully-specified base experiment plus the grid to vary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub grid: SweepGrid,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("sweep: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("sweep serializes");
        text.push('\n');
        text
    }
}

/// Cell outcome: either a run status or skipped (inadmissible configuration).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Converged,
    Diverged,
    Skipped,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Converged => write!(f, "CONVERGED"),
            CellStatus::Diverged => write!(f, "DIVERGED"),
            CellStatus::Skipped => write!(f, "SKIPPED"),
        }
    }
}

/// One grid cell: the values it ran with and what came of it. `eta` and
/// `batch_size` are `None` when the axis was not swept and the base value
/// (possibly a non-constant schedule) was kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta1: f64,
    pub eta: Option<f64>,
    pub batch_size: Option<usize>,
    pub status: CellStatus,
    /// Validation message for skipped cells.
    pub reason: Option<String>,
    pub steps_taken: Option<u64>,
    pub final_loss: Option<f64>,
    pub best_loss: Option<f64>,
}

/// All cells, in grid order (alpha outermost, batch size innermost).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

fn cell_configs(config: &SweepConfig) -> Vec<(ExperimentConfig, SweepCell)> {
    let base = &config.base;
    let grid = &config.grid;
    let one_or = |values: &[f64], fallback: f64| -> Vec<f64> {
        if values.is_empty() {
            vec![fallback]
        } else {
            values.to_vec()
        }
    };
    let alphas = one_or(&grid.alpha, base.optimizer.config.alpha);
    let beta1s = one_or(&grid.beta1, base.optimizer.config.beta1);
    let etas: Vec<Option<f64>> = if grid.eta.is_empty() {
        vec![None]
    } else {
        grid.eta.iter().copied().map(Some).collect()
    };
    let batches: Vec<Option<usize>> = if grid.batch_size.is_empty() {
        vec![None]
    } else {
        grid.batch_size.iter().copied().map(Some).collect()
    };

    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &beta1 in &beta1s {
            for &eta in &etas {
                for &batch in &batches {
                    let mut experiment = base.clone();
                    experiment.optimizer.config.alpha = alpha;
                    experiment.optimizer.config.beta1 = beta1;
                    if let Some(eta) = eta {
                        experiment.optimizer.config.eta = EtaSchedule::constant(eta);
                    }
                    if let Some(batch) = batch {
                        experiment.run.batch_size = Some(batch);
                    }
                    let cell = SweepCell {
                        alpha,
                        beta1,
                        eta,
                        batch_size: batch.or(base.run.batch_size),
                        status: CellStatus::Skipped,
                        reason: None,
                        steps_taken: None,
                        final_loss: None,
                        best_loss: None,
                    };
                    cells.push((experiment, cell));
                }
            }
        }
    }
    cells
}

/// Runs every admissible cell (in parallel) and reports one row per cell.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let cells: Vec<SweepCell> = cell_configs(config)
        .into_par_iter()
        .map(|(experiment, mut cell)| -> Result<SweepCell> {
            match run_experiment(&experiment) {
                Ok(report) => {
                    cell.status = match report.status {
                        RunStatus::Converged => CellStatus::Converged,
                        RunStatus::Diverged => CellStatus::Diverged,
                    };
                    cell.steps_taken = Some(report.summary.steps_taken);
                    cell.final_loss = Some(report.summary.final_loss);
                    cell.best_loss = Some(report.summary.best_loss);
                    Ok(cell)
                }
                // Config-level rejections (including domain errors raised
                // while instantiating the problem or its starting point)
                // mark the cell skipped; anything else is a real failure.
                Err(Error::Config(reason)) | Err(Error::Domain(reason)) => {
                    cell.status = CellStatus::Skipped;
                    cell.reason = Some(reason);
                    Ok(cell)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { cells })
}

/// One CSV row per cell; skipped cells leave the outcome columns empty and
/// carry the rejection reason.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out =
        String::from("alpha,beta1,eta,batch_size,status,steps_taken,final_loss,best_loss,reason\n");
    for cell in &report.cells {
        let eta = cell.eta.map(fmt_value).unwrap_or_default();
        let batch = cell
            .batch_size
            .map(|b| b.to_string())
            .unwrap_or_default();
        let steps = cell
            .steps_taken
            .map(|s| s.to_string())
            .unwrap_or_default();
        let final_loss = cell.final_loss.map(fmt_value).unwrap_or_default();
        let best_loss = cell.best_loss.map(fmt_value).unwrap_or_default();
        let reason = cell
            .reason
            .as_deref()
            .map(|r| r.replace([',', '\n'], ";"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{eta},{batch},{},{steps},{final_loss},{best_loss},{reason}\n",
            fmt_value(cell.alpha),
            fmt_value(cell.beta1),
            cell.status,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OptimizerConfig;
    use crate::harness::config::{DiagnosticsSpec, OptimizerSpec, ProblemSpec, RunSpec};
    use crate::optim::OptimizerKind;

    fn base() -> ExperimentConfig {
        let mut config = OptimizerConfig::with_constant_eta(0.1);
        config.beta1 = 0.9;
        ExperimentConfig {
            problem: ProblemSpec::Quadratic {
                curvatures: vec![1.0],
                optimum: vec![0.0],
                start: vec![1.0],
            },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Esgd,
                config,
            },
            run: RunSpec {
                seed: 11,
                steps: Some(300),
                epochs: None,
                batch_size: None,
                record_every: 300,
                record_params: false,
            },
            diagnostics: DiagnosticsSpec::default(),
        }
    }

    fn grid() -> SweepGrid {
        SweepGrid {
            // beta1 = 0.9 admits |alpha| < 10, so 50 must be skipped. The
            // heavy-ball momentum buffer keeps curvature-1 runs stable up to
            // eta*c = 2(1 + beta2) = 3.8, so the divergent arm uses eta = 8.
            alpha: vec![0.0, 50.0],
            eta: vec![0.1, 8.0],
            ..SweepGrid::default()
        }
    }

    #[test]
    fn cells_cover_the_grid_with_expected_outcomes() {
        let report = run_sweep(&SweepConfig {
            base: base(),
            grid: grid(),
        })
        .unwrap();
        assert_eq!(report.cells.len(), 4);
        let outcome = |alpha: f64, eta: f64| -> CellStatus {
            report
                .cells
                .iter()
                .find(|c| c.alpha == alpha && c.eta == Some(eta))
                .unwrap()
                .status
        };
        assert_eq!(outcome(0.0, 0.1), CellStatus::Converged);
        assert_eq!(outcome(0.0, 8.0), CellStatus::Diverged);
        assert_eq!(outcome(50.0, 0.1), CellStatus::Skipped);
        assert_eq!(outcome(50.0, 8.0), CellStatus::Skipped);
        let skipped = report
            .cells
            .iter()
            .find(|c| c.status == CellStatus::Skipped)
            .unwrap();
        assert!(skipped.reason.is_some());
        assert!(skipped.final_loss.is_none());
    }

    #[test]
    fn cell_outcomes_are_independent_of_axis_order() {
        let forward = run_sweep(&SweepConfig {
            base: base(),
            grid: grid(),
        })
        .unwrap();
        let mut reversed_grid = grid();
        reversed_grid.alpha.reverse();
        reversed_grid.eta.reverse();
        let reversed = run_sweep(&SweepConfig {
            base: base(),
            grid: reversed_grid,
        })
        .unwrap();
        for cell in &forward.cells {
            let twin = reversed
                .cells
                .iter()
                .find(|c| c.alpha == cell.alpha && c.eta == cell.eta)
                .unwrap();
            assert_eq!(twin, cell);
        }
    }

    #[test]
    fn empty_axes_keep_the_base_configuration() {
        let report = run_sweep(&SweepConfig {
            base: base(),
            grid: SweepGrid::default(),
        })
        .unwrap();
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert_eq!(cell.alpha, 0.0);
        assert_eq!(cell.beta1, 0.9);
        assert_eq!(cell.eta, None);
        assert_eq!(cell.status, CellStatus::Converged);
    }

    #[test]
    fn sweep_csv_marks_skipped_cells() {
        let report = run_sweep(&SweepConfig {
            base: base(),
            grid: grid(),
        })
        .unwrap();
        let csv = sweep_csv(&report);
        assert!(csv.starts_with("alpha,beta1,eta,batch_size,status,"));
        assert_eq!(csv.matches("SKIPPED").count(), 2);
        assert_eq!(csv.matches("CONVERGED").count(), 1);
        assert_eq!(csv.matches("DIVERGED").count(), 1);
    }

    #[test]
    fn sweep_config_round_trips_through_json() {
        let config = SweepConfig {
            base: base(),
            grid: grid(),
        };
        let back = SweepConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(back, config);
    }
}
