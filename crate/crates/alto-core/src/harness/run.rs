//! Executes one configured experiment and produces a structured report:
//! per-step trace rows, epoch-level train/validation losses for dataset
//! problems, sharpness estimates on a cadence, and a run summary.
//!
//! Trace rows follow the online convention: row `k` records the loss and
//! gradient evaluated at the pre-step iterate that produced step `k`, so the
//! recorded losses sum to exactly the online regret terms, while `step_norm`,
//! `drift`, and the optional parameter snapshot describe the post-step
//! iterate. Row 0 is the starting point.
//!
//! A run terminates `Diverged` (instead of erroring) when the trajectory
//! produces a non-finite loss, gradient, or iterate, or walks out of the
//! oracle's domain; the summary then keeps the last finite iterate. A failure
//! at the starting point itself is a configuration mistake and is reported as
//! a hard error.

use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OracleHandle};
use super::rng::{mix_seed, stream_rng, STREAM_BATCHES, STREAM_SHARPNESS};
use crate::diagnostics::{top_hessian_eigenvalue, SharpnessEstimate};
use crate::error::{Error, Result};
use crate::optim::Optimizer;
use crate::problems::{BatchGradientOracle, BatchSampler, GradientOracle};
use crate::vector::ParamVector;

/// Terminal status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// The full budget executed with finite losses and iterates.
    Converged,
    /// The trajectory produced a non-finite value or left the oracle domain.
    Diverged,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Converged => write!(f, "CONVERGED"),
            RunStatus::Diverged => write!(f, "DIVERGED"),
        }
    }
}

/// One recorded trace row. `loss`, `grad_norm`, and `effective_grad_norm`
/// describe the step's input point; `step_norm`, `drift`, `windowed_drift`,
/// and `theta` describe its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub effective_grad_norm: f64,
    /// Top Hessian eigenvalue, when the sharpness cadence hit this step.
    pub lambda_max: Option<f64>,
    /// Distance from the starting point.
    pub drift: f64,
    /// Distance to the iterate `drift_window` steps earlier, once available.
    pub windowed_drift: Option<f64>,
    /// Post-step parameters, when `record_params` is on.
    pub theta: Option<Vec<f64>>,
}

/// A sharpness estimate taken at a specific step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRecord {
    pub step: u64,
    pub estimate: SharpnessEstimate,
}

/// Full-train and validation loss at the end of an epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: u64,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// End-of-run aggregates. `best_loss` is the minimum observed objective
/// value (batch-level for stochastic runs, including the final full loss).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps_taken: u64,
    pub final_loss: f64,
    pub best_loss: f64,
    pub final_theta: Vec<f64>,
    /// Wall-clock duration; informational only and not deterministic.
    pub wall_clock_secs: f64,
}

/// Everything a run produced, together with the configuration that
/// produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub records: Vec<RunRecord>,
    pub sharpness: Vec<SharpnessRecord>,
    pub epoch_losses: Vec<EpochLoss>,
    pub summary: RunSummary,
}

/// Outcome of evaluating the oracle along the trajectory: either a usable
/// value or a divergence signal (domain exit / non-finite value).
enum Evaluated<T> {
    Value(T),
    Escaped,
}

fn classify<T>(result: Result<T>) -> Result<Evaluated<T>> {
    match result {
        Ok(value) => Ok(Evaluated::Value(value)),
        Err(Error::Domain(_)) => Ok(Evaluated::Escaped),
        Err(e) => Err(e),
    }
}

/// Runs one experiment to completion (or divergence).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let clock = Instant::now();
    config.validate()?;
    let seed = config.run.seed;
    let built = config.problem.build(seed)?;
    let mut optimizer = Optimizer::with_partition(
        config.optimizer.kind,
        config.optimizer.config.clone(),
        built.partition.clone(),
    )?;

    let mut sampler = match (built.oracle.mlp(), config.run.batch_size) {
        (Some(mlp), Some(batch)) => Some(BatchSampler::new(
            mlp.dataset(),
            batch,
            stream_rng(seed, STREAM_BATCHES),
        )?),
        _ => None,
    };
    let steps_per_epoch = sampler.as_ref().map(|s| s.batches_per_epoch() as u64);
    let total_steps = match (config.run.steps, config.run.epochs) {
        (Some(steps), _) => steps,
        (None, Some(epochs)) => {
            epochs * steps_per_epoch.expect("validated: epochs imply a sampler")
        }
        (None, None) => unreachable!("validated: one budget is set"),
    };

    let mut theta = built.start.clone();
    let theta0 = built.start.clone();
    let diag = &config.diagnostics;
    let window = diag.drift_window;
    let mut recent: VecDeque<ParamVector> = VecDeque::new();
    if window > 0 {
        recent.push_back(theta.clone());
    }

    // Starting point: a failure here is a configuration error, not divergence.
    let (initial_loss, initial_grad) = built.oracle.oracle().eval_grad(&theta)?;
    if !initial_loss.is_finite() || !initial_grad.is_finite() {
        return Err(Error::numeric(
            "loss or gradient is not finite at the starting point",
        ));
    }

    let mut records = Vec::new();
    let mut sharpness = Vec::new();
    let mut epoch_losses = Vec::new();

    let estimate_sharpness = |step: u64, at: &ParamVector| -> Result<SharpnessRecord> {
        let estimate = top_hessian_eigenvalue(
            built.oracle.oracle(),
            at,
            diag.sharpness_max_iter,
            diag.sharpness_tol,
            mix_seed(mix_seed(seed, STREAM_SHARPNESS), step),
        )?;
        Ok(SharpnessRecord { step, estimate })
    };
    let mut initial_lambda = None;
    if diag.sharpness_every > 0 {
        let record = estimate_sharpness(0, &theta)?;
        initial_lambda = Some(record.estimate.lambda_max);
        sharpness.push(record);
    }
    records.push(RunRecord {
        step: 0,
        loss: initial_loss,
        grad_norm: initial_grad.norm(),
        step_norm: 0.0,
        effective_grad_norm: initial_grad.norm(),
        lambda_max: initial_lambda,
        drift: 0.0,
        windowed_drift: None,
        theta: config.run.record_params.then(|| theta.as_slice().to_vec()),
    });

    let mut status = RunStatus::Converged;
    let mut best_loss = initial_loss;
    let mut last_loss = initial_loss;
    let mut steps_taken = 0u64;

    for k in 1..=total_steps {
        let evaluated = match (&built.oracle, &mut sampler) {
            (OracleHandle::Mlp(mlp), Some(sampler)) => {
                let batch: Vec<usize> = sampler.next_batch().to_vec();
                classify(mlp.batch_eval_grad(&theta, &batch))?
            }
            _ => classify(built.oracle.oracle().eval_grad(&theta))?,
        };
        let (loss, grad) = match evaluated {
            Evaluated::Value((loss, grad)) if loss.is_finite() && grad.is_finite() => (loss, grad),
            _ => {
                status = RunStatus::Diverged;
                break;
            }
        };
        best_loss = best_loss.min(loss);
        last_loss = loss;

        let info = optimizer.step(&theta, &grad)?;
        let step_norm = info.theta.distance(&theta)?;
        if !info.theta.is_finite() || !step_norm.is_finite() || !info.effective_grad_norm.is_finite()
        {
            status = RunStatus::Diverged;
            break;
        }
        theta = info.theta;
        steps_taken = k;
        if window > 0 {
            recent.push_back(theta.clone());
            if recent.len() as u64 > window + 1 {
                recent.pop_front();
            }
        }

        let mut lambda_max = None;
        if diag.sharpness_every > 0 && (k % diag.sharpness_every == 0 || k == total_steps) {
            let record = estimate_sharpness(k, &theta)?;
            lambda_max = Some(record.estimate.lambda_max);
            sharpness.push(record);
        }
        if k % config.run.record_every == 0 || k == total_steps {
            let windowed_drift = if window > 0 && recent.len() as u64 == window + 1 {
                Some(theta.distance(&recent[0])?)
            } else {
                None
            };
            records.push(RunRecord {
                step: k,
                loss,
                grad_norm: grad.norm(),
                step_norm,
                effective_grad_norm: info.effective_grad_norm,
                lambda_max,
                drift: theta.distance(&theta0)?,
                windowed_drift,
                theta: config.run.record_params.then(|| theta.as_slice().to_vec()),
            });
        }
        if let (Some(per_epoch), Some(mlp)) = (steps_per_epoch, built.oracle.mlp()) {
            if k % per_epoch == 0 {
                let train_loss = match classify(mlp.eval(&theta))? {
                    Evaluated::Value(l) if l.is_finite() => l,
                    _ => {
                        status = RunStatus::Diverged;
                        break;
                    }
                };
                let val_loss = match classify(mlp.val_loss(&theta))? {
                    Evaluated::Value(l) if l.is_finite() => l,
                    _ => {
                        status = RunStatus::Diverged;
                        break;
                    }
                };
                best_loss = best_loss.min(train_loss);
                epoch_losses.push(EpochLoss {
                    epoch: k / per_epoch,
                    train_loss,
                    val_loss,
                });
            }
        }
    }

    // Final full loss at the surviving iterate; a diverged run keeps the loss
    // of its last finite evaluation if even this fails.
    let final_loss = match classify(built.oracle.oracle().eval(&theta))? {
        Evaluated::Value(l) if l.is_finite() => {
            best_loss = best_loss.min(l);
            l
        }
        _ => {
            status = RunStatus::Diverged;
            last_loss
        }
    };

    Ok(RunReport {
        config: config.clone(),
        status,
        records,
        sharpness,
        epoch_losses,
        summary: RunSummary {
            steps_taken,
            final_loss,
            best_loss,
            final_theta: theta.as_slice().to_vec(),
            wall_clock_secs: clock.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OptimizerConfig;
    use crate::harness::config::{DiagnosticsSpec, OptimizerSpec, ProblemSpec, RunSpec};
    use crate::optim::OptimizerKind;
    use approx::assert_relative_eq;

    fn steps_run(seed: u64, steps: u64) -> RunSpec {
        RunSpec {
            seed,
            steps: Some(steps),
            epochs: None,
            batch_size: None,
            record_every: 1,
            record_params: false,
        }
    }

    fn sgd_on_quadratic(steps: u64) -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSpec::Quadratic {
                curvatures: vec![1.0],
                optimum: vec![0.0],
                start: vec![1.0],
            },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Sgd,
                config: OptimizerConfig::with_constant_eta(0.1),
            },
            run: steps_run(3, steps),
            diagnostics: DiagnosticsSpec::default(),
        }
    }

    #[test]
    fn sgd_contracts_the_quadratic_geometrically() {
        let report = run_experiment(&sgd_on_quadratic(100)).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert_eq!(report.summary.steps_taken, 100);
        let expected_theta = 0.9f64.powi(100);
        assert_relative_eq!(
            report.summary.final_theta[0],
            expected_theta,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            report.summary.final_loss,
            0.5 * expected_theta * expected_theta,
            max_relative = 1e-12
        );
        // 101 rows: the starting point plus one per step.
        assert_eq!(report.records.len(), 101);
        assert_eq!(report.records[0].step, 0);
        assert_eq!(report.records[0].loss, 0.5);
        assert_eq!(report.records[0].step_norm, 0.0);
        // Row k holds the pre-step loss, so row 1 repeats the start loss.
        assert_eq!(report.records[1].loss, 0.5);
        assert!(report.records[100].loss < 1e-8);
        // Drift approaches the full distance from start to optimum.
        assert_relative_eq!(
            report.records[100].drift,
            1.0 - expected_theta,
            max_relative = 1e-12
        );
    }

    #[test]
    fn identical_configs_reproduce_identical_traces() {
        let config = sgd_on_quadratic(50);
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.summary.final_theta, b.summary.final_theta);
        assert_eq!(a.status, b.status);
    }

    #[test]
    fn record_cadence_keeps_first_and_last_rows() {
        let mut config = sgd_on_quadratic(95);
        config.run.record_every = 30;
        let report = run_experiment(&config).unwrap();
        let steps: Vec<u64> = report.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 30, 60, 90, 95]);
    }

    #[test]
    fn record_params_snapshots_the_iterate() {
        let mut config = sgd_on_quadratic(3);
        config.run.record_params = true;
        let report = run_experiment(&config).unwrap();
        let theta1 = report.records[1].theta.as_ref().unwrap();
        assert_relative_eq!(theta1[0], 0.9, max_relative = 1e-15);
    }

    #[test]
    fn concave_parabola_diverges_instead_of_erroring() {
        let config = ExperimentConfig {
            problem: ProblemSpec::Parabola {
                curvature: -10.0,
                start: 1.0,
            },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Sgd,
                config: OptimizerConfig::with_constant_eta(0.1),
            },
            run: steps_run(0, 2000),
            diagnostics: DiagnosticsSpec::default(),
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.status, RunStatus::Diverged);
        assert!(report.summary.steps_taken < 2000);
        assert!(report.summary.final_loss.is_finite());
        assert!(report.records.iter().all(|r| r.loss.is_finite()));
    }

    #[test]
    fn out_of_domain_start_is_a_hard_error() {
        let config = ExperimentConfig {
            problem: ProblemSpec::F1 { start: -0.9 },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Sgd,
                config: OptimizerConfig::with_constant_eta(0.01),
            },
            run: steps_run(0, 10),
            diagnostics: DiagnosticsSpec::default(),
        };
        assert!(matches!(run_experiment(&config), Err(Error::Domain(_))));
    }

    #[test]
    fn windowed_drift_appears_once_the_window_fills() {
        let mut config = sgd_on_quadratic(10);
        config.diagnostics.drift_window = 4;
        let report = run_experiment(&config).unwrap();
        assert!(report.records[3].windowed_drift.is_none());
        let at4 = report.records[4].windowed_drift.unwrap();
        // theta_4 - theta_0 = 0.9^4 - 1.
        assert_relative_eq!(at4, 1.0 - 0.9f64.powi(4), max_relative = 1e-12);
        let at10 = report.records[10].windowed_drift.unwrap();
        assert_relative_eq!(
            at10,
            0.9f64.powi(6) - 0.9f64.powi(10),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sharpness_cadence_covers_start_and_end() {
        let mut config = sgd_on_quadratic(10);
        config.problem = ProblemSpec::Quadratic {
            curvatures: vec![1.0, 9.0],
            optimum: vec![0.0, 0.0],
            start: vec![1.0, 1.0],
        };
        config.diagnostics.sharpness_every = 4;
        let report = run_experiment(&config).unwrap();
        let steps: Vec<u64> = report.sharpness.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 4, 8, 10]);
        for record in &report.sharpness {
            assert!(record.estimate.converged);
            assert_relative_eq!(record.estimate.lambda_max, 9.0, max_relative = 1e-5);
        }
    }

    #[test]
    fn epoch_budgets_record_epoch_losses() {
        let config = ExperimentConfig {
            problem: ProblemSpec::SinMlp {
                n_train: 32,
                noise_sd: 0.0,
                data_seed: 5,
                hidden: vec![8],
            },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Adam,
                config: OptimizerConfig::with_constant_eta(0.01),
            },
            run: RunSpec {
                seed: 9,
                steps: None,
                epochs: Some(3),
                batch_size: Some(8),
                record_every: 4,
                record_params: false,
            },
            diagnostics: DiagnosticsSpec::default(),
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        // 32 samples at batch 8: 4 steps per epoch, 12 total.
        assert_eq!(report.summary.steps_taken, 12);
        assert_eq!(report.epoch_losses.len(), 3);
        assert_eq!(
            report.epoch_losses.iter().map(|e| e.epoch).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        for epoch in &report.epoch_losses {
            assert!(epoch.train_loss.is_finite());
            assert!(epoch.val_loss.is_finite());
        }
        // Training makes progress on the noise-free dataset.
        assert!(report.epoch_losses[2].train_loss < report.records[0].loss);
    }

    #[test]
    fn mlp_runs_are_seed_reproducible() {
        let config = ExperimentConfig {
            problem: ProblemSpec::SinMlp {
                n_train: 32,
                noise_sd: 0.1,
                data_seed: 5,
                hidden: vec![8],
            },
            optimizer: OptimizerSpec {
                kind: OptimizerKind::Eadam,
                config: {
                    let mut c = OptimizerConfig::with_constant_eta(0.01);
                    c.alpha = -2.0;
                    c.beta1 = 0.9;
                    c
                },
            },
            run: RunSpec {
                seed: 21,
                steps: None,
                epochs: Some(2),
                batch_size: Some(4),
                record_every: 1,
                record_params: false,
            },
            diagnostics: DiagnosticsSpec::default(),
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.epoch_losses, b.epoch_losses);
        assert_eq!(a.summary.final_theta, b.summary.final_theta);

        let mut other = config.clone();
        other.run.seed = 22;
        let c = run_experiment(&other).unwrap();
        assert_ne!(a.summary.final_theta, c.summary.final_theta);
    }
}
