//! Experiment configuration: which problem to optimize, with which optimizer,
//! under what step/epoch budget, and which diagnostics to record. Everything
//! round-trips through JSON so a run is fully described by one document.

use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, STREAM_INIT};
use crate::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::optim::OptimizerKind;
use crate::partition::LayerPartition;
use crate::problems::{
    quadratic_oracle, scaled_parabola, sin_dataset, CardioidOracle, F1Oracle, F2Oracle,
    GradientOracle, MlpModel, MlpOracle, RosenbrockOracle,
};
use crate::vector::ParamVector;

/// Which loss surface a run optimizes, plus where it starts. The MLP variant
/// draws its starting parameters from the run seed instead of an explicit
/// start vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// 2-D curved banana valley with its minimum at (1, 1).
    Rosenbrock { start: [f64; 2] },
    /// Squared implicit cardioid: a closed curve of minimizers.
    CardioidSq { start: [f64; 2] },
    /// 1-D staircase of progressively better minima on x > -1.
    F1 { start: f64 },
    /// 1-D double well: sharp narrow minimum near 0.6, wide flat one at 0.
    F2 { start: f64 },
    /// Diagonal convex quadratic with per-coordinate curvatures.
    Quadratic {
        curvatures: Vec<f64>,
        optimum: Vec<f64>,
        start: Vec<f64>,
    },
    /// 1-D parabola 0.5*c*x^2 with signed curvature; concave when c < 0.
    Parabola { curvature: f64, start: f64 },
    /// Sin-regression MLP over a seeded synthetic dataset (80/20 split).
    SinMlp {
        n_train: usize,
        noise_sd: f64,
        data_seed: u64,
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

/// A problem instantiated for one run: the oracle, the starting parameters,
/// and the layer partition the trust-ratio optimizers operate on.
pub struct BuiltProblem {
    pub oracle: OracleHandle,
    pub start: ParamVector,
    pub partition: LayerPartition,
}

/// Either a closed-form oracle or the dataset-backed MLP, which additionally
/// supports mini-batch gradients and validation loss.
pub enum OracleHandle {
    Closed(Box<dyn GradientOracle>),
    Mlp(Box<MlpOracle>),
}

impl OracleHandle {
    /// The full-data view of the oracle (train-set loss for the MLP).
    pub fn oracle(&self) -> &dyn GradientOracle {
        match self {
            OracleHandle::Closed(o) => o.as_ref(),
            OracleHandle::Mlp(o) => o.as_ref(),
        }
    }

    /// The MLP oracle, when this problem is dataset-backed.
    pub fn mlp(&self) -> Option<&MlpOracle> {
        match self {
            OracleHandle::Closed(_) => None,
            OracleHandle::Mlp(o) => Some(o),
        }
    }
}

impl ProblemSpec {
    /// Number of optimized parameters.
    pub fn dim(&self) -> Result<usize> {
        match self {
            ProblemSpec::Rosenbrock { .. } | ProblemSpec::CardioidSq { .. } => Ok(2),
            ProblemSpec::F1 { .. } | ProblemSpec::F2 { .. } | ProblemSpec::Parabola { .. } => Ok(1),
            ProblemSpec::Quadratic { curvatures, .. } => Ok(curvatures.len()),
            ProblemSpec::SinMlp { hidden, .. } => {
                Ok(Self::mlp_model(hidden)?.param_count())
            }
        }
    }

    /// True when the problem is backed by a dataset (and thus supports
    /// mini-batches, epochs, and validation loss).
    pub fn is_dataset_backed(&self) -> bool {
        matches!(self, ProblemSpec::SinMlp { .. })
    }

    fn mlp_model(hidden: &[usize]) -> Result<MlpModel> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(1);
        dims.extend_from_slice(hidden);
        dims.push(1);
        MlpModel::new(dims)
    }

    fn check_start(values: &[f64]) -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("start point must be finite"));
        }
        Ok(())
    }

    /// Instantiates the oracle and starting point. `seed` feeds the MLP
    /// parameter initialization; closed-form problems ignore it.
    pub fn build(&self, seed: u64) -> Result<BuiltProblem> {
        let closed = |oracle: Box<dyn GradientOracle>, start: Vec<f64>| -> Result<BuiltProblem> {
            Self::check_start(&start)?;
            let partition = LayerPartition::single(start.len())?;
            Ok(BuiltProblem {
                oracle: OracleHandle::Closed(oracle),
                start: ParamVector::from_vec(start),
                partition,
            })
        };
        match self {
            ProblemSpec::Rosenbrock { start } => closed(Box::new(RosenbrockOracle), start.to_vec()),
            ProblemSpec::CardioidSq { start } => closed(Box::new(CardioidOracle), start.to_vec()),
            ProblemSpec::F1 { start } => closed(Box::new(F1Oracle), vec![*start]),
            ProblemSpec::F2 { start } => closed(Box::new(F2Oracle), vec![*start]),
            ProblemSpec::Quadratic {
                curvatures,
                optimum,
                start,
            } => {
                if start.len() != curvatures.len() {
                    return Err(Error::structural(format!(
                        "start dimension {} does not match curvature count {}",
                        start.len(),
                        curvatures.len()
                    )));
                }
                let oracle = quadratic_oracle(
                    curvatures.clone(),
                    ParamVector::from_vec(optimum.clone()),
                )?;
                closed(Box::new(oracle), start.clone())
            }
            ProblemSpec::Parabola { curvature, start } => {
                closed(Box::new(scaled_parabola(*curvature)?), vec![*start])
            }
            ProblemSpec::SinMlp {
                n_train,
                noise_sd,
                data_seed,
                hidden,
            } => {
                let model = Self::mlp_model(hidden)?;
                let dataset = sin_dataset(*n_train, *noise_sd, *data_seed)?;
                let partition = model.layer_partition();
                let start = model.init_params(&mut stream_rng(seed, STREAM_INIT));
                let oracle = MlpOracle::new(model, dataset)?;
                Ok(BuiltProblem {
                    oracle: OracleHandle::Mlp(Box::new(oracle)),
                    start,
                    partition,
                })
            }
        }
    }
}

/// Optimizer choice: the update rule plus its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub config: OptimizerConfig,
}

/// Step/epoch budget and recording cadence for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Master seed; every stochastic ingredient derives a substream from it.
    pub seed: u64,
    /// Total optimizer steps. Exactly one of `steps` and `epochs` must be set.
    #[serde(default)]
    pub steps: Option<u64>,
    /// Passes over the training set; requires `batch_size` and a
    /// dataset-backed problem.
    #[serde(default)]
    pub epochs: Option<u64>,
    /// Mini-batch size; only valid for dataset-backed problems. Absent means
    /// full-batch gradients.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// Record a trace row every this many steps (the final step is always
    /// recorded). Must be at least 1.
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Also record the full parameter vector on each trace row; only allowed
    /// for problems with at most 8 parameters.
    #[serde(default)]
    pub record_params: bool,
}

fn default_record_every() -> u64 {
    1
}

/// Diagnostics recorded alongside the optimization trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Estimate the top Hessian eigenvalue every this many steps (0 = off).
    /// When on, the start and final points are always estimated.
    pub sharpness_every: u64,
    /// Power-iteration budget per estimate.
    pub sharpness_max_iter: usize,
    /// Residual tolerance for declaring a sharpness estimate converged.
    pub sharpness_tol: f64,
    /// Window (in steps) for short-horizon drift; 0 records only the
    /// distance from the starting point.
    pub drift_window: u64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            sharpness_every: 0,
            sharpness_max_iter: 100,
            sharpness_tol: 1e-6,
            drift_window: 0,
        }
    }
}

/// One fully-specified experiment: problem, optimizer, budget, diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// Checks cross-field consistency; optimizer hyperparameters are
    /// additionally validated when the optimizer is constructed.
    pub fn validate(&self) -> Result<()> {
        self.optimizer.config.validate()?;
        let run = &self.run;
        match (run.steps, run.epochs) {
            (Some(_), Some(_)) => {
                return Err(Error::config("set either steps or epochs, not both"));
            }
            (None, None) => {
                return Err(Error::config("one of steps or epochs must be set"));
            }
            (Some(0), None) | (None, Some(0)) => {
                return Err(Error::config("the step/epoch budget must be positive"));
            }
            _ => {}
        }
        if run.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if !self.problem.is_dataset_backed() {
            if run.batch_size.is_some() {
                return Err(Error::config(
                    "batch_size requires a dataset-backed problem",
                ));
            }
            if run.epochs.is_some() {
                return Err(Error::config("epochs require a dataset-backed problem"));
            }
        }
        if run.epochs.is_some() && run.batch_size.is_none() {
            return Err(Error::config("an epoch budget requires batch_size"));
        }
        if run.record_params {
            let dim = self.problem.dim()?;
            if dim > 8 {
                return Err(Error::config(format!(
                    "record_params is limited to problems with at most 8 parameters (got {dim})"
                )));
            }
        }
        let diag = &self.diagnostics;
        if !(diag.sharpness_tol.is_finite() && diag.sharpness_tol > 0.0) {
            return Err(Error::config("sharpness_tol must be finite and positive"));
        }
        if diag.sharpness_every > 0 && diag.sharpness_max_iter == 0 {
            return Err(Error::config(
                "sharpness_max_iter must be positive when sharpness is enabled",
            ));
        }
        Ok(())
    }
}
