//! Exploration-adapted gradient optimizers.
//!
//! This crate implements a family of first-order optimizers built around a
//! gradient-replacement adaptor: an EMA of successive gradient differences is
//! scaled by a factor `alpha` and added to the raw gradient before the base
//! update runs. Negative `alpha` makes the iterate keep exploring — it
//! escapes sharp minima and prefers flat ones — while positive `alpha`
//! accelerates exploitation. The family covers the adapted variants of SGD
//! with momentum (ESGD) and Adam (EAdam), plus two layerwise trust-ratio
//! optimizers (ALTO Vanilla and ALTO, the latter reducing exactly to Lamb at
//! `alpha = 0`), alongside the unadapted baselines.
//!
//! Around the optimizers sit closed-form test landscapes and a small
//! sin-regression MLP ([`problems`]), sharpness/drift/regret diagnostics
//! ([`diagnostics`]), and a deterministic experiment harness ([`harness`])
//! used by the `alto` CLI.

pub mod adaptor;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod optim;
pub mod partition;
pub mod problems;
pub mod schedule;
pub mod vector;

pub use adaptor::{adaptor_update, alpha_stability_interval, ema_n_weight, AdaptorState, StabilityInterval};
pub use config::OptimizerConfig;
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig, RunReport, RunStatus};
pub use optim::{Optimizer, OptimizerKind, OptimizerState, StepRecord};
pub use partition::{make_layer_partition, LayerPartition};
pub use problems::{BatchGradientOracle, GradientOracle};
pub use schedule::{AlphaSchedule, EtaSchedule, LambdaSchedule};
pub use vector::ParamVector;
