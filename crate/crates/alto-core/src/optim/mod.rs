//! Optimizer family: plain and exploration-adapted first-order methods.
//!
//! The free functions in [`steps`] implement one update each; the
//! [`Optimizer`] wrapper owns the evolving state, dispatches on
//! [`OptimizerKind`], and reports per-step bookkeeping for the harness.

pub mod steps;

use serde::{Deserialize, Serialize};

pub use steps::{
    adam_step, adamw_step, alto_step, alto_vanilla_step, eadam_step, esgd_step, momentum_sgd_step,
    sgd_step, trust_ratio_apply,
};

use crate::adaptor::{adaptor_update, AdaptorState};
use crate::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::partition::LayerPartition;
use crate::vector::ParamVector;

/// Evolving optimizer state shared by every update rule; each rule reads
/// and writes the subset it needs. Moments start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// First-moment (momentum) buffer.
    pub m: ParamVector,
    /// Second-moment buffer; elementwise non-negative at all times.
    pub v: ParamVector,
    /// Gradient-difference EMA used by the adapted variants.
    pub adaptor: AdaptorState,
    /// Completed update count; the next update is step `k + 1`.
    pub k: u64,
    /// Layer blocks for trust-ratio updates.
    pub partition: LayerPartition,
}

impl OptimizerState {
    /// Fresh state treating the whole parameter vector as one layer.
    /// Panics if `dim` is zero.
    pub fn new(dim: usize) -> Self {
        let partition = LayerPartition::single(dim).expect("dim must be positive");
        OptimizerState::with_partition(partition)
    }

    pub fn with_partition(partition: LayerPartition) -> Self {
        let dim = partition.dim();
        OptimizerState {
            m: ParamVector::zeros(dim),
            v: ParamVector::zeros(dim),
            adaptor: AdaptorState::new(dim),
            k: 0,
            partition,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// Per-step bookkeeping emitted by runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index, strictly increasing within a run.
    pub k: u64,
    pub loss: f64,
    pub grad_norm: f64,
    /// Distance moved this step, `|theta_k - theta_{k-1}|`.
    pub step_norm: f64,
    /// Norm of the gradient actually fed to the base update (equals
    /// `grad_norm` for unadapted optimizers).
    pub effective_grad_norm: f64,
}

/// The selectable update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    MomentumSgd,
    Esgd,
    Adam,
    Eadam,
    Adamw,
    Lamb,
    AltoVanilla,
    Alto,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 9] = [
        OptimizerKind::Sgd,
        OptimizerKind::MomentumSgd,
        OptimizerKind::Esgd,
        OptimizerKind::Adam,
        OptimizerKind::Eadam,
        OptimizerKind::Adamw,
        OptimizerKind::Lamb,
        OptimizerKind::AltoVanilla,
        OptimizerKind::Alto,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::MomentumSgd => "momentum-sgd",
            OptimizerKind::Esgd => "esgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Eadam => "eadam",
            OptimizerKind::Adamw => "adamw",
            OptimizerKind::Lamb => "lamb",
            OptimizerKind::AltoVanilla => "alto-vanilla",
            OptimizerKind::Alto => "alto",
        }
    }

    /// Whether this rule routes gradients through the exploration adaptor.
    pub fn uses_adaptor(&self) -> bool {
        matches!(
            self,
            OptimizerKind::Esgd
                | OptimizerKind::Eadam
                | OptimizerKind::AltoVanilla
                | OptimizerKind::Alto
        )
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = OptimizerKind::ALL.iter().map(|k| k.name()).collect();
                Error::parse(format!(
                    "unknown optimizer {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Result of one [`Optimizer::step`]: the new iterate plus the effective
/// gradient norm the harness records.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub theta: ParamVector,
    pub effective_grad_norm: f64,
}

/// A configured update rule with its evolving state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    config: OptimizerConfig,
    state: OptimizerState,
}

impl Optimizer {
    /// Builds an optimizer treating the parameters as a single layer.
    pub fn new(kind: OptimizerKind, config: OptimizerConfig, dim: usize) -> Result<Self> {
        Optimizer::with_partition(kind, config, LayerPartition::single(dim)?)
    }

    /// Builds an optimizer with an explicit layer partition (used by the
    /// trust-ratio rules; others ignore it).
    pub fn with_partition(
        kind: OptimizerKind,
        config: OptimizerConfig,
        partition: LayerPartition,
    ) -> Result<Self> {
        config.validate()?;
        if kind == OptimizerKind::Lamb && config.alpha != 0.0 {
            return Err(Error::config(format!(
                "lamb is the alpha = 0 trust-ratio path; got alpha = {} (use alto for \
                 nonzero exploration)",
                config.alpha
            )));
        }
        Ok(Optimizer {
            kind,
            config,
            state: OptimizerState::with_partition(partition),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Steps completed so far.
    pub fn steps_taken(&self) -> u64 {
        self.state.k
    }

    /// Applies one update, advancing the internal state.
    pub fn step(&mut self, theta: &ParamVector, g: &ParamVector) -> Result<StepInfo> {
        let k_next = self.state.k + 1;
        let (theta_next, state_next) = match self.kind {
            OptimizerKind::Sgd => {
                let eta = self.config.eta.at(k_next);
                let theta_next = sgd_step(theta, g, eta)?;
                let mut next = self.state.clone();
                next.k = k_next;
                (theta_next, next)
            }
            OptimizerKind::MomentumSgd => momentum_sgd_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::Esgd => esgd_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::Adam => adam_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::Eadam => eadam_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::Adamw => adamw_step(&self.state, theta, g, &self.config)?,
            // Lamb *is* the trust-ratio rule at alpha = 0 (validated above).
            OptimizerKind::Lamb => alto_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::AltoVanilla => alto_vanilla_step(&self.state, theta, g, &self.config)?,
            OptimizerKind::Alto => alto_step(&self.state, theta, g, &self.config)?,
        };
        let effective_grad_norm = if self.kind.uses_adaptor() {
            // g_eff = g + alpha_k * a_k, reconstructed from the updated EMA.
            let alpha = self.config.alpha_at(k_next);
            let a = state_next.adaptor.average();
            let mut acc = 0.0;
            for i in 0..g.len() {
                let e = g[i] + alpha * a[i];
                acc += e * e;
            }
            acc.sqrt()
        } else {
            g.norm()
        };
        self.state = state_next;
        Ok(StepInfo {
            theta: theta_next,
            effective_grad_norm,
        })
    }
}

/// Wraps any base update rule so that every gradient first passes through
/// the exploration adaptor. Applied to the heavy-ball rule this yields
/// exactly the adapted-SGD path; applied to Adam it yields adapted Adam.
pub struct EAdapted<F> {
    base: F,
}

/// Builds the adaptor-wrapped version of a base update rule.
pub fn e_adapt<F>(base: F) -> EAdapted<F>
where
    F: Fn(
        &OptimizerState,
        &ParamVector,
        &ParamVector,
        &OptimizerConfig,
    ) -> Result<(ParamVector, OptimizerState)>,
{
    EAdapted { base }
}

impl<F> EAdapted<F>
where
    F: Fn(
        &OptimizerState,
        &ParamVector,
        &ParamVector,
        &OptimizerConfig,
    ) -> Result<(ParamVector, OptimizerState)>,
{
    /// One adapted step: replace the gradient, then run the base update.
    pub fn step(
        &self,
        state: &OptimizerState,
        theta: &ParamVector,
        g: &ParamVector,
        config: &OptimizerConfig,
    ) -> Result<(ParamVector, OptimizerState)> {
        let k_next = state.k + 1;
        let alpha = config.alpha_at(k_next);
        let (g_eff, adaptor) = adaptor_update(&state.adaptor, g, config.beta1, alpha)?;
        let (theta_next, mut next) = (self.base)(state, theta, &g_eff, config)?;
        next.adaptor = adaptor;
        Ok((theta_next, next))
    }
}
