//! Optimizer hyperparameter bundle.
//!
//! One config type serves every optimizer in the family; each step routine
//! reads the subset it needs. `beta1` is the adaptor's EMA coefficient,
//! `beta2`/`beta3` drive the first/second moment estimates, and `alpha` is
//! the exploration (negative) / exploitation (positive) factor applied to
//! the gradient-difference average. Validation happens at construction:
//! in particular `|alpha| < 1/(1 - beta1)` is enforced strictly — there is
//! no clamping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{AlphaSchedule, EtaSchedule, LambdaSchedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub eta: EtaSchedule,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub alpha_schedule: AlphaSchedule,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_beta3")]
    pub beta3: f64,
    #[serde(default = "default_eps1")]
    pub eps1: f64,
    #[serde(default = "default_eps2")]
    pub eps2: f64,
    #[serde(default = "default_eps3")]
    pub eps3: f64,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaSchedule,
}

fn default_beta1() -> f64 {
    0.99
}

fn default_beta2() -> f64 {
    0.9
}

fn default_beta3() -> f64 {
    0.99
}

fn default_eps1() -> f64 {
    1e-6
}

fn default_eps2() -> f64 {
    1e-6
}

fn default_eps3() -> f64 {
    1e-10
}

fn default_lambda() -> LambdaSchedule {
    LambdaSchedule::constant(1e-4)
}

impl OptimizerConfig {
    /// Config with the given constant learning rate and default everything else.
    pub fn with_constant_eta(eta: f64) -> Self {
        OptimizerConfig {
            eta: EtaSchedule::constant(eta),
            alpha: 0.0,
            alpha_schedule: AlphaSchedule::Constant,
            beta1: default_beta1(),
            beta2: default_beta2(),
            beta3: default_beta3(),
            eps1: default_eps1(),
            eps2: default_eps2(),
            eps3: default_eps3(),
            lambda: default_lambda(),
        }
    }

    pub fn with_eta(mut self, eta: EtaSchedule) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_alpha_schedule(mut self, schedule: AlphaSchedule) -> Self {
        self.alpha_schedule = schedule;
        self
    }

    pub fn with_beta1(mut self, beta1: f64) -> Self {
        self.beta1 = beta1;
        self
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self
    }

    pub fn with_beta3(mut self, beta3: f64) -> Self {
        self.beta3 = beta3;
        self
    }

    pub fn with_lambda(mut self, lambda: LambdaSchedule) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eps1(mut self, eps1: f64) -> Self {
        self.eps1 = eps1;
        self
    }

    /// Largest admissible `|alpha|` for the configured `beta1`.
    pub fn alpha_limit(&self) -> f64 {
        1.0 / (1.0 - self.beta1)
    }

    /// Exploration factor at step `k` (steps count from 1).
    pub fn alpha_at(&self, k: u64) -> f64 {
        self.alpha_schedule.apply(self.alpha, k)
    }

    pub fn validate(&self) -> Result<()> {
        self.eta.validate()?;
        self.lambda.validate()?;
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2), ("beta3", self.beta3)] {
            if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
                return Err(Error::config(format!("{name} must be in [0, 1), got {beta}")));
            }
        }
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3)] {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::config(format!("{name} must be finite and > 0, got {eps}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::config(format!("alpha must be finite, got {}", self.alpha)));
        }
        if self.alpha.abs() >= self.alpha_limit() {
            return Err(Error::config(format!(
                "|alpha| = {} breaks the constraint |alpha| < 1/(1 - beta1) = {}",
                self.alpha.abs(),
                self.alpha_limit()
            )));
        }
        Ok(())
    }

    /// Whether the closed-form momentum-ratio bound applies to this config
    /// (it needs `beta2^2 < beta3`).
    pub fn moment_ratio_bound_applies(&self) -> bool {
        self.beta2 * self.beta2 < self.beta3
    }
}
