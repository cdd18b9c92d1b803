//! Step-indexed hyperparameter schedules. Steps count from 1, matching the
//! bias-correction convention in the adaptive optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSchedule {
    Constant { value: f64 },
    /// `value / sqrt(k)`.
    InvSqrt { value: f64 },
    /// Multiplies by `factor` after every `period` steps. Reproducing the
    /// "cut by 10x at each quarter of the budget" recipe means
    /// `factor = 0.1, period = total_steps / 4`.
    StepDecay { value: f64, factor: f64, period: u64 },
}

impl EtaSchedule {
    pub fn constant(value: f64) -> Self {
        EtaSchedule::Constant { value }
    }

    pub fn at(&self, k: u64) -> f64 {
        let k = k.max(1);
        match *self {
            EtaSchedule::Constant { value } => value,
            EtaSchedule::InvSqrt { value } => value / (k as f64).sqrt(),
            EtaSchedule::StepDecay { value, factor, period } => {
                value * factor.powi(((k - 1) / period) as i32)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EtaSchedule::Constant { value } | EtaSchedule::InvSqrt { value } => {
                check_positive("eta", value)
            }
            EtaSchedule::StepDecay { value, factor, period } => {
                check_positive("eta", value)?;
                if !(factor > 0.0 && factor <= 1.0) {
                    return Err(Error::config(format!(
                        "step-decay factor must be in (0, 1], got {factor}"
                    )));
                }
                if period == 0 {
                    return Err(Error::config("step-decay period must be >= 1"));
                }
                Ok(())
            }
        }
    }
}

/// Weight-decay schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSchedule {
    Constant { value: f64 },
    /// `value * (1 - mu)^k`: geometric decay of the decay strength itself.
    Decayed { value: f64, mu: f64 },
    /// `value / sqrt(k)`.
    InvSqrt { value: f64 },
}

impl LambdaSchedule {
    pub fn constant(value: f64) -> Self {
        LambdaSchedule::Constant { value }
    }

    pub fn at(&self, k: u64) -> f64 {
        let k = k.max(1);
        match *self {
            LambdaSchedule::Constant { value } => value,
            LambdaSchedule::Decayed { value, mu } => value * (1.0 - mu).powi(k.min(i32::MAX as u64) as i32),
            LambdaSchedule::InvSqrt { value } => value / (k as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaSchedule::Constant { value } | LambdaSchedule::InvSqrt { value } => {
                check_non_negative("lambda", value)
            }
            LambdaSchedule::Decayed { value, mu } => {
                check_non_negative("lambda", value)?;
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::config(format!(
                        "decay rate mu must be in (0, 1), got {mu}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// How the exploration factor evolves over steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSchedule {
    #[default]
    Constant,
    /// `alpha / sqrt(k)`, as used for the regret-bounded configuration.
    InvSqrt,
}

impl AlphaSchedule {
    pub fn apply(&self, alpha: f64, k: u64) -> f64 {
        let k = k.max(1);
        match self {
            AlphaSchedule::Constant => alpha,
            AlphaSchedule::InvSqrt => alpha / (k as f64).sqrt(),
        }
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::config(format!("{name} must be finite and > 0, got {value}")));
    }
    Ok(())
}

fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::config(format!("{name} must be finite and >= 0, got {value}")));
    }
    Ok(())
}
