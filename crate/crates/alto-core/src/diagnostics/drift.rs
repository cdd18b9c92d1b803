//! Parameter drift along a trajectory, and the stage-sign classifier that
//! labels a step as accelerating or decelerating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::ParamVector;

/// Drift measurements at one trajectory index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftPoint {
    pub k: usize,
    /// `|theta_k - theta_0|`: total displacement from the start.
    pub drift: f64,
    /// `|theta_k - theta_{k-window}|`: recent displacement; absent for the
    /// first `window` entries.
    pub windowed: Option<f64>,
}

/// Computes total and windowed drift along a recorded trajectory. The
/// trajectory must be strictly longer than the window so at least one
/// windowed value exists.
pub fn drift_metrics(trajectory: &[ParamVector], window: usize) -> Result<Vec<DriftPoint>> {
    if window == 0 {
        return Err(Error::domain("window must be positive"));
    }
    if trajectory.len() <= window {
        return Err(Error::structural(format!(
            "trajectory of {} points is too short for window {window}",
            trajectory.len()
        )));
    }
    let origin = &trajectory[0];
    let mut out = Vec::with_capacity(trajectory.len());
    for (k, theta) in trajectory.iter().enumerate() {
        let drift = theta.distance(origin)?;
        let windowed = if k >= window {
            Some(theta.distance(&trajectory[k - window])?)
        } else {
            None
        };
        out.push(DriftPoint { k, drift, windowed });
    }
    Ok(out)
}

/// Whether a step moved with or against the change of the (expected)
/// gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageSign {
    Accelerating,
    Decelerating,
}

/// Classifies one step: accelerating iff the inner product of the parameter
/// change and the expected-gradient change is strictly positive. An exact
/// zero counts as decelerating — the conservative reading of a tie.
pub fn stage_sign(delta_theta: &ParamVector, delta_gbar: &ParamVector) -> Result<StageSign> {
    if delta_theta.norm() == 0.0 || delta_gbar.norm() == 0.0 {
        return Err(Error::domain(
            "stage sign needs nonzero parameter and gradient changes",
        ));
    }
    let ip = delta_theta.dot(delta_gbar)?;
    if !ip.is_finite() {
        return Err(Error::numeric("stage-sign inner product is non-finite"));
    }
    Ok(if ip > 0.0 {
        StageSign::Accelerating
    } else {
        StageSign::Decelerating
    })
}
