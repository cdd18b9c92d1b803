//! Gradient oracles: closed-form test landscapes, a convex quadratic family,
//! a sin-regression dataset, and a small dense MLP with hand-written
//! backpropagation and mini-batch sampling.

mod dataset;
mod landscapes;
mod mlp;

pub use dataset::{sin_dataset, BatchSampler, Dataset, SplitTag};
pub use landscapes::{
    cardioid_sq, cardioid_sq_grad, f1, f1_grad, f2, f2_grad, quadratic_oracle, rosenbrock,
    rosenbrock_grad, scaled_parabola, CardioidOracle, F1Oracle, F2Oracle, QuadraticOracle,
    RosenbrockOracle, ScaledParabola,
};
pub use mlp::{Activation, MlpModel, MlpOracle};

use crate::error::Result;
use crate::vector::ParamVector;

/// A differentiable loss surface. Implementations are pure and read-only
/// after construction, so they can be shared freely between runs.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, theta: &ParamVector) -> Result<f64>;

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector>;

    fn eval_grad(&self, theta: &ParamVector) -> Result<(f64, ParamVector)> {
        Ok((self.eval(theta)?, self.grad(theta)?))
    }
}

/// Oracles backed by a dataset additionally expose mini-batch evaluation.
pub trait BatchGradientOracle: GradientOracle {
    /// Number of training samples batches are drawn from.
    fn num_samples(&self) -> usize;

    /// Loss and gradient over the given dataset indices.
    fn batch_eval_grad(&self, theta: &ParamVector, indices: &[usize]) -> Result<(f64, ParamVector)>;
}

/// Central-difference gradient with the per-coordinate step
/// `h_i = cbrt(machine eps) * (1 + |theta_i|)`.
pub fn central_diff_grad(oracle: &dyn GradientOracle, theta: &ParamVector) -> Result<ParamVector> {
    let h_scale = f64::EPSILON.cbrt();
    let mut g = ParamVector::zeros(theta.len());
    let mut probe = theta.clone();
    for i in 0..theta.len() {
        let h = h_scale * (1.0 + theta[i].abs());
        probe[i] = theta[i] + h;
        let up = oracle.eval(&probe)?;
        probe[i] = theta[i] - h;
        let down = oracle.eval(&probe)?;
        probe[i] = theta[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Relative disagreement between the analytic and the central-difference
/// gradient: `|g_a - g_n| / max(1, |g_a|, |g_n|)`. The unit floor in the
/// denominator keeps the measure meaningful at near-critical points where
/// both gradients vanish.
pub fn gradcheck_rel_err(oracle: &dyn GradientOracle, theta: &ParamVector) -> Result<f64> {
    let analytic = oracle.grad(theta)?;
    let numeric = central_diff_grad(oracle, theta)?;
    let diff = analytic.sub(&numeric)?.norm();
    Ok(diff / analytic.norm().max(numeric.norm()).max(1.0))
}
