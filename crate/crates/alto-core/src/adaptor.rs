//! The exploration adaptor.
//!
//! The adaptor keeps an exponential moving average of successive gradient
//! *differences*,
//!
//! ```text
//! a_k = beta1 * a_{k-1} + (1 - beta1) * (g_k - g_{k-1}),
//! ```
//!
//! and hands the optimizer a replaced gradient `g_k + alpha * a_k`. With
//! `alpha < 0` the extra term pushes against gradient growth — the iterate
//! keeps moving through/out of sharp basins; with `alpha > 0` it sharpens
//! convergence. Both `a` and the remembered gradient start at zero, and the
//! first difference is taken against that zero history.
//!
//! Because `a` is an EMA of differences, compositions of EMAs show up in the
//! analysis; [`ema_n_weight`] computes the lag weight of an `n`-fold EMA
//! stack. [`alpha_stability_interval`] evaluates the closed-form range of
//! `alpha` for which the continuous-time velocity dynamics on a landscape
//! with curvature bounds `[f2, f1]` stay stable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::ParamVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptorState {
    a: ParamVector,
    g_prev: ParamVector,
    k: u64,
}

impl AdaptorState {
    /// Fresh state: `a_0 = 0`, `g_0 = 0`, no steps taken.
    pub fn new(dim: usize) -> Self {
        AdaptorState {
            a: ParamVector::zeros(dim),
            g_prev: ParamVector::zeros(dim),
            k: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn steps(&self) -> u64 {
        self.k
    }

    /// Current gradient-difference average.
    pub fn average(&self) -> &ParamVector {
        &self.a
    }

    /// Gradient remembered from the previous step (zero before the first).
    pub fn previous_gradient(&self) -> &ParamVector {
        &self.g_prev
    }
}

/// One adaptor transition: consumes the raw gradient, returns the effective
/// (replaced) gradient and the successor state.
///
/// The magnitude constraint `|alpha| < 1/(1 - beta1)` is a configuration
/// concern, enforced by [`crate::config::OptimizerConfig::validate`]; the
/// raw recurrence itself accepts any finite coefficients.
pub fn adaptor_update(
    state: &AdaptorState,
    g: &ParamVector,
    beta1: f64,
    alpha: f64,
) -> Result<(ParamVector, AdaptorState)> {
    if g.len() != state.dim() {
        return Err(Error::structural(format!(
            "gradient dimension {} does not match adaptor dimension {}",
            g.len(),
            state.dim()
        )));
    }
    if !g.is_finite() {
        return Err(Error::numeric("non-finite gradient passed to adaptor_update"));
    }
    if !(beta1.is_finite() && alpha.is_finite()) {
        return Err(Error::numeric("non-finite beta1/alpha passed to adaptor_update"));
    }

    let dim = g.len();
    let mut a_next = ParamVector::zeros(dim);
    let mut effective = ParamVector::zeros(dim);
    {
        let a = state.a.as_slice();
        let g_prev = state.g_prev.as_slice();
        let g = g.as_slice();
        let a_next = a_next.as_mut_slice();
        let effective = effective.as_mut_slice();
        for i in 0..dim {
            a_next[i] = beta1 * a[i] + (1.0 - beta1) * (g[i] - g_prev[i]);
            effective[i] = g[i] + alpha * a_next[i];
        }
    }
    let next = AdaptorState {
        a: a_next,
        g_prev: g.clone(),
        k: state.k + 1,
    };
    Ok((effective, next))
}

/// Maximum lag accepted by [`ema_n_weight`]; beyond this the weight is
/// attenuated to nothing by `beta^lag` for any usable `beta` anyway.
pub const EMA_WEIGHT_MAX_LAG: u64 = 1_000_000;

/// Weight that an `n`-fold EMA stack (coefficient `beta` on history,
/// `1 - beta` on the innovation, zero-initialized) assigns to the input
/// `lag` steps in the past:
///
/// ```text
/// w(n, beta, lag) = (1 - beta)^n * beta^lag * C(lag + n - 1, n - 1)
/// ```
pub fn ema_n_weight(n: u32, beta: f64, lag: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("EMA depth n must be >= 1"));
    }
    if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
        return Err(Error::domain(format!("beta must be in [0, 1), got {beta}")));
    }
    if lag > EMA_WEIGHT_MAX_LAG {
        return Err(Error::domain(format!(
            "lag {lag} exceeds the supported cap {EMA_WEIGHT_MAX_LAG}"
        )));
    }
    let binom = binomial(lag + u64::from(n) - 1, u64::from(n) - 1);
    Ok((1.0 - beta).powi(n as i32) * beta.powi(lag as i32) * binom)
}

/// `C(m, r)` exactly in u128 while it fits, promoted to a floating-point
/// product on overflow. The running quotient `acc * (m - r + i) / i` is an
/// integer at every stage (it equals `C(m - r + i, i)`), so the integer
/// path is exact.
fn binomial(m: u64, r: u64) -> f64 {
    let r = r.min(m - r);
    let mut acc: u128 = 1;
    for i in 1..=r {
        match acc.checked_mul(u128::from(m - r + i)) {
            Some(prod) => acc = prod / u128::from(i),
            None => return binomial_float(m, r),
        }
    }
    acc as f64
}

fn binomial_float(m: u64, r: u64) -> f64 {
    let mut acc = 1.0f64;
    for i in 1..=r {
        acc = acc * ((m - r + i) as f64) / (i as f64);
    }
    acc
}

/// Open interval of exploration factors with stable velocity dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityInterval {
    pub lo: f64,
    pub hi: f64,
}

impl StabilityInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.lo < alpha && alpha < self.hi
    }
}

/// Closed-form stability range for the exploration factor on a landscape
/// whose curvature stays within `[f2, f1]`:
///
/// ```text
/// lo = -(1/(1 - beta1) + 1/(eta * f1)),   hi = -(1/(1 - beta1) + 1/(eta * f2))
/// ```
///
/// `f1` must be the positive curvature bound (`> 0`) and `f2` the negative
/// one (`< 0`). As `eta * |f|` grows, both endpoints approach
/// `-1/(1 - beta1)` — the magnitude scale of the simpler constraint
/// `|alpha| < 1/(1 - beta1)`.
pub fn alpha_stability_interval(
    beta1: f64,
    eta: f64,
    f1: f64,
    f2: f64,
) -> Result<StabilityInterval> {
    if !(beta1.is_finite() && (0.0..1.0).contains(&beta1)) {
        return Err(Error::config(format!("beta1 must be in [0, 1), got {beta1}")));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::config(format!("eta must be finite and > 0, got {eta}")));
    }
    if !(f1.is_finite() && f1 > 0.0) {
        return Err(Error::domain(format!("f1 must be > 0, got {f1}")));
    }
    if !(f2.is_finite() && f2 < 0.0) {
        return Err(Error::domain(format!("f2 must be < 0, got {f2}")));
    }
    let center = 1.0 / (1.0 - beta1);
    Ok(StabilityInterval {
        lo: -(center + 1.0 / (eta * f1)),
        hi: -(center + 1.0 / (eta * f2)),
    })
}
