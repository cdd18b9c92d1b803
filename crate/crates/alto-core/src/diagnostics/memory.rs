//! Relative memory overhead of keeping the extra gradient-difference
//! state, as a function of batch size.
//!
//! The adaptor's buffers are a fixed cost per parameter while activation
//! memory grows with the batch, so the relative overhead follows
//! `1 / (c1 * b + c2)`. The two coefficients are fitted from two measured
//! (batch, overhead) points by solving the corresponding 2x2 linear
//! system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the overhead model `1 / (c1 * b + c2)`; both positive,
/// so the overhead is strictly decreasing in the batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryModel {
    pub c1: f64,
    pub c2: f64,
}

impl MemoryModel {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) || !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::domain(format!(
                "model coefficients must be finite and positive (got c1 = {c1}, c2 = {c2})"
            )));
        }
        Ok(MemoryModel { c1, c2 })
    }
}

/// Predicted relative memory overhead at batch size `b`.
pub fn memory_overhead(b: f64, model: &MemoryModel) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::domain(format!("batch size must be positive (got {b})")));
    }
    Ok(1.0 / (model.c1 * b + model.c2))
}

/// Fits the overhead model through two measured points `(b, overhead)`.
/// The points must have distinct batch sizes and positive overheads; the
/// fit is exact at both inputs.
pub fn fit_memory_model(p1: (f64, f64), p2: (f64, f64)) -> Result<MemoryModel> {
    let ((b1, f1), (b2, f2)) = (p1, p2);
    for (b, f) in [(b1, f1), (b2, f2)] {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain(format!("batch size must be positive (got {b})")));
        }
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::domain(format!("overhead must be positive (got {f})")));
        }
    }
    if b1 == b2 {
        return Err(Error::domain(
            "fit points must have distinct batch sizes (singular system)",
        ));
    }
    // 1/f = c1 * b + c2 at both points.
    let c1 = (1.0 / f1 - 1.0 / f2) / (b1 - b2);
    let c2 = 1.0 / f1 - c1 * b1;
    MemoryModel::new(c1, c2)
}
