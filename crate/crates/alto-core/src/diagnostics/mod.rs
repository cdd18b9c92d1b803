//! Run measurements: Hessian sharpness, parameter drift, stage-sign
//! classification, regret, a momentum/variance ratio bound, and a
//! batch-size memory-overhead model.

mod drift;
mod memory;
mod regret;
mod sharpness;

pub use drift::{drift_metrics, stage_sign, DriftPoint, StageSign};
pub use memory::{fit_memory_model, memory_overhead, MemoryModel};
pub use regret::{momentum_ratio_bound, regret, regret_over_sqrt_t, regret_series};
pub use sharpness::{top_hessian_eigenvalue, SharpnessEstimate};
