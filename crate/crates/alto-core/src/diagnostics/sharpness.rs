//! Top Hessian eigenvalue by matrix-free power iteration.
//!
//! The Hessian is never materialized: Hessian-vector products come from
//! central differences of the gradient, so any [`GradientOracle`] can be
//! probed. The estimate carries its own residual; running out of
//! iterations is reported through it rather than as an error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::GradientOracle;
use crate::vector::ParamVector;

/// Result of a power-iteration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessEstimate {
    /// Dominant-magnitude eigenvalue of the Hessian at the probe point.
    pub lambda_max: f64,
    pub iterations_used: usize,
    /// `|H v - lambda v|` for the final unit vector `v`.
    pub residual: f64,
    /// Whether the residual met the requested tolerance.
    pub converged: bool,
}

/// Hessian-vector product by central differences of the gradient:
/// `H v ~ (g(theta + h v) - g(theta - h v)) / (2 h)` with
/// `h = sqrt(machine eps) * (1 + |theta|) / |v|`.
fn hessian_vector_product(
    oracle: &dyn GradientOracle,
    theta: &ParamVector,
    v: &ParamVector,
) -> Result<ParamVector> {
    let v_norm = v.norm();
    if v_norm == 0.0 {
        return Err(Error::domain("probe direction must be nonzero"));
    }
    let h = f64::EPSILON.sqrt() * (1.0 + theta.norm()) / v_norm;
    let mut plus = theta.clone();
    plus.axpy(h, v)?;
    let mut minus = theta.clone();
    minus.axpy(-h, v)?;
    let g_plus = oracle.grad(&plus)?;
    let g_minus = oracle.grad(&minus)?;
    let mut hv = g_plus.sub(&g_minus)?;
    hv = hv.scale(1.0 / (2.0 * h));
    Ok(hv)
}

/// Estimates the dominant-magnitude Hessian eigenvalue at `theta` by power
/// iteration with a seeded random start, using the Rayleigh quotient as the
/// eigenvalue readout. Stops when `|H v - lambda v| <= tol` or after
/// `max_iter` products; the caller inspects `converged`.
pub fn top_hessian_eigenvalue(
    oracle: &dyn GradientOracle,
    theta: &ParamVector,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<SharpnessEstimate> {
    if max_iter == 0 {
        return Err(Error::domain("power iteration needs at least one iteration"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive (got {tol})")));
    }
    let dim = oracle.dim();
    theta.check_dim(dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = ParamVector::from_vec(
        (0..dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect::<Vec<f64>>(),
    );
    let norm = v.norm();
    if norm == 0.0 {
        // Astronomically unlikely, but keep the contract airtight.
        v[0] = 1.0;
    } else {
        v = v.scale(1.0 / norm);
    }

    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut used = 0;
    for iter in 1..=max_iter {
        used = iter;
        let hv = hessian_vector_product(oracle, theta, &v)?;
        if !hv.is_finite() {
            return Err(Error::numeric(
                "Hessian-vector product produced non-finite entries",
            ));
        }
        lambda = v.dot(&hv)?;
        let mut resid_vec = hv.clone();
        resid_vec.axpy(-lambda, &v)?;
        residual = resid_vec.norm();
        if residual <= tol {
            return Ok(SharpnessEstimate {
                lambda_max: lambda,
                iterations_used: used,
                residual,
                converged: true,
            });
        }
        let hv_norm = hv.norm();
        if hv_norm == 0.0 {
            // The Hessian annihilates v: the dominant eigenvalue along the
            // explored subspace is zero.
            return Ok(SharpnessEstimate {
                lambda_max: 0.0,
                iterations_used: used,
                residual: 0.0,
                converged: true,
            });
        }
        v = hv.scale(1.0 / hv_norm);
    }
    Ok(SharpnessEstimate {
        lambda_max: lambda,
        iterations_used: used,
        residual,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_oracle, F2Oracle, RosenbrockOracle};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn diagonal_quadratic_recovers_top_curvature() {
        let q = quadratic_oracle(vec![1.0, 9.0], ParamVector::zeros(2)).unwrap();
        let theta = ParamVector::from_vec(vec![0.3, -0.4]);
        let est = top_hessian_eigenvalue(&q, &theta, 200, 1e-8, 1).unwrap();
        assert!(est.converged);
        assert_abs_diff_eq!(est.lambda_max, 9.0, epsilon = 1e-6);
        assert!(est.residual <= 1e-8);
    }

    #[test]
    fn banana_valley_curvature_at_the_minimum() {
        // Analytic Hessian at (1,1) is [[802, -400], [-400, 200]] with a
        // closed-form top eigenvalue of (1002 + sqrt(1002404)) / 2.
        let expect = (1002.0 + 1002404.0_f64.sqrt()) / 2.0;
        let theta = ParamVector::from_vec(vec![1.0, 1.0]);
        let est = top_hessian_eigenvalue(&RosenbrockOracle, &theta, 200, 1e-5, 3).unwrap();
        assert!(est.converged);
        assert_abs_diff_eq!(est.lambda_max, expect, epsilon = 0.01);
        assert_abs_diff_eq!(est.lambda_max, 1001.6006, epsilon = 0.01);
    }

    #[test]
    fn sharp_well_curvature_dwarfs_the_wide_well() {
        let at = |x: f64| {
            top_hessian_eigenvalue(&F2Oracle, &ParamVector::from_vec(vec![x]), 50, 1e-6, 7)
                .unwrap()
                .lambda_max
        };
        let sharp = at(0.6);
        let wide = at(0.0);
        assert_relative_eq!(sharp, 1800.0, max_relative = 1e-3);
        assert_relative_eq!(wide, 50.0, max_relative = 1e-3);
        assert!(sharp - wide >= 100.0);
    }

    #[test]
    fn non_convergence_is_reported_not_thrown() {
        // Two near-equal eigenvalues make power iteration crawl; one
        // iteration cannot converge from a random start.
        let q = quadratic_oracle(vec![1.0, 1.0 + 1e-12], ParamVector::zeros(2)).unwrap();
        let est = top_hessian_eigenvalue(&q, &ParamVector::zeros(2), 1, 1e-16, 5).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations_used, 1);
        assert!(est.residual.is_finite());
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = quadratic_oracle(vec![1.0], ParamVector::zeros(1)).unwrap();
        assert!(top_hessian_eigenvalue(&q, &ParamVector::zeros(1), 0, 1e-6, 1).is_err());
        assert!(top_hessian_eigenvalue(&q, &ParamVector::zeros(1), 10, -1.0, 1).is_err());
        assert!(top_hessian_eigenvalue(&q, &ParamVector::zeros(2), 10, 1e-6, 1).is_err());
    }
}
