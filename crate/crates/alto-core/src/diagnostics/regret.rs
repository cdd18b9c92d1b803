//! Regret accounting and the closed-form momentum/variance ratio bound.

use crate::error::{Error, Result};

fn check_lengths(iterates: &[f64], optimum: &[f64]) -> Result<()> {
    if iterates.len() != optimum.len() {
        return Err(Error::structural(format!(
            "regret needs equal-length loss sequences ({} vs {})",
            iterates.len(),
            optimum.len()
        )));
    }
    if iterates.is_empty() {
        return Err(Error::domain("regret needs at least one step"));
    }
    Ok(())
}

/// Total regret `R(T) = sum_k (loss_k(theta_k) - loss_k(theta*))`.
pub fn regret(losses_at_iterates: &[f64], losses_at_optimum: &[f64]) -> Result<f64> {
    check_lengths(losses_at_iterates, losses_at_optimum)?;
    Ok(losses_at_iterates
        .iter()
        .zip(losses_at_optimum)
        .map(|(a, b)| a - b)
        .sum())
}

/// Partial sums `R(1), R(2), ..., R(T)`.
pub fn regret_series(losses_at_iterates: &[f64], losses_at_optimum: &[f64]) -> Result<Vec<f64>> {
    check_lengths(losses_at_iterates, losses_at_optimum)?;
    let mut acc = 0.0;
    Ok(losses_at_iterates
        .iter()
        .zip(losses_at_optimum)
        .map(|(a, b)| {
            acc += a - b;
            acc
        })
        .collect())
}

/// The series `R(T) / sqrt(T)`, used to check that regret grows no faster
/// than the square root of the horizon.
pub fn regret_over_sqrt_t(
    losses_at_iterates: &[f64],
    losses_at_optimum: &[f64],
) -> Result<Vec<f64>> {
    let series = regret_series(losses_at_iterates, losses_at_optimum)?;
    Ok(series
        .into_iter()
        .enumerate()
        .map(|(i, r)| r / ((i + 1) as f64).sqrt())
        .collect())
}

/// Closed-form bound on `|m_k / sqrt(v_k)|` for EMA moments of any
/// gradient stream in `d` dimensions:
/// `(1 - beta2) * sqrt(d * beta3 / ((1 - beta3) (beta3 - beta2^2)))`.
/// Requires `beta2^2 < beta3`.
pub fn momentum_ratio_bound(beta2: f64, beta3: f64, d: usize) -> Result<f64> {
    if !(beta2.is_finite() && (0.0..1.0).contains(&beta2)) {
        return Err(Error::domain(format!("beta2 must be in [0, 1), got {beta2}")));
    }
    if !(beta3.is_finite() && beta3 > 0.0 && beta3 < 1.0) {
        return Err(Error::domain(format!("beta3 must be in (0, 1), got {beta3}")));
    }
    if d == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if beta2 * beta2 >= beta3 {
        return Err(Error::domain(format!(
            "the bound needs beta2^2 < beta3 (got {} >= {beta3})",
            beta2 * beta2
        )));
    }
    let d = d as f64;
    Ok((1.0 - beta2) * (d * beta3 / ((1.0 - beta3) * (beta3 - beta2 * beta2))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn pinned_iterates_have_zero_regret() {
        let l = vec![0.7, 0.5, 0.9];
        assert_eq!(regret(&l, &l).unwrap(), 0.0);
    }

    #[test]
    fn constant_gap_accumulates_linearly() {
        let at_iterates = vec![1.5; 40];
        let at_optimum = vec![1.0; 40];
        assert_relative_eq!(
            regret(&at_iterates, &at_optimum).unwrap(),
            0.5 * 40.0,
            max_relative = 1e-12
        );
        let series = regret_series(&at_iterates, &at_optimum).unwrap();
        assert_relative_eq!(series[9], 5.0, max_relative = 1e-12);
        let ratio = regret_over_sqrt_t(&at_iterates, &at_optimum).unwrap();
        // Linear regret pushes R(T)/sqrt(T) up like sqrt(T).
        assert_relative_eq!(ratio[39], 0.5 * 40.0 / 40.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn length_mismatch_is_structural() {
        assert!(matches!(
            regret(&[1.0, 2.0], &[1.0]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn ratio_bound_frozen_values() {
        assert_abs_diff_eq!(
            momentum_ratio_bound(0.9, 0.99, 10).unwrap(),
            7.4162,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            momentum_ratio_bound(0.9, 0.99, 1).unwrap(),
            2.3452,
            epsilon = 1e-4
        );
    }

    #[test]
    fn ratio_bound_simplifies_at_zero_momentum() {
        // beta2 = 0 collapses the bound to sqrt(d / (1 - beta3)).
        for &(beta3, d) in &[(0.99, 10usize), (0.5, 4), (0.9, 1)] {
            let bound = momentum_ratio_bound(0.0, beta3, d).unwrap();
            assert_relative_eq!(
                bound,
                (d as f64 / (1.0 - beta3)).sqrt(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn ratio_bound_precondition() {
        // 0.9^2 = 0.81 >= 0.5 violates beta2^2 < beta3.
        assert!(matches!(
            momentum_ratio_bound(0.9, 0.5, 10),
            Err(Error::Domain(_))
        ));
        assert!(momentum_ratio_bound(0.9, 0.82, 10).is_ok());
        assert!(momentum_ratio_bound(1.0, 0.99, 10).is_err());
        assert!(momentum_ratio_bound(0.5, 0.99, 0).is_err());
    }
}
