//! Single-step update rules for every optimizer in the family.
//!
//! Each rule is a pure function from `(state, theta, gradient, config)` to
//! `(theta', state')`, so trajectories are replayable and the wrappers in
//! the parent module stay thin. The adapted variants differ from their base
//! rules only in routing the gradient through the exploration adaptor
//! first; the Adam/momentum arithmetic is shared, which makes the
//! `alpha = 0` reduction identities hold bit for bit.

use super::OptimizerState;
use crate::adaptor::adaptor_update;
use crate::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::partition::LayerPartition;
use crate::vector::ParamVector;

fn check_finite(name: &str, v: &ParamVector) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::numeric(format!("{name} contains non-finite entries")));
    }
    Ok(())
}

fn check_step_inputs(state: &OptimizerState, theta: &ParamVector, g: &ParamVector) -> Result<()> {
    theta.check_dim(state.m.len())?;
    g.check_dim(state.m.len())?;
    check_finite("theta", theta)?;
    check_finite("gradient", g)
}

/// Plain gradient descent: `theta' = theta - eta * g`.
pub fn sgd_step(theta: &ParamVector, g: &ParamVector, eta: f64) -> Result<ParamVector> {
    g.check_dim(theta.len())?;
    check_finite("theta", theta)?;
    check_finite("gradient", g)?;
    if !eta.is_finite() {
        return Err(Error::numeric(format!("step size must be finite (got {eta})")));
    }
    let mut out = theta.clone();
    out.axpy(-eta, g)?;
    Ok(out)
}

/// Shared heavy-ball arithmetic: `m' = beta2 * m + g`, `theta' = theta -
/// eta * m'`. The incoming `g` is either the raw or the adapted gradient.
fn momentum_core(
    m: &ParamVector,
    theta: &ParamVector,
    g: &ParamVector,
    eta: f64,
    beta2: f64,
) -> (ParamVector, ParamVector) {
    let mut m_next = ParamVector::zeros(m.len());
    let mut theta_next = theta.clone();
    for i in 0..m.len() {
        m_next[i] = beta2 * m[i] + g[i];
        theta_next[i] = theta[i] - eta * m_next[i];
    }
    (theta_next, m_next)
}

/// Heavy-ball SGD, the unadapted base of ESGD. The momentum buffer
/// accumulates the raw gradient without an innovation factor.
pub fn momentum_sgd_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let eta = config.eta.at(k_next);
    let (theta_next, m_next) = momentum_core(&state.m, theta, g, eta, config.beta2);
    let mut next = state.clone();
    next.m = m_next;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Exploration-adapted heavy-ball SGD: the momentum buffer accumulates the
/// effective gradient `g + alpha * a` instead of the raw one.
pub fn esgd_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let alpha = config.alpha_at(k_next);
    let (g_eff, adaptor) = adaptor_update(&state.adaptor, g, config.beta1, alpha)?;
    let eta = config.eta.at(k_next);
    let (theta_next, m_next) = momentum_core(&state.m, theta, &g_eff, eta, config.beta2);
    let mut next = state.clone();
    next.m = m_next;
    next.adaptor = adaptor;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Shared bias-corrected Adam arithmetic at step index `k >= 1`.
fn adam_core(
    m: &ParamVector,
    v: &ParamVector,
    theta: &ParamVector,
    g: &ParamVector,
    eta: f64,
    config: &OptimizerConfig,
    k: u64,
) -> (ParamVector, ParamVector, ParamVector) {
    let dim = m.len();
    let mut m_next = ParamVector::zeros(dim);
    let mut v_next = ParamVector::zeros(dim);
    let mut theta_next = theta.clone();
    let bc_m = 1.0 - config.beta2.powi(k as i32);
    let bc_v = 1.0 - config.beta3.powi(k as i32);
    for i in 0..dim {
        m_next[i] = config.beta2 * m[i] + (1.0 - config.beta2) * g[i];
        v_next[i] = config.beta3 * v[i] + (1.0 - config.beta3) * g[i] * g[i];
        let m_hat = m_next[i] / bc_m;
        let v_hat = v_next[i] / bc_v;
        theta_next[i] -= eta * m_hat / (v_hat.sqrt() + config.eps1);
    }
    (theta_next, m_next, v_next)
}

/// Textbook bias-corrected Adam (no weight decay), the unadapted base of
/// EAdam.
pub fn adam_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let eta = config.eta.at(k_next);
    let (theta_next, m_next, v_next) = adam_core(&state.m, &state.v, theta, g, eta, config, k_next);
    let mut next = state.clone();
    next.m = m_next;
    next.v = v_next;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Exploration-adapted Adam: bias-corrected moments of the effective
/// gradient.
pub fn eadam_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let alpha = config.alpha_at(k_next);
    let (g_eff, adaptor) = adaptor_update(&state.adaptor, g, config.beta1, alpha)?;
    let eta = config.eta.at(k_next);
    let (theta_next, m_next, v_next) =
        adam_core(&state.m, &state.v, theta, &g_eff, eta, config, k_next);
    let mut next = state.clone();
    next.m = m_next;
    next.v = v_next;
    next.adaptor = adaptor;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Adam plus decoupled weight decay: after the Adam move, `theta' -=
/// eta * lambda_k * theta` with the decay applied to the pre-step iterate.
pub fn adamw_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let eta = config.eta.at(k_next);
    let lambda = config.lambda.at(k_next);
    let (mut theta_next, m_next, v_next) =
        adam_core(&state.m, &state.v, theta, g, eta, config, k_next);
    theta_next.axpy(-eta * lambda, theta)?;
    let mut next = state.clone();
    next.m = m_next;
    next.v = v_next;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Layer-wise trust-ratio move: per layer block `i`,
/// `theta'(i) = theta(i) - eta * r(i) * phi(|theta(i)|) / (|r(i)| +
/// eps2 * phi(|theta(i)|))` with `phi(x) = x + eps3`. The step norm per
/// layer is bounded by `eta * phi(|theta(i)|)` for any `r`.
pub fn trust_ratio_apply(
    theta: &ParamVector,
    r: &ParamVector,
    eta: f64,
    partition: &LayerPartition,
    eps2: f64,
    eps3: f64,
) -> Result<ParamVector> {
    r.check_dim(theta.len())?;
    theta.check_dim(partition.dim())?;
    check_finite("theta", theta)?;
    check_finite("update direction", r)?;
    let mut out = theta.clone();
    for range in partition.ranges() {
        let theta_block = &theta.as_slice()[range.clone()];
        let r_block = &r.as_slice()[range.clone()];
        let theta_norm: f64 = theta_block.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r_norm: f64 = r_block.iter().map(|x| x * x).sum::<f64>().sqrt();
        let phi = theta_norm + eps3;
        let scale = eta * phi / (r_norm + eps2 * phi);
        for (o, &ri) in out.as_mut_slice()[range.clone()].iter_mut().zip(r_block) {
            *o -= scale * ri;
        }
    }
    Ok(out)
}

/// Shared layer-wise trust-ratio update; `bias_correct` selects between
/// the plain-EMA and the bias-corrected ratio.
fn alto_family_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
    bias_correct: bool,
) -> Result<(ParamVector, OptimizerState)> {
    check_step_inputs(state, theta, g)?;
    let k_next = state.k + 1;
    let alpha = config.alpha_at(k_next);
    let (g_eff, adaptor) = adaptor_update(&state.adaptor, g, config.beta1, alpha)?;
    let eta = config.eta.at(k_next);
    let lambda = config.lambda.at(k_next);

    let dim = theta.len();
    let mut m_next = ParamVector::zeros(dim);
    let mut v_next = ParamVector::zeros(dim);
    let mut r = ParamVector::zeros(dim);
    let (bc_m, bc_v) = if bias_correct {
        (
            1.0 - config.beta2.powi(k_next as i32),
            1.0 - config.beta3.powi(k_next as i32),
        )
    } else {
        (1.0, 1.0)
    };
    for i in 0..dim {
        m_next[i] = config.beta2 * state.m[i] + (1.0 - config.beta2) * g_eff[i];
        v_next[i] = config.beta3 * state.v[i] + (1.0 - config.beta3) * g_eff[i] * g_eff[i];
        let m_hat = m_next[i] / bc_m;
        let v_hat = v_next[i] / bc_v;
        r[i] = m_hat / (v_hat.sqrt() + config.eps1) + lambda * theta[i];
    }
    let theta_next = trust_ratio_apply(theta, &r, eta, &state.partition, config.eps2, config.eps3)?;
    let mut next = state.clone();
    next.m = m_next;
    next.v = v_next;
    next.adaptor = adaptor;
    next.k = k_next;
    Ok((theta_next, next))
}

/// Layer-wise trust-ratio optimizer without bias correction:
/// `r = m / (sqrt(v) + eps1) + lambda_k * theta`, applied per layer.
pub fn alto_vanilla_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    alto_family_step(state, theta, g, config, false)
}

/// Bias-corrected layer-wise trust-ratio optimizer. With `alpha = 0` this
/// *is* the repository's Lamb implementation — the reduction is structural,
/// not coincidental.
pub fn alto_step(
    state: &OptimizerState,
    theta: &ParamVector,
    g: &ParamVector,
    config: &OptimizerConfig,
) -> Result<(ParamVector, OptimizerState)> {
    alto_family_step(state, theta, g, config, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{rosenbrock_grad, GradientOracle, RosenbrockOracle};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn state(dim: usize) -> OptimizerState {
        OptimizerState::new(dim)
    }

    fn vec2(a: f64, b: f64) -> ParamVector {
        ParamVector::from_vec(vec![a, b])
    }

    #[test]
    fn sgd_frozen_examples() {
        let out = sgd_step(&vec2(1.0, 1.0), &vec2(0.0, 0.0), 0.1).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0]);
        let out = sgd_step(&vec2(0.0, 0.0), &vec2(-2.0, 0.0), 0.5).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 0.0]);
        // One step on the banana valley from the origin.
        let (gx, gy) = rosenbrock_grad(0.0, 0.0);
        let out = sgd_step(&vec2(0.0, 0.0), &vec2(gx, gy), 0.001).unwrap();
        assert_relative_eq!(out[0], 0.002, max_relative = 1e-15);
        assert_eq!(out[1], 0.0);
    }

    #[test]
    fn sgd_rejects_non_finite() {
        assert!(matches!(
            sgd_step(&vec2(0.0, 0.0), &vec2(f64::NAN, 0.0), 0.1),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(
            sgd_step(&vec2(f64::INFINITY, 0.0), &vec2(0.0, 0.0), 0.1),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn trust_ratio_frozen_example() {
        let partition = LayerPartition::single(2).unwrap();
        let theta = vec2(3.0, 4.0);
        let r = vec2(1.0, 0.0);
        let out = trust_ratio_apply(&theta, &r, 0.1, &partition, 1e-6, 1e-10).unwrap();
        assert_abs_diff_eq!(out[0] - theta[0], -0.4999975, epsilon = 1e-7);
        assert_eq!(out[1], theta[1]);
    }

    #[test]
    fn trust_ratio_zero_direction_is_fixed_point() {
        let partition = LayerPartition::single(3).unwrap();
        let theta = ParamVector::from_vec(vec![1.0, -2.0, 0.5]);
        let out = trust_ratio_apply(
            &theta,
            &ParamVector::zeros(3),
            0.7,
            &partition,
            1e-6,
            1e-10,
        )
        .unwrap();
        assert_eq!(out.as_slice(), theta.as_slice());
    }

    #[test]
    fn trust_ratio_respects_layer_step_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let partition = crate::partition::make_layer_partition(&[3, 5, 2]).unwrap();
        let (eta, eps2, eps3) = (0.3, 1e-6, 1e-10);
        for _ in 0..200 {
            let theta =
                ParamVector::from_vec((0..10).map(|_| rng.random_range(-5.0..5.0)).collect());
            let r = ParamVector::from_vec((0..10).map(|_| rng.random_range(-50.0..50.0)).collect());
            let out = trust_ratio_apply(&theta, &r, eta, &partition, eps2, eps3).unwrap();
            for range in partition.ranges() {
                let mut step_sq = 0.0;
                let mut norm_sq = 0.0;
                for i in range {
                    step_sq += (out[i] - theta[i]).powi(2);
                    norm_sq += theta[i] * theta[i];
                }
                let bound = eta * (norm_sq.sqrt() + eps3);
                assert!(step_sq.sqrt() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn adamw_pure_decay_examples() {
        let config = OptimizerConfig::with_constant_eta(0.1)
            .with_lambda(crate::schedule::LambdaSchedule::constant(0.1));
        let theta = ParamVector::from_vec(vec![1.0]);
        let g = ParamVector::zeros(1);
        let (theta1, s1) = adamw_step(&state(1), &theta, &g, &config).unwrap();
        assert_relative_eq!(theta1[0], 0.99, max_relative = 1e-15);
        // Zero gradients forever: geometric decay by (1 - eta * lambda).
        let (theta2, s2) = adamw_step(&s1, &theta1, &g, &config).unwrap();
        let (theta3, _) = adamw_step(&s2, &theta2, &g, &config).unwrap();
        let factor: f64 = 1.0 - 0.1 * 0.1;
        assert_relative_eq!(theta3[0], factor.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn adamw_with_zero_decay_is_adam() {
        let config = OptimizerConfig::with_constant_eta(0.05)
            .with_lambda(crate::schedule::LambdaSchedule::constant(0.0));
        let mut s_w = state(2);
        let mut s_a = state(2);
        let mut th_w = vec2(0.3, -0.8);
        let mut th_a = th_w.clone();
        for k in 0..50 {
            let g = vec2((k as f64 * 0.1).sin(), (k as f64 * 0.2).cos());
            let (tw, sw) = adamw_step(&s_w, &th_w, &g, &config).unwrap();
            let (ta, sa) = adam_step(&s_a, &th_a, &g, &config).unwrap();
            th_w = tw;
            th_a = ta;
            s_w = sw;
            s_a = sa;
        }
        // The decay term subtracts eta * 0 * theta = 0 exactly.
        assert_eq!(th_w.as_slice(), th_a.as_slice());
    }

    #[test]
    fn adapted_first_step_with_constant_gradient_is_a_near_sign_step() {
        // First adapted-Adam step, alpha = 0: bias correction gives
        // m_hat = g, v_hat = g^2, so the move is -eta / (1 + eps1).
        let config = OptimizerConfig::with_constant_eta(0.01).with_alpha(0.0);
        let theta = ParamVector::from_vec(vec![0.0]);
        let g = ParamVector::from_vec(vec![1.0]);
        let (theta1, s1) = eadam_step(&state(1), &theta, &g, &config).unwrap();
        assert_eq!(s1.k, 1);
        assert_relative_eq!(theta1[0], -0.01 / (1.0 + 1e-6), max_relative = 1e-12);
    }

    #[test]
    fn esgd_alpha_zero_matches_momentum_sgd_exactly() {
        let config = OptimizerConfig::with_constant_eta(1e-3)
            .with_alpha(0.0)
            .with_beta2(0.9);
        let oracle = RosenbrockOracle;
        let mut s_e = state(2);
        let mut s_m = state(2);
        let mut th_e = vec2(-0.5, 0.7);
        let mut th_m = th_e.clone();
        for _ in 0..100 {
            let g_e = oracle.grad(&th_e).unwrap();
            let g_m = oracle.grad(&th_m).unwrap();
            let (te, se) = esgd_step(&s_e, &th_e, &g_e, &config).unwrap();
            let (tm, sm) = momentum_sgd_step(&s_m, &th_m, &g_m, &config).unwrap();
            th_e = te;
            th_m = tm;
            s_e = se;
            s_m = sm;
            assert_eq!(th_e.as_slice(), th_m.as_slice());
        }
    }

    #[test]
    fn esgd_without_momentum_or_adaptation_is_sgd() {
        let config = OptimizerConfig::with_constant_eta(1e-3)
            .with_alpha(0.0)
            .with_beta2(0.0);
        let oracle = RosenbrockOracle;
        let mut s = state(2);
        let mut th_e = vec2(-0.5, 0.7);
        let mut th_s = th_e.clone();
        for _ in 0..50 {
            let g = oracle.grad(&th_e).unwrap();
            let (te, se) = esgd_step(&s, &th_e, &g, &config).unwrap();
            let g_s = oracle.grad(&th_s).unwrap();
            th_s = sgd_step(&th_s, &g_s, 1e-3).unwrap();
            th_e = te;
            s = se;
            assert_eq!(th_e.as_slice(), th_s.as_slice());
        }
    }

    #[test]
    fn eadam_alpha_zero_matches_adam_exactly() {
        let config = OptimizerConfig::with_constant_eta(0.01).with_alpha(0.0);
        let oracle = RosenbrockOracle;
        let mut s_e = state(2);
        let mut s_a = state(2);
        let mut th_e = vec2(1.5, -0.2);
        let mut th_a = th_e.clone();
        for _ in 0..200 {
            let g = oracle.grad(&th_e).unwrap();
            let (te, se) = eadam_step(&s_e, &th_e, &g, &config).unwrap();
            let (ta, sa) = adam_step(&s_a, &th_a, &g, &config).unwrap();
            th_e = te;
            th_a = ta;
            s_e = se;
            s_a = sa;
            assert_eq!(th_e.as_slice(), th_a.as_slice());
        }
    }

    #[test]
    fn alto_vanilla_first_step_moments() {
        let config = OptimizerConfig::with_constant_eta(0.01).with_alpha(0.0);
        let theta = vec2(0.5, -0.5);
        let g = vec2(2.0, -4.0);
        let (_, s1) = alto_vanilla_step(&state(2), &theta, &g, &config).unwrap();
        // m1 = (1 - beta2) g, v1 = (1 - beta3) g^2 from zero moments.
        assert_relative_eq!(s1.m[0], (1.0 - config.beta2) * 2.0, max_relative = 1e-15);
        assert_relative_eq!(s1.m[1], (1.0 - config.beta2) * -4.0, max_relative = 1e-15);
        assert_relative_eq!(s1.v[0], (1.0 - config.beta3) * 4.0, max_relative = 1e-15);
        assert_relative_eq!(s1.v[1], (1.0 - config.beta3) * 16.0, max_relative = 1e-15);
    }

    #[test]
    fn alto_degenerate_emas_give_signed_unit_like_steps() {
        let config = OptimizerConfig::with_constant_eta(0.1)
            .with_alpha(0.0)
            .with_beta2(0.0)
            .with_beta3(0.0);
        let theta = vec2(1.0, -2.0);
        let g = vec2(3.0, -0.25);
        let (theta1, _) = alto_step(&state(2), &theta, &g, &config).unwrap();
        // r = g / (|g| + eps1) + lambda * theta, then the trust-ratio move.
        let lambda = config.lambda.at(1);
        let r = ParamVector::from_vec(vec![
            3.0 / (3.0 + config.eps1) + lambda * 1.0,
            -0.25 / (0.25 + config.eps1) + lambda * -2.0,
        ]);
        let expect = trust_ratio_apply(
            &theta,
            &r,
            0.1,
            &LayerPartition::single(2).unwrap(),
            config.eps2,
            config.eps3,
        )
        .unwrap();
        assert_eq!(theta1.as_slice(), expect.as_slice());
    }

    #[test]
    fn moments_stay_non_negative_in_v() {
        let config = OptimizerConfig::with_constant_eta(0.01).with_alpha(-3.0).with_beta1(0.9);
        let mut s = state(2);
        let mut th = vec2(0.4, 0.4);
        let oracle = RosenbrockOracle;
        for _ in 0..100 {
            let g = oracle.grad(&th).unwrap();
            let (t, sn) = alto_step(&s, &th, &g, &config).unwrap();
            th = t;
            s = sn;
            assert!(s.v.iter().all(|&x| x >= 0.0));
        }
    }
}
