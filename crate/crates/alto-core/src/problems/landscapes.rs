//! Closed-form test surfaces with analytic gradients.
//!
//! Each surface exists both as plain functions (for direct evaluation in
//! tests and diagnostics) and as a struct implementing [`GradientOracle`]
//! (for the experiment harness).

use super::GradientOracle;
use crate::error::{Error, Result};
use crate::vector::ParamVector;

/// Classic banana valley `(1 - x)^2 + 100 (y - x^2)^2`; global minimum at
/// `(1, 1)` with value 0.
pub fn rosenbrock(x: f64, y: f64) -> f64 {
    (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
}

pub fn rosenbrock_grad(x: f64, y: f64) -> (f64, f64) {
    let gx = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    let gy = 200.0 * (y - x * x);
    (gx, gy)
}

/// Squared implicit equation of a cardioid-shaped valley:
/// `L = ((x^2 + y^2 - x)^2 - (x^2 + y^2))^2`. Its zero set is a closed
/// curve of global minima (`r = 1 + cos(phi)` in polar form), which makes
/// the surface useful for comparing the paths different optimizers take
/// toward a degenerate minimum.
pub fn cardioid_sq(x: f64, y: f64) -> f64 {
    let s = x * x + y * y;
    let u = (s - x).powi(2) - s;
    u * u
}

pub fn cardioid_sq_grad(x: f64, y: f64) -> (f64, f64) {
    let s = x * x + y * y;
    let u = (s - x).powi(2) - s;
    // du/dx = 2 (s - x)(2x - 1) - 2x, du/dy = 2y (2 (s - x) - 1)
    let du_dx = 2.0 * (s - x) * (2.0 * x - 1.0) - 2.0 * x;
    let du_dy = 2.0 * y * (2.0 * (s - x) - 1.0);
    (2.0 * u * du_dx, 2.0 * u * du_dy)
}

fn f1_denom(x: f64) -> f64 {
    0.05 * x * (2.0 * x).sin().powi(2) + (x + 1.0).ln()
}

/// Scalar surface `1 / (0.05 x sin^2(2x) + ln(x + 1))` with a pole at the
/// origin and a staircase of progressively flatter minima for growing `x`.
/// Defined where `x > -1` and the denominator is positive; everything else
/// is a domain error.
pub fn f1(x: f64) -> Result<f64> {
    if x <= -1.0 {
        return Err(Error::domain(format!("f1 undefined for x <= -1 (got {x})")));
    }
    let d = f1_denom(x);
    if d <= 0.0 {
        return Err(Error::domain(format!(
            "f1 denominator non-positive at x = {x} (denom = {d})"
        )));
    }
    Ok(1.0 / d)
}

pub fn f1_grad(x: f64) -> Result<f64> {
    if x <= -1.0 {
        return Err(Error::domain(format!("f1 undefined for x <= -1 (got {x})")));
    }
    let d = f1_denom(x);
    if d <= 0.0 {
        return Err(Error::domain(format!(
            "f1 denominator non-positive at x = {x} (denom = {d})"
        )));
    }
    let s = (2.0 * x).sin();
    let c = (2.0 * x).cos();
    let d_prime = 0.05 * s * s + 0.2 * x * s * c + 1.0 / (x + 1.0);
    Ok(-d_prime / (d * d))
}

/// Scalar surface `1 - exp(-900 (x - 0.6)^2) - exp(-900 (x + 0.6)^2)
/// - exp(-25 x^2)`: two sharp wells at `x = +-0.6` carved into a broad
/// shallow well around the origin. The sharp wells are the better minima,
/// but a narrow basin must be hit to find them.
pub fn f2(x: f64) -> f64 {
    1.0 - (-900.0 * (x - 0.6).powi(2)).exp()
        - (-900.0 * (x + 0.6).powi(2)).exp()
        - (-25.0 * x * x).exp()
}

pub fn f2_grad(x: f64) -> f64 {
    1800.0 * (x - 0.6) * (-900.0 * (x - 0.6).powi(2)).exp()
        + 1800.0 * (x + 0.6) * (-900.0 * (x + 0.6).powi(2)).exp()
        + 50.0 * x * (-25.0 * x * x).exp()
}

/// Two-dimensional banana-valley oracle; minimum at `(1, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RosenbrockOracle;

impl GradientOracle for RosenbrockOracle {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(2)?;
        Ok(rosenbrock(theta[0], theta[1]))
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(2)?;
        let (gx, gy) = rosenbrock_grad(theta[0], theta[1]);
        Ok(ParamVector::from_vec(vec![gx, gy]))
    }
}

/// Two-dimensional oracle whose minima form a closed cardioid curve.
#[derive(Debug, Clone, Copy, Default)]
pub struct CardioidOracle;

impl GradientOracle for CardioidOracle {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(2)?;
        Ok(cardioid_sq(theta[0], theta[1]))
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(2)?;
        let (gx, gy) = cardioid_sq_grad(theta[0], theta[1]);
        Ok(ParamVector::from_vec(vec![gx, gy]))
    }
}

/// One-dimensional staircase-of-flat-minima oracle (see [`f1`]).
#[derive(Debug, Clone, Copy, Default)]
pub struct F1Oracle;

impl GradientOracle for F1Oracle {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(1)?;
        f1(theta[0])
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(1)?;
        Ok(ParamVector::from_vec(vec![f1_grad(theta[0])?]))
    }
}

/// One-dimensional sharp-wells-in-a-shallow-basin oracle (see [`f2`]).
#[derive(Debug, Clone, Copy, Default)]
pub struct F2Oracle;

impl GradientOracle for F2Oracle {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(1)?;
        Ok(f2(theta[0]))
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(1)?;
        Ok(ParamVector::from_vec(vec![f2_grad(theta[0])]))
    }
}

/// Axis-aligned convex quadratic `0.5 (theta - theta*)^T diag(h) (theta -
/// theta*)` with prescribed positive curvatures. Its closed-form optimum and
/// spectrum make it the reference surface for convergence and stability
/// checks.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    h_diag: Vec<f64>,
    theta_star: ParamVector,
}

/// Builds a [`QuadraticOracle`]; curvatures must all be finite and positive
/// and match the dimension of the optimum.
pub fn quadratic_oracle(h_diag: Vec<f64>, theta_star: ParamVector) -> Result<QuadraticOracle> {
    if h_diag.is_empty() {
        return Err(Error::domain("quadratic oracle needs at least one curvature"));
    }
    if h_diag.len() != theta_star.len() {
        return Err(Error::structural(format!(
            "curvature count {} does not match optimum dimension {}",
            h_diag.len(),
            theta_star.len()
        )));
    }
    for (i, &h) in h_diag.iter().enumerate() {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::domain(format!(
                "curvature {i} must be finite and positive (got {h})"
            )));
        }
    }
    Ok(QuadraticOracle { h_diag, theta_star })
}

impl QuadraticOracle {
    pub fn curvatures(&self) -> &[f64] {
        &self.h_diag
    }

    pub fn optimum(&self) -> &ParamVector {
        &self.theta_star
    }
}

impl GradientOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.h_diag.len()
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(self.dim())?;
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = theta[i] - self.theta_star[i];
            acc += 0.5 * self.h_diag[i] * d * d;
        }
        Ok(acc)
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(self.dim())?;
        let mut g = ParamVector::zeros(self.dim());
        for i in 0..self.dim() {
            g[i] = self.h_diag[i] * (theta[i] - self.theta_star[i]);
        }
        Ok(g)
    }
}

/// One-dimensional parabola `0.5 c x^2` with a *signed* curvature `c`.
///
/// Unlike [`QuadraticOracle`] the curvature may be negative, which gives a
/// concave surface whose iterates run away under any descent method; that is
/// exactly the divergence witness the stability-interval probes need.
#[derive(Debug, Clone, Copy)]
pub struct ScaledParabola {
    curvature: f64,
}

/// Builds a [`ScaledParabola`]; the curvature must be finite and nonzero but
/// may have either sign.
pub fn scaled_parabola(curvature: f64) -> Result<ScaledParabola> {
    if !curvature.is_finite() || curvature == 0.0 {
        return Err(Error::domain(format!(
            "parabola curvature must be finite and nonzero (got {curvature})"
        )));
    }
    Ok(ScaledParabola { curvature })
}

impl ScaledParabola {
    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

impl GradientOracle for ScaledParabola {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        theta.check_dim(1)?;
        Ok(0.5 * self.curvature * theta[0] * theta[0])
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        theta.check_dim(1)?;
        Ok(ParamVector::from_vec(vec![self.curvature * theta[0]]))
    }
}
