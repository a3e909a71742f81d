//! Desk-scale objectives with exact gradients.

mod functions;
mod logistic;
mod noise;

pub use functions::{large_grad_small_curvature, quadratic, rosenbrock, LinearQuadratic, Quadratic, Rosenbrock};
pub use logistic::{logistic_regression_synthetic, LogisticRegression};
pub use noise::{GradientNoise, NoiseKind, NoiseSpec};

use std::fmt;

use thiserror::Error;

/// Default central-difference step for [`check_gradient`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("rosenbrock needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("condition number must be >= 1, got {0}")]
    ConditionNumber(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("theta has {got} entries, problem dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("noise scale must be finite and non-negative, got {0}")]
    NoiseScale(f64),
    #[error("minibatch noise needs a finite-sample problem, `{0}` is analytic")]
    MinibatchUnsupported(String),
    #[error("finite-difference step must be positive, got {0}")]
    FdStep(f64),
}

/// Loss and gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// An objective. Evaluation is pure: the same `theta` always yields the same
/// loss and gradient bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Quadratic(Quadratic),
    Rosenbrock(Rosenbrock),
    LargeGradSmallCurvature(LinearQuadratic),
    Logistic(LogisticRegression),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Quadratic(p) => p.dim(),
            Problem::Rosenbrock(p) => p.dim(),
            Problem::LargeGradSmallCurvature(_) => 1,
            Problem::Logistic(p) => p.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Quadratic(_) => "quadratic",
            Problem::Rosenbrock(_) => "rosenbrock",
            Problem::LargeGradSmallCurvature(_) => "large_grad_small_curvature",
            Problem::Logistic(_) => "logistic",
        }
    }

    /// Minimum value when it is known in closed form.
    pub fn optimum_value(&self) -> Option<f64> {
        match self {
            Problem::Quadratic(_) | Problem::Rosenbrock(_) => Some(0.0),
            Problem::LargeGradSmallCurvature(p) => Some(p.optimum_value()),
            Problem::Logistic(_) => None,
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Result<Evaluation, ProblemError> {
        if theta.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        Ok(match self {
            Problem::Quadratic(p) => p.eval(theta),
            Problem::Rosenbrock(p) => p.eval(theta),
            Problem::LargeGradSmallCurvature(p) => p.eval(theta),
            Problem::Logistic(p) => p.eval(theta),
        })
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64, ProblemError> {
        Ok(self.eval(theta)?.loss)
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Quadratic(p) => {
                write!(f, "quadratic(dim={}, condition_number={})", p.dim(), p.condition_number())
            }
            Problem::Rosenbrock(p) => write!(f, "rosenbrock(dim={})", p.dim()),
            Problem::LargeGradSmallCurvature(p) => write!(
                f,
                "large_grad_small_curvature(g_mag={}, curvature={})",
                p.g_mag(),
                p.curvature()
            ),
            Problem::Logistic(p) => write!(
                f,
                "logistic(n_samples={}, dim={}, margin={}, seed={})",
                p.n_samples(),
                p.dim(),
                p.margin(),
                p.seed()
            ),
        }
    }
}

/// Largest absolute gap between the analytic gradient and central
/// differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn check_gradient(problem: &Problem, theta: &[f64], h: f64) -> Result<f64, ProblemError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ProblemError::FdStep(h));
    }
    let analytic = problem.eval(theta)?.grad;
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for (i, &exact) in analytic.iter().enumerate() {
        probe[i] = theta[i] + h;
        let up = problem.loss(&probe)?;
        probe[i] = theta[i] - h;
        let down = problem.loss(&probe)?;
        probe[i] = theta[i];
        worst = worst.max(((up - down) / (2.0 * h) - exact).abs());
    }
    Ok(worst)
}
