use super::{Evaluation, Problem, ProblemError};

/// `f(x) = 1/2 sum_i d_i x_i^2` with `d` log-spaced over `[1, condition_number]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    diag: Vec<f64>,
    condition_number: f64,
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.diag
    }

    pub(super) fn eval(&self, theta: &[f64]) -> Evaluation {
        let grad: Vec<f64> = self.diag.iter().zip(theta).map(|(d, x)| d * x).collect();
        let loss = 0.5 * grad.iter().zip(theta).map(|(g, x)| g * x).sum::<f64>();
        Evaluation { loss, grad }
    }
}

pub fn quadratic(dim: usize, condition_number: f64) -> Result<Problem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(ProblemError::ConditionNumber(condition_number));
    }
    let diag = (0..dim)
        .map(|i| match i {
            0 => 1.0,
            i if i == dim - 1 => condition_number,
            i => condition_number.powf(i as f64 / (dim - 1) as f64),
        })
        .collect();
    Ok(Problem::Quadratic(Quadratic { diag, condition_number }))
}

/// Chained Rosenbrock `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rosenbrock {
    dim: usize,
}

impl Rosenbrock {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(super) fn eval(&self, x: &[f64]) -> Evaluation {
        let mut loss = 0.0;
        let mut grad = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let bend = x[i + 1] - x[i] * x[i];
            let off = 1.0 - x[i];
            loss += 100.0 * bend * bend + off * off;
            grad[i] += -400.0 * x[i] * bend - 2.0 * off;
            grad[i + 1] += 200.0 * bend;
        }
        Evaluation { loss, grad }
    }
}

pub fn rosenbrock(dim: usize) -> Result<Problem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if !dim.is_multiple_of(2) {
        return Err(ProblemError::OddDimension(dim));
    }
    Ok(Problem::Rosenbrock(Rosenbrock { dim }))
}

/// One-dimensional `f(x) = g_mag x + 1/2 curvature x^2`.
///
/// While `|x|` stays well below `g_mag / curvature` the gradient is close to
/// `g_mag` and changes by only `curvature * dx` per step: a large, nearly
/// constant gradient over a flat region.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuadratic {
    g_mag: f64,
    curvature: f64,
}

impl LinearQuadratic {
    pub fn g_mag(&self) -> f64 {
        self.g_mag
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    /// Attained at `x = -g_mag / curvature`.
    pub fn optimum_value(&self) -> f64 {
        -self.g_mag * self.g_mag / (2.0 * self.curvature)
    }

    pub(super) fn eval(&self, theta: &[f64]) -> Evaluation {
        let x = theta[0];
        Evaluation {
            loss: self.g_mag * x + 0.5 * self.curvature * x * x,
            grad: vec![self.g_mag + self.curvature * x],
        }
    }
}

pub fn large_grad_small_curvature(g_mag: f64, curvature: f64) -> Result<Problem, ProblemError> {
    for (name, value) in [("g_mag", g_mag), ("curvature", curvature)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ProblemError::NotPositive { name, value });
        }
    }
    Ok(Problem::LargeGradSmallCurvature(LinearQuadratic { g_mag, curvature }))
}
