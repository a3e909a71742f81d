use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Evaluation, Problem, ProblemError};

/// Mean logistic loss over a seeded, linearly separable dataset.
///
/// Labels are `-1` or `+1`. Every sample satisfies `|w* . x| >= margin` for a
/// hidden unit vector `w*`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
    margin: f64,
    seed: u64,
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self, i: usize) -> (&[f64], f64) {
        (&self.features[i * self.dim..(i + 1) * self.dim], self.labels[i])
    }

    pub(super) fn eval(&self, theta: &[f64]) -> Evaluation {
        self.eval_indices(theta, 0..self.n_samples())
    }

    /// Mean loss and gradient over the given samples, accumulated in order.
    pub fn eval_indices(&self, theta: &[f64], indices: impl ExactSizeIterator<Item = usize>) -> Evaluation {
        let count = indices.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim];
        for i in indices {
            let (x, y) = self.sample(i);
            let margin = y * x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>();
            loss += softplus(-margin);
            let weight = -y * sigmoid(-margin);
            for (g, xj) in grad.iter_mut().zip(x) {
                *g += weight * xj;
            }
        }
        grad.iter_mut().for_each(|g| *g /= count);
        Evaluation { loss: loss / count, grad }
    }

    /// Fraction of samples with `y (x . theta) > 0`.
    pub fn accuracy(&self, theta: &[f64]) -> f64 {
        let correct = (0..self.n_samples())
            .filter(|&i| {
                let (x, y) = self.sample(i);
                y * x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() > 0.0
            })
            .count();
        correct as f64 / self.n_samples() as f64
    }

    /// Writes the dataset as CSV with header `feature_0,...,feature_{d-1},label`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let header = (0..self.dim).map(|j| format!("feature_{j}")).chain(["label".to_string()]);
        writer.write_record(header)?;
        for i in 0..self.n_samples() {
            let (x, y) = self.sample(i);
            let fields = x.iter().map(f64::to_string).chain([(y as i64).to_string()]);
            writer.write_record(fields)?;
        }
        writer.flush()
    }
}

pub fn logistic_regression_synthetic(
    n_samples: usize,
    dim: usize,
    margin: f64,
    seed: u64,
) -> Result<Problem, ProblemError> {
    if n_samples < 2 {
        return Err(ProblemError::TooFewSamples(n_samples));
    }
    if dim == 0 {
        return Err(ProblemError::ZeroDimension);
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(ProblemError::NotPositive { name: "margin", value: margin });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);

    let mut features = Vec::with_capacity(n_samples * dim);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let proj: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        let y = if proj >= 0.0 { 1.0 } else { -1.0 };
        // push the point away from the separating hyperplane
        x.iter_mut().zip(&w).for_each(|(xj, wj)| *xj += y * margin * wj);
        features.extend(x);
        labels.push(y);
    }
    Ok(Problem::Logistic(LogisticRegression { features, labels, dim, margin, seed }))
}
