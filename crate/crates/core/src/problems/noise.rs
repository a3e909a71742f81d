use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Evaluation, Problem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// `g + scale * N(0, I)`.
    GaussianAdditive,
    /// Mean gradient over a random subset drawn without replacement. `scale`
    /// is the fraction of samples left out of each batch.
    MinibatchSubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, scale: 0.0, seed: 0 }
    }

    pub fn gaussian(scale: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::GaussianAdditive, scale, seed }
    }

    /// Minibatches of `batch_size` out of `n_samples`.
    pub fn minibatch(batch_size: usize, n_samples: usize, seed: u64) -> Self {
        let kept = batch_size.clamp(1, n_samples.max(1));
        let scale = 1.0 - kept as f64 / n_samples.max(1) as f64;
        Self { kind: NoiseKind::MinibatchSubset, scale, seed }
    }

    pub fn is_noiseless(&self) -> bool {
        self.kind == NoiseKind::None || self.scale == 0.0
    }
}

/// Stateful source of noisy gradients; the k-th call is a pure function of
/// the noise seed, `k` and `theta`.
#[derive(Debug, Clone)]
pub struct GradientNoise {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl GradientNoise {
    pub fn new(spec: NoiseSpec, problem: &Problem) -> Result<Self, ProblemError> {
        let scale_ok = spec.scale.is_finite()
            && spec.scale >= 0.0
            && (spec.kind != NoiseKind::MinibatchSubset || spec.scale < 1.0);
        if !scale_ok {
            return Err(ProblemError::NoiseScale(spec.scale));
        }
        if spec.kind == NoiseKind::MinibatchSubset
            && !spec.is_noiseless()
            && !matches!(problem, Problem::Logistic(_))
        {
            return Err(ProblemError::MinibatchUnsupported(problem.name().to_string()));
        }
        Ok(Self { spec, rng: ChaCha8Rng::seed_from_u64(spec.seed) })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// The next noisy evaluation at `theta`. With zero scale this is exactly
    /// [`Problem::eval`].
    pub fn sample(&mut self, problem: &Problem, theta: &[f64]) -> Result<Evaluation, ProblemError> {
        if self.spec.is_noiseless() {
            return problem.eval(theta);
        }
        match (self.spec.kind, problem) {
            (NoiseKind::GaussianAdditive, _) => {
                let mut e = problem.eval(theta)?;
                for g in e.grad.iter_mut() {
                    *g += self.spec.scale * self.rng.sample::<f64, _>(StandardNormal);
                }
                Ok(e)
            }
            (NoiseKind::MinibatchSubset, Problem::Logistic(p)) => {
                if theta.len() != p.dim() {
                    return Err(ProblemError::DimensionMismatch { expected: p.dim(), got: theta.len() });
                }
                let n = p.n_samples();
                let batch = ((1.0 - self.spec.scale) * n as f64).round().clamp(1.0, n as f64) as usize;
                let picked = rand::seq::index::sample(&mut self.rng, n, batch);
                Ok(p.eval_indices(theta, picked.into_iter()))
            }
            (NoiseKind::MinibatchSubset, other) => {
                Err(ProblemError::MinibatchUnsupported(other.name().to_string()))
            }
            (NoiseKind::None, _) => problem.eval(theta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{logistic_regression_synthetic, quadratic};
    use super::*;

    #[test]
    fn zero_scale_is_bit_exact() {
        let q = quadratic(4, 10.0).unwrap();
        let theta = [0.1, -0.3, 0.7, 1.1];
        for spec in [NoiseSpec::none(), NoiseSpec::gaussian(0.0, 9)] {
            let mut noise = GradientNoise::new(spec, &q).unwrap();
            assert_eq!(noise.sample(&q, &theta).unwrap(), q.eval(&theta).unwrap());
        }
        let l = logistic_regression_synthetic(40, 3, 0.5, 1).unwrap();
        let spec = NoiseSpec::minibatch(40, 40, 3);
        assert_eq!(spec.scale, 0.0);
        let mut noise = GradientNoise::new(spec, &l).unwrap();
        assert_eq!(noise.sample(&l, &[0.2, 0.1, -0.4]).unwrap(), l.eval(&[0.2, 0.1, -0.4]).unwrap());
    }

    #[test]
    fn noise_is_seeded() {
        let q = quadratic(3, 2.0).unwrap();
        let draw = |seed| {
            let mut n = GradientNoise::new(NoiseSpec::gaussian(0.5, seed), &q).unwrap();
            (0..5).map(|_| n.sample(&q, &[1.0, 1.0, 1.0]).unwrap().grad).collect::<Vec<_>>()
        };
        assert_eq!(draw(1), draw(1));
        assert_ne!(draw(1), draw(2));
    }

    #[test]
    fn minibatch_averages_a_subset() {
        let l = logistic_regression_synthetic(50, 4, 0.5, 2).unwrap();
        let mut noise = GradientNoise::new(NoiseSpec::minibatch(10, 50, 5), &l).unwrap();
        let theta = [0.5, -0.5, 0.25, 0.0];
        let a = noise.sample(&l, &theta).unwrap();
        let b = noise.sample(&l, &theta).unwrap();
        assert_ne!(a.grad, b.grad);
        assert_ne!(a.grad, l.eval(&theta).unwrap().grad);
    }

    #[test]
    fn minibatch_needs_samples() {
        let q = quadratic(2, 1.0).unwrap();
        let spec = NoiseSpec { kind: NoiseKind::MinibatchSubset, scale: 0.5, seed: 0 };
        assert!(matches!(GradientNoise::new(spec, &q), Err(ProblemError::MinibatchUnsupported(_))));
        assert!(GradientNoise::new(NoiseSpec::gaussian(-1.0, 0), &q).is_err());
    }
}
