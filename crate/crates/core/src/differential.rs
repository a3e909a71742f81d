//! Differential checks of the optimizer kernels against the scalar oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::optim::{self, HyperParams, Kernel, OptimizerState, ParamError, ParamVector, StepError};
use crate::oracle::{self, OracleError};
use crate::transcript::{ElementRecord, StepTranscript};

/// Tolerance for core-vs-oracle agreement on every transcript field.
pub const DIFF_TOLERANCE: f64 = 1e-12;

/// A seeded gradient stream with everything needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub kernel: Kernel,
    pub hp: HyperParams,
    pub theta0: Vec<f64>,
    pub stream: Vec<Vec<f64>>,
    pub lrs: Vec<f64>,
}

impl Case {
    /// Random stream of `steps` gradients with dimension in `1..=max_dim`.
    ///
    /// Each coordinate gets its own offset and noise scale (log-uniform in
    /// `[1e-2, 10]`), so slowly varying and noisy coordinates are mixed.
    /// The learning rate drops by 10x halfway through.
    pub fn random(kernel: Kernel, seed: u64, max_dim: usize, steps: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(kernel as u64);
        let dim = rng.random_range(1..=max_dim.max(1));
        let theta0: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let offsets: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let scales: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        let stream = (0..steps)
            .map(|_| {
                offsets
                    .iter()
                    .zip(&scales)
                    .map(|(o, s)| o + s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let hp = HyperParams { lr: 1e-2, ..kernel.default_hyper_params() };
        let lrs = (0..steps).map(|k| if k < steps / 2 { hp.lr } else { hp.lr * 0.1 }).collect();
        Self { kernel, hp, theta0, stream, lrs }
    }

    pub fn with_hyper_params(mut self, hp: HyperParams) -> Self {
        self.lrs.iter_mut().for_each(|lr| *lr = *lr / self.hp.lr * hp.lr);
        self.hp = hp;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    /// Runs the stream through [`optim::step`].
    pub fn run_core(&self) -> Result<Vec<StepTranscript>, DifferentialError> {
        let mut state = OptimizerState::new(self.dim());
        let mut params = ParamVector::new(self.theta0.clone())?;
        let transcripts = self
            .stream
            .iter()
            .zip(&self.lrs)
            .map(|(g, &lr)| optim::step(self.kernel, &mut state, &mut params, g, &self.hp, lr))
            .collect::<Result<_, _>>()?;
        Ok(transcripts)
    }

    pub fn run_oracle(&self) -> Result<Vec<StepTranscript>, OracleError> {
        oracle::replay(self.kernel, &self.stream, &self.theta0, &self.hp, &self.lrs)
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when the values are identical.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Fields compared between implementations. The residual is internal
/// bookkeeping and is checked separately where needed.
pub fn compared_fields(r: &ElementRecord) -> [(&'static str, f64); 9] {
    [
        ("g", r.g),
        ("m", r.m),
        ("second_moment", r.second_moment),
        ("m_bar", r.m_bar),
        ("m_hat", r.m_hat),
        ("second_hat", r.second_hat),
        ("decay", r.decay),
        ("delta_theta", r.delta_theta),
        ("theta_after", r.theta_after),
    ]
}

/// Location of the largest disagreement between two transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub t: u64,
    pub index: usize,
    pub field: &'static str,
    pub left: f64,
    pub right: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DifferentialError {
    #[error("transcripts differ in shape: {0}")]
    Shape(String),
    #[error("invalid initial parameters: {0}")]
    Params(#[from] ParamError),
    #[error("optimizer step failed: {0}")]
    Step(#[from] StepError),
    #[error("oracle replay failed: {0}")]
    Oracle(#[from] OracleError),
}

/// Largest relative disagreement over every compared field, or `None` when
/// the transcripts agree exactly.
pub fn max_relative_diff(
    left: &[StepTranscript],
    right: &[StepTranscript],
) -> Result<Option<Mismatch>, DifferentialError> {
    if left.len() != right.len() {
        return Err(DifferentialError::Shape(format!("{} vs {} steps", left.len(), right.len())));
    }
    let mut worst: Option<Mismatch> = None;
    for (a, b) in left.iter().zip(right) {
        if a.t != b.t || a.records.len() != b.records.len() {
            return Err(DifferentialError::Shape(format!(
                "step {} ({} elements) vs step {} ({} elements)",
                a.t,
                a.records.len(),
                b.t,
                b.records.len()
            )));
        }
        for (index, (ra, rb)) in a.records.iter().zip(&b.records).enumerate() {
            for ((field, x), (_, y)) in compared_fields(ra).into_iter().zip(compared_fields(rb)) {
                let rel = relative_error(x, y);
                if rel > 0.0 && worst.as_ref().is_none_or(|w| rel > w.rel) {
                    worst = Some(Mismatch { t: a.t, index, field, left: x, right: y, rel });
                }
            }
        }
    }
    Ok(worst)
}

/// Replays one case through both implementations and diffs them.
pub fn check_case(case: &Case) -> Result<Option<Mismatch>, DifferentialError> {
    let core = case.run_core()?;
    let reference = case.run_oracle()?;
    max_relative_diff(&core, &reference)
}

/// Outcome of the differential suite for one kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub kernel: Kernel,
    pub cases: usize,
    pub worst: Option<Mismatch>,
    pub failure: Option<String>,
}

impl KernelReport {
    pub fn max_rel(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |w| w.rel)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.failure.is_none() && self.max_rel() <= tol
    }
}

/// Runs `cases` random streams (seeds `0..cases`) per kernel.
pub fn run_suite(kernels: &[Kernel], cases: u64, max_dim: usize, steps: usize) -> Vec<KernelReport> {
    kernels
        .iter()
        .map(|&kernel| {
            let mut report = KernelReport { kernel, cases: 0, worst: None, failure: None };
            for seed in 0..cases {
                let case = Case::random(kernel, seed, max_dim, steps);
                report.cases += 1;
                match check_case(&case) {
                    Ok(Some(m)) if report.worst.as_ref().is_none_or(|w| m.rel > w.rel) => {
                        report.worst = Some(m)
                    }
                    Ok(_) => {}
                    Err(e) => {
                        report.failure = Some(format!("seed {seed}: {e}"));
                        break;
                    }
                }
            }
            report
        })
        .collect()
}
