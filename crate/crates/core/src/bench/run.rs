use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, NoiseConfig, RunConfig};
use super::emit::{f64_field, opt_f64_field};
use crate::optim::{lr_at, Optimizer, ParamVector};
use crate::problems::{GradientNoise, NoiseSpec, Problem, ProblemError};

/// Environment variable overriding the number of replicas run in parallel.
pub const THREADS_ENV: &str = "ADAPLUS_THREADS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("cannot build replica thread pool: {0}")]
    ThreadPool(String),
}

/// One logged point of a replica trajectory. `loss` and `grad_norm` are taken
/// from the noiseless objective at the parameters after `step` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub seed: u64,
    pub epoch: u64,
    pub step: u64,
    #[serde(with = "f64_field")]
    pub lr: f64,
    #[serde(with = "f64_field")]
    pub loss: f64,
    #[serde(with = "f64_field")]
    pub grad_norm: f64,
    #[serde(with = "f64_field")]
    pub param_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub seed: u64,
    #[serde(with = "f64_field")]
    pub final_loss: f64,
    #[serde(with = "f64_field")]
    pub best_loss: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replicas: Vec<ReplicaSummary>,
    /// Excluded from every determinism guarantee.
    #[serde(with = "opt_f64_field")]
    pub wall_time_secs: Option<f64>,
}

/// Why and where a replica stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub seed: u64,
    pub step: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: String,
    pub problem: String,
    pub optimizer: String,
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Set when any replica hit a numerical failure; rows stop at the last
    /// finite point of that replica.
    pub aborted: Option<Abort>,
}

impl RunRecord {
    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }
}

struct Replica {
    rows: Vec<Row>,
    summary: ReplicaSummary,
    abort: Option<Abort>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn noise_spec(config: &RunConfig, problem: &Problem, seed: u64) -> NoiseSpec {
    let noise_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    match (config.noise, problem) {
        (NoiseConfig::None, _) => NoiseSpec::none(),
        (NoiseConfig::Gaussian { scale }, _) => NoiseSpec::gaussian(scale, noise_seed),
        (NoiseConfig::Minibatch { batch_size }, Problem::Logistic(l)) => {
            NoiseSpec::minibatch(batch_size, l.n_samples(), noise_seed)
        }
        // rejected by RunConfig::validate
        (NoiseConfig::Minibatch { .. }, _) => NoiseSpec::none(),
    }
}

fn initial_point(config: &RunConfig, dim: usize, seed: u64) -> Vec<f64> {
    let scale = config.init_scale;
    if scale == 0.0 {
        return vec![0.0; dim];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-scale..=scale)).collect()
}

fn replica(config: &RunConfig, problem: &Problem, seed: u64) -> Result<Replica, RunError> {
    let dim = problem.dim();
    let mut noise = GradientNoise::new(noise_spec(config, problem, seed), problem)?;
    let mut opt = Optimizer::new(config.kernel, config.hyper, dim).map_err(ConfigError::from)?;
    let mut params = ParamVector::new(initial_point(config, dim, seed))
        .map_err(|e| ConfigError::Invalid { key: "init_scale", value: config.init_scale.to_string(), reason: e.to_string() })?;

    let mut current = problem.eval(params.as_slice())?;
    let mut best = current.loss;
    let mut rows = Vec::new();
    let mut step = 0u64;
    let mut abort = None;

    'epochs: for epoch in 0..config.epochs {
        let lr = lr_at(&config.schedule, config.hyper.lr, epoch);
        for _ in 0..config.steps_per_epoch {
            let grad = if noise.spec().is_noiseless() {
                std::mem::take(&mut current.grad)
            } else {
                noise.sample(problem, params.as_slice())?.grad
            };
            if let Err(e) = opt.step(&mut params, &grad, lr) {
                abort = Some(Abort { seed, step: step + 1, reason: e.to_string() });
                break 'epochs;
            }
            let next = problem.eval(params.as_slice())?;
            if !next.loss.is_finite() {
                abort = Some(Abort { seed, step: step + 1, reason: format!("loss became {}", next.loss) });
                break 'epochs;
            }
            step += 1;
            current = next;
            best = best.min(current.loss);
            if step.is_multiple_of(config.log_every) {
                rows.push(Row {
                    seed,
                    epoch,
                    step,
                    lr,
                    loss: current.loss,
                    grad_norm: norm(&current.grad),
                    param_norm: params.norm(),
                });
            }
        }
    }

    Ok(Replica {
        rows,
        summary: ReplicaSummary { seed, final_loss: current.loss, best_loss: best, steps: step },
        abort,
    })
}

/// Runs every seed of `config`, in parallel when [`THREADS_ENV`] allows.
pub fn run(config: &RunConfig) -> Result<RunRecord, RunError> {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok());
    run_with_threads(config, threads)
}

/// Like [`run`] with an explicit replica parallelism (`None` uses rayon's default).
pub fn run_with_threads(config: &RunConfig, threads: Option<usize>) -> Result<RunRecord, RunError> {
    config.validate()?;
    let problem = config.problem.build()?;
    let started = Instant::now();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::ThreadPool(e.to_string()))?;
    let replicas: Vec<Replica> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| replica(config, &problem, seed))
            .collect::<Result<_, _>>()
    })?;

    let mut rows = Vec::new();
    let mut summaries = Vec::with_capacity(replicas.len());
    let mut aborted = None;
    for r in replicas {
        rows.extend(r.rows);
        summaries.push(r.summary);
        if aborted.is_none() {
            aborted = r.abort;
        }
    }

    Ok(RunRecord {
        config_hash: config.hash(),
        config: config.to_text(),
        problem: problem.to_string(),
        optimizer: config.kernel.name().to_string(),
        rows,
        summary: Summary { replicas: summaries, wall_time_secs: Some(started.elapsed().as_secs_f64()) },
        aborted,
    })
}
