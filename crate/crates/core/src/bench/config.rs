//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! problem = quadratic
//! dim = 10
//! condition_number = 100
//! optimizer = adaplus
//! epochs = 10
//! steps_per_epoch = 500
//! seeds = 0, 1, 2
//! ```
//!
//! See [`CONFIG_KEYS`] for every key. Hyper-parameters left out take the
//! kernel's defaults ([`Kernel::default_hyper_params`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optim::{HyperParamError, HyperParams, Kernel, LrSchedule, ScheduleError, UnknownKernel};
use crate::problems::{self, Problem, ProblemError};

/// Recognised keys with a one-line description each.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("problem", "quadratic | rosenbrock | large_grad_small_curvature | logistic"),
    ("dim", "problem dimension (quadratic, rosenbrock, logistic)"),
    ("condition_number", "quadratic eigenvalue ratio, default 1"),
    ("g_mag", "large_grad_small_curvature linear coefficient, default 10"),
    ("curvature", "large_grad_small_curvature curvature, default 1e-3"),
    ("n_samples", "logistic dataset size, default 500"),
    ("margin", "logistic separation margin, default 0.5"),
    ("data_seed", "logistic dataset seed, default 0"),
    ("optimizer", "adaplus | sgdm | adam | adamw | nadam | adabelief"),
    ("lr", "base learning rate"),
    ("beta1", "first-moment coefficient (momentum for sgdm)"),
    ("beta2", "second-moment coefficient"),
    ("eps", "smoothing term"),
    ("weight_decay", "decoupled weight decay factor"),
    ("use_nesterov", "true | false"),
    ("use_belief", "true | false"),
    ("decoupled_decay", "true | false"),
    ("eps_in_belief", "true | false"),
    ("epochs", "number of epochs, >= 1"),
    ("steps_per_epoch", "optimizer steps per epoch, >= 1"),
    ("milestones", "comma-separated epochs at which the lr decays, may be empty"),
    ("decay_factor", "lr multiplier per milestone, default 0.1"),
    ("seeds", "comma-separated replica seeds, default 0"),
    ("log_every", "log a row every this many steps, default 1"),
    ("init_scale", "theta0 drawn uniformly from [-init_scale, init_scale], default 1"),
    ("noise", "none | gaussian | minibatch, default none"),
    ("noise_scale", "gaussian noise standard deviation"),
    ("batch_size", "minibatch size (logistic only)"),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Invalid { key: &'static str, value: String, reason: String },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error(transparent)]
    Kernel(#[from] UnknownKernel),
    #[error(transparent)]
    HyperParams(#[from] HyperParamError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Quadratic { dim: usize, condition_number: f64 },
    Rosenbrock { dim: usize },
    LargeGradSmallCurvature { g_mag: f64, curvature: f64 },
    Logistic { n_samples: usize, dim: usize, margin: f64, data_seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, ProblemError> {
        match *self {
            ProblemSpec::Quadratic { dim, condition_number } => problems::quadratic(dim, condition_number),
            ProblemSpec::Rosenbrock { dim } => problems::rosenbrock(dim),
            ProblemSpec::LargeGradSmallCurvature { g_mag, curvature } => {
                problems::large_grad_small_curvature(g_mag, curvature)
            }
            ProblemSpec::Logistic { n_samples, dim, margin, data_seed } => {
                problems::logistic_regression_synthetic(n_samples, dim, margin, data_seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseConfig {
    None,
    Gaussian { scale: f64 },
    Minibatch { batch_size: usize },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub kernel: Kernel,
    pub hyper: HyperParams,
    pub epochs: u64,
    pub steps_per_epoch: u64,
    pub schedule: LrSchedule,
    /// Sorted and free of duplicates.
    pub seeds: Vec<u64>,
    pub log_every: u64,
    pub init_scale: f64,
    pub noise: NoiseConfig,
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &'static str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)
            .map(|value| {
                value.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key,
                    value: value.clone(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn parse_or<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?.ok_or(ConfigError::Missing(key))
    }

    fn list(&mut self, key: &'static str) -> Result<Option<Vec<u64>>, ConfigError> {
        self.take(key)
            .map(|value| {
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<u64>().map_err(|e| ConfigError::Invalid {
                            key,
                            value: value.clone(),
                            reason: e.to_string(),
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

fn invalid(key: &'static str, value: impl ToString, reason: &str) -> ConfigError {
    ConfigError::Invalid { key, value: value.to_string(), reason: reason.to_string() }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            let key = key.trim();
            if !CONFIG_KEYS.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::UnknownKey { line: n + 1, key: key.to_string() });
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: n + 1, key: key.to_string() });
            }
        }
        let mut e = Entries { map };

        let problem_name: String = e.require("problem")?;
        let problem = match problem_name.as_str() {
            "quadratic" => ProblemSpec::Quadratic {
                dim: e.require("dim")?,
                condition_number: e.parse_or("condition_number", 1.0)?,
            },
            "rosenbrock" => ProblemSpec::Rosenbrock { dim: e.require("dim")? },
            "large_grad_small_curvature" => ProblemSpec::LargeGradSmallCurvature {
                g_mag: e.parse_or("g_mag", 10.0)?,
                curvature: e.parse_or("curvature", 1e-3)?,
            },
            "logistic" => ProblemSpec::Logistic {
                n_samples: e.parse_or("n_samples", 500)?,
                dim: e.require("dim")?,
                margin: e.parse_or("margin", 0.5)?,
                data_seed: e.parse_or("data_seed", 0)?,
            },
            other => return Err(ConfigError::UnknownProblem(other.to_string())),
        };

        let kernel: Kernel = e.require::<String>("optimizer")?.parse()?;
        let d = kernel.default_hyper_params();
        let hyper = HyperParams {
            lr: e.parse_or("lr", d.lr)?,
            beta1: e.parse_or("beta1", d.beta1)?,
            beta2: e.parse_or("beta2", d.beta2)?,
            eps: e.parse_or("eps", d.eps)?,
            weight_decay: e.parse_or("weight_decay", d.weight_decay)?,
            use_nesterov: e.parse_or("use_nesterov", d.use_nesterov)?,
            use_belief: e.parse_or("use_belief", d.use_belief)?,
            decoupled_decay: e.parse_or("decoupled_decay", d.decoupled_decay)?,
            eps_in_belief: e.parse_or("eps_in_belief", d.eps_in_belief)?,
        };

        let epochs: u64 = e.require("epochs")?;
        let steps_per_epoch: u64 = e.require("steps_per_epoch")?;
        let schedule = LrSchedule::new(
            e.list("milestones")?.unwrap_or_default(),
            e.parse_or("decay_factor", 0.1)?,
        )?;
        let mut seeds = e.list("seeds")?.unwrap_or_else(|| vec![0]);
        seeds.sort_unstable();
        seeds.dedup();
        let log_every = e.parse_or("log_every", 1)?;
        let init_scale = e.parse_or("init_scale", 1.0)?;

        let noise_kind: String = e.parse_or("noise", "none".to_string())?;
        let noise = match noise_kind.as_str() {
            "none" => NoiseConfig::None,
            "gaussian" => NoiseConfig::Gaussian { scale: e.require("noise_scale")? },
            "minibatch" => NoiseConfig::Minibatch { batch_size: e.require("batch_size")? },
            other => return Err(invalid("noise", other, "expected none, gaussian or minibatch")),
        };
        if let Some(key) = e.map.keys().next() {
            let key = CONFIG_KEYS.iter().find(|(k, _)| k == key).map_or("?", |(k, _)| *k);
            return Err(invalid(key, e.map[key].clone(), "not used by this problem or noise model"));
        }

        let config = RunConfig {
            problem,
            kernel,
            hyper,
            epochs,
            steps_per_epoch,
            schedule,
            seeds,
            log_every,
            init_scale,
            noise,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hyper.validate()?;
        let problem = self.problem.build()?;
        if self.epochs == 0 {
            return Err(invalid("epochs", 0, "must be at least 1"));
        }
        if self.steps_per_epoch == 0 {
            return Err(invalid("steps_per_epoch", 0, "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "", "at least one seed is required"));
        }
        if self.log_every == 0 {
            return Err(invalid("log_every", 0, "must be at least 1"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(invalid("init_scale", self.init_scale, "must be finite and non-negative"));
        }
        match (self.noise, &problem) {
            (NoiseConfig::Gaussian { scale }, _) if !(scale >= 0.0 && scale.is_finite()) => {
                Err(invalid("noise_scale", scale, "must be finite and non-negative"))
            }
            (NoiseConfig::Minibatch { .. }, p) if !matches!(p, Problem::Logistic(_)) => {
                Err(invalid("noise", "minibatch", "only the logistic problem has samples"))
            }
            (NoiseConfig::Minibatch { batch_size }, Problem::Logistic(l))
                if batch_size == 0 || batch_size > l.n_samples() =>
            {
                Err(invalid("batch_size", batch_size, "must be between 1 and n_samples"))
            }
            _ => Ok(()),
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.epochs * self.steps_per_epoch
    }

    /// Canonical text form with every key resolved; parsing it yields `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.problem {
            ProblemSpec::Quadratic { dim, condition_number } => {
                kv("problem", "quadratic".into());
                kv("dim", dim.to_string());
                kv("condition_number", format!("{condition_number:?}"));
            }
            ProblemSpec::Rosenbrock { dim } => {
                kv("problem", "rosenbrock".into());
                kv("dim", dim.to_string());
            }
            ProblemSpec::LargeGradSmallCurvature { g_mag, curvature } => {
                kv("problem", "large_grad_small_curvature".into());
                kv("g_mag", format!("{g_mag:?}"));
                kv("curvature", format!("{curvature:?}"));
            }
            ProblemSpec::Logistic { n_samples, dim, margin, data_seed } => {
                kv("problem", "logistic".into());
                kv("n_samples", n_samples.to_string());
                kv("dim", dim.to_string());
                kv("margin", format!("{margin:?}"));
                kv("data_seed", data_seed.to_string());
            }
        }
        let h = &self.hyper;
        kv("optimizer", self.kernel.name().into());
        kv("lr", format!("{:?}", h.lr));
        kv("beta1", format!("{:?}", h.beta1));
        kv("beta2", format!("{:?}", h.beta2));
        kv("eps", format!("{:?}", h.eps));
        kv("weight_decay", format!("{:?}", h.weight_decay));
        kv("use_nesterov", h.use_nesterov.to_string());
        kv("use_belief", h.use_belief.to_string());
        kv("decoupled_decay", h.decoupled_decay.to_string());
        kv("eps_in_belief", h.eps_in_belief.to_string());
        kv("epochs", self.epochs.to_string());
        kv("steps_per_epoch", self.steps_per_epoch.to_string());
        let milestones: Vec<String> = self.schedule.milestones().iter().map(u64::to_string).collect();
        kv("milestones", milestones.join(","));
        kv("decay_factor", format!("{:?}", self.schedule.decay_factor()));
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        kv("seeds", seeds.join(","));
        kv("log_every", self.log_every.to_string());
        kv("init_scale", format!("{:?}", self.init_scale));
        match self.noise {
            NoiseConfig::None => kv("noise", "none".into()),
            NoiseConfig::Gaussian { scale } => {
                kv("noise", "gaussian".into());
                kv("noise_scale", format!("{scale:?}"));
            }
            NoiseConfig::Minibatch { batch_size } => {
                kv("noise", "minibatch".into());
                kv("batch_size", batch_size.to_string());
            }
        }
        out
    }

    /// SHA-256 of [`RunConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUADRATIC: &str = "
        # quadratic smoke test
        problem = quadratic
        dim = 3
        condition_number = 10
        optimizer = adaplus
        epochs = 2
        steps_per_epoch = 5
        seeds = 3, 1, 2, 1
        milestones = 1
    ";

    #[test]
    fn parses_and_fills_defaults() {
        let c = RunConfig::parse(QUADRATIC).unwrap();
        assert_eq!(c.problem, ProblemSpec::Quadratic { dim: 3, condition_number: 10.0 });
        assert_eq!(c.kernel, Kernel::AdaPlus);
        assert_eq!(c.hyper, HyperParams::default());
        assert_eq!(c.seeds, vec![1, 2, 3]);
        assert_eq!(c.schedule.milestones(), &[1]);
        assert_eq!(c.log_every, 1);
        assert_eq!(c.noise, NoiseConfig::None);
        assert_eq!(c.total_steps(), 10);
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = RunConfig::parse(QUADRATIC).unwrap();
        let again = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_ignores_layout_but_not_values() {
        let a = RunConfig::parse(QUADRATIC).unwrap();
        let reordered = "optimizer=adaplus\nproblem=quadratic\ndim=3\ncondition_number=10.0\n\
                         epochs=2\nsteps_per_epoch=5\nseeds=1,2,3\nmilestones=1\nlr=0.001";
        assert_eq!(a.hash(), RunConfig::parse(reordered).unwrap().hash());
        let changed = QUADRATIC.replace("dim = 3", "dim = 4");
        assert_ne!(a.hash(), RunConfig::parse(&changed).unwrap().hash());
    }

    #[test]
    fn errors_are_specific() {
        let err = |text: &str| RunConfig::parse(text).unwrap_err();
        assert!(matches!(err("problem quadratic"), ConfigError::Syntax { line: 1 }));
        assert!(matches!(err("colour = red"), ConfigError::UnknownKey { .. }));
        assert!(matches!(err("problem = a\nproblem = b"), ConfigError::Duplicate { line: 2, .. }));
        assert!(matches!(err("problem = spiral"), ConfigError::UnknownProblem(_)));
        assert!(matches!(err("problem = rosenbrock\ndim = 2"), ConfigError::Missing("optimizer")));
        assert!(matches!(
            err("problem = rosenbrock\ndim = 2\noptimizer = lion\nepochs=1\nsteps_per_epoch=1"),
            ConfigError::Kernel(_)
        ));
        assert!(matches!(
            err("problem = rosenbrock\ndim = 3\noptimizer = adam\nepochs=1\nsteps_per_epoch=1"),
            ConfigError::Problem(ProblemError::OddDimension(3))
        ));
        assert!(matches!(
            err("problem = rosenbrock\ndim = 2\noptimizer = adam\nepochs=0\nsteps_per_epoch=1"),
            ConfigError::Invalid { key: "epochs", .. }
        ));
        assert!(matches!(
            err("problem = rosenbrock\ndim = 2\noptimizer = adam\nepochs=1\nsteps_per_epoch=1\nbeta1=1"),
            ConfigError::HyperParams(_)
        ));
        assert!(matches!(
            err("problem = quadratic\ndim = 2\noptimizer = adam\nepochs=1\nsteps_per_epoch=1\nnoise=minibatch\nbatch_size=4"),
            ConfigError::Invalid { key: "noise", .. }
        ));
        assert!(matches!(
            err("problem = quadratic\ndim = 2\noptimizer = adam\nepochs=1\nsteps_per_epoch=1\nmargin=0.5"),
            ConfigError::Invalid { key: "margin", .. }
        ));
    }
}
