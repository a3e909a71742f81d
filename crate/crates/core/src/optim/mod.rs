//! Optimizer kernels over flat parameter vectors.

mod hyper;
mod kernels;
mod schedule;
mod state;

pub use hyper::{HyperParamError, HyperParams, Kernel, UnknownKernel};
pub use kernels::{
    adabelief_step, adam_step, adamw_step, adaplus_step, nadam_step, sgdm_step, step, Optimizer,
};
pub use schedule::{lr_at, LrSchedule, ScheduleError};
pub use state::{OptimizerState, ParamError, ParamVector};

use thiserror::Error;

/// Failure of a single optimizer step. The state and parameters are left
/// untouched whenever a step returns an error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("gradient has {got} entries but the parameters have dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("optimizer state has dimension {state} but the parameters have dimension {params}")]
    StateMismatch { state: usize, params: usize },
    #[error("gradient entry {index} is not finite ({value})")]
    NonFiniteGradient { index: usize, value: f64 },
    #[error("step {t} produced a non-finite parameter at index {index}")]
    NonFiniteParameter { t: u64, index: usize },
    #[error("learning rate must be positive and finite, got {0}")]
    InvalidLearningRate(f64),
    #[error(transparent)]
    HyperParams(#[from] HyperParamError),
}
