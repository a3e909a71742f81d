//! AdaPlus: AdamW with Nesterov momentum and belief-based stepsize adjustment.
//!
//! The crate is split into four parts:
//!
//! - [`optim`]: stateful optimizer kernels (AdaPlus, SGDM, Adam, AdamW, Nadam,
//!   AdaBelief) over flat `f64` parameter vectors, plus the step-decay
//!   learning-rate schedule.
//! - [`oracle`]: an independent scalar reference that replays gradient streams
//!   one statement at a time, used for differential testing of [`optim`].
//! - [`problems`]: small objectives with exact gradients, gradient-noise
//!   wrappers and a finite-difference gradient checker.
//! - [`bench`]: seeded multi-replica experiment runs, comparison tables and
//!   CSV/JSON output, driven by the `adaplus-bench` binary.
//!
//! ```
//! use adaplus::optim::{HyperParams, Kernel, Optimizer, ParamVector};
//!
//! let mut params = ParamVector::new(vec![0.0]).unwrap();
//! let mut opt = Optimizer::new(Kernel::AdaPlus, HyperParams::default(), 1).unwrap();
//! let tr = opt.step(&mut params, &[1.0], 1e-3).unwrap();
//! assert!((tr.records[0].m_hat - 1.9).abs() < 1e-12);
//! ```

pub mod bench;
pub mod differential;
pub mod optim;
pub mod oracle;
pub mod problems;
pub mod transcript;

pub use optim::{HyperParams, Kernel, LrSchedule, Optimizer, OptimizerState, ParamVector, StepError};
pub use transcript::{ElementRecord, StepTranscript};
