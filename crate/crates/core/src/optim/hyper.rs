use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The optimizer update rules implemented by [`super::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    AdaPlus,
    Sgdm,
    Adam,
    AdamW,
    Nadam,
    AdaBelief,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::AdaPlus,
        Kernel::Sgdm,
        Kernel::Adam,
        Kernel::AdamW,
        Kernel::Nadam,
        Kernel::AdaBelief,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::AdaPlus => "adaplus",
            Kernel::Sgdm => "sgdm",
            Kernel::Adam => "adam",
            Kernel::AdamW => "adamw",
            Kernel::Nadam => "nadam",
            Kernel::AdaBelief => "adabelief",
        }
    }

    /// Hyper-parameters each kernel is normally run with.
    ///
    /// All kernels share lr = 1e-3, beta1 = 0.9, beta2 = 0.999 and eps = 1e-8.
    /// Only AdaPlus and AdamW decay weights by default (lambda = 1e-2); the
    /// feature flags are set to the kernel's own form.
    pub fn default_hyper_params(self) -> HyperParams {
        let base = HyperParams::default();
        match self {
            Kernel::AdaPlus => base,
            Kernel::AdamW => HyperParams { use_nesterov: false, use_belief: false, ..base },
            Kernel::Adam | Kernel::Sgdm => HyperParams {
                weight_decay: 0.0,
                use_nesterov: false,
                use_belief: false,
                decoupled_decay: false,
                ..base
            },
            Kernel::Nadam => HyperParams {
                weight_decay: 0.0,
                use_belief: false,
                decoupled_decay: false,
                ..base
            },
            Kernel::AdaBelief => HyperParams {
                weight_decay: 0.0,
                use_nesterov: false,
                decoupled_decay: false,
                ..base
            },
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown optimizer kernel `{0}` (expected one of adaplus, sgdm, adam, adamw, nadam, adabelief)")]
pub struct UnknownKernel(pub String);

impl FromStr for Kernel {
    type Err = UnknownKernel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownKernel(s.to_string()))
    }
}

/// Hyper-parameters shared by every kernel.
///
/// Which flags a kernel honours:
///
/// | kernel    | decoupled decay     | Nesterov numerator | belief second moment |
/// |-----------|---------------------|--------------------|----------------------|
/// | adaplus   | `decoupled_decay`   | `use_nesterov`     | `use_belief`         |
/// | adamw     | always              | never              | never                |
/// | adam      | never               | never              | never                |
/// | nadam     | never               | `use_nesterov`     | never                |
/// | adabelief | `decoupled_decay`   | never              | always               |
/// | sgdm      | never               | `use_nesterov`     | n/a                  |
///
/// SGDM reuses `beta1` as its momentum coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub use_nesterov: bool,
    pub use_belief: bool,
    pub decoupled_decay: bool,
    /// Add `eps` inside the belief recursion `s <- beta2 s + (1-beta2)(g-m)^2 + eps`.
    /// Switching it off makes the belief kernels comparable term-for-term with
    /// the `v` kernels in tests.
    pub eps_in_belief: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
            use_nesterov: true,
            use_belief: true,
            decoupled_decay: true,
            eps_in_belief: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperParamError {
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
    #[error("{name} must lie in [0, 1), got {value}")]
    Beta { name: &'static str, value: f64 },
    #[error("eps must be non-negative and finite, got {0}")]
    Eps(f64),
    #[error("weight decay must be non-negative and finite, got {0}")]
    WeightDecay(f64),
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), HyperParamError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HyperParamError::LearningRate(self.lr));
        }
        for (name, value) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&value) {
                return Err(HyperParamError::Beta { name, value });
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(HyperParamError::Eps(self.eps));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(HyperParamError::WeightDecay(self.weight_decay));
        }
        Ok(())
    }
}
