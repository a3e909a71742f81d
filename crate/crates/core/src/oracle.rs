//! Scalar reference replay of the optimizer kernels.
//!
//! Everything here is written out one element and one update line at a time,
//! without sharing arithmetic with [`crate::optim`]. The line numbers used in
//! error reports refer to the canonical AdaPlus listing:
//!
//! | line | statement                                          |
//! |------|----------------------------------------------------|
//! | 5    | `theta <- theta - gamma * lambda * theta`          |
//! | 6    | `m <- beta1 m + (1 - beta1) g`                     |
//! | 7    | `s <- beta2 s + (1 - beta2)(g - m)^2 + eps` (or v)  |
//! | 8    | `m_bar <- beta1 m + (1 - beta1) g`                 |
//! | 9    | `m_hat <- m_bar / (1 - beta1^t)`, `s_hat <- s / (1 - beta2^t)` |
//! | 10   | `theta <- theta - a m_hat / (sqrt(s_hat) + eps)`   |

use thiserror::Error;

use crate::optim::{HyperParams, Kernel};
use crate::transcript::{ElementRecord, StepTranscript};

/// Largest dimension the oracle accepts.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("gradient stream is empty")]
    EmptyStream,
    #[error("theta0 is empty")]
    EmptyTheta,
    #[error("dimension {0} exceeds the oracle limit of {MAX_DIM}")]
    TooLarge(usize),
    #[error("step {step}: gradient has {got} entries, expected {expected}")]
    DimensionMismatch { step: usize, expected: usize, got: usize },
    #[error("{lrs} learning rates supplied for {steps} steps")]
    LearningRates { steps: usize, lrs: usize },
    #[error("step {step}, element {index}: line {line} produced a non-finite value")]
    NonFinite { step: usize, index: usize, line: u8 },
}

/// Replays `stream` through `kernel` and returns one transcript per step.
///
/// Flag handling mirrors the kernels exactly (see [`HyperParams`]).
pub fn replay(
    kernel: Kernel,
    stream: &[Vec<f64>],
    theta0: &[f64],
    hp: &HyperParams,
    lrs: &[f64],
) -> Result<Vec<StepTranscript>, OracleError> {
    if stream.is_empty() {
        return Err(OracleError::EmptyStream);
    }
    if theta0.is_empty() {
        return Err(OracleError::EmptyTheta);
    }
    let dim = theta0.len();
    if dim > MAX_DIM {
        return Err(OracleError::TooLarge(dim));
    }
    if lrs.len() != stream.len() {
        return Err(OracleError::LearningRates { steps: stream.len(), lrs: lrs.len() });
    }
    for (k, g) in stream.iter().enumerate() {
        if g.len() != dim {
            return Err(OracleError::DimensionMismatch { step: k + 1, expected: dim, got: g.len() });
        }
    }

    if kernel == Kernel::Sgdm {
        return replay_sgdm(stream, theta0, hp, lrs);
    }

    let apply_decay = match kernel {
        Kernel::AdaPlus | Kernel::AdaBelief => hp.decoupled_decay,
        Kernel::AdamW => true,
        _ => false,
    };
    let apply_nesterov = match kernel {
        Kernel::AdaPlus | Kernel::Nadam => hp.use_nesterov,
        _ => false,
    };
    let apply_belief = match kernel {
        Kernel::AdaPlus => hp.use_belief,
        Kernel::AdaBelief => true,
        _ => false,
    };

    let beta1 = hp.beta1;
    let beta2 = hp.beta2;
    let eps = hp.eps;
    let lambda = hp.weight_decay;

    let mut theta = theta0.to_vec();
    let mut m = vec![0.0; dim];
    let mut s = vec![0.0; dim];
    let mut out = Vec::with_capacity(stream.len());

    for (k, grads) in stream.iter().enumerate() {
        let step = k + 1;
        let gamma = lrs[k];
        let a = lrs[k];
        let exponent = i32::try_from(step).unwrap_or(i32::MAX);
        let beta1_pow = beta1.powi(exponent);
        let beta2_pow = beta2.powi(exponent);

        let mut records = Vec::with_capacity(dim);
        for i in 0..dim {
            let g = grads[i];
            let check = |x: f64, line: u8| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(OracleError::NonFinite { step, index: i, line })
                }
            };

            // line 5
            let mut decay = 0.0;
            if apply_decay {
                let shrink = gamma * lambda * theta[i];
                theta[i] -= shrink;
                decay = -shrink;
            }
            check(theta[i], 5)?;

            // line 6
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            check(m[i], 6)?;

            // line 7
            let diff = g - m[i];
            if apply_belief {
                let line7_eps = if hp.eps_in_belief { eps } else { 0.0 };
                s[i] = beta2 * s[i] + (1.0 - beta2) * (diff * diff) + line7_eps;
            } else {
                s[i] = beta2 * s[i] + (1.0 - beta2) * (g * g);
            }
            check(s[i], 7)?;

            // line 8
            let m_bar = if apply_nesterov { beta1 * m[i] + (1.0 - beta1) * g } else { m[i] };
            check(m_bar, 8)?;

            // line 9
            let m_hat = m_bar / (1.0 - beta1_pow);
            let s_hat = s[i] / (1.0 - beta2_pow);
            check(m_hat, 9)?;
            check(s_hat, 9)?;

            // line 10
            let update = a * m_hat / (s_hat.sqrt() + eps);
            theta[i] -= update;
            check(theta[i], 10)?;

            records.push(ElementRecord {
                g,
                m: m[i],
                residual: diff,
                second_moment: s[i],
                m_bar,
                m_hat,
                second_hat: s_hat,
                decay,
                delta_theta: -update,
                theta_after: theta[i],
            });
        }
        out.push(StepTranscript { kernel, t: step as u64, records });
    }
    Ok(out)
}

fn replay_sgdm(
    stream: &[Vec<f64>],
    theta0: &[f64],
    hp: &HyperParams,
    lrs: &[f64],
) -> Result<Vec<StepTranscript>, OracleError> {
    let dim = theta0.len();
    let mu = hp.beta1;
    let mut theta = theta0.to_vec();
    let mut buf = vec![0.0; dim];
    let mut out = Vec::with_capacity(stream.len());
    for (k, grads) in stream.iter().enumerate() {
        let step = k + 1;
        let lr = lrs[k];
        let mut records = Vec::with_capacity(dim);
        for i in 0..dim {
            let g = grads[i];
            let direction;
            let update;
            if hp.use_nesterov {
                buf[i] = mu * buf[i] + lr * g;
                direction = mu * buf[i] + lr * g;
                update = direction;
            } else {
                buf[i] = mu * buf[i] + g;
                direction = buf[i];
                update = lr * buf[i];
            }
            theta[i] -= update;
            if !theta[i].is_finite() {
                return Err(OracleError::NonFinite { step, index: i, line: 10 });
            }
            records.push(ElementRecord {
                g,
                m: buf[i],
                residual: 0.0,
                second_moment: 0.0,
                m_bar: direction,
                m_hat: direction,
                second_hat: 0.0,
                decay: 0.0,
                delta_theta: -update,
                theta_after: theta[i],
            });
        }
        out.push(StepTranscript { kernel: Kernel::Sgdm, t: step as u64, records });
    }
    Ok(out)
}
