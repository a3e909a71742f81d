use super::{HyperParamError, HyperParams, Kernel, OptimizerState, ParamVector, StepError};
use crate::transcript::{ElementRecord, StepTranscript};

/// Which pieces of the AdamW-family update a kernel applies.
#[derive(Debug, Clone, Copy)]
struct Form {
    decay: bool,
    nesterov: bool,
    belief: bool,
}

impl Form {
    fn of(kernel: Kernel, hp: &HyperParams) -> Option<Form> {
        let form = match kernel {
            Kernel::AdaPlus => Form {
                decay: hp.decoupled_decay,
                nesterov: hp.use_nesterov,
                belief: hp.use_belief,
            },
            Kernel::Adam => Form { decay: false, nesterov: false, belief: false },
            Kernel::AdamW => Form { decay: true, nesterov: false, belief: false },
            Kernel::Nadam => Form { decay: false, nesterov: hp.use_nesterov, belief: false },
            Kernel::AdaBelief => Form { decay: hp.decoupled_decay, nesterov: false, belief: true },
            Kernel::Sgdm => return None,
        };
        Some(form)
    }
}

/// `1 - beta^t`.
fn bias_correction(beta: f64, t: u64) -> f64 {
    1.0 - beta.powi(i32::try_from(t).unwrap_or(i32::MAX))
}

fn check_inputs(
    state: &OptimizerState,
    params: &ParamVector,
    grads: &[f64],
    hp: &HyperParams,
    lr_t: f64,
) -> Result<(), StepError> {
    hp.validate()?;
    if !(lr_t > 0.0 && lr_t.is_finite()) {
        return Err(StepError::InvalidLearningRate(lr_t));
    }
    if grads.len() != params.dim() {
        return Err(StepError::DimensionMismatch { expected: params.dim(), got: grads.len() });
    }
    if state.dim() != params.dim() {
        return Err(StepError::StateMismatch { state: state.dim(), params: params.dim() });
    }
    if let Some((index, &value)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(StepError::NonFiniteGradient { index, value });
    }
    Ok(())
}

/// Advances `state` and `params` by one step of `kernel`.
///
/// The adaptive kernels run, per element and in this order:
///
/// 1. `theta <- theta - lr_t * lambda * theta` (decoupled decay, if enabled)
/// 2. `m <- beta1 m + (1 - beta1) g`
/// 3. `s <- beta2 s + (1 - beta2)(g - m)^2 + eps` for belief kernels,
///    `v <- beta2 v + (1 - beta2) g^2` otherwise
/// 4. `m_bar <- beta1 m + (1 - beta1) g` with Nesterov, `m_bar <- m` without
/// 5. `m_hat <- m_bar / (1 - beta1^t)`, `s_hat <- s / (1 - beta2^t)`
/// 6. `theta <- theta - lr_t * m_hat / (sqrt(s_hat) + eps)`, applied to the decayed theta
///
/// The residual `g - m` in step 3 is carried as `r_t = beta1 (g_t - g_{t-1} + r_{t-1})`,
/// which equals `g_t - m_t` but keeps full relative precision when the gradient
/// barely changes between steps.
///
/// SGDM ignores the adaptive machinery: `m <- mu m + g; theta <- theta - lr_t m`, or with
/// Nesterov `m <- mu m + lr_t g; theta <- theta - (mu m + lr_t g)`, where `mu = beta1`.
///
/// On error nothing is modified.
pub fn step(
    kernel: Kernel,
    state: &mut OptimizerState,
    params: &mut ParamVector,
    grads: &[f64],
    hp: &HyperParams,
    lr_t: f64,
) -> Result<StepTranscript, StepError> {
    check_inputs(state, params, grads, hp, lr_t)?;
    match Form::of(kernel, hp) {
        Some(form) => adaptive(kernel, form, state, params, grads, hp, lr_t),
        None => momentum(state, params, grads, hp, lr_t),
    }
}

fn adaptive(
    kernel: Kernel,
    form: Form,
    state: &mut OptimizerState,
    params: &mut ParamVector,
    grads: &[f64],
    hp: &HyperParams,
    lr_t: f64,
) -> Result<StepTranscript, StepError> {
    let t = state.t + 1;
    let (b1, b2) = (hp.beta1, hp.beta2);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let belief_eps = if hp.eps_in_belief { hp.eps } else { 0.0 };
    let dim = params.dim();

    let mut records = Vec::with_capacity(dim);
    for (i, (&g, &theta_prev)) in grads.iter().zip(params.as_slice()).enumerate() {
        let decay = if form.decay { -(lr_t * hp.weight_decay * theta_prev) } else { 0.0 };
        let theta = theta_prev + decay;

        let m = b1 * state.m[i] + (1.0 - b1) * g;
        let residual = b1 * ((g - state.prev_grad[i]) + state.residual[i]);
        let second_moment = if form.belief {
            b2 * state.second_moment[i] + (1.0 - b2) * (residual * residual) + belief_eps
        } else {
            b2 * state.second_moment[i] + (1.0 - b2) * (g * g)
        };
        let m_bar = if form.nesterov { b1 * m + (1.0 - b1) * g } else { m };
        let m_hat = m_bar / bc1;
        let second_hat = second_moment / bc2;
        let delta_theta = -(lr_t * m_hat) / (second_hat.sqrt() + hp.eps);
        let theta_after = theta + delta_theta;
        if !theta_after.is_finite() {
            return Err(StepError::NonFiniteParameter { t, index: i });
        }
        records.push(ElementRecord {
            g,
            m,
            residual,
            second_moment,
            m_bar,
            m_hat,
            second_hat,
            decay,
            delta_theta,
            theta_after,
        });
    }

    for (i, r) in records.iter().enumerate() {
        state.m[i] = r.m;
        state.second_moment[i] = r.second_moment;
        state.residual[i] = r.residual;
        state.prev_grad[i] = r.g;
    }
    state.t = t;
    params.replace(records.iter().map(|r| r.theta_after).collect());
    Ok(StepTranscript { kernel, t, records })
}

fn momentum(
    state: &mut OptimizerState,
    params: &mut ParamVector,
    grads: &[f64],
    hp: &HyperParams,
    lr_t: f64,
) -> Result<StepTranscript, StepError> {
    let t = state.t + 1;
    let mu = hp.beta1;
    let mut records = Vec::with_capacity(params.dim());
    for (i, (&g, &theta)) in grads.iter().zip(params.as_slice()).enumerate() {
        let (m, direction, delta_theta) = if hp.use_nesterov {
            let m = mu * state.m[i] + lr_t * g;
            let direction = mu * m + lr_t * g;
            (m, direction, -direction)
        } else {
            let m = mu * state.m[i] + g;
            (m, m, -(lr_t * m))
        };
        let theta_after = theta + delta_theta;
        if !theta_after.is_finite() {
            return Err(StepError::NonFiniteParameter { t, index: i });
        }
        records.push(ElementRecord {
            g,
            m,
            residual: 0.0,
            second_moment: 0.0,
            m_bar: direction,
            m_hat: direction,
            second_hat: 0.0,
            decay: 0.0,
            delta_theta,
            theta_after,
        });
    }
    for (i, r) in records.iter().enumerate() {
        state.m[i] = r.m;
        state.prev_grad[i] = r.g;
    }
    state.t = t;
    params.replace(records.iter().map(|r| r.theta_after).collect());
    Ok(StepTranscript { kernel: Kernel::Sgdm, t, records })
}

macro_rules! named_step {
    ($(#[$doc:meta])* $name:ident, $kernel:expr) => {
        $(#[$doc])*
        pub fn $name(
            state: &mut OptimizerState,
            params: &mut ParamVector,
            grads: &[f64],
            hp: &HyperParams,
            lr_t: f64,
        ) -> Result<StepTranscript, StepError> {
            step($kernel, state, params, grads, hp, lr_t)
        }
    };
}

named_step!(
    /// AdamW basis with a Nesterov numerator and the belief second moment.
    adaplus_step,
    Kernel::AdaPlus
);
named_step!(adam_step, Kernel::Adam);
named_step!(
    /// Adam preceded by decoupled weight decay.
    adamw_step,
    Kernel::AdamW
);
named_step!(
    /// Adam with the Nesterov numerator `beta1 m_t + (1 - beta1) g_t`.
    nadam_step,
    Kernel::Nadam
);
named_step!(adabelief_step, Kernel::AdaBelief);
named_step!(sgdm_step, Kernel::Sgdm);

/// A kernel bundled with its hyper-parameters and state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kernel: Kernel,
    hp: HyperParams,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(kernel: Kernel, hp: HyperParams, dim: usize) -> Result<Self, HyperParamError> {
        hp.validate()?;
        Ok(Self { kernel, hp, state: OptimizerState::new(dim) })
    }

    pub fn with_defaults(kernel: Kernel, dim: usize) -> Self {
        Self { kernel, hp: kernel.default_hyper_params(), state: OptimizerState::new(dim) }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn step(
        &mut self,
        params: &mut ParamVector,
        grads: &[f64],
        lr_t: f64,
    ) -> Result<StepTranscript, StepError> {
        step(self.kernel, &mut self.state, params, grads, &self.hp, lr_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step(kernel: Kernel, hp: HyperParams, theta0: f64, g: f64, lr: f64) -> ElementRecord {
        let mut state = OptimizerState::new(1);
        let mut params = ParamVector::new(vec![theta0]).unwrap();
        let tr = step(kernel, &mut state, &mut params, &[g], &hp, lr).unwrap();
        assert_eq!(tr.t, 1);
        assert_eq!(params.as_slice()[0], tr.records[0].theta_after);
        tr.records[0]
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn adaplus_zero_gradient_does_not_move() {
        let hp = HyperParams { weight_decay: 0.0, ..Default::default() };
        let r = one_step(Kernel::AdaPlus, hp, 1.0, 0.0, 1e-3);
        assert_eq!(r.theta_after, 1.0);
        assert_eq!(r.m, 0.0);
        assert_eq!(r.second_moment, 1e-8);
        assert_eq!(r.delta_theta, 0.0);
    }

    #[test]
    fn adaplus_decay_only() {
        let r = one_step(Kernel::AdaPlus, HyperParams::default(), 1.0, 0.0, 1e-3);
        assert!(close(r.theta_after, 0.99999, 1e-15));
        assert_eq!(r.delta_theta, 0.0);
        assert!(close(r.decay, -1e-5, 1e-15));
    }

    #[test]
    fn adaplus_first_unit_gradient() {
        let hp = HyperParams { weight_decay: 0.0, ..Default::default() };
        let r = one_step(Kernel::AdaPlus, hp, 0.0, 1.0, 1e-3);
        assert!(close(r.m, 0.1, 1e-15));
        assert!(close(r.second_moment, 8.1001e-4, 1e-14));
        assert!(close(r.m_bar, 0.19, 1e-15));
        assert!(close(r.m_hat, 1.9, 1e-15));
        assert!(close(r.second_hat, 0.81001, 1e-12));
        assert!(close(r.theta_after, -2.1110980562252035e-3, 1e-12));
    }

    #[test]
    fn adam_first_step_is_about_lr() {
        let r = one_step(Kernel::Adam, Kernel::Adam.default_hyper_params(), 0.0, 1.0, 1e-3);
        assert!(close(r.m_hat, 1.0, 1e-15));
        assert!(close(r.second_hat, 1.0, 1e-12));
        assert!(close(r.delta_theta, -1e-3 / (1.0 + 1e-8), 1e-12));
        let r = one_step(Kernel::Adam, Kernel::Adam.default_hyper_params(), 5.0, 0.0, 1e-3);
        assert_eq!(r.theta_after, 5.0);
    }

    #[test]
    fn adamw_decay_paths() {
        let hp = Kernel::AdamW.default_hyper_params();
        let r = one_step(Kernel::AdamW, hp, 1.0, 0.0, 1e-3);
        assert!(close(r.theta_after, 0.99999, 1e-15));
        let w = one_step(Kernel::AdamW, hp, 0.0, 1.0, 1e-3);
        let a = one_step(Kernel::Adam, hp, 0.0, 1.0, 1e-3);
        assert_eq!(w.delta_theta, a.delta_theta);
    }

    #[test]
    fn nadam_first_step() {
        let r = one_step(Kernel::Nadam, Kernel::Nadam.default_hyper_params(), 0.0, 1.0, 1e-3);
        assert!(close(r.m_bar, 0.19, 1e-15));
        assert!(close(r.m_hat, 1.9, 1e-15));
        assert!(close(r.second_hat, 1.0, 1e-12));
        assert!(close(r.delta_theta, -1.9e-3, 1e-7));
    }

    #[test]
    fn adabelief_first_step() {
        let hp = Kernel::AdaBelief.default_hyper_params();
        let r = one_step(Kernel::AdaBelief, hp, 0.0, 1.0, 1e-3);
        assert!(close(r.m_hat, 1.0, 1e-15));
        assert!(close(r.second_hat, 0.81001, 1e-12));
        assert!(close(r.delta_theta, -1.111e-3, 1e-4));
    }

    #[test]
    fn sgdm_without_momentum_is_plain_sgd() {
        let hp = HyperParams { beta1: 0.0, ..Kernel::Sgdm.default_hyper_params() };
        let r = one_step(Kernel::Sgdm, hp, 2.0, 3.0, 0.1);
        assert_eq!(r.delta_theta, -(0.1 * 3.0));
    }

    #[test]
    fn sgdm_classical_momentum_closed_form() {
        let hp = Kernel::Sgdm.default_hyper_params();
        let mut state = OptimizerState::new(1);
        let mut params = ParamVector::zeros(1).unwrap();
        let mut theta = 0.0;
        for t in 1..=50 {
            let tr = sgdm_step(&mut state, &mut params, &[1.0], &hp, 0.1).unwrap();
            let m = (1.0 - 0.9f64.powi(t)) / 0.1;
            theta -= 0.1 * m;
            assert!(close(tr.records[0].m, m, 1e-13), "t={t}");
            assert!(close(params.as_slice()[0], theta, 1e-13), "t={t}");
        }
    }

    #[test]
    fn frozen_under_zero_gradient() {
        for kernel in Kernel::ALL {
            let hp = HyperParams { weight_decay: 0.0, ..kernel.default_hyper_params() };
            let mut opt = Optimizer::new(kernel, hp, 2).unwrap();
            let mut params = ParamVector::new(vec![1.5, -0.5]).unwrap();
            for _ in 0..20 {
                opt.step(&mut params, &[0.0, 0.0], 1e-2).unwrap();
            }
            assert_eq!(params.as_slice(), &[1.5, -0.5], "{kernel}");
            assert_eq!(opt.state().t(), 20);
        }
    }

    #[test]
    fn errors_leave_state_untouched() {
        let mut opt = Optimizer::with_defaults(Kernel::AdaPlus, 2);
        let mut params = ParamVector::new(vec![1.0, 2.0]).unwrap();
        opt.step(&mut params, &[0.3, -0.2], 1e-3).unwrap();
        let (state, saved) = (opt.state().clone(), params.clone());

        assert_eq!(
            opt.step(&mut params, &[1.0], 1e-3),
            Err(StepError::DimensionMismatch { expected: 2, got: 1 })
        );
        assert!(matches!(
            opt.step(&mut params, &[1.0, f64::NAN], 1e-3),
            Err(StepError::NonFiniteGradient { index: 1, .. })
        ));
        assert_eq!(
            opt.step(&mut params, &[1.0, 1.0], 0.0),
            Err(StepError::InvalidLearningRate(0.0))
        );
        assert_eq!(
            opt.step(&mut params, &[1.0, 1e300], 1e300),
            Err(StepError::NonFiniteParameter { t: 2, index: 1 })
        );
        assert_eq!(opt.state(), &state);
        assert_eq!(params, saved);
    }

    #[test]
    fn state_dimension_must_match() {
        let mut state = OptimizerState::new(3);
        let mut params = ParamVector::zeros(2).unwrap();
        let err = adam_step(&mut state, &mut params, &[0.0, 0.0], &HyperParams::default(), 1e-3);
        assert_eq!(err, Err(StepError::StateMismatch { state: 3, params: 2 }));
    }

    #[test]
    fn invalid_hyper_params_are_reported() {
        let hp = HyperParams { beta2: 1.0, ..Default::default() };
        assert!(Optimizer::new(Kernel::AdaPlus, hp, 1).is_err());
        let mut state = OptimizerState::new(1);
        let mut params = ParamVector::zeros(1).unwrap();
        assert!(matches!(
            adaplus_step(&mut state, &mut params, &[1.0], &hp, 1e-3),
            Err(StepError::HyperParams(_))
        ));
    }

    #[test]
    fn zero_betas_have_unit_bias_correction() {
        let hp = HyperParams { beta1: 0.0, beta2: 0.0, weight_decay: 0.0, ..Default::default() };
        let r = one_step(Kernel::AdaPlus, hp, 0.0, 2.0, 1e-3);
        assert_eq!(r.m, 2.0);
        assert_eq!(r.m_hat, 2.0);
        // g - m = 0, so only eps remains in s
        assert_eq!(r.second_moment, 1e-8);
    }
}
