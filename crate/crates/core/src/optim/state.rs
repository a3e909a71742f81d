use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter vector must have at least one entry")]
    Empty,
    #[error("parameter entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

/// Flat parameter vector. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ParamError> {
        if values.is_empty() {
            return Err(ParamError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ParamError::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Result<Self, ParamError> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Callers guarantee `values` has the same length and only finite entries.
    pub(crate) fn replace(&mut self, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.values.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        self.values = values;
    }
}

/// Per-parameter optimizer memory.
///
/// `m` is the gradient EMA, `second_moment` holds `s` for belief kernels and
/// `v` otherwise (SGDM leaves it at zero). Belief kernels additionally carry
/// the residual `g - m` and the previous gradient so that the residual can be
/// advanced without cancellation (see [`super::step`]).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub(crate) t: u64,
    pub(crate) m: Vec<f64>,
    pub(crate) second_moment: Vec<f64>,
    pub(crate) residual: Vec<f64>,
    pub(crate) prev_grad: Vec<f64>,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        Self {
            t: 0,
            m: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            residual: vec![0.0; dim],
            prev_grad: vec![0.0; dim],
        }
    }

    /// Number of completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// Last gradient residual `g_t - m_t`.
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_is_zero() {
        let s = OptimizerState::new(4);
        assert_eq!(s.t(), 0);
        assert_eq!(s.dim(), 4);
        assert!(s.m().iter().chain(s.second_moment()).all(|&x| x == 0.0));
    }

    #[test]
    fn param_vector_rejects_non_finite() {
        assert_eq!(ParamVector::new(vec![]), Err(ParamError::Empty));
        assert!(matches!(
            ParamVector::new(vec![1.0, f64::INFINITY]),
            Err(ParamError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            ParamVector::new(vec![f64::NAN]),
            Err(ParamError::NonFinite { index: 0, .. })
        ));
    }
}
