use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Piecewise-constant step decay: the learning rate is multiplied by
/// `decay_factor` at every milestone epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    milestones: Vec<u64>,
    decay_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("milestones must be positive and strictly increasing, got {0:?}")]
    Milestones(Vec<u64>),
    #[error("decay factor must be positive and finite, got {0}")]
    DecayFactor(f64),
}

impl LrSchedule {
    pub fn new(milestones: Vec<u64>, decay_factor: f64) -> Result<Self, ScheduleError> {
        let increasing = milestones.windows(2).all(|w| w[0] < w[1]);
        if !increasing || milestones.first() == Some(&0) {
            return Err(ScheduleError::Milestones(milestones));
        }
        if !(decay_factor > 0.0 && decay_factor.is_finite()) {
            return Err(ScheduleError::DecayFactor(decay_factor));
        }
        Ok(Self { milestones, decay_factor })
    }

    /// Milestones with the usual decay factor of 0.1.
    pub fn step_decay(milestones: Vec<u64>) -> Result<Self, ScheduleError> {
        Self::new(milestones, 0.1)
    }

    /// No milestones: the learning rate stays at its base value.
    pub fn constant() -> Self {
        Self { milestones: Vec::new(), decay_factor: 0.1 }
    }

    pub fn milestones(&self) -> &[u64] {
        &self.milestones
    }

    pub fn decay_factor(&self) -> f64 {
        self.decay_factor
    }

    pub fn lr_at(&self, base_lr: f64, epoch: u64) -> f64 {
        lr_at(self, base_lr, epoch)
    }
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self::constant()
    }
}

/// `base_lr * decay_factor^k` where `k` counts the milestones `<= epoch`.
pub fn lr_at(schedule: &LrSchedule, base_lr: f64, epoch: u64) -> f64 {
    let passed = schedule.milestones.partition_point(|&m| m <= epoch);
    (0..passed).fold(base_lr, |lr, _| lr * schedule.decay_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn single_milestone() {
        let s = LrSchedule::step_decay(vec![150]).unwrap();
        assert_eq!(lr_at(&s, 0.01, 0), 0.01);
        assert_eq!(lr_at(&s, 0.01, 149), 0.01);
        assert!(rel(lr_at(&s, 0.01, 150), 0.001) < 1e-15);
        assert!(rel(lr_at(&s, 0.01, 199), 0.001) < 1e-15);
    }

    #[test]
    fn two_milestones() {
        let s = LrSchedule::step_decay(vec![100, 145]).unwrap();
        assert_eq!(lr_at(&s, 1e-3, 99), 1e-3);
        assert!(rel(lr_at(&s, 1e-3, 100), 1e-4) < 1e-15);
        assert!(rel(lr_at(&s, 1e-3, 146), 1e-5) < 1e-15);
    }

    #[test]
    fn constant_schedule() {
        let s = LrSchedule::constant();
        assert_eq!(lr_at(&s, 0.5, 10_000), 0.5);
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(LrSchedule::step_decay(vec![5, 5]).is_err());
        assert!(LrSchedule::step_decay(vec![10, 5]).is_err());
        assert!(LrSchedule::step_decay(vec![0]).is_err());
        assert!(LrSchedule::new(vec![1], 0.0).is_err());
    }
}
