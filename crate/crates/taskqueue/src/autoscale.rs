//! Tick-driven worker count policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    pub min_workers: usize,
    pub max_workers: usize,
    /// Scale up by one when depth exceeds this.
    pub high_watermark: usize,
    /// Scale down by one after `cooldown_ticks` consecutive ticks below this.
    pub low_watermark: usize,
    pub cooldown_ticks: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("min_workers {min} must be between 1 and max_workers {max}")]
    WorkerBounds { min: usize, max: usize },
    #[error("low_watermark {low} must be below high_watermark {high}")]
    Watermarks { low: usize, high: usize },
}

impl ScalingPolicy {
    /// Defaults with `max_workers` set to `cores`.
    pub fn for_cores(cores: usize) -> Self {
        ScalingPolicy {
            min_workers: 1,
            max_workers: cores.max(1),
            high_watermark: 10,
            low_watermark: 2,
            cooldown_ticks: 5,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.min_workers == 0 || self.min_workers > self.max_workers {
            return Err(PolicyError::WorkerBounds { min: self.min_workers, max: self.max_workers });
        }
        if self.low_watermark >= self.high_watermark {
            return Err(PolicyError::Watermarks { low: self.low_watermark, high: self.high_watermark });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Autoscaler {
    policy: ScalingPolicy,
    low_streak: u32,
}

impl Autoscaler {
    pub fn new(policy: ScalingPolicy) -> Result<Self, PolicyError> {
        policy.validate()?;
        Ok(Autoscaler { policy, low_streak: 0 })
    }

    pub fn policy(&self) -> ScalingPolicy {
        self.policy
    }

    /// Returns the worker count to use after observing `depth`.
    pub fn tick(&mut self, depth: usize, workers: usize) -> usize {
        let p = self.policy;
        let workers = workers.clamp(p.min_workers, p.max_workers);
        if depth > p.high_watermark {
            self.low_streak = 0;
            return (workers + 1).min(p.max_workers);
        }
        if depth < p.low_watermark {
            self.low_streak += 1;
            if self.low_streak >= p.cooldown_ticks {
                self.low_streak = 0;
                return workers.saturating_sub(1).max(p.min_workers);
            }
            return workers;
        }
        self.low_streak = 0;
        workers
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> ScalingPolicy {
        ScalingPolicy { min_workers: 1, max_workers: 4, high_watermark: 10, low_watermark: 2, cooldown_ticks: 3 }
    }

    #[test]
    fn validation() {
        assert!(policy().validate().is_ok());
        let bad = ScalingPolicy { min_workers: 5, ..policy() };
        assert!(matches!(bad.validate(), Err(PolicyError::WorkerBounds { .. })));
        let bad = ScalingPolicy { low_watermark: 10, ..policy() };
        assert!(matches!(bad.validate(), Err(PolicyError::Watermarks { .. })));
    }

    #[test]
    fn streak_resets_when_depth_recovers() {
        let mut a = Autoscaler::new(policy()).unwrap();
        assert_eq!(a.tick(0, 3), 3);
        assert_eq!(a.tick(0, 3), 3);
        assert_eq!(a.tick(5, 3), 3);
        assert_eq!(a.tick(0, 3), 3);
        assert_eq!(a.tick(0, 3), 3);
        assert_eq!(a.tick(0, 3), 2);
    }
}
