use serde::{Deserialize, Serialize};

use super::NumError;

/// Linear warmup followed by cosine decay to `final_lr`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub final_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl LrSchedule {
    pub fn new(
        base_lr: f64,
        final_lr: f64,
        warmup_steps: usize,
        total_steps: usize,
    ) -> Result<Self, NumError> {
        if !(base_lr > 0.0) {
            return Err(NumError::InvalidSchedule(format!("base_lr {base_lr} must be > 0")));
        }
        if !(0.0..=base_lr).contains(&final_lr) {
            return Err(NumError::InvalidSchedule(format!(
                "final_lr {final_lr} must lie in [0, base_lr]"
            )));
        }
        if warmup_steps > total_steps {
            return Err(NumError::InvalidSchedule(format!(
                "warmup_steps {warmup_steps} exceeds total_steps {total_steps}"
            )));
        }
        Ok(Self {
            base_lr,
            final_lr,
            warmup_steps,
            total_steps,
        })
    }

    pub fn lr_at(&self, step: usize) -> Result<f64, NumError> {
        if step >= self.total_steps {
            return Err(NumError::StepOutOfRange {
                step,
                total: self.total_steps,
            });
        }
        if step < self.warmup_steps {
            return Ok(self.base_lr * step as f64 / self.warmup_steps as f64);
        }
        let span = (self.total_steps - self.warmup_steps) as f64;
        let t = (step - self.warmup_steps) as f64 / span;
        Ok(self.final_lr
            + 0.5 * (self.base_lr - self.final_lr) * (1.0 + (std::f64::consts::PI * t).cos()))
    }
}
