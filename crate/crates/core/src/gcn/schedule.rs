//! Learning-rate schedules: reduce-on-plateau and cosine annealing.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchedulePolicy {
    /// Multiply the rate by `factor` after `patience` consecutive epochs
    /// without validation-metric improvement.
    Plateau { factor: f64, patience: usize },
    /// `lr(e) = lr0 · (1 + cos(π e / max_epochs)) / 2`.
    Cosine { max_epochs: usize },
}

#[derive(Debug, Clone)]
pub struct LrSchedule {
    pub lr0: f64,
    pub policy: SchedulePolicy,
    lr: f64,
    best: Option<f64>,
    bad_epochs: usize,
}

impl LrSchedule {
    pub fn new(lr0: f64, policy: SchedulePolicy) -> Self {
        LrSchedule {
            lr0,
            policy,
            lr: lr0,
            best: None,
            bad_epochs: 0,
        }
    }

    /// Plateau default from the latency-predictor protocol: halve after 10
    /// stale epochs.
    pub fn plateau(lr0: f64) -> Self {
        LrSchedule::new(
            lr0,
            SchedulePolicy::Plateau {
                factor: 0.5,
                patience: 10,
            },
        )
    }

    pub fn cosine(lr0: f64, max_epochs: usize) -> Self {
        LrSchedule::new(lr0, SchedulePolicy::Cosine { max_epochs })
    }

    /// Rate currently in effect, without advancing the schedule.
    pub fn current(&self) -> f64 {
        self.lr
    }
}

/// Advances the schedule with this epoch's validation metric (lower is
/// better) and returns the rate to use next.
pub fn lr_schedule_step(state: &mut LrSchedule, epoch: usize, val_metric: f64) -> f64 {
    match state.policy {
        SchedulePolicy::Cosine { max_epochs } => {
            let e = epoch.min(max_epochs) as f64;
            state.lr = state.lr0 * (1.0 + (std::f64::consts::PI * e / max_epochs as f64).cos()) / 2.0;
            state.lr
        }
        SchedulePolicy::Plateau { factor, patience } => {
            match state.best {
                Some(best) if val_metric < best => {
                    state.best = Some(val_metric);
                    state.bad_epochs = 0;
                }
                Some(_) => {
                    state.bad_epochs += 1;
                    if state.bad_epochs >= patience {
                        state.lr *= factor;
                        state.bad_epochs = 0;
                    }
                }
                None => state.best = Some(val_metric),
            }
            state.lr
        }
    }
}
