use serde::{Deserialize, Serialize};

use super::LearnError;

/// Which global counter advances a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TickSource {
    PrimitiveSteps,
    OptionChoices,
}

/// Linearly decaying exploration rate with a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
    pub tick_source: TickSource,
}

impl EpsilonSchedule {
    pub fn new(initial: f64, decay: f64, floor: f64, tick_source: TickSource) -> Result<Self, LearnError> {
        let ok = (0.0..=1.0).contains(&floor) && floor <= initial && initial <= 1.0 && decay >= 0.0 && decay.is_finite();
        if !ok {
            return Err(LearnError::InvalidParameter(format!(
                "schedule needs 0 <= floor <= initial <= 1 and decay >= 0, got initial {initial}, decay {decay}, floor {floor}"
            )));
        }
        Ok(EpsilonSchedule { initial, decay, floor, tick_source })
    }

    pub fn value(&self, ticks: u64) -> f64 {
        (self.initial - self.decay * ticks as f64).max(self.floor)
    }
}
