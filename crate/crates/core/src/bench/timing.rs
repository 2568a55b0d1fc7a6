use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{circuit_depth, CircuitModel};

/// Analytic runtime of one circuit execution: `overhead + gate_time · depth`,
/// where `overhead` lumps state preparation and measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub overhead: f64,
    pub gate_time: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self { overhead: 1e-6, gate_time: 1e-8 }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if self.overhead >= 0.0 && self.gate_time >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("timing constants must be non-negative: {self:?}")))
        }
    }

    /// Seconds spent in gates.
    pub fn gate_term(&self, depth: usize) -> f64 {
        self.gate_time * depth as f64
    }

    pub fn time_for_depth(&self, depth: usize) -> f64 {
        self.overhead + self.gate_term(depth)
    }
}

/// Seconds for one execution of `model` under `timing`.
pub fn quantum_time(model: &CircuitModel, timing: &TimingModel) -> f64 {
    timing.time_for_depth(circuit_depth(model))
}

/// Median wall-clock seconds of `f` over `reps` calls.
pub fn median_time(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut samples: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}
