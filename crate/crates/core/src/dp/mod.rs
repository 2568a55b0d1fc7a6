//! Differentially private mini-batch training and privacy accounting.
//!
//! Each step draws a batch, computes per-sample loss gradients, clips each to
//! ℓ₂ norm `C`, adds `𝒩(0, σ²C²I)` to the sum, divides by the batch size and
//! hands the result to SGD or Adam. The accountant turns `(σ, δ, B/N, T)` into
//! an `(ε', δ_total)` guarantee via the Gaussian mechanism, amplification by
//! subsampling and advanced composition.
//!
//! The adjacency distance μ between neighbouring load datasets does not enter
//! the computation: the sensitivity of every step is bounded by `C` alone.

mod accountant;
mod adam;
mod clip;
mod noise;
mod train;

pub use accountant::{
    compose, per_step_epsilon, per_step_epsilon_verbatim, AccountantReport, PrivacySpend,
};
pub use adam::{adam_step, AdamState};
pub use clip::clip_gradient;
pub use noise::noisy_batch_gradient;
pub use train::{
    train, train_non_private, AbortDiagnostic, TrainOutcome, TrainReport, TrainingSet,
    LOSS_ABORT_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::{self, GradientVector};
use crate::mlp::MlpModel;
use crate::quantum::CircuitModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// How a step's batch is drawn from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// A fresh uniformly random size-`B` subset every step.
    Uniform,
    /// Consecutive chunks of a per-epoch seeded permutation.
    Shuffle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPConfig {
    pub clip_norm: f64,
    pub noise_multiplier: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dataset_size: usize,
    pub optimizer: Optimizer,
    pub sampling: Sampling,
    pub seed: u64,
    pub delta: f64,
    pub delta_prime: f64,
}

impl Default for DPConfig {
    fn default() -> Self {
        Self {
            clip_norm: 1.0,
            noise_multiplier: 0.0,
            batch_size: 32,
            learning_rate: 0.05,
            epochs: 1000,
            dataset_size: 1000,
            optimizer: Optimizer::Adam,
            sampling: Sampling::Uniform,
            seed: 0,
            delta: 1e-5,
            delta_prime: 1e-5,
        }
    }
}

impl DPConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.clip_norm > 0.0) {
            return fail(format!("clip norm must be positive, got {}", self.clip_norm));
        }
        if !(self.noise_multiplier >= 0.0) || !self.noise_multiplier.is_finite() {
            return fail(format!("noise multiplier must be ≥ 0, got {}", self.noise_multiplier));
        }
        if self.batch_size == 0 || self.batch_size > self.dataset_size {
            return fail(format!(
                "batch size {} must lie in 1..={}",
                self.batch_size, self.dataset_size
            ));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("δ must lie in (0, 1), got {}", self.delta));
        }
        if !(self.delta_prime > 0.0) {
            return fail(format!("δ' must be positive, got {}", self.delta_prime));
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.dataset_size / self.batch_size
    }

    pub fn sampling_rate(&self) -> f64 {
        self.batch_size as f64 / self.dataset_size as f64
    }
}

/// A model trainable by the private loop: flat parameters plus a per-sample
/// squared-error gradient in scaled target space.
pub trait Trainable: Clone {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn predict_scaled(&self, x: &[f64]) -> Result<f64>;
    fn loss_grad(&self, x: &[f64], y_star: f64) -> Result<(f64, GradientVector)>;
}

impl Trainable for CircuitModel {
    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn predict_scaled(&self, x: &[f64]) -> Result<f64> {
        CircuitModel::predict_scaled(self, x)
    }

    fn loss_grad(&self, x: &[f64], y_star: f64) -> Result<(f64, GradientVector)> {
        gradients::loss_grad(self, x, y_star)
    }
}

impl Trainable for MlpModel {
    fn params(&self) -> &[f64] {
        MlpModel::params(self)
    }

    fn params_mut(&mut self) -> &mut [f64] {
        MlpModel::params_mut(self)
    }

    fn predict_scaled(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    fn loss_grad(&self, x: &[f64], y_star: f64) -> Result<(f64, GradientVector)> {
        MlpModel::loss_grad(self, x, y_star)
    }
}
