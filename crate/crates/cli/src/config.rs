use std::path::{Path, PathBuf};

use dpqnn::dp::{DPConfig, Optimizer, Sampling};
use dpqnn::{Error, Result};
use serde::{Deserialize, Serialize};

/// Resolved settings shared by every subcommand. Loaded from an optional JSON
/// file; command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: String,
    pub samples: usize,
    pub train_rows: usize,
    pub target_bus: usize,
    pub data_seed: u64,
    pub seeds: Vec<u64>,
    pub sigmas: Vec<f64>,
    pub mlp_sigmas: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub optimizer: Optimizer,
    pub sampling: Sampling,
    pub delta: f64,
    pub delta_prime: f64,
    pub n_layers: usize,
    pub entangle_range: usize,
    pub mlp_layers: Vec<usize>,
    pub t_max: usize,
    pub load_scale: Option<f64>,
    pub shots: u64,
    pub repeats: usize,
    pub timing_reps: usize,
    pub overhead_s: f64,
    pub gate_time_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dp = DPConfig::default();
        Self {
            grid: "ieee33".into(),
            samples: 1000,
            train_rows: 800,
            target_bus: 30,
            data_seed: 0,
            seeds: vec![0],
            sigmas: vec![0.0, 1.0, 5.0, 10.0],
            mlp_sigmas: vec![0.0, 1.0, 2.0, 5.0],
            epochs: dp.epochs,
            learning_rate: dp.learning_rate,
            batch_size: dp.batch_size,
            clip_norm: dp.clip_norm,
            optimizer: dp.optimizer,
            sampling: dp.sampling,
            delta: dp.delta,
            delta_prime: dp.delta_prime,
            n_layers: dpqnn::bench::DEFAULT_LAYERS_QNN,
            entangle_range: 1,
            mlp_layers: dpqnn::mlp::DEFAULT_LAYERS.to_vec(),
            t_max: 400,
            load_scale: None,
            shots: 100,
            repeats: 10,
            timing_reps: 100_000,
            overhead_s: 1e-6,
            gate_time_s: 1e-8,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(s) = self.sigmas.iter().chain(&self.mlp_sigmas).find(|s| !(**s >= 0.0 && s.is_finite())) {
            return bad(format!("σ must be a finite non-negative number, got {s}"));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.train_rows == 0 {
            return bad("train_rows must be positive".into());
        }
        DPConfig { dataset_size: self.batch_size.max(1), ..self.dp_base() }.validate()
    }

    /// Training hyperparameters; σ, seed and dataset size are set per run.
    pub fn dp_base(&self) -> DPConfig {
        DPConfig {
            clip_norm: self.clip_norm,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            optimizer: self.optimizer,
            sampling: self.sampling,
            delta: self.delta,
            delta_prime: self.delta_prime,
            ..DPConfig::default()
        }
    }

    /// Existing files named by the config, made absolute.
    pub fn resolve_paths(&mut self) -> Result<()> {
        if self.grid != "ieee33" {
            self.grid = absolute(Path::new(&self.grid))?.display().to_string();
        }
        Ok(())
    }
}

pub fn absolute(path: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_defaults_for_missing_fields() {
        let cfg: RunConfig = serde_json::from_str(r#"{"epochs": 7, "sigmas": [0, 2]}"#).unwrap();
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.sigmas, vec![0.0, 2.0]);
        assert_eq!(cfg.batch_size, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"epoch": 7}"#).is_err());
    }

    #[test]
    fn negative_sigma_is_a_config_error() {
        let cfg = RunConfig { sigmas: vec![-1.0], ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
