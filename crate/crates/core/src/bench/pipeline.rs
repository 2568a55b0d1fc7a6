use serde::{Deserialize, Serialize};

use crate::dp::{self, DPConfig, TrainReport, TrainingSet};
use crate::error::{Error, Result};
use crate::grid::Dataset;
use crate::metrics;
use crate::mlp::{MlpModel, DEFAULT_LAYERS};
use crate::quantum::CircuitModel;
use crate::rng::{self, purpose};
use crate::scaling::Scaling;

pub const DEFAULT_LAYERS_QNN: usize = 10;

/// Circuit shape used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub n_layers: usize,
    pub entangle_range: usize,
}

impl Default for CircuitShape {
    fn default() -> Self {
        Self { n_layers: DEFAULT_LAYERS_QNN, entangle_range: 1 }
    }
}

/// A trained model that maps raw features to physical targets.
pub trait Regressor {
    fn predict_raw(&self, x: &[f64]) -> Result<f64>;
    fn param_count(&self) -> usize;
}

impl Regressor for CircuitModel {
    fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }

    fn param_count(&self) -> usize {
        CircuitModel::param_count(self)
    }
}

impl Regressor for MlpModel {
    fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }

    fn param_count(&self) -> usize {
        MlpModel::param_count(self)
    }
}

/// Train/test split with scaling fitted on the training rows.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub scaling: Scaling,
}

impl Split {
    pub fn new(data: &Dataset, n_train: usize) -> Result<Self> {
        if n_train == 0 || n_train >= data.len() {
            return Err(Error::Config(format!(
                "training rows {n_train} must leave a non-empty test set out of {}",
                data.len()
            )));
        }
        let (train, test) = data.split(n_train);
        let scaling = Scaling::fit(&train.features, &train.targets)?;
        Ok(Self { train, test, scaling })
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        scaled(&self.train, &self.scaling)
    }

    /// Mean of each training feature column.
    pub fn feature_means(&self) -> Vec<f64> {
        let width = self.train.features[0].len();
        (0..width)
            .map(|j| metrics::mean(&self.train.features.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect()
    }
}

pub fn scaled(data: &Dataset, scaling: &Scaling) -> Result<TrainingSet> {
    let features = data
        .features
        .iter()
        .map(|x| scaling.scale_features(x))
        .collect::<Result<Vec<_>>>()?;
    let targets = data.targets.iter().map(|&y| scaling.scale_target(y)).collect();
    TrainingSet::new(features, targets)
}

/// A private training configuration sized to `set`.
pub fn dp_config(base: &DPConfig, set: &TrainingSet, sigma: f64, seed: u64) -> DPConfig {
    DPConfig {
        noise_multiplier: sigma,
        dataset_size: set.len(),
        seed,
        ..base.clone()
    }
}

pub fn train_qnn(
    split: &Split,
    shape: CircuitShape,
    cfg: &DPConfig,
) -> Result<TrainReport<CircuitModel>> {
    let set = split.training_set()?;
    let width = set.features[0].len();
    let mut init = rng::stream(cfg.seed, purpose::INIT);
    let mut model = CircuitModel::random(width, shape.n_layers, shape.entangle_range, &mut init)?;
    model.scaling = split.scaling.clone();
    dp::train(&set, model, cfg)
}

pub fn train_mlp(split: &Split, layers: &[usize], cfg: &DPConfig) -> Result<TrainReport<MlpModel>> {
    let set = split.training_set()?;
    let mut init = rng::stream(cfg.seed, purpose::INIT);
    let mut model = MlpModel::random(layers, &mut init)?;
    model.scaling = split.scaling.clone();
    dp::train(&set, model, cfg)
}

pub fn default_mlp_layers() -> Vec<usize> {
    DEFAULT_LAYERS.to_vec()
}

pub fn predictions<M: Regressor>(model: &M, data: &Dataset) -> Result<Vec<f64>> {
    data.features.iter().map(|x| model.predict_raw(x)).collect()
}

/// R² on `data`; NaN predictions propagate into a NaN score.
pub fn r_squared<M: Regressor>(model: &M, data: &Dataset) -> Result<f64> {
    metrics::r_squared(&predictions(model, data)?, &data.targets)
}
