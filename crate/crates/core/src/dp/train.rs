use log::{debug, warn};
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{
    adam_step, clip_gradient, noisy_batch_gradient, AccountantReport, AdamState, DPConfig,
    Optimizer, Sampling, Trainable,
};
use crate::error::{Error, Result};
use crate::gradients::GradientVector;
use crate::rng::{self, purpose, Rng};

/// Batch losses above this are treated as divergence.
pub const LOSS_ABORT_THRESHOLD: f64 = 1e12;

/// Scaled features and targets ready for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Dimension { expected: features.len(), got: targets.len() });
        }
        if features.is_empty() {
            return Err(Error::Argument("empty training set".into()));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortDiagnostic {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
    pub param_norm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrainOutcome {
    Finished,
    Aborted(AbortDiagnostic),
}

#[derive(Debug, Clone)]
pub struct TrainReport<M> {
    pub model: M,
    pub config: DPConfig,
    pub outcome: TrainOutcome,
    pub step_losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
    pub noise_draws: u64,
    pub privacy: Option<AccountantReport>,
}

impl<M> TrainReport<M> {
    pub fn finished(&self) -> bool {
        self.outcome == TrainOutcome::Finished
    }

    /// Run manifest: configuration, seed, per-epoch loss and privacy spend.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "seed": self.config.seed,
            "outcome": self.outcome,
            "epoch_losses": self.epoch_losses,
            "noise_draws": self.noise_draws,
            "privacy": self.privacy,
        })
    }
}

/// Private mini-batch training: per-sample clipping, Gaussian noise on the
/// batch sum, then an SGD or Adam step.
pub fn train<M: Trainable>(data: &TrainingSet, model: M, cfg: &DPConfig) -> Result<TrainReport<M>> {
    run(data, model, cfg, true)
}

/// The same loop without clipping or noise, averaging raw per-sample
/// gradients over the batch.
pub fn train_non_private<M: Trainable>(
    data: &TrainingSet,
    model: M,
    cfg: &DPConfig,
) -> Result<TrainReport<M>> {
    run(data, model, cfg, false)
}

fn run<M: Trainable>(data: &TrainingSet, mut model: M, cfg: &DPConfig, private: bool) -> Result<TrainReport<M>> {
    cfg.validate()?;
    if cfg.dataset_size != data.len() {
        return Err(Error::Config(format!(
            "dataset size {} does not match the {} training samples",
            cfg.dataset_size,
            data.len()
        )));
    }
    let dim = model.params().len();
    let steps_per_epoch = cfg.steps_per_epoch();
    let mut batch_rng = rng::stream(cfg.seed, purpose::BATCH);
    let mut noise_rng = rng::stream(cfg.seed, purpose::NOISE);
    let mut adam = AdamState::new(dim);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport {
        model: model.clone(),
        config: cfg.clone(),
        outcome: TrainOutcome::Finished,
        step_losses: Vec::with_capacity(cfg.epochs * steps_per_epoch),
        epoch_losses: Vec::with_capacity(cfg.epochs),
        noise_draws: 0,
        privacy: if private { Some(AccountantReport::from_config(cfg)?) } else { None },
    };
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut grads = Vec::with_capacity(cfg.batch_size);

    'epochs: for epoch in 0..cfg.epochs {
        if cfg.sampling == Sampling::Shuffle {
            order.shuffle(&mut batch_rng);
        }
        let mut epoch_loss = 0.0;
        for s in 0..steps_per_epoch {
            let step = epoch * steps_per_epoch + s;
            draw_batch(cfg, data.len(), s, &order, &mut batch_rng, &mut batch);

            grads.clear();
            let mut loss_sum = 0.0;
            for &i in &batch {
                let (loss, g) = model.loss_grad(&data.features[i], data.targets[i])?;
                loss_sum += loss;
                if !g.is_finite() {
                    report.outcome = abort(&model, epoch, step, loss, "non-finite gradient");
                    break 'epochs;
                }
                let g = if private { clip_gradient(&g, cfg.clip_norm)? } else { g };
                if private && g.norm() > cfg.clip_norm {
                    return Err(Error::Numerical(format!(
                        "clipped gradient norm {} exceeds C = {}",
                        g.norm(),
                        cfg.clip_norm
                    )));
                }
                grads.push(g);
            }
            let loss = loss_sum / batch.len() as f64;
            if !loss.is_finite() || loss > LOSS_ABORT_THRESHOLD {
                report.outcome = abort(&model, epoch, step, loss, "loss diverged");
                break 'epochs;
            }
            report.step_losses.push(loss);
            epoch_loss += loss;

            let update = if private {
                report.noise_draws += dim as u64;
                noisy_batch_gradient(&grads, cfg.clip_norm, cfg.noise_multiplier, &mut noise_rng)?
            } else {
                mean_gradient(&grads, dim)
            };
            apply_update(model.params_mut(), &update.values, cfg, &mut adam)?;
            if model.params().iter().any(|p| !p.is_finite()) {
                report.outcome = abort(&model, epoch, step, loss, "non-finite parameters");
                break 'epochs;
            }
        }
        let mean = epoch_loss / steps_per_epoch as f64;
        report.epoch_losses.push(mean);
        debug!("epoch {epoch}: mean batch loss {mean:.6e}");
    }
    if let TrainOutcome::Aborted(d) = &report.outcome {
        warn!("training aborted at step {}: {} (loss {:e})", d.step, d.reason, d.loss);
    }
    report.model = model;
    Ok(report)
}

fn draw_batch(cfg: &DPConfig, n: usize, step_in_epoch: usize, order: &[usize], rng: &mut Rng, out: &mut Vec<usize>) {
    out.clear();
    match cfg.sampling {
        Sampling::Uniform => out.extend(index::sample(rng, n, cfg.batch_size).iter()),
        Sampling::Shuffle => {
            let start = step_in_epoch * cfg.batch_size;
            out.extend_from_slice(&order[start..start + cfg.batch_size]);
        }
    }
}

fn mean_gradient(grads: &[GradientVector], dim: usize) -> GradientVector {
    let mut sum = vec![0.0; dim];
    for g in grads {
        for (s, v) in sum.iter_mut().zip(&g.values) {
            *s += v;
        }
    }
    let b = grads.len() as f64;
    for s in &mut sum {
        *s /= b;
    }
    GradientVector { values: sum, per_sample: false }
}

fn apply_update(params: &mut [f64], grad: &[f64], cfg: &DPConfig, adam: &mut AdamState) -> Result<()> {
    match cfg.optimizer {
        Optimizer::Adam => adam_step(params, grad, adam, cfg.learning_rate),
        Optimizer::Sgd => {
            for (p, g) in params.iter_mut().zip(grad) {
                *p -= cfg.learning_rate * g;
            }
            Ok(())
        }
    }
}

fn abort<M: Trainable>(model: &M, epoch: usize, step: usize, loss: f64, reason: &str) -> TrainOutcome {
    let param_norm = model.params().iter().map(|p| p * p).sum::<f64>().sqrt();
    TrainOutcome::Aborted(AbortDiagnostic { epoch, step, loss, param_norm, reason: reason.into() })
}
