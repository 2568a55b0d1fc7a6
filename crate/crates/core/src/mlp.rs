//! Fully-connected regressor used as the classical baseline.
//!
//! Parameters are stored flat, layer by layer: the weight matrix of layer `l`
//! in row-major order (`out × in`), followed by its bias vector. Hidden layers
//! use tanh, the output layer is affine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::GradientVector;
use crate::scaling::Scaling;

pub const DEFAULT_LAYERS: [usize; 4] = [5, 32, 32, 1];

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    pub scaling: Scaling,
}

#[derive(Serialize, Deserialize)]
struct MlpArtifact {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    scaling: Scaling,
}

impl MlpModel {
    pub fn param_count_for(layer_sizes: &[usize]) -> usize {
        layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {layer_sizes:?}")));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Config("the regressor has a single output".into()));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; Self::param_count_for(layer_sizes)],
            scaling: Scaling::identity(layer_sizes[0]),
        })
    }

    /// Weights and biases uniform in ±√(1/fan_in).
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes)?;
        let mut offset = 0;
        for w in layer_sizes.windows(2) {
            let bound = (1.0 / w[0] as f64).sqrt();
            let count = w[0] * w[1] + w[1];
            for p in &mut model.params[offset..offset + count] {
                *p = rng.random_range(-bound..bound);
            }
            offset += count;
        }
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// (weights, biases) slices of layer `l`.
    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let offset: usize = self.layer_sizes[..=l]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let w = &self.params[offset..offset + fan_in * fan_out];
        let b = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        (w, b)
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.layer_sizes[0] {
            return Err(Error::Dimension {
                expected: self.layer_sizes[0],
                got: x.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(x.to_vec());
        for l in 0..self.n_layers() {
            let (w, b) = self.layer(l);
            let input = &acts[l];
            let hidden = l + 1 < self.n_layers();
            let out: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(i, &bi)| {
                    let row = &w[i * input.len()..(i + 1) * input.len()];
                    let z = bi + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
        }
        Ok(acts)
    }

    /// Prediction in scaled target space.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.activations(x)?.last().unwrap()[0])
    }

    /// Prediction in physical units for raw features.
    pub fn predict(&self, raw_x: &[f64]) -> Result<f64> {
        let x = self.scaling.scale_features(raw_x)?;
        Ok(self.scaling.unscale_target(self.forward(&x)?))
    }

    /// Squared error and its gradient, flattened in parameter order.
    pub fn loss_grad(&self, x: &[f64], y_star: f64) -> Result<(f64, GradientVector)> {
        let acts = self.activations(x)?;
        let y_hat = acts.last().unwrap()[0];
        let residual = y_hat - y_star;
        let mut grad = vec![0.0; self.params.len()];

        // delta holds ∂L/∂z for the current layer's pre-activations.
        let mut delta = vec![2.0 * residual];
        let mut offset_end = self.params.len();
        for l in (0..self.n_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let offset = offset_end - (fan_in * fan_out + fan_out);
            let input = &acts[l];
            for i in 0..fan_out {
                for j in 0..fan_in {
                    grad[offset + i * fan_in + j] = delta[i] * input[j];
                }
                grad[offset + fan_in * fan_out + i] = delta[i];
            }
            if l > 0 {
                let (w, _) = self.layer(l);
                delta = (0..fan_in)
                    .map(|j| {
                        let back: f64 = (0..fan_out).map(|i| w[i * fan_in + j] * delta[i]).sum();
                        back * (1.0 - input[j] * input[j])
                    })
                    .collect();
            }
            offset_end = offset;
        }
        Ok((residual * residual, GradientVector::per_sample(grad)))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..self.n_layers() {
            let (w, b) = self.layer(l);
            weights.push(w.to_vec());
            biases.push(b.to_vec());
        }
        Ok(serde_json::to_string_pretty(&MlpArtifact {
            layer_sizes: self.layer_sizes.clone(),
            weights,
            biases,
            scaling: self.scaling.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let art: MlpArtifact = serde_json::from_str(text)?;
        let mut model = Self::zeros(&art.layer_sizes)?;
        if art.weights.len() != model.n_layers() || art.biases.len() != model.n_layers() {
            return Err(Error::Schema("layer count does not match layer_sizes".into()));
        }
        let mut params = Vec::with_capacity(model.params.len());
        for (w, b) in art.weights.iter().zip(&art.biases) {
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        if params.len() != model.params.len() {
            return Err(Error::Dimension {
                expected: model.params.len(),
                got: params.len(),
            });
        }
        model.params = params;
        model.scaling = art.scaling;
        Ok(model)
    }
}
