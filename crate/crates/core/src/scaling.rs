//! Min–max scaling between physical units and model space.
//!
//! Features map to encoding angles in [0, π]; targets map to [−1, 1], the
//! range of a Pauli-Z expectation. Statistics come from the training set and
//! travel with the model artifact.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub feature_scale: FeatureScale,
    pub target_scale: TargetScale,
}

impl Scaling {
    /// Pass-through scaling for features already in [0, π] and targets in [−1, 1].
    pub fn identity(n_features: usize) -> Self {
        Self {
            feature_scale: FeatureScale {
                min: vec![0.0; n_features],
                max: vec![PI; n_features],
            },
            target_scale: TargetScale { min: -1.0, max: 1.0 },
        }
    }

    pub fn fit(features: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::Argument("cannot fit scaling on an empty dataset".into()))?;
        let width = first.len();
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in features {
            if row.len() != width {
                return Err(Error::Dimension {
                    expected: width,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        let tmin = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let tmax = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            feature_scale: FeatureScale { min, max },
            target_scale: TargetScale { min: tmin, max: tmax },
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_scale.min.len()
    }

    pub fn scale_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.feature_scale.min.iter().zip(&self.feature_scale.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { PI * (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        let TargetScale { min, max } = self.target_scale;
        if max > min {
            2.0 * (y - min) / (max - min) - 1.0
        } else {
            0.0
        }
    }

    pub fn unscale_target(&self, s: f64) -> f64 {
        let TargetScale { min, max } = self.target_scale;
        if max > min {
            min + (s + 1.0) * (max - min) / 2.0
        } else {
            min
        }
    }
}
