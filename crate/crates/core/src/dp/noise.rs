use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gradients::GradientVector;

/// `(Σᵢ gᵢ + 𝒩(0, σ²C²I)) / B` over already clipped per-sample gradients.
///
/// Gradients are summed in slice order. Exactly one normal draw is taken per
/// coordinate, also when `σ = 0`, so the RNG stream position never depends on σ.
pub fn noisy_batch_gradient<R: Rng + ?Sized>(
    clipped: &[GradientVector],
    clip_norm: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<GradientVector> {
    let Some(first) = clipped.first() else {
        return Err(Error::Argument("empty batch".into()));
    };
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for g in clipped {
        if g.len() != dim {
            return Err(Error::Dimension { expected: dim, got: g.len() });
        }
        for (s, v) in sum.iter_mut().zip(&g.values) {
            *s += v;
        }
    }
    let scale = sigma * clip_norm;
    let b = clipped.len() as f64;
    for s in &mut sum {
        let z: f64 = rng.sample(StandardNormal);
        *s = (*s + scale * z) / b;
    }
    Ok(GradientVector { values: sum, per_sample: false })
}
