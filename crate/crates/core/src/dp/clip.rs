use crate::error::{Error, Result};
use crate::gradients::GradientVector;

/// Scale `g` by `min(1, C/‖g‖₂)`.
///
/// The result is nudged down by ulps when rounding would leave its norm just
/// above `C`, so a second application is always the identity.
pub fn clip_gradient(g: &GradientVector, clip_norm: f64) -> Result<GradientVector> {
    if !(clip_norm > 0.0) {
        return Err(Error::Argument(format!("clip norm must be positive, got {clip_norm}")));
    }
    if !g.is_finite() {
        return Err(Error::Numerical("non-finite gradient entry".into()));
    }
    let norm = g.norm();
    if norm <= clip_norm {
        return Ok(g.clone());
    }
    let mut factor = clip_norm / norm;
    loop {
        let clipped = GradientVector {
            values: g.values.iter().map(|v| v * factor).collect(),
            per_sample: g.per_sample,
        };
        if clipped.norm() <= clip_norm {
            return Ok(clipped);
        }
        factor *= 1.0 - f64::EPSILON;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gv(v: &[f64]) -> GradientVector {
        GradientVector::per_sample(v.to_vec())
    }

    #[test]
    fn examples() {
        let c = clip_gradient(&gv(&[3.0, 4.0]), 1.0).unwrap();
        assert!((c.values[0] - 0.6).abs() < 1e-15 && (c.values[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_gradient(&gv(&[0.3, 0.4]), 1.0).unwrap().values, vec![0.3, 0.4]);
        assert_eq!(clip_gradient(&gv(&[0.0, 0.0]), 1e-3).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(clip_gradient(&gv(&[f64::NAN]), 1.0), Err(Error::Numerical(_))));
        assert!(matches!(clip_gradient(&gv(&[f64::INFINITY, 1.0]), 1.0), Err(Error::Numerical(_))));
        assert!(clip_gradient(&gv(&[1.0]), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn norm_bounded_and_idempotent(
            v in prop::collection::vec(-1e6f64..1e6, 1..40),
            c in 1e-6f64..1e3,
        ) {
            let once = clip_gradient(&gv(&v), c).unwrap();
            prop_assert!(once.norm() <= c + 1e-12);
            let twice = clip_gradient(&once, c).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
