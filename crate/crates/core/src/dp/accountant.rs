use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DPConfig;
use crate::error::{Error, Result};

/// Per-step ε of the Gaussian mechanism: `√(2 ln(1.25/δ)) / σ`.
///
/// `σ = 0` means no noise and yields `+∞`.
pub fn per_step_epsilon(sigma: f64, delta: f64) -> Result<f64> {
    check(sigma, delta)?;
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * (1.25 / delta).ln()).sqrt() / sigma)
}

/// The alternative grouping `√(2 ln(1.25) / δ) / σ`, kept for comparison.
pub fn per_step_epsilon_verbatim(sigma: f64, delta: f64) -> Result<f64> {
    check(sigma, delta)?;
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * 1.25f64.ln() / delta).sqrt() / sigma)
}

fn check(sigma: f64, delta: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Argument(format!("σ must be finite and ≥ 0, got {sigma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// A composed `(ε', δ_total)` guarantee and the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySpend {
    #[serde(with = "extended_f64")]
    pub per_step_epsilon: f64,
    pub per_step_delta: f64,
    pub sampling_rate: f64,
    pub steps: u64,
    pub delta_prime: f64,
    #[serde(with = "extended_f64")]
    pub subsampled_epsilon: f64,
    pub subsampled_delta: f64,
    #[serde(with = "extended_f64")]
    pub composed_epsilon: f64,
    pub composed_delta: f64,
}

impl PrivacySpend {
    pub fn is_private(&self) -> bool {
        self.composed_epsilon.is_finite()
    }
}

/// Advanced composition of `T` subsampled steps:
/// `ε' = √(2T ln(1/δ')) qε + Tqε(e^{qε} − 1)`, `δ_total = Tqδ + δ'`.
pub fn compose(
    epsilon: f64,
    delta: f64,
    sampling_rate: f64,
    steps: u64,
    delta_prime: f64,
) -> Result<PrivacySpend> {
    if !(epsilon >= 0.0) {
        return Err(Error::Argument(format!("ε must be ≥ 0, got {epsilon}")));
    }
    if !(sampling_rate > 0.0 && sampling_rate <= 1.0) {
        return Err(Error::Argument(format!("sampling rate must lie in (0, 1], got {sampling_rate}")));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::Argument(format!("δ' must lie in (0, 1), got {delta_prime}")));
    }
    if steps == 0 {
        return Err(Error::Argument("at least one composed step is required".into()));
    }
    let t = steps as f64;
    let qe = sampling_rate * epsilon;
    let total = if epsilon.is_finite() {
        (2.0 * t * (1.0 / delta_prime).ln()).sqrt() * qe + t * qe * qe.exp_m1()
    } else {
        f64::INFINITY
    };
    Ok(PrivacySpend {
        per_step_epsilon: epsilon,
        per_step_delta: delta,
        sampling_rate,
        steps,
        delta_prime,
        subsampled_epsilon: qe,
        subsampled_delta: sampling_rate * delta,
        composed_epsilon: total,
        composed_delta: t * sampling_rate * delta + delta_prime,
    })
}

/// Both readings of the composition count for one training configuration.
///
/// `per_epoch` composes once per epoch and is the headline figure;
/// `per_step` composes once per optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountantReport {
    pub noise_multiplier: f64,
    pub batch_size: usize,
    pub dataset_size: usize,
    pub epochs: usize,
    pub steps: u64,
    #[serde(with = "extended_f64")]
    pub per_step_epsilon_verbatim: f64,
    pub per_epoch: PrivacySpend,
    pub per_step: PrivacySpend,
}

impl AccountantReport {
    pub fn from_config(cfg: &DPConfig) -> Result<Self> {
        cfg.validate()?;
        let eps = per_step_epsilon(cfg.noise_multiplier, cfg.delta)?;
        let q = cfg.sampling_rate();
        let steps = (cfg.epochs * cfg.steps_per_epoch()) as u64;
        Ok(Self {
            noise_multiplier: cfg.noise_multiplier,
            batch_size: cfg.batch_size,
            dataset_size: cfg.dataset_size,
            epochs: cfg.epochs,
            steps,
            per_step_epsilon_verbatim: per_step_epsilon_verbatim(cfg.noise_multiplier, cfg.delta)?,
            per_epoch: compose(eps, cfg.delta, q, cfg.epochs as u64, cfg.delta_prime)?,
            per_step: compose(eps, cfg.delta, q, steps, cfg.delta_prime)?,
        })
    }
}

/// Serializes `+∞` as the string `"inf"` since JSON has no infinity.
mod extended_f64 {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_step_values() {
        let e = per_step_epsilon(1.0, 1e-5).unwrap();
        assert!((e - 4.8448).abs() < 1e-3);
        assert!((per_step_epsilon(2.0, 1e-5).unwrap() - e / 2.0).abs() < 1e-15);
        assert_eq!(per_step_epsilon(0.0, 1e-5).unwrap(), f64::INFINITY);
        assert!(per_step_epsilon(-1.0, 1e-5).is_err());
        assert!(per_step_epsilon(1.0, 0.0).is_err());
        assert!((per_step_epsilon_verbatim(1.0, 1e-5).unwrap() - 211.2551).abs() < 1e-3);
    }

    #[test]
    fn compose_single_full_batch_step() {
        let s = compose(0.5, 1e-5, 1.0, 1, 1e-5).unwrap();
        let want = (2.0 * 1e5f64.ln()).sqrt() * 0.5 + 0.5 * 0.5f64.exp_m1();
        assert!((s.composed_epsilon - want).abs() < 1e-14);
        assert!((s.composed_delta - 2e-5).abs() < 1e-20);
    }

    #[test]
    fn infinite_epsilon_round_trips() {
        let s = compose(f64::INFINITY, 1e-5, 0.032, 1000, 1e-5).unwrap();
        assert!(!s.is_private());
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"inf\""));
        let back: PrivacySpend = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
