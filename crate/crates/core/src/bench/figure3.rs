use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{load_pattern, solve_opf, DistributionSpec, GridModel, UncertainSample};
use crate::metrics;
use crate::quantum::{run_circuit, sample_expectation, CircuitModel};
use crate::rng::{self, purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3Config {
    /// Timesteps `0..=t_max`.
    pub t_max: usize,
    /// Customer load at pattern value 1, MW.
    pub load_scale: f64,
    pub shots: u64,
    /// Independent shot estimates averaged per timestep.
    pub repeats: usize,
    pub seed: u64,
}

impl Figure3Config {
    pub fn for_spec(spec: &DistributionSpec) -> Self {
        Self {
            t_max: 400,
            load_scale: spec.customer_nominal,
            shots: 100,
            repeats: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.load_scale >= 0.0 && self.load_scale.is_finite()) {
            return Err(Error::Config(format!("load scale must be non-negative, got {}", self.load_scale)));
        }
        if self.shots == 0 || self.repeats < 2 {
            return Err(Error::Config("need at least one shot and two repeats per timestep".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub t: usize,
    pub load: f64,
    pub v_opf: f64,
    /// One entry per σ, in [`Figure3::sigmas`] order.
    pub predictions: Vec<TraceStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3 {
    pub config: Figure3Config,
    pub target_bus: usize,
    pub sigmas: Vec<f64>,
    /// Raw wind and solar features held fixed over time.
    pub fixed_features: Vec<f64>,
    pub rows: Vec<Figure3Row>,
}

impl Figure3 {
    pub fn loads(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.load).collect()
    }

    pub fn opf_trace(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.v_opf).collect()
    }

    /// Mean prediction over time for the model at position `k`.
    pub fn trace(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.predictions[k].mean).collect()
    }

    pub fn trace_variances(&self) -> Vec<f64> {
        (0..self.sigmas.len()).map(|k| metrics::variance(&self.trace(k))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,load,v_opf");
        for s in &self.sigmas {
            out.push_str(&format!(",v_sigma{s}_mean,v_sigma{s}_std"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{:.16e},{:.16e}", r.t, r.load, r.v_opf));
            for p in &r.predictions {
                out.push_str(&format!(",{:.16e},{:.16e}", p.mean, p.std));
            }
            out.push('\n');
        }
        out
    }
}

/// Voltage traces over the load pattern: the OPF solution and each model's
/// shot-based prediction.
///
/// Wind and solar stay at `fixed_features`; the customer load follows
/// `load_scale · load_pattern(t)`. Each prediction is the mean and sample
/// standard deviation of `repeats` estimates of `shots` measurements.
pub fn run_figure3(
    grid: &GridModel,
    spec: &DistributionSpec,
    fixed_features: &[f64],
    models: &[(f64, &CircuitModel)],
    target_bus: usize,
    cfg: &Figure3Config,
) -> Result<Figure3> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(Error::Config("no models supplied".into()));
    }
    let n_renew = spec.wind_sites + spec.solar_sites;
    if fixed_features.len() != n_renew {
        return Err(Error::Dimension { expected: n_renew, got: fixed_features.len() });
    }
    let ti = grid
        .bus_index(target_bus)
        .ok_or_else(|| Error::Argument(format!("target bus {target_bus} does not exist")))?;
    let mut shot_rngs: Vec<rng::Rng> = (0..models.len())
        .map(|k| rng::stream(rng::mix(cfg.seed, k as u64), purpose::SHOTS))
        .collect();

    let mut rows = Vec::with_capacity(cfg.t_max + 1);
    for t in 0..=cfg.t_max {
        let load = cfg.load_scale * load_pattern(t as f64);
        let sample = UncertainSample {
            wind: fixed_features[..spec.wind_sites].to_vec(),
            solar: fixed_features[spec.wind_sites..].to_vec(),
            load_perturbation: load - spec.customer_nominal,
        };
        let v_opf = solve_opf(grid, &sample)?.v[ti].sqrt();
        let x = sample.features(spec.customer_nominal);

        let mut predictions = Vec::with_capacity(models.len());
        for ((_, model), shot_rng) in models.iter().zip(&mut shot_rngs) {
            let state = run_circuit(model, &model.scaling.scale_features(&x)?)?;
            let estimates = (0..cfg.repeats)
                .map(|_| {
                    sample_expectation(&state, &model.observable(), cfg.shots, shot_rng)
                        .map(|z| model.scaling.unscale_target(z))
                })
                .collect::<Result<Vec<_>>>()?;
            predictions.push(TraceStats {
                mean: metrics::mean(&estimates),
                std: metrics::std_dev(&estimates),
            });
        }
        rows.push(Figure3Row { t, load, v_opf, predictions });
    }
    Ok(Figure3 {
        config: cfg.clone(),
        target_bus,
        sigmas: models.iter().map(|(s, _)| *s).collect(),
        fixed_features: fixed_features.to_vec(),
        rows,
    })
}
