use serde::{Deserialize, Serialize};

use super::pipeline::{dp_config, r_squared, train_mlp, train_qnn, CircuitShape, Regressor, Split};
use super::timing::{median_time, quantum_time, TimingModel};
use crate::dp::{DPConfig, TrainReport};
use crate::error::{Error, Result};
use crate::metrics;
use crate::mlp::MlpModel;
use crate::quantum::CircuitModel;

#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub seed: u64,
    pub sigma: f64,
    pub report: TrainReport<M>,
}

/// Models trained for every `(seed, σ)` pair, seed-major.
#[derive(Debug, Clone, Default)]
pub struct ModelGrid {
    pub qnn: Vec<Trained<CircuitModel>>,
    pub mlp: Vec<Trained<MlpModel>>,
}

impl ModelGrid {
    pub fn qnn_for(&self, seed: u64, sigma: f64) -> Option<&CircuitModel> {
        self.qnn.iter().find(|t| t.seed == seed && t.sigma == sigma).map(|t| &t.report.model)
    }

    /// `(σ, model)` pairs for the requested σ values; a missing model is a
    /// configuration error.
    pub fn qnn_select(&self, seed: u64, sigmas: &[f64]) -> Result<Vec<(f64, &CircuitModel)>> {
        sigmas
            .iter()
            .map(|&s| {
                self.qnn_for(seed, s)
                    .map(|m| (s, m))
                    .ok_or_else(|| Error::Config(format!("no QNN trained for seed {seed} and σ = {s}")))
            })
            .collect()
    }

    /// `(σ, model)` pairs for one seed, in training order.
    pub fn qnn_models(&self, seed: u64) -> Vec<(f64, &CircuitModel)> {
        self.qnn.iter().filter(|t| t.seed == seed).map(|t| (t.sigma, &t.report.model)).collect()
    }
}

/// Train a QNN for every `(seed, σ)` in `qnn_sigmas` and an MLP for every
/// `(seed, σ)` in `mlp_sigmas`.
pub fn train_models(
    split: &Split,
    base: &DPConfig,
    shape: CircuitShape,
    mlp_layers: &[usize],
    qnn_sigmas: &[f64],
    mlp_sigmas: &[f64],
    seeds: &[u64],
) -> Result<ModelGrid> {
    let set = split.training_set()?;
    let mut grid = ModelGrid::default();
    for &seed in seeds {
        for &sigma in qnn_sigmas {
            let cfg = dp_config(base, &set, sigma, seed);
            log::info!("training QNN seed {seed} sigma {sigma}");
            let report = train_qnn(split, shape, &cfg)?;
            grid.qnn.push(Trained { seed, sigma, report });
        }
        for &sigma in mlp_sigmas {
            let cfg = dp_config(base, &set, sigma, seed);
            log::info!("training MLP seed {seed} sigma {sigma}");
            let report = train_mlp(split, mlp_layers, &cfg)?;
            grid.mlp.push(Trained { seed, sigma, report });
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub model: String,
    pub seed: u64,
    pub sigma: f64,
    pub params: usize,
    /// NaN when training aborted.
    pub r2: f64,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Aggregate {
    pub model: String,
    pub sigma: f64,
    pub params: usize,
    pub r2_mean: f64,
    pub r2_std: f64,
    pub n_seeds: usize,
    pub n_aborted: usize,
}

/// Calculation time per prediction: analytic for the quantum circuit,
/// median wall clock for the classical forward passes. Not deterministic, so
/// kept apart from the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Timing {
    pub timing: TimingModel,
    pub qnn_depth: usize,
    pub qnn_quantum_s: f64,
    pub qnn_simulated_s: f64,
    pub mlp_forward_s: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3 {
    pub rows: Vec<Table3Row>,
    pub aggregates: Vec<Table3Aggregate>,
}

impl Table3 {
    pub fn from_models(models: &ModelGrid, test: &crate::grid::Dataset) -> Result<Self> {
        let mut rows = Vec::new();
        for t in &models.qnn {
            rows.push(row("qnn", t, test)?);
        }
        for t in &models.mlp {
            rows.push(row("mlp", t, test)?);
        }
        let mut aggregates: Vec<Table3Aggregate> = Vec::new();
        for r in &rows {
            if aggregates.iter().any(|a| a.model == r.model && a.sigma == r.sigma) {
                continue;
            }
            let group: Vec<&Table3Row> = rows.iter().filter(|o| o.model == r.model && o.sigma == r.sigma).collect();
            let r2: Vec<f64> = group.iter().map(|o| o.r2).collect();
            aggregates.push(Table3Aggregate {
                model: r.model.clone(),
                sigma: r.sigma,
                params: r.params,
                r2_mean: metrics::mean(&r2),
                r2_std: metrics::std_dev(&r2),
                n_seeds: group.len(),
                n_aborted: group.iter().filter(|o| !o.finished).count(),
            });
        }
        Ok(Self { rows, aggregates })
    }

    pub fn aggregate(&self, model: &str, sigma: f64) -> Option<&Table3Aggregate> {
        self.aggregates.iter().find(|a| a.model == model && a.sigma == sigma)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,seed,sigma,params,r2,finished\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{:.16e},{}\n", r.model, r.seed, r.sigma, r.params, r.r2, r.finished));
        }
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},mean,{},{},{:.16e},{}\n{},std,{},{},{:.16e},{}\n",
                a.model,
                a.sigma,
                a.params,
                a.r2_mean,
                a.n_aborted == 0,
                a.model,
                a.sigma,
                a.params,
                a.r2_std,
                a.n_aborted == 0
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn row<M: Regressor>(name: &str, t: &Trained<M>, test: &crate::grid::Dataset) -> Result<Table3Row> {
    let finished = t.report.finished();
    let r2 = if finished { r_squared(&t.report.model, test)? } else { f64::NAN };
    Ok(Table3Row {
        model: name.into(),
        seed: t.seed,
        sigma: t.sigma,
        params: t.report.model.param_count(),
        r2,
        finished,
    })
}

/// Time one prediction of each model on `x` over `reps` repetitions.
pub fn measure_timing(
    qnn: &CircuitModel,
    mlp: &MlpModel,
    x: &[f64],
    timing: &TimingModel,
    reps: usize,
) -> Result<Table3Timing> {
    timing.validate()?;
    qnn.predict(x)?;
    mlp.predict(x)?;
    let qnn_simulated_s = median_time(reps, || {
        std::hint::black_box(qnn.predict(std::hint::black_box(x)).ok());
    });
    let mlp_forward_s = median_time(reps, || {
        std::hint::black_box(mlp.predict(std::hint::black_box(x)).ok());
    });
    Ok(Table3Timing {
        timing: *timing,
        qnn_depth: crate::quantum::circuit_depth(qnn),
        qnn_quantum_s: quantum_time(qnn, timing),
        qnn_simulated_s,
        mlp_forward_s,
        repetitions: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{TrainOutcome, DPConfig};

    #[test]
    fn missing_sigma_is_a_config_error() {
        let report = TrainReport {
            model: CircuitModel::new(1, 0, 1).unwrap(),
            config: DPConfig::default(),
            outcome: TrainOutcome::Finished,
            step_losses: vec![],
            epoch_losses: vec![],
            noise_draws: 0,
            privacy: None,
        };
        let grid = ModelGrid { qnn: vec![Trained { seed: 0, sigma: 1.0, report }], mlp: vec![] };
        assert_eq!(grid.qnn_select(0, &[1.0]).unwrap().len(), 1);
        assert!(matches!(grid.qnn_select(0, &[1.0, 5.0]), Err(Error::Config(_))));
        assert!(grid.qnn_select(1, &[1.0]).is_err());
    }
}
