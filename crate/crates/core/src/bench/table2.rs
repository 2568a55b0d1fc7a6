use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{monte_carlo_popf, DistributionSpec, GridModel};
use crate::metrics;
use crate::quantum::CircuitModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub sigma: f64,
    pub mean_kv: f64,
    pub std_kv: f64,
    pub err_mean_pct: f64,
    pub err_std_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub target_bus: usize,
    pub seed: u64,
    pub n_total: usize,
    pub n_feasible: usize,
    pub reference_mean_kv: f64,
    pub reference_std_kv: f64,
    pub rows: Vec<Table2Row>,
}

impl Table2 {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,ref_mean_kv,ref_std_kv,mean_kv,std_kv,err_mean_pct,err_std_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.sigma, self.reference_mean_kv, self.reference_std_kv, r.mean_kv, r.std_kv, r.err_mean_pct,
                r.err_std_pct
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Seed of the Monte Carlo reference draw, distinct from the dataset's.
pub fn reference_seed(data_seed: u64) -> u64 {
    crate::rng::mix(data_seed, 0x7ab1e2)
}

/// Monte Carlo reference statistics of `|V_target|` against each model's
/// statistics over the same feasible samples.
///
/// Model predictions use the exact expectation value.
pub fn run_table2(
    grid: &GridModel,
    spec: &DistributionSpec,
    models: &[(f64, &CircuitModel)],
    n_samples: usize,
    target_bus: usize,
    seed: u64,
) -> Result<Table2> {
    if models.is_empty() {
        return Err(Error::Config("no models supplied".into()));
    }
    let popf = monte_carlo_popf(grid, spec, n_samples, seed, false)?;
    let reference = popf
        .voltage_kv(target_bus)
        .copied()
        .ok_or_else(|| Error::Argument(format!("target bus {target_bus} does not exist")))?;
    let features: Vec<Vec<f64>> = popf
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !popf.excluded.contains(i))
        .map(|(_, s)| s.features(spec.customer_nominal))
        .collect();

    let mut rows = Vec::with_capacity(models.len());
    for &(sigma, model) in models {
        let preds = features.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>>>()?;
        let (mean_kv, std_kv) = (metrics::mean(&preds), metrics::std_dev(&preds));
        rows.push(Table2Row {
            sigma,
            mean_kv,
            std_kv,
            err_mean_pct: metrics::error_percent(mean_kv, reference.mean),
            err_std_pct: metrics::error_percent(std_kv, reference.std),
        });
    }
    Ok(Table2 {
        target_bus,
        seed,
        n_total: popf.n_total,
        n_feasible: popf.n_feasible,
        reference_mean_kv: reference.mean,
        reference_std_kv: reference.std,
        rows,
    })
}
