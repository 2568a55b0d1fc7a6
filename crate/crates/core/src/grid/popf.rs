use log::{info, warn};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::model::GridModel;
use super::opf::{solve_opf, OPFSolution};
use super::uncertainty::{sample_uncertainty, DistributionSpec, UncertainSample};
use crate::error::{Error, Result};
use crate::metrics;
use crate::rng::{self, purpose};

/// Mean and (n − 1)-normalised standard deviation of one solution quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantityStats {
    pub mean: f64,
    pub std: f64,
    pub n_feasible: usize,
    pub n_total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopfReport {
    /// `(name, stats)` in a fixed order: objective, bus voltages (kV),
    /// generator outputs, line flows.
    pub quantities: Vec<(String, QuantityStats)>,
    pub n_total: usize,
    pub n_feasible: usize,
    /// Indices of samples whose OPF was infeasible or failed to converge.
    pub excluded: Vec<usize>,
    /// Every drawn sample, in draw order.
    pub samples: Vec<UncertainSample>,
    /// Per-sample solutions (`None` where excluded), when retained.
    pub solutions: Option<Vec<Option<OPFSolution>>>,
}

impl PopfReport {
    pub fn get(&self, name: &str) -> Option<&QuantityStats> {
        self.quantities.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn voltage_kv(&self, bus_id: usize) -> Option<&QuantityStats> {
        self.get(&voltage_key(bus_id))
    }
}

/// Serialises as `{quantity: {mean, std, n_feasible, n_total}}`.
impl Serialize for PopfReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.quantities.len()))?;
        for (name, stats) in &self.quantities {
            map.serialize_entry(name, stats)?;
        }
        map.end()
    }
}

pub fn voltage_key(bus_id: usize) -> String {
    format!("v_kv[{bus_id}]")
}

/// Sample `i` is drawn from its own stream, so results do not depend on the
/// order samples are solved in.
pub fn sample_stream(seed: u64, i: usize) -> rng::Rng {
    rng::stream(seed, purpose::SAMPLES + i as u64)
}

/// Monte Carlo POPF: draw, solve, aggregate over the feasible samples.
pub fn monte_carlo_popf(
    grid: &GridModel,
    spec: &DistributionSpec,
    n_samples: usize,
    seed: u64,
    retain_solutions: bool,
) -> Result<PopfReport> {
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be at least 1".into()));
    }
    grid.validate()?;
    let mut samples = Vec::with_capacity(n_samples);
    let mut solutions = Vec::with_capacity(n_samples);
    let mut excluded = Vec::new();
    for i in 0..n_samples {
        let sample = sample_uncertainty(spec, &mut sample_stream(seed, i))?;
        match solve_opf(grid, &sample) {
            Ok(sol) => solutions.push(Some(sol)),
            Err(e @ (Error::Infeasible { .. } | Error::NonConvergence { .. })) => {
                warn!("sample {i} excluded: {e}");
                excluded.push(i);
                solutions.push(None);
            }
            Err(e) => return Err(e),
        }
        samples.push(sample);
    }
    let feasible: Vec<&OPFSolution> = solutions.iter().flatten().collect();
    if feasible.is_empty() {
        return Err(Error::Aggregation(format!("all {n_samples} samples were infeasible")));
    }
    info!("POPF: {} of {n_samples} samples feasible", feasible.len());

    let stats = |values: Vec<f64>| QuantityStats {
        mean: metrics::mean(&values),
        std: metrics::std_dev(&values),
        n_feasible: feasible.len(),
        n_total: n_samples,
    };
    let mut quantities = vec![("objective".to_string(), stats(feasible.iter().map(|s| s.objective).collect()))];
    for (i, b) in grid.buses.iter().enumerate() {
        quantities.push((voltage_key(b.id), stats(feasible.iter().map(|s| s.v[i].sqrt()).collect())));
    }
    for (i, b) in grid.buses.iter().enumerate().filter(|(_, b)| b.is_generator()) {
        quantities.push((format!("p_gen_mw[{}]", b.id), stats(feasible.iter().map(|s| s.p_gen[i]).collect())));
        quantities.push((format!("q_gen_mvar[{}]", b.id), stats(feasible.iter().map(|s| s.q_gen[i]).collect())));
    }
    for (li, l) in grid.lines.iter().enumerate() {
        let name = format!("{}-{}", l.from, l.to);
        quantities.push((format!("p_flow_mw[{name}]"), stats(feasible.iter().map(|s| s.p_flow[li]).collect())));
        quantities.push((format!("q_flow_mvar[{name}]"), stats(feasible.iter().map(|s| s.q_flow[li]).collect())));
        quantities.push((format!("l_ka2[{name}]"), stats(feasible.iter().map(|s| s.l[li]).collect())));
    }
    let n_feasible = feasible.len();
    Ok(PopfReport {
        quantities,
        n_total: n_samples,
        n_feasible,
        excluded,
        samples,
        solutions: retain_solutions.then_some(solutions),
    })
}
