use std::path::Path;

use log::{info, warn};

use super::model::GridModel;
use super::opf::solve_opf;
use super::popf::sample_stream;
use super::uncertainty::{sample_uncertainty, DistributionSpec};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "wind1,wind2,solar1,solar2,load,v_target_kv";

/// Raw (unscaled) features in MW and target voltages in kV.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub target_bus: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// First `n` rows and the rest.
    pub fn split(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let part = |r: std::ops::Range<usize>| Dataset {
            features: self.features[r.clone()].to_vec(),
            targets: self.targets[r].to_vec(),
            target_bus: self.target_bus,
        };
        (part(0..n), part(n..self.len()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))?;
        for (x, y) in self.features.iter().zip(&self.targets) {
            w.write_record(x.iter().chain(std::iter::once(y)).map(|v| format!("{v:.16e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("formatted floats are ASCII"))
    }

    pub fn from_csv(text: &str, target_bus: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Schema(format!("expected header {CSV_HEADER:?}, got {:?}", header.join(","))));
        }
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for (row, record) in r.records().enumerate() {
            let values: Vec<f64> = record?
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Schema(format!("row {}: {e}", row + 1)))?;
            features.push(values[..5].to_vec());
            targets.push(values[5]);
        }
        Ok(Self { features, targets, target_bus })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv()?)?)
    }

    pub fn read_csv(path: &Path, target_bus: usize) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?, target_bus)
    }
}

/// `n` rows of `(wind₁, wind₂, solar₁, solar₂, load) → |V_target|` in kV.
///
/// Rows whose OPF is infeasible are dropped; fewer than `n/2` survivors is an
/// error. Sample `i` uses the same stream as in [`super::monte_carlo_popf`].
pub fn build_dataset(
    grid: &GridModel,
    spec: &DistributionSpec,
    n: usize,
    target_bus: usize,
    seed: u64,
) -> Result<Dataset> {
    let ti = grid
        .bus_index(target_bus)
        .ok_or_else(|| Error::Argument(format!("target bus {target_bus} does not exist")))?;
    if spec.n_features() != 5 {
        return Err(Error::Config(format!(
            "the dataset layout needs 2 wind, 2 solar and 1 load feature, got {}",
            spec.n_features()
        )));
    }
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let sample = sample_uncertainty(spec, &mut sample_stream(seed, i))?;
        match solve_opf(grid, &sample) {
            Ok(sol) => {
                features.push(sample.features(spec.customer_nominal));
                targets.push(sol.v[ti].sqrt());
            }
            Err(e @ (Error::Infeasible { .. } | Error::NonConvergence { .. })) => {
                warn!("dataset row {i} dropped: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    if 2 * targets.len() < n {
        return Err(Error::DataQuality(format!("only {} of {n} rows were feasible", targets.len())));
    }
    info!("dataset: {} of {n} rows feasible", targets.len());
    Ok(Dataset { features, targets, target_bus })
}
