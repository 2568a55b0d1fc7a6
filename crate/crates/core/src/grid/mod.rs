//! Radial distribution grids: branch-flow OPF under the second-order-cone
//! relaxation, uncertainty sampling, Monte Carlo POPF and dataset generation.
//!
//! Internally everything is per unit on the grid's `(base_kv, base_mva)`;
//! physical units appear only at the edges.

mod dataset;
mod ieee33;
mod ipm;
mod model;
mod opf;
mod popf;
mod uncertainty;

pub use dataset::{build_dataset, Dataset, CSV_HEADER};
pub use ieee33::{ieee33, BASE_KV, BASE_MVA, CUSTOMER_BUS, DG_BUSES, PV_BUSES, WT_BUSES};
pub use model::{load_grid, Bus, BusKind, GridModel, Line, Placements, Topology};
pub use opf::{net_loads, solve_opf, solve_with_loads, OPFSolution, Residuals};
pub use popf::{monte_carlo_popf, sample_stream, voltage_key, PopfReport, QuantityStats};
pub use uncertainty::{
    load_pattern, sample_uncertainty, BetaSpec, DistributionSpec, NormalSpec, UncertainSample,
    WeibullSpec, SOLAR_CAPACITY_MW, WIND_CAPACITY_MW,
};
