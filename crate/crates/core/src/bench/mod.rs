//! Experiment drivers behind the `bench` and `figure3` subcommands.

mod figure3;
mod pipeline;
mod table2;
mod table3;
mod timing;

pub use figure3::{run_figure3, Figure3, Figure3Config, Figure3Row, TraceStats};
pub use pipeline::{
    default_mlp_layers, dp_config, predictions, r_squared, scaled, train_mlp, train_qnn, CircuitShape, Regressor,
    Split, DEFAULT_LAYERS_QNN,
};
pub use table2::{reference_seed, run_table2, Table2, Table2Row};
pub use table3::{measure_timing, train_models, ModelGrid, Table3, Table3Aggregate, Table3Row, Table3Timing, Trained};
pub use timing::{median_time, quantum_time, TimingModel};
