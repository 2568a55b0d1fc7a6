//! Statevector simulation of the variational circuit.
//!
//! Amplitude index `k` stores qubit `q` in bit `q` of `k` (little-endian).

mod circuit;
mod gate;
mod state;

pub use circuit::{circuit_depth, run_circuit, CircuitModel, CompiledOp};
pub use gate::{pauli_x, rot, rx, ry, rz, GateKind, GateOp, Matrix2};
pub use state::{angle_encode, expectation, init_state, sample_expectation, Observable, StateVector};

/// Upper bound on register width; 2^24 amplitudes is roughly 256 MiB.
pub const MAX_QUBITS: usize = 24;
