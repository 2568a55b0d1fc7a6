//! Differentially private variational quantum circuits for probabilistic
//! optimal power flow on radial distribution grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: statevector simulation of the angle-encoded,
//!   strongly-entangling circuit.
//! * [`gradients`]: parameter-shift gradients and a finite-difference oracle.
//! * [`dp`]: clipped, noised mini-batch training and the privacy accountant.
//! * [`grid`]: branch-flow OPF (SOC relaxation, interior point), uncertainty
//!   sampling, Monte Carlo POPF and dataset generation.
//! * [`mlp`]: classical baseline trained through the same private pipeline.
//! * [`bench`]: the experiment drivers behind the CLI.

pub mod bench;
pub mod dp;
pub mod error;
pub mod gradients;
pub mod grid;
pub mod metrics;
pub mod mlp;
pub mod quantum;
pub mod rng;
pub mod scaling;

pub use error::{Error, Result};
