use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::gate::{rot, GateKind, GateOp, Matrix2};
use super::state::{angle_encode, expectation, Observable, StateVector};
use crate::error::{Error, Result};
use crate::scaling::Scaling;

/// Angle-encoded circuit with `n_layers` strongly-entangling layers and a
/// trailing rotation layer.
///
/// θ is laid out layer-major: the rotation on qubit `q` in layer `l` reads
/// `theta[3·(l·n_qubits + q) ..][..3]` as `(α, β, γ)`. Layer `n_layers` is the
/// trailing rotation layer, which has no CNOT ring after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitModel {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub entangle_range: usize,
    pub theta: Vec<f64>,
    #[serde(flatten)]
    pub scaling: Scaling,
}

/// Gate list with each rotation fused into a single 2×2 matrix.
#[derive(Debug, Clone)]
pub enum CompiledOp {
    Rot {
        qubit: usize,
        first_param: usize,
        matrix: Matrix2,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl CircuitModel {
    /// Model with all angles zero.
    pub fn new(n_qubits: usize, n_layers: usize, entangle_range: usize) -> Result<Self> {
        let model = Self {
            n_qubits,
            n_layers,
            entangle_range,
            theta: vec![0.0; Self::param_count_for(n_qubits, n_layers)],
            scaling: Scaling::identity(n_qubits),
        };
        model.validate()?;
        Ok(model)
    }

    /// Model with angles drawn uniformly from [0, 2π).
    pub fn random<R: Rng + ?Sized>(
        n_qubits: usize,
        n_layers: usize,
        entangle_range: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = Self::new(n_qubits, n_layers, entangle_range)?;
        for t in &mut model.theta {
            *t = rng.random::<f64>() * TAU;
        }
        Ok(model)
    }

    pub fn param_count_for(n_qubits: usize, n_layers: usize) -> usize {
        3 * n_qubits * (n_layers + 1)
    }

    pub fn param_count(&self) -> usize {
        Self::param_count_for(self.n_qubits, self.n_layers)
    }

    /// The measured output.
    pub fn observable(&self) -> Observable {
        Observable::z(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > super::MAX_QUBITS {
            return Err(Error::Config(format!("qubit count {} out of range", self.n_qubits)));
        }
        if self.n_qubits > 1 && self.entangle_range % self.n_qubits == 0 {
            return Err(Error::Config(format!(
                "entangle_range {} is a multiple of the qubit count {}",
                self.entangle_range, self.n_qubits
            )));
        }
        if self.theta.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: self.theta.len(),
            });
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numerical("non-finite rotation angle".into()));
        }
        if self.scaling.n_features() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: self.scaling.n_features(),
            });
        }
        Ok(())
    }

    fn cnot_ring(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_qubits;
        let range = self.entangle_range;
        (0..if n > 1 { n } else { 0 }).map(move |i| (i, (i + range) % n))
    }

    /// Ansatz gates, excluding the encoding.
    pub fn gates(&self) -> Vec<GateOp> {
        let mut gates = Vec::with_capacity((self.n_layers + 1) * 2 * self.n_qubits);
        for layer in 0..=self.n_layers {
            for q in 0..self.n_qubits {
                let base = 3 * (layer * self.n_qubits + q);
                gates.push(GateOp::single(GateKind::Rot, q, vec![base, base + 1, base + 2]));
            }
            if layer < self.n_layers {
                gates.extend(self.cnot_ring().map(|(c, t)| GateOp::cnot(c, t)));
            }
        }
        gates
    }

    /// Gate list for the given angles with rotations pre-multiplied.
    pub fn compile_with(&self, theta: &[f64]) -> Vec<CompiledOp> {
        let mut ops = Vec::with_capacity((self.n_layers + 1) * 2 * self.n_qubits);
        for layer in 0..=self.n_layers {
            for q in 0..self.n_qubits {
                let base = 3 * (layer * self.n_qubits + q);
                ops.push(CompiledOp::Rot {
                    qubit: q,
                    first_param: base,
                    matrix: rot(theta[base], theta[base + 1], theta[base + 2]),
                });
            }
            if layer < self.n_layers {
                ops.extend(
                    self.cnot_ring()
                        .map(|(control, target)| CompiledOp::Cnot { control, target }),
                );
            }
        }
        ops
    }

    /// Exact ⟨Z₀⟩ for already-scaled features.
    pub fn predict_scaled(&self, x: &[f64]) -> Result<f64> {
        Ok(expectation(&run_circuit(self, x)?, &self.observable()))
    }

    /// Prediction in physical target units for raw features.
    pub fn predict(&self, raw_x: &[f64]) -> Result<f64> {
        let x = self.scaling.scale_features(raw_x)?;
        Ok(self.scaling.unscale_target(self.predict_scaled(&x)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

pub(crate) fn apply_ops(state: &mut StateVector, ops: &[CompiledOp]) {
    for op in ops {
        match op {
            CompiledOp::Rot { qubit, matrix, .. } => state.apply_single(*qubit, matrix),
            CompiledOp::Cnot { control, target } => state.apply_cnot(*control, *target),
        }
    }
}

/// Encode `x` (already scaled to angles) and evolve it through the ansatz.
pub fn run_circuit(model: &CircuitModel, x: &[f64]) -> Result<StateVector> {
    if x.len() != model.n_qubits {
        return Err(Error::Dimension {
            expected: model.n_qubits,
            got: x.len(),
        });
    }
    let mut state = angle_encode(x)?;
    apply_ops(&mut state, &model.compile_with(&model.theta));
    Ok(state)
}

/// Number of sequential gate stages, scheduling every gate as soon as all of
/// its qubits are free. The encoding layer is one stage of RY gates.
pub fn circuit_depth(model: &CircuitModel) -> usize {
    let mut ready = vec![1usize; model.n_qubits];
    let mut depth = 1;
    for gate in model.gates() {
        let stage = gate.qubits().map(|q| ready[q]).max().unwrap_or(0) + 1;
        for q in gate.qubits() {
            ready[q] = stage;
        }
        depth = depth.max(stage);
    }
    depth
}
