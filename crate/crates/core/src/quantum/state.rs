use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::gate::{GateOp, Matrix2};
use super::MAX_QUBITS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// |0…0⟩ on `n_qubits` qubits.
pub fn init_state(n_qubits: usize) -> Result<StateVector> {
    check_width(n_qubits)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector {
        n_qubits,
        amplitudes,
    })
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Product state ⊗ᵢ (cos(xᵢ/2)|0⟩ + sin(xᵢ/2)|1⟩); feature `i` drives qubit `i`.
pub fn angle_encode(x: &[f64]) -> Result<StateVector> {
    check_width(x.len())?;
    let n = x.len();
    let halves: Vec<(f64, f64)> = x.iter().map(|&xi| ((xi / 2.0).cos(), (xi / 2.0).sin())).collect();
    let amplitudes = (0..1usize << n)
        .map(|k| {
            let amp = halves
                .iter()
                .enumerate()
                .fold(1.0, |acc, (q, &(c, s))| if k >> q & 1 == 0 { acc * c } else { acc * s });
            Complex64::new(amp, 0.0)
        })
        .collect();
    Ok(StateVector {
        n_qubits: n,
        amplitudes,
    })
}

impl StateVector {
    /// Build from raw amplitudes; the length must be a power of two and the
    /// vector must be normalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_width(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("state norm² {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply `gate` in place, reading rotation angles from `theta`.
    pub fn apply(&mut self, gate: &GateOp, theta: &[f64]) -> Result<()> {
        gate.validate(self.n_qubits, theta.len())?;
        match gate.control {
            Some(control) => self.apply_cnot(control, gate.target),
            None => {
                let m = gate.matrix(theta)?;
                self.apply_single(gate.target, &m);
            }
        }
        Ok(())
    }

    /// Single-qubit unitary on `qubit`; the caller guarantees the index is valid.
    pub(crate) fn apply_single(&mut self, qubit: usize, m: &Matrix2) {
        let stride = 1usize << qubit;
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < amps.len() {
            for k in base..base + stride {
                let a0 = amps[k];
                let a1 = amps[k + stride];
                amps[k] = m[0][0] * a0 + m[0][1] * a1;
                amps[k + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for k in 0..self.amplitudes.len() {
            if k & cmask != 0 && k & tmask == 0 {
                self.amplitudes.swap(k, k | tmask);
            }
        }
    }

    /// Probability that `qubit` reads 0.
    pub fn prob_zero(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Pauli-Z measured on a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    pub qubit: usize,
}

impl Observable {
    pub fn z(qubit: usize) -> Self {
        Self { qubit }
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        [1.0, -1.0]
    }
}

/// ⟨ψ|Z_q|ψ⟩.
pub fn expectation(state: &StateVector, obs: &Observable) -> f64 {
    debug_assert!(obs.qubit < state.n_qubits);
    let mask = 1usize << obs.qubit;
    let value: f64 = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| if k & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum();
    value.clamp(-1.0, 1.0)
}

/// Mean of `shots` projective Z measurements.
pub fn sample_expectation<R: Rng + ?Sized>(
    state: &StateVector,
    obs: &Observable,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Argument("shots must be at least 1".into()));
    }
    if obs.qubit >= state.n_qubits {
        return Err(Error::Config(format!(
            "observable qubit {} out of range for {} qubits",
            obs.qubit, state.n_qubits
        )));
    }
    let p_plus = state.prob_zero(obs.qubit).clamp(0.0, 1.0);
    let plus = Binomial::new(shots, p_plus)
        .map_err(|e| Error::Numerical(format!("binomial: {e}")))?
        .sample(rng);
    Ok((2.0 * plus as f64 - shots as f64) / shots as f64)
}
