use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    /// General rotation `Rot(α, β, γ) = RZ(α)·RY(β)·RZ(γ)`.
    Rot,
    CNOT,
    PauliX,
}

impl GateKind {
    pub fn param_count(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::Rot => 3,
            GateKind::CNOT | GateKind::PauliX => 0,
        }
    }
}

/// A gate placed on the register. `params` index into the circuit's θ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub params: Vec<usize>,
}

impl GateOp {
    pub fn single(kind: GateKind, target: usize, params: Vec<usize>) -> Self {
        Self {
            kind,
            target,
            control: None,
            params,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::CNOT,
            target,
            control: Some(control),
            params: Vec::new(),
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target).chain(self.control)
    }

    pub fn validate(&self, n_qubits: usize, n_params: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::Config(format!(
                "gate target {} out of range for {n_qubits} qubits",
                self.target
            )));
        }
        match (self.kind, self.control) {
            (GateKind::CNOT, Some(c)) if c >= n_qubits => {
                return Err(Error::Config(format!("control {c} out of range for {n_qubits} qubits")))
            }
            (GateKind::CNOT, Some(c)) if c == self.target => {
                return Err(Error::Config(format!("control and target are both qubit {c}")))
            }
            (GateKind::CNOT, None) => return Err(Error::Config("CNOT without control".into())),
            (GateKind::CNOT, Some(_)) => {}
            (_, Some(_)) => return Err(Error::Config(format!("{:?} takes no control", self.kind))),
            (_, None) => {}
        }
        if self.params.len() != self.kind.param_count() {
            return Err(Error::Config(format!(
                "{:?} needs {} parameters, got {}",
                self.kind,
                self.kind.param_count(),
                self.params.len()
            )));
        }
        if let Some(&bad) = self.params.iter().find(|&&p| p >= n_params) {
            return Err(Error::Config(format!(
                "parameter index {bad} out of range for θ of length {n_params}"
            )));
        }
        Ok(())
    }

    /// 2×2 realisation of a single-qubit gate.
    pub fn matrix(&self, theta: &[f64]) -> Result<Matrix2> {
        let angle = |i: usize| theta[self.params[i]];
        Ok(match self.kind {
            GateKind::RX => rx(angle(0)),
            GateKind::RY => ry(angle(0)),
            GateKind::RZ => rz(angle(0)),
            GateKind::Rot => rot(angle(0), angle(1), angle(2)),
            GateKind::PauliX => pauli_x(),
            GateKind::CNOT => {
                return Err(Error::Argument("CNOT has no single-qubit matrix".into()));
            }
        })
    }

    /// Full unitary on the gate's own qubits: 2×2, or 4×4 for CNOT with
    /// basis order |control, target⟩ = 00, 01, 10, 11.
    pub fn unitary(&self, theta: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        if self.kind == GateKind::CNOT {
            let o = Complex64::new(0.0, 0.0);
            let l = Complex64::new(1.0, 0.0);
            return Ok(vec![
                vec![l, o, o, o],
                vec![o, l, o, o],
                vec![o, o, o, l],
                vec![o, o, l, o],
            ]);
        }
        let m = self.matrix(theta)?;
        Ok(m.iter().map(|row| row.to_vec()).collect())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> Matrix2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn rx(t: f64) -> Matrix2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(t: f64) -> Matrix2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(t: f64) -> Matrix2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
}

/// RZ(α)·RY(β)·RZ(γ), written out in closed form.
pub fn rot(alpha: f64, beta: f64, gamma: f64) -> Matrix2 {
    let (sb, cb) = (beta / 2.0).sin_cos();
    let plus = (alpha + gamma) / 2.0;
    let minus = (alpha - gamma) / 2.0;
    [
        [Complex64::from_polar(cb, -plus), -Complex64::from_polar(sb, -minus)],
        [Complex64::from_polar(sb, minus), Complex64::from_polar(cb, plus)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    #[test]
    fn rot_matches_product_of_elementary_rotations() {
        for &(a, b, g) in &[(0.3, -1.2, 2.5), (3.0, 0.1, -0.7), (0.0, 0.0, 0.0)] {
            let expected = mul(&mul(&rz(a), &ry(b)), &rz(g));
            let got = rot(a, b, g);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((expected[i][j] - got[i][j]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn validation_catches_shape_errors() {
        assert!(GateOp::single(GateKind::Rot, 0, vec![0, 1]).validate(1, 3).is_err());
        assert!(GateOp::cnot(0, 3).validate(3, 0).is_err());
        assert!(GateOp::single(GateKind::RZ, 0, vec![0]).validate(1, 1).is_ok());
    }
}
