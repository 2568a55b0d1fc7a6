//! Parameter-shift gradients of the circuit output, the squared-error loss
//! chained on top, and a central finite-difference routine used as a
//! cross-check.
//!
//! Every trainable angle enters the circuit through exactly one elementary
//! rotation `exp(−iθP/2)`, so `∂f/∂θⱼ = [f(θⱼ + π/2) − f(θⱼ − π/2)] / 2`.
//! The shifted evaluations reuse the cached state in front of each rotation
//! and only replay the suffix of the circuit.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::quantum::{angle_encode, expectation, rot, CircuitModel, CompiledOp, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
    pub per_sample: bool,
}

impl GradientVector {
    pub fn per_sample(values: Vec<f64>) -> Self {
        Self {
            values,
            per_sample: true,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Which compiled ops can influence ⟨Z_measured⟩, found by walking the
/// circuit backwards from the measured qubit.
fn light_cone(ops: &[CompiledOp], n_qubits: usize, measured: usize) -> Vec<bool> {
    let mut live = vec![false; n_qubits];
    live[measured] = true;
    let mut relevant = vec![false; ops.len()];
    for (i, op) in ops.iter().enumerate().rev() {
        match *op {
            CompiledOp::Rot { qubit, .. } => relevant[i] = live[qubit],
            CompiledOp::Cnot { control, target } => {
                if live[control] || live[target] {
                    relevant[i] = true;
                    live[control] = true;
                    live[target] = true;
                }
            }
        }
    }
    relevant
}

/// Output ⟨Z₀⟩ and its exact gradient with respect to θ.
pub fn value_and_grad(model: &CircuitModel, x: &[f64]) -> Result<(f64, GradientVector)> {
    if x.len() != model.n_qubits {
        return Err(Error::Dimension {
            expected: model.n_qubits,
            got: x.len(),
        });
    }
    let theta = &model.theta;
    let obs = model.observable();
    let ops = model.compile_with(theta);
    let relevant = light_cone(&ops, model.n_qubits, obs.qubit);

    let mut state = angle_encode(x)?;
    let mut prefixes: Vec<(usize, StateVector)> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        if matches!(op, CompiledOp::Rot { .. }) && relevant[i] {
            prefixes.push((i, state.clone()));
        }
        apply_op(&mut state, op);
    }
    let value = expectation(&state, &obs);

    let mut grad = vec![0.0; theta.len()];
    let mut scratch = state;
    for (i, prefix) in &prefixes {
        let CompiledOp::Rot {
            qubit, first_param, ..
        } = ops[*i]
        else {
            unreachable!("prefixes only hold rotations");
        };
        let suffix = &ops[i + 1..];
        for k in 0..3 {
            let mut shifted = |delta: f64| {
                let mut angles = [theta[first_param], theta[first_param + 1], theta[first_param + 2]];
                angles[k] += delta;
                let m = rot(angles[0], angles[1], angles[2]);
                scratch.clone_from(prefix);
                scratch.apply_single(qubit, &m);
                for op in suffix {
                    apply_op(&mut scratch, op);
                }
                expectation(&scratch, &obs)
            };
            let plus = shifted(FRAC_PI_2);
            let minus = shifted(-FRAC_PI_2);
            grad[first_param + k] = (plus - minus) / 2.0;
        }
    }
    Ok((value, GradientVector::per_sample(grad)))
}

#[inline]
fn apply_op(state: &mut StateVector, op: &CompiledOp) {
    match op {
        CompiledOp::Rot { qubit, matrix, .. } => state.apply_single(*qubit, matrix),
        CompiledOp::Cnot { control, target } => state.apply_cnot(*control, *target),
    }
}

/// Parameter-shift gradient of the circuit output.
pub fn expectation_grad(model: &CircuitModel, x: &[f64]) -> Result<GradientVector> {
    value_and_grad(model, x).map(|(_, g)| g)
}

/// Squared error `(ŷ − y*)²` and its gradient `2(ŷ − y*)·∇ŷ`.
///
/// `x` holds encoding angles and `y_star` lives in the [−1, 1] target space.
pub fn loss_grad(model: &CircuitModel, x: &[f64], y_star: f64) -> Result<(f64, GradientVector)> {
    let (y_hat, mut grad) = value_and_grad(model, x)?;
    let residual = y_hat - y_star;
    for g in &mut grad.values {
        *g *= 2.0 * residual;
    }
    Ok((residual * residual, grad))
}

/// Central differences `[f(θ + h·eⱼ) − f(θ − h·eⱼ)] / 2h`.
pub fn finite_diff_grad<F>(f: F, theta: &[f64], h: f64) -> Result<GradientVector>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Argument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let values = (0..theta.len())
        .map(|j| {
            probe[j] = theta[j] + h;
            let up = f(&probe);
            probe[j] = theta[j] - h;
            let down = f(&probe);
            probe[j] = theta[j];
            (up - down) / (2.0 * h)
        })
        .collect();
    Ok(GradientVector::per_sample(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::run_circuit;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn ry_model(theta_y: f64) -> CircuitModel {
        let mut m = CircuitModel::new(1, 0, 1).unwrap();
        m.theta = vec![0.0, theta_y, 0.0];
        m
    }

    #[test]
    fn single_ry_gradient() {
        assert!(expectation_grad(&ry_model(0.0), &[0.0]).unwrap().values[1].abs() < 1e-15);
        assert!((expectation_grad(&ry_model(PI / 2.0), &[0.0]).unwrap().values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn loss_grad_examples() {
        let (loss, g) = loss_grad(&ry_model(0.0), &[0.0], 0.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
        assert!(g.values[1].abs() < 1e-15);

        let m = ry_model(0.8);
        let y_hat = m.predict_scaled(&[0.3]).unwrap();
        let (loss, g) = loss_grad(&m, &[0.3], y_hat).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_differences_examples() {
        let g = finite_diff_grad(|t| t[0] * t[0], &[3.0], 1e-5).unwrap();
        assert!((g.values[0] - 6.0).abs() < 1e-8);
        let g = finite_diff_grad(|t| t[0].cos(), &[0.0], 1e-5).unwrap();
        assert!(g.values[0].abs() < 1e-9);
        assert!(finite_diff_grad(|t| t[0], &[0.0], 0.0).is_err());
        assert!(finite_diff_grad(|t| t[0], &[0.0], -1.0).is_err());
    }

    #[test]
    fn matches_finite_differences_on_small_circuit() {
        let mut r = rng::stream(21, 0);
        let model = CircuitModel::random(2, 1, 1, &mut r).unwrap();
        let x = [r.random::<f64>() * PI, r.random::<f64>() * PI];
        let shift = expectation_grad(&model, &x).unwrap();
        let fd = finite_diff_grad(
            |t| {
                let mut m = model.clone();
                m.theta = t.to_vec();
                m.predict_scaled(&x).unwrap()
            },
            &model.theta,
            1e-5,
        )
        .unwrap();
        for (a, b) in shift.values.iter().zip(&fd.values) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut r = rng::stream(22, 0);
        let model = CircuitModel::random(3, 2, 1, &mut r).unwrap();
        let x = [0.4, 2.2, 1.3];
        let y = 0.25;
        let (_, g) = loss_grad(&model, &x, y).unwrap();
        let fd = finite_diff_grad(
            |t| {
                let mut m = model.clone();
                m.theta = t.to_vec();
                let e = m.predict_scaled(&x).unwrap() - y;
                e * e
            },
            &model.theta,
            1e-5,
        )
        .unwrap();
        for (a, b) in g.values.iter().zip(&fd.values) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn rotations_outside_light_cone_have_zero_gradient() {
        let mut r = rng::stream(23, 0);
        let model = CircuitModel::random(3, 0, 1, &mut r).unwrap();
        let g = expectation_grad(&model, &[0.1, 0.2, 0.3]).unwrap();
        assert!(g.values[3..].iter().all(|&v| v == 0.0));
        assert!(g.values[..3].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn loss_gradient_is_linear_in_residual() {
        let mut r = rng::stream(24, 0);
        let model = CircuitModel::random(2, 2, 1, &mut r).unwrap();
        let x = [1.0, 2.0];
        let y_hat = model.predict_scaled(&x).unwrap();
        let (_, g1) = loss_grad(&model, &x, y_hat - 0.1).unwrap();
        let (_, g2) = loss_grad(&model, &x, y_hat - 0.2).unwrap();
        for (a, b) in g1.values.iter().zip(&g2.values) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn value_matches_forward_pass() {
        let model = CircuitModel::random(4, 3, 1, &mut rng::stream(25, 0)).unwrap();
        let x = [0.5, 1.5, 2.5, 3.0];
        let (v, _) = value_and_grad(&model, &x).unwrap();
        let direct = expectation(&run_circuit(&model, &x).unwrap(), &model.observable());
        assert_eq!(v.to_bits(), direct.to_bits());
    }
}
