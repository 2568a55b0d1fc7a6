//! Log-barrier interior-point method for
//! `min cᵀz  s.t.  a(z) ≥ 0  (affine),  u(z)·w(z) ≥ p(z)² + q(z)²  (rotated cones)`.
//!
//! Each outer iteration minimises `t·cᵀz + Σ φᵢ(z)` by damped Newton steps,
//! with `φ = −log a` for affine rows and `φ = −log(uw − p² − q²)` for cones;
//! the duality gap of a centred point is `ν/t`, `ν = #affine + 2·#cones`.

use log::trace;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sparse affine function `c0 + Σ coef[k]·z[idx[k]]`, stored densely plus
/// its support.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub coef: Vec<f64>,
    pub c0: f64,
}

impl Affine {
    pub fn zero(n: usize) -> Self {
        Self { coef: vec![0.0; n], c0: 0.0 }
    }

    pub fn constant(n: usize, c0: f64) -> Self {
        Self { coef: vec![0.0; n], c0 }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut a = Self::zero(n);
        a.coef[i] = 1.0;
        a
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.c0 + self.coef.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn axpy(&mut self, k: f64, other: &Affine) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += k * b;
        }
        self.c0 += k * other.c0;
    }

    pub fn scaled(&self, k: f64) -> Affine {
        Affine { coef: self.coef.iter().map(|a| a * k).collect(), c0: self.c0 * k }
    }

    pub fn add_const(mut self, c: f64) -> Affine {
        self.c0 += c;
        self
    }

    fn extend(&self, extra: f64) -> Affine {
        let mut coef = self.coef.clone();
        coef.push(extra);
        Affine { coef, c0: self.c0 }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Constraint {
    Linear(Affine),
    Cone { u: Affine, w: Affine, p: Affine, q: Affine },
}

impl Constraint {
    fn degree(&self) -> f64 {
        match self {
            Constraint::Linear(_) => 1.0,
            Constraint::Cone { .. } => 2.0,
        }
    }

    /// Barrier argument; `None` outside the open domain.
    fn margin(&self, z: &[f64]) -> Option<f64> {
        match self {
            Constraint::Linear(a) => {
                let m = a.eval(z);
                (m > 0.0).then_some(m)
            }
            Constraint::Cone { u, w, p, q } => {
                let (u, w, p, q) = (u.eval(z), w.eval(z), p.eval(z), q.eval(z));
                let h = u * w - p * p - q * q;
                (u > 0.0 && w > 0.0 && h > 0.0).then_some(h)
            }
        }
    }

    /// Scalar slack used for reporting: affine value, or `uw − p² − q²`.
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Constraint::Linear(a) => a.eval(z),
            Constraint::Cone { u, w, p, q } => {
                let (p, q) = (p.eval(z), q.eval(z));
                u.eval(z) * w.eval(z) - p * p - q * q
            }
        }
    }

    /// Add this barrier's gradient and Hessian at `z` into `g`, `h`.
    fn accumulate(&self, z: &[f64], support: &[usize], g: &mut [f64], h: &mut DMatrix<f64>) {
        match self {
            Constraint::Linear(a) => {
                let m = a.eval(z);
                let inv = 1.0 / m;
                for &i in support {
                    g[i] -= a.coef[i] * inv;
                    let ai = a.coef[i] * inv;
                    for &j in support {
                        h[(i, j)] += ai * a.coef[j] * inv;
                    }
                }
            }
            Constraint::Cone { u, w, p, q } => {
                let (uv, wv, pv, qv) = (u.eval(z), w.eval(z), p.eval(z), q.eval(z));
                let hv = uv * wv - pv * pv - qv * qv;
                let inv = 1.0 / hv;
                let dh = |i: usize| wv * u.coef[i] + uv * w.coef[i] - 2.0 * pv * p.coef[i] - 2.0 * qv * q.coef[i];
                for &i in support {
                    let dhi = dh(i);
                    g[i] -= dhi * inv;
                    for &j in support {
                        let d2 = u.coef[i] * w.coef[j] + w.coef[i] * u.coef[j]
                            - 2.0 * p.coef[i] * p.coef[j]
                            - 2.0 * q.coef[i] * q.coef[j];
                        h[(i, j)] += dhi * dh(j) * inv * inv - d2 * inv;
                    }
                }
            }
        }
    }

    fn support(&self) -> Vec<usize> {
        let parts: Vec<&Affine> = match self {
            Constraint::Linear(a) => vec![a],
            Constraint::Cone { u, w, p, q } => vec![u, w, p, q],
        };
        let n = parts[0].coef.len();
        (0..n).filter(|&i| parts.iter().any(|a| a.coef[i] != 0.0)).collect()
    }

    fn relaxed(&self) -> Constraint {
        match self {
            Constraint::Linear(a) => Constraint::Linear(a.extend(1.0)),
            Constraint::Cone { u, w, p, q } => Constraint::Cone {
                u: u.extend(1.0),
                w: w.extend(1.0),
                p: p.extend(0.0),
                q: q.extend(0.0),
            },
        }
    }

    /// Smallest `s` making `z` strictly interior for the relaxed constraint.
    fn required_shift(&self, z: &[f64]) -> f64 {
        match self {
            Constraint::Linear(a) => -a.eval(z),
            Constraint::Cone { u, w, p, q } => {
                let r = p.eval(z).hypot(q.eval(z));
                (-u.eval(z)).max(-w.eval(z)).max(0.0) + r
            }
        }
    }
}

const PHASE_ONE_RADIUS: f64 = 1e3;

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub cost: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub gap_tol: f64,
    pub mu: f64,
    pub newton_tol: f64,
    pub max_iterations: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { gap_tol: 1e-9, mu: 20.0, newton_tol: 1e-11, max_iterations: 5000 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

pub(crate) enum Outcome {
    Optimal(Solution),
    /// Index set of constraints that cannot be satisfied together.
    Infeasible(Vec<usize>),
}

struct Workspace {
    supports: Vec<Vec<usize>>,
    nu: f64,
}

impl Problem {
    fn n(&self) -> usize {
        self.cost.len()
    }

    fn workspace(&self) -> Workspace {
        Workspace {
            supports: self.constraints.iter().map(Constraint::support).collect(),
            nu: self.constraints.iter().map(Constraint::degree).sum(),
        }
    }

    fn strictly_feasible(&self, z: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.margin(z).is_some())
    }

    /// Phase I from `z0`, then the barrier path to optimality.
    pub fn solve(&self, z0: &[f64], opts: &Options) -> Result<Outcome> {
        let mut iterations = 0;
        let start = if self.strictly_feasible(z0) {
            z0.to_vec()
        } else {
            match self.phase_one(z0, opts, &mut iterations)? {
                Ok(z) => z,
                Err(active) => return Ok(Outcome::Infeasible(active)),
            }
        };
        let ws = self.workspace();
        let mut sol = path_follow(self, &ws, start, opts, iterations, |_| false)?;
        sol.iterations += iterations;
        Ok(Outcome::Optimal(sol))
    }

    fn phase_one(
        &self,
        z0: &[f64],
        opts: &Options,
        iterations: &mut usize,
    ) -> Result<std::result::Result<Vec<f64>, Vec<usize>>> {
        let n = self.n();
        let s0 = self
            .constraints
            .iter()
            .map(|c| c.required_shift(z0))
            .fold(0.0f64, f64::max)
            + 1.0;
        let mut constraints: Vec<Constraint> = self.constraints.iter().map(Constraint::relaxed).collect();
        // keep the auxiliary problem bounded below
        let mut floor = Affine::var(n + 1, n);
        floor.c0 = 1.0;
        constraints.push(Constraint::Linear(floor));
        // a wide box keeps the centring problems bounded when the feasible set is not
        for (i, &zi) in z0.iter().enumerate() {
            let radius = PHASE_ONE_RADIUS * zi.abs().max(1.0);
            let x = Affine::var(n + 1, i);
            constraints.push(Constraint::Linear(x.clone().add_const(radius - zi)));
            constraints.push(Constraint::Linear(x.scaled(-1.0).add_const(radius + zi)));
        }
        let mut cost = vec![0.0; n + 1];
        cost[n] = 1.0;
        let aux = Problem { cost, constraints };
        let mut start = z0.to_vec();
        start.push(s0);
        let ws = aux.workspace();
        let sol = path_follow(&aux, &ws, start, opts, 0, |z| z[n] < 0.0)?;
        *iterations += sol.iterations;
        let s = sol.z[n];
        trace!("phase I finished at s = {s:e} after {} Newton steps", sol.iterations);
        if s < 0.0 {
            let mut z = sol.z.clone();
            z.truncate(n);
            if self.strictly_feasible(&z) {
                return Ok(Ok(z));
            }
        }
        let margins: Vec<f64> = aux.constraints[..self.constraints.len()]
            .iter()
            .map(|c| c.value(&sol.z))
            .collect();
        let smallest = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        let cutoff = (100.0 * smallest.max(0.0)).max(1e-7);
        let active = (0..margins.len()).filter(|&i| margins[i] <= cutoff).collect();
        Ok(Err(active))
    }
}

fn path_follow(
    prob: &Problem,
    ws: &Workspace,
    mut z: Vec<f64>,
    opts: &Options,
    already: usize,
    stop: impl Fn(&[f64]) -> bool,
) -> Result<Solution> {
    let n = prob.n();
    let scale = prob.cost.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    let cost: Vec<f64> = prob.cost.iter().map(|c| c / scale).collect();
    let mut t = 1.0;
    let mut iterations = 0;
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::<f64>::zeros(n, n);
    loop {
        // centring
        let mut inner = 0;
        loop {
            if already + iterations >= opts.max_iterations {
                return Err(Error::NonConvergence {
                    iterations: already + iterations,
                    gap: ws.nu / t,
                    dual_residual: grad.iter().map(|g| g * g).sum::<f64>().sqrt() / t,
                });
            }
            grad.iter_mut().zip(&cost).for_each(|(g, c)| *g = t * c);
            hess.fill(0.0);
            for (c, support) in prob.constraints.iter().zip(&ws.supports) {
                c.accumulate(&z, support, &mut grad, &mut hess);
            }
            let dz = newton_direction(&hess, &grad)?;
            let slope: f64 = grad.iter().zip(dz.iter()).map(|(g, d)| g * d).sum();
            let decrement = -slope;
            iterations += 1;
            inner += 1;
            if decrement / 2.0 <= opts.newton_tol || !(decrement > 0.0) {
                break;
            }
            match line_search(prob, &cost, t, &z, dz.as_slice(), slope) {
                Some(step) => {
                    for (zi, di) in z.iter_mut().zip(dz.iter()) {
                        *zi += step * di;
                    }
                    if step * dz.amax() <= 1e-15 * (1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                        break;
                    }
                }
                None => break,
            }
            if inner > 200 {
                break;
            }
        }
        let gap = ws.nu / t;
        if stop(&z) || gap <= opts.gap_tol {
            return Ok(Solution { z, iterations, gap: gap * scale });
        }
        t *= opts.mu;
    }
}

fn newton_direction(hess: &DMatrix<f64>, grad: &[f64]) -> Result<DVector<f64>> {
    let rhs = -DVector::from_column_slice(grad);
    if let Some(ch) = hess.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    let n = hess.nrows();
    let trace = (0..n).map(|i| hess[(i, i)].abs()).sum::<f64>().max(1e-300);
    let mut reg = hess.clone();
    for i in 0..n {
        reg[(i, i)] += 1e-13 * trace;
    }
    if let Some(ch) = reg.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    reg.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Newton system".into()))
}

/// Backtracking on `Δφ = t·cᵀ(sΔ) − Σ log(hᵢ(z + sΔ)/hᵢ(z))`, computed as a
/// difference so large `t` does not swamp it.
fn line_search(prob: &Problem, cost: &[f64], t: f64, z: &[f64], dz: &[f64], slope: f64) -> Option<f64> {
    const ALPHA: f64 = 0.01;
    let base: Vec<f64> = prob.constraints.iter().map(|c| c.margin(z).unwrap_or(f64::NAN)).collect();
    let lin: f64 = cost.iter().zip(dz).map(|(c, d)| c * d).sum();
    let mut trial = z.to_vec();
    let mut s = 1.0;
    while s > 1e-20 {
        for ((v, zi), di) in trial.iter_mut().zip(z).zip(dz) {
            *v = zi + s * di;
        }
        let mut delta = t * s * lin;
        let mut inside = true;
        for (c, &b) in prob.constraints.iter().zip(&base) {
            match c.margin(&trial) {
                Some(m) => delta -= (m / b).ln(),
                None => {
                    inside = false;
                    break;
                }
            }
        }
        if inside && delta <= ALPHA * s * slope {
            return Some(s);
        }
        s *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_lp() {
        // min -z0 - 2 z1 s.t. 0 ≤ z ≤ 1
        let n = 2;
        let mut cons = Vec::new();
        for i in 0..n {
            cons.push(Constraint::Linear(Affine::var(n, i)));
            cons.push(Constraint::Linear(Affine::var(n, i).scaled(-1.0).add_const(1.0)));
        }
        let prob = Problem { cost: vec![-1.0, -2.0], constraints: cons };
        let Outcome::Optimal(s) = prob.solve(&[3.0, -2.0], &Options::default()).unwrap() else {
            panic!("expected optimum");
        };
        assert!((s.z[0] - 1.0).abs() < 1e-8 && (s.z[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rotated_cone() {
        // min u s.t. u·1 ≥ p², p = 2  →  u = 4
        let n = 1;
        let cone = Constraint::Cone {
            u: Affine::var(n, 0),
            w: Affine::constant(n, 1.0),
            p: Affine::constant(n, 2.0),
            q: Affine::zero(n),
        };
        let prob = Problem { cost: vec![1.0], constraints: vec![cone] };
        let Outcome::Optimal(s) = prob.solve(&[0.0], &Options::default()).unwrap() else {
            panic!("expected optimum");
        };
        assert!((s.z[0] - 4.0).abs() < 1e-8, "{}", s.z[0]);
    }

    #[test]
    fn infeasible_box() {
        // z ≥ 2 and z ≤ 1
        let n = 1;
        let cons = vec![
            Constraint::Linear(Affine::var(n, 0).add_const(-2.0)),
            Constraint::Linear(Affine::var(n, 0).scaled(-1.0).add_const(1.0)),
        ];
        let prob = Problem { cost: vec![1.0], constraints: cons };
        match prob.solve(&[0.0], &Options::default()).unwrap() {
            Outcome::Infeasible(active) => assert_eq!(active, vec![0, 1]),
            Outcome::Optimal(_) => panic!("expected infeasibility"),
        }
    }
}
