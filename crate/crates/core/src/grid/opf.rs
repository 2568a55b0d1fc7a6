use serde::{Deserialize, Serialize};

use super::ipm::{Affine, Constraint, Options, Outcome, Problem};
use super::model::{BusKind, GridModel};
use super::uncertainty::UncertainSample;
use crate::error::{Error, Result};

/// Residuals of the branch-flow equations at a solution, in per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub balance_p: f64,
    pub balance_q: f64,
    pub voltage_drop: f64,
    /// `max (ℓ·v_from − P² − Q²)` over lines; zero when the relaxation is tight.
    pub relaxation_gap: f64,
}

/// An OPF optimum in physical units. Line vectors follow `grid.lines`, bus
/// vectors follow `grid.buses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OPFSolution {
    /// Sending-end active flow per line, MW.
    pub p_flow: Vec<f64>,
    /// Sending-end reactive flow per line, MVar.
    pub q_flow: Vec<f64>,
    /// Squared current per line, kA².
    pub l: Vec<f64>,
    /// Squared voltage per bus, kV².
    pub v: Vec<f64>,
    /// Active generation per bus, MW (zero for plain load buses).
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub duality_gap: f64,
}

impl OPFSolution {
    pub fn voltage_kv(&self, grid: &GridModel, bus_id: usize) -> Option<f64> {
        grid.bus_index(bus_id).map(|i| self.v[i].sqrt())
    }
}

/// Net loads (MW, MVar) after renewables and the customer perturbation.
pub fn net_loads(grid: &GridModel, sample: &UncertainSample) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p: Vec<f64> = grid.buses.iter().map(|b| b.p).collect();
    let q: Vec<f64> = grid.buses.iter().map(|b| b.q).collect();
    let pl = &grid.placements;
    if sample.wind.len() != pl.wt.len() || sample.solar.len() != pl.pv.len() {
        return Err(Error::Dimension {
            expected: pl.wt.len() + pl.pv.len(),
            got: sample.wind.len() + sample.solar.len(),
        });
    }
    let idx = |id: usize| grid.bus_index(id).ok_or_else(|| Error::Schema(format!("unknown bus {id}")));
    for (&id, &w) in pl.wt.iter().zip(&sample.wind) {
        p[idx(id)?] -= w;
    }
    for (&id, &s) in pl.pv.iter().zip(&sample.solar) {
        p[idx(id)?] -= s;
    }
    if sample.load_perturbation != 0.0 {
        let id = pl
            .customer
            .ok_or_else(|| Error::Config("load perturbation given but the grid has no customer bus".into()))?;
        p[idx(id)?] += sample.load_perturbation;
    }
    Ok((p, q))
}

/// Minimum-cost dispatch under the SOC-relaxed branch-flow model.
pub fn solve_opf(grid: &GridModel, sample: &UncertainSample) -> Result<OPFSolution> {
    let (p, q) = net_loads(grid, sample)?;
    solve_with_loads(grid, &p, &q)
}

/// [`solve_opf`] with explicit per-bus net loads in MW / MVar.
pub fn solve_with_loads(grid: &GridModel, p_load: &[f64], q_load: &[f64]) -> Result<OPFSolution> {
    let f = Formulation::build(grid, p_load, q_load)?;
    let outcome = f.problem.solve(&f.z0, &Options::default())?;
    match outcome {
        Outcome::Optimal(sol) => Ok(f.recover(grid, &sol.z, sol.iterations, sol.gap)),
        Outcome::Infeasible(active) => Err(Error::Infeasible {
            violated: active.into_iter().map(|i| f.names[i].clone()).collect(),
        }),
    }
}

/// Decision vector: `ℓ` per line, then free generator set-points, then a free
/// slack voltage. Everything else is an affine function of it.
struct Formulation {
    problem: Problem,
    names: Vec<String>,
    z0: Vec<f64>,
    p_line: Vec<Affine>,
    q_line: Vec<Affine>,
    v_bus: Vec<Affine>,
    p_gen: Vec<Affine>,
    q_gen: Vec<Affine>,
    /// Per unit loads for the residual check.
    p_load: Vec<f64>,
    q_load: Vec<f64>,
    r: Vec<f64>,
    x: Vec<f64>,
}

impl Formulation {
    fn build(grid: &GridModel, p_load: &[f64], q_load: &[f64]) -> Result<Self> {
        let topo = grid.topology()?;
        let nb = grid.buses.len();
        let nl = grid.lines.len();
        if p_load.len() != nb || q_load.len() != nb {
            return Err(Error::Dimension { expected: nb, got: p_load.len().min(q_load.len()) });
        }
        let s = grid.base_mva;
        let kv2 = grid.base_kv * grid.base_kv;
        let zb = grid.z_base();
        let ib2 = grid.i_base().powi(2);
        let slack = topo.slack;
        let sb = &grid.buses[slack];
        if sb.pmin == sb.pmax || sb.qmin == sb.qmax {
            return Err(Error::Config("slack generation bounds must leave an interior".into()));
        }

        // variable layout
        let mut n = nl;
        let mut pg_var = vec![None; nb];
        let mut qg_var = vec![None; nb];
        for (i, b) in grid.buses.iter().enumerate() {
            if b.kind == BusKind::Dg {
                if b.pmin < b.pmax {
                    pg_var[i] = Some(n);
                    n += 1;
                }
                if b.qmin < b.qmax {
                    qg_var[i] = Some(n);
                    n += 1;
                }
            }
        }
        let v0_var = (sb.vmin < sb.vmax).then(|| {
            n += 1;
            n - 1
        });

        let r: Vec<f64> = grid.lines.iter().map(|l| l.r / zb).collect();
        let x: Vec<f64> = grid.lines.iter().map(|l| l.x / zb).collect();
        let pl: Vec<f64> = p_load.iter().map(|v| v / s).collect();
        let ql: Vec<f64> = q_load.iter().map(|v| v / s).collect();

        let gen_expr = |var: Option<usize>, fixed: f64| match var {
            Some(k) => Affine::var(n, k),
            None => Affine::constant(n, fixed),
        };
        let mut p_gen = vec![Affine::zero(n); nb];
        let mut q_gen = vec![Affine::zero(n); nb];
        for (i, b) in grid.buses.iter().enumerate() {
            if b.kind == BusKind::Dg {
                p_gen[i] = gen_expr(pg_var[i], b.pmin / s);
                q_gen[i] = gen_expr(qg_var[i], b.qmin / s);
            }
        }

        // backward sweep: flow into each child's subtree
        let mut p_line = vec![Affine::zero(n); nl];
        let mut q_line = vec![Affine::zero(n); nl];
        let mut p_sub: Vec<Affine> = (0..nb).map(|i| Affine::constant(n, pl[i])).collect();
        let mut q_sub: Vec<Affine> = (0..nb).map(|i| Affine::constant(n, ql[i])).collect();
        for i in 0..nb {
            if i != slack {
                p_sub[i].axpy(-1.0, &p_gen[i]);
                q_sub[i].axpy(-1.0, &q_gen[i]);
            }
        }
        for &(li, parent, child) in topo.order.iter().rev() {
            let mut pf = p_sub[child].clone();
            pf.coef[li] += r[li];
            let mut qf = q_sub[child].clone();
            qf.coef[li] += x[li];
            p_sub[parent].axpy(1.0, &pf);
            q_sub[parent].axpy(1.0, &qf);
            p_line[li] = pf;
            q_line[li] = qf;
        }
        p_gen[slack] = p_sub[slack].clone();
        q_gen[slack] = q_sub[slack].clone();

        // forward sweep: squared voltages
        let mut v_bus = vec![Affine::zero(n); nb];
        v_bus[slack] = match v0_var {
            Some(k) => Affine::var(n, k),
            None => Affine::constant(n, sb.vmin / kv2),
        };
        for &(li, parent, child) in &topo.order {
            let mut v = v_bus[parent].clone();
            v.axpy(-2.0 * r[li], &p_line[li]);
            v.axpy(-2.0 * x[li], &q_line[li]);
            v.coef[li] += r[li] * r[li] + x[li] * x[li];
            v_bus[child] = v;
        }

        let mut constraints = Vec::new();
        let mut names = Vec::new();
        let line_name = |li: usize| format!("{}-{}", grid.lines[li].from, grid.lines[li].to);
        for &(li, parent, _) in &topo.order {
            constraints.push(Constraint::Cone {
                u: Affine::var(n, li),
                w: v_bus[parent].clone(),
                p: p_line[li].clone(),
                q: q_line[li].clone(),
            });
            names.push(format!("branch flow cone on line {}", line_name(li)));
            if let Some(lmax) = grid.lines[li].lmax {
                constraints.push(Constraint::Linear(Affine::var(n, li).scaled(-1.0).add_const(lmax / ib2)));
                names.push(format!("current limit on line {}", line_name(li)));
            }
        }
        let mut bounds = |expr: &Affine, lo: f64, hi: f64, what: &str, id: usize, names: &mut Vec<String>| {
            constraints.push(Constraint::Linear(expr.clone().add_const(-lo)));
            names.push(format!("{what} lower bound at bus {id}"));
            constraints.push(Constraint::Linear(expr.scaled(-1.0).add_const(hi)));
            names.push(format!("{what} upper bound at bus {id}"));
        };
        for (i, b) in grid.buses.iter().enumerate() {
            if i != slack || v0_var.is_some() {
                bounds(&v_bus[i], b.vmin / kv2, b.vmax / kv2, "voltage", b.id, &mut names);
            }
            if i == slack || pg_var[i].is_some() {
                bounds(&p_gen[i], b.pmin / s, b.pmax / s, "active generation", b.id, &mut names);
            }
            if i == slack || qg_var[i].is_some() {
                bounds(&q_gen[i], b.qmin / s, b.qmax / s, "reactive generation", b.id, &mut names);
            }
        }

        let mut objective = Affine::zero(n);
        for (i, b) in grid.buses.iter().enumerate() {
            if b.is_generator() && b.cost != 0.0 {
                objective.axpy(b.cost * s, &p_gen[i]);
            }
        }

        let mut z0 = vec![0.0; n];
        for (i, b) in grid.buses.iter().enumerate() {
            if let Some(k) = pg_var[i] {
                z0[k] = 0.5 * (b.pmin + b.pmax) / s;
            }
            if let Some(k) = qg_var[i] {
                z0[k] = 0.5 * (b.qmin + b.qmax) / s;
            }
        }
        if let Some(k) = v0_var {
            z0[k] = 0.5 * (sb.vmin + sb.vmax) / kv2;
        }

        Ok(Self {
            problem: Problem { cost: objective.coef.clone(), constraints },
            names,
            z0,
            p_line,
            q_line,
            v_bus,
            p_gen,
            q_gen,
            p_load: pl,
            q_load: ql,
            r,
            x,
        })
    }

    fn recover(&self, grid: &GridModel, z: &[f64], iterations: usize, gap: f64) -> OPFSolution {
        let s = grid.base_mva;
        let kv2 = grid.base_kv * grid.base_kv;
        let ib2 = grid.i_base().powi(2);
        let nl = grid.lines.len();
        let ev = |a: &[Affine]| a.iter().map(|e| e.eval(z)).collect::<Vec<f64>>();
        let (p, q, v, pg, qg) = (ev(&self.p_line), ev(&self.q_line), ev(&self.v_bus), ev(&self.p_gen), ev(&self.q_gen));
        let l = &z[..nl];

        // residuals recomputed from the recovered state, not from the affine map
        let topo = grid.topology().expect("validated during build");
        let mut out_p = vec![0.0; grid.buses.len()];
        let mut out_q = vec![0.0; grid.buses.len()];
        for &(li, parent, _) in &topo.order {
            out_p[parent] += p[li];
            out_q[parent] += q[li];
        }
        let mut res = Residuals { balance_p: 0.0, balance_q: 0.0, voltage_drop: 0.0, relaxation_gap: f64::NEG_INFINITY };
        for &(li, parent, child) in &topo.order {
            let bp = p[li] - self.r[li] * l[li] - (self.p_load[child] - pg[child]) - out_p[child];
            let bq = q[li] - self.x[li] * l[li] - (self.q_load[child] - qg[child]) - out_q[child];
            let dv = v[child] - v[parent] + 2.0 * (self.r[li] * p[li] + self.x[li] * q[li])
                - (self.r[li].powi(2) + self.x[li].powi(2)) * l[li];
            res.balance_p = res.balance_p.max(bp.abs());
            res.balance_q = res.balance_q.max(bq.abs());
            res.voltage_drop = res.voltage_drop.max(dv.abs());
            res.relaxation_gap = res.relaxation_gap.max(l[li] * v[parent] - p[li] * p[li] - q[li] * q[li]);
        }
        let slack = topo.slack;
        res.balance_p = res.balance_p.max((pg[slack] - self.p_load[slack] - out_p[slack]).abs());
        res.balance_q = res.balance_q.max((qg[slack] - self.q_load[slack] - out_q[slack]).abs());
        if nl == 0 {
            res.relaxation_gap = 0.0;
        }

        let objective = grid
            .buses
            .iter()
            .zip(&pg)
            .filter(|(b, _)| b.is_generator())
            .map(|(b, g)| b.cost * g * s)
            .sum::<f64>();

        OPFSolution {
            p_flow: p.iter().map(|v| v * s).collect(),
            q_flow: q.iter().map(|v| v * s).collect(),
            l: l.iter().map(|v| v * ib2).collect(),
            v: v.iter().map(|x| x * kv2).collect(),
            p_gen: pg.iter().map(|v| v * s).collect(),
            q_gen: qg.iter().map(|v| v * s).collect(),
            objective,
            residuals: res,
            iterations,
            duality_gap: gap,
        }
    }
}
