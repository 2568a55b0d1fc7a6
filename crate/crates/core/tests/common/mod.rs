//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use dpqnn::grid::{Bus, BusKind, GridModel, Line, Placements};

pub fn bus(id: usize, p: f64, q: f64, vmin: f64, vmax: f64) -> Bus {
    Bus { id, p, q, pmin: 0.0, pmax: 0.0, qmin: 0.0, qmax: 0.0, vmin: vmin * vmin, vmax: vmax * vmax, cost: 0.0, kind: BusKind::Load }
}

pub fn generator(mut b: Bus, kind: BusKind, cost: f64, p: (f64, f64), q: (f64, f64)) -> Bus {
    b.kind = kind;
    b.cost = cost;
    (b.pmin, b.pmax) = p;
    (b.qmin, b.qmax) = q;
    b
}

pub fn line(from: usize, to: usize, r: f64, x: f64) -> Line {
    Line { from, to, r, x, lmax: None }
}

/// Unit bases, so Ω, MW and kV² read directly as per unit.
pub fn pu_grid(buses: Vec<Bus>, lines: Vec<Line>) -> GridModel {
    GridModel { base_kv: 1.0, base_mva: 1.0, slack: 1, buses, lines, placements: Placements::default() }
}

fn slack(cost: f64) -> Bus {
    generator(bus(1, 0.0, 0.0, 1.0, 1.0), BusKind::Slack, cost, (0.0, 10.0), (-10.0, 10.0))
}

fn exporting_slack(cost: f64) -> Bus {
    generator(bus(1, 0.0, 0.0, 1.0, 1.0), BusKind::Slack, cost, (-10.0, 10.0), (-10.0, 10.0))
}

/// Slack feeding one 1.0 pu load through r = x = 0.01 pu.
pub fn two_bus() -> GridModel {
    pu_grid(vec![slack(1.0), bus(2, 1.0, 0.3, 0.8, 1.2)], vec![line(1, 2, 0.01, 0.01)])
}

/// Chain with a cheap DG at the far end.
pub fn three_bus() -> GridModel {
    pu_grid(
        vec![
            slack(50.0),
            bus(2, 0.6, 0.2, 0.95, 1.05),
            generator(bus(3, 0.8, 0.3, 0.95, 1.05), BusKind::Dg, 30.0, (0.0, 0.5), (0.0, 0.2)),
        ],
        vec![line(1, 2, 0.02, 0.04), line(2, 3, 0.02, 0.04)],
    )
}

/// Star whose very cheap DG is held back by the upper voltage bound.
pub fn four_bus() -> GridModel {
    pu_grid(
        vec![
            exporting_slack(50.0),
            bus(2, 0.5, 0.2, 0.95, 1.05),
            bus(3, 0.4, 0.1, 0.95, 1.05),
            generator(bus(4, 0.1, 0.05, 0.95, 1.05), BusKind::Dg, 10.0, (0.0, 1.5), (0.0, 0.1)),
        ],
        vec![line(1, 2, 0.03, 0.03), line(1, 3, 0.03, 0.03), line(1, 4, 0.05, 0.05)],
    )
}

/// Feeder whose expensive DG is needed only to lift a low voltage.
pub fn five_bus() -> GridModel {
    pu_grid(
        vec![
            slack(40.0),
            bus(2, 0.3, 0.1, 0.95, 1.05),
            bus(3, 0.2, 0.1, 0.95, 1.05),
            bus(4, 0.2, 0.1, 0.95, 1.05),
            generator(bus(5, 0.9, 0.3, 0.95, 1.05), BusKind::Dg, 45.0, (0.0, 1.0), (0.0, 0.05)),
        ],
        vec![line(1, 2, 0.01, 0.02), line(2, 3, 0.03, 0.03), line(2, 4, 0.03, 0.04), line(4, 5, 0.04, 0.05)],
    )
}

#[derive(Debug, Clone)]
pub struct Flow {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    /// Squared voltage per bus, indexed like `grid.buses`.
    pub v: Vec<f64>,
    pub slack_p: f64,
    pub slack_q: f64,
}

/// Fixed-point backward/forward sweep for a radial grid in per unit.
///
/// Injections `pg`, `qg` per bus (slack excluded) in the grid's power unit;
/// lines must be listed parent-first with `from` nearer the slack. `None` if
/// the iteration diverges (no power-flow solution).
pub fn sweep(grid: &GridModel, p_load: &[f64], q_load: &[f64], pg: &[f64], qg: &[f64], v0: f64) -> Option<Flow> {
    let s = grid.base_mva;
    let zb = grid.base_kv * grid.base_kv / s;
    let idx = |id: usize| grid.buses.iter().position(|b| b.id == id).unwrap();
    let nl = grid.lines.len();
    let nb = grid.buses.len();
    let mut l = vec![0.0; nl];
    let mut v = vec![v0; nb];
    let mut p = vec![0.0; nl];
    let mut q = vec![0.0; nl];
    for _ in 0..10_000 {
        let mut sub_p: Vec<f64> = (0..nb).map(|i| (p_load[i] - pg[i]) / s).collect();
        let mut sub_q: Vec<f64> = (0..nb).map(|i| (q_load[i] - qg[i]) / s).collect();
        for (k, ln) in grid.lines.iter().enumerate().rev() {
            let (f, t) = (idx(ln.from), idx(ln.to));
            p[k] = sub_p[t] + ln.r / zb * l[k];
            q[k] = sub_q[t] + ln.x / zb * l[k];
            sub_p[f] += p[k];
            sub_q[f] += q[k];
        }
        let mut change: f64 = 0.0;
        for (k, ln) in grid.lines.iter().enumerate() {
            let (f, t) = (idx(ln.from), idx(ln.to));
            let (r, x) = (ln.r / zb, ln.x / zb);
            v[t] = v[f] - 2.0 * (r * p[k] + x * q[k]) + (r * r + x * x) * l[k];
            let next = (p[k] * p[k] + q[k] * q[k]) / v[f];
            change = change.max((next - l[k]).abs());
            l[k] = next;
        }
        if change < 1e-15 {
            let slack = idx(grid.slack);
            return Some(Flow { p, q, l, v, slack_p: sub_p[slack], slack_q: sub_q[slack] });
        }
        if !change.is_finite() || v.iter().any(|x| *x <= 0.0) {
            return None;
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct Dispatch {
    pub cost: f64,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub flow: Flow,
}

/// Cost of a dispatch plus its total bound violation (pu).
fn assess(grid: &GridModel, p_load: &[f64], q_load: &[f64], pg: &[f64], qg: &[f64]) -> Option<(Dispatch, f64)> {
    let s = grid.base_mva;
    let kv2 = grid.base_kv * grid.base_kv;
    let slack = grid.buses.iter().position(|b| b.id == grid.slack).unwrap();
    let sb = &grid.buses[slack];
    let flow = sweep(grid, p_load, q_load, pg, qg, sb.vmin / kv2)?;
    let (ps, qs) = (flow.slack_p * s, flow.slack_q * s);
    let outside = |x: f64, lo: f64, hi: f64| (lo - x).max(0.0) + (x - hi).max(0.0);
    let mut violation = (outside(ps, sb.pmin, sb.pmax) + outside(qs, sb.qmin, sb.qmax)) / s;
    for (i, b) in grid.buses.iter().enumerate() {
        if i != slack {
            violation += outside(flow.v[i], b.vmin / kv2, b.vmax / kv2);
        }
    }
    let mut cost = sb.cost * ps;
    for (i, b) in grid.buses.iter().enumerate() {
        if b.kind == BusKind::Dg {
            cost += b.cost * pg[i];
        }
    }
    Some((Dispatch { cost, pg: pg.to_vec(), qg: qg.to_vec(), flow }, violation))
}

fn evaluate(grid: &GridModel, p_load: &[f64], q_load: &[f64], pg: &[f64], qg: &[f64]) -> Option<Dispatch> {
    assess(grid, p_load, q_load, pg, qg).and_then(|(d, v)| (v == 0.0).then_some(d))
}

/// Exact L1 penalty, large against any marginal cost in the fixtures.
const PENALTY: f64 = 1e6;

/// Exhaustive search over one DG's `(P, Q)` on a grid of step `step` (MW),
/// then repeated ten-fold refinement around the incumbent.
pub fn enumerate_dispatch(grid: &GridModel, step: f64, refinements: usize) -> Dispatch {
    let p_load: Vec<f64> = grid.buses.iter().map(|b| b.p).collect();
    let q_load: Vec<f64> = grid.buses.iter().map(|b| b.q).collect();
    let nb = grid.buses.len();
    let dgs: Vec<usize> = (0..nb).filter(|&i| grid.buses[i].kind == BusKind::Dg).collect();
    assert!(dgs.len() <= 1, "enumeration handles at most one DG");
    let Some(&g) = dgs.first() else {
        return evaluate(grid, &p_load, &q_load, &vec![0.0; nb], &vec![0.0; nb]).expect("infeasible fixture");
    };
    let b = &grid.buses[g];
    let (mut plo, mut phi, mut qlo, mut qhi, mut h) = (b.pmin, b.pmax, b.qmin, b.qmax, step);
    let mut best: Option<Dispatch> = None;
    for _ in 0..=refinements {
        let np = ((phi - plo) / h).round() as usize;
        let nq = ((qhi - qlo) / h).round() as usize;
        for i in 0..=np {
            for j in 0..=nq {
                let mut pg = vec![0.0; nb];
                let mut qg = vec![0.0; nb];
                pg[g] = (plo + i as f64 * h).min(b.pmax);
                qg[g] = (qlo + j as f64 * h).min(b.qmax);
                if let Some(d) = evaluate(grid, &p_load, &q_load, &pg, &qg) {
                    if best.as_ref().is_none_or(|x| d.cost < x.cost) {
                        best = Some(d);
                    }
                }
            }
        }
        let inc = best.as_ref().expect("no feasible dispatch on the grid");
        plo = (inc.pg[g] - 2.0 * h).max(b.pmin);
        phi = (inc.pg[g] + 2.0 * h).min(b.pmax);
        qlo = (inc.qg[g] - 2.0 * h).max(b.qmin);
        qhi = (inc.qg[g] + 2.0 * h).min(b.qmax);
        h /= 10.0;
    }
    best.unwrap()
}

/// Compass search for grids too large to enumerate.
///
/// The DG at bus `balancing` follows the slack's active output, which becomes
/// a search coordinate; it is found by bisection on a monotone power flow.
/// That turns the slack's power limits into plain box bounds. Remaining
/// constraints enter through an exact L1 penalty.
pub fn compass_dispatch(grid: &GridModel, balancing: usize, start_step: f64, min_step: f64) -> Dispatch {
    let p_load: Vec<f64> = grid.buses.iter().map(|b| b.p).collect();
    let q_load: Vec<f64> = grid.buses.iter().map(|b| b.q).collect();
    let nb = grid.buses.len();
    let slack = grid.buses.iter().position(|b| b.id == grid.slack).unwrap();
    let bal = grid.buses.iter().position(|b| b.id == balancing).unwrap();
    let dgs: Vec<usize> = (0..nb).filter(|&i| grid.buses[i].kind == BusKind::Dg).collect();
    // coordinates: slack P, other DG P's, every DG's Q
    let mut bounds = vec![(grid.buses[slack].pmin, grid.buses[slack].pmax)];
    bounds.extend(dgs.iter().filter(|&&g| g != bal).map(|&g| (grid.buses[g].pmin, grid.buses[g].pmax)));
    bounds.extend(dgs.iter().map(|&g| (grid.buses[g].qmin, grid.buses[g].qmax)));

    let unpack = |y: &[f64]| {
        let mut pg = vec![0.0; nb];
        let mut qg = vec![0.0; nb];
        let mut k = 1;
        for &g in dgs.iter().filter(|&&g| g != bal) {
            pg[g] = y[k];
            k += 1;
        }
        for &g in &dgs {
            qg[g] = y[k];
            k += 1;
        }
        (pg, qg)
    };
    let score = |y: &[f64]| -> Option<(f64, Dispatch, f64)> {
        let (mut pg, qg) = unpack(y);
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..80 {
            pg[bal] = 0.5 * (lo + hi);
            let kv2 = grid.base_kv * grid.base_kv;
            let f = sweep(grid, &p_load, &q_load, &pg, &qg, grid.buses[slack].vmin / kv2);
            match f {
                Some(f) if f.slack_p * grid.base_mva > y[0] => lo = pg[bal],
                _ => hi = pg[bal],
            }
        }
        pg[bal] = 0.5 * (lo + hi);
        let (d, mut v) = assess(grid, &p_load, &q_load, &pg, &qg)?;
        let b = &grid.buses[bal];
        v += ((b.pmin - pg[bal]).max(0.0) + (pg[bal] - b.pmax).max(0.0)) / grid.base_mva;
        Some((d.cost + PENALTY * v, d, v))
    };
    let mut y: Vec<f64> = bounds.iter().map(|(lo, _)| *lo).collect();
    let mut best = score(&y).expect("power flow diverged at the start point");
    let mut h = start_step;
    while h >= min_step {
        let mut improved = false;
        for k in 0..y.len() {
            for sign in [1.0, -1.0] {
                let mut t = y.clone();
                t[k] = (t[k] + sign * h).clamp(bounds[k].0, bounds[k].1);
                if let Some(c) = score(&t) {
                    if c.0 < best.0 - 1e-15 {
                        best = c;
                        y = t;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    assert!(best.2 < 1e-9, "compass search ended infeasible ({})", best.2);
    best.1
}
