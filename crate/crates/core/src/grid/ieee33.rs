use super::model::{Bus, BusKind, GridModel, Line, Placements};

/// `(from, to, r Ω, x Ω)`.
const LINES: [(usize, usize, f64, f64); 32] = [
    (1, 2, 0.0922, 0.0470),
    (2, 3, 0.4930, 0.2511),
    (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941),
    (5, 6, 0.8190, 0.7070),
    (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351),
    (8, 9, 1.0300, 0.7400),
    (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650),
    (11, 12, 0.3744, 0.1238),
    (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129),
    (14, 15, 0.5910, 0.5260),
    (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210),
    (17, 18, 0.7320, 0.5740),
    (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554),
    (20, 21, 0.4095, 0.4784),
    (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083),
    (23, 24, 0.8980, 0.7091),
    (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034),
    (26, 27, 0.2842, 0.1447),
    (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006),
    (29, 30, 0.5075, 0.2585),
    (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619),
    (32, 33, 0.3410, 0.5302),
];

/// Loads in kW / kVar for buses 2..=33.
const LOADS: [(f64, f64); 32] = [
    (100.0, 60.0),
    (90.0, 40.0),
    (120.0, 80.0),
    (60.0, 30.0),
    (60.0, 20.0),
    (200.0, 100.0),
    (200.0, 100.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (45.0, 30.0),
    (60.0, 35.0),
    (60.0, 35.0),
    (120.0, 80.0),
    (60.0, 10.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 50.0),
    (420.0, 200.0),
    (420.0, 200.0),
    (60.0, 25.0),
    (60.0, 25.0),
    (60.0, 20.0),
    (120.0, 70.0),
    (200.0, 600.0),
    (150.0, 70.0),
    (210.0, 100.0),
    (60.0, 40.0),
];

pub const BASE_KV: f64 = 12.66;
pub const BASE_MVA: f64 = 10.0;
pub const DG_BUSES: [usize; 2] = [6, 12];
pub const PV_BUSES: [usize; 2] = [15, 22];
pub const WT_BUSES: [usize; 2] = [25, 30];
pub const CUSTOMER_BUS: usize = 30;
pub const DG_PMAX_MW: f64 = 8.0;
pub const DG_QMAX_MVAR: f64 = 2.0;
pub const DG_COST: f64 = 30.0;
pub const SLACK_COST: f64 = 50.0;

/// The 33-bus feeder with two DGs, two PV and two wind sites.
pub fn ieee33() -> GridModel {
    let kv2 = BASE_KV * BASE_KV;
    let (vmin, vmax) = (0.95f64.powi(2) * kv2, 1.05f64.powi(2) * kv2);
    let mut buses = vec![Bus {
        id: 1,
        p: 0.0,
        q: 0.0,
        pmin: 0.0,
        pmax: 10.0,
        qmin: -10.0,
        qmax: 10.0,
        vmin: kv2,
        vmax: kv2,
        cost: SLACK_COST,
        kind: BusKind::Slack,
    }];
    for (i, &(p, q)) in LOADS.iter().enumerate() {
        let id = i + 2;
        let dg = DG_BUSES.contains(&id);
        buses.push(Bus {
            id,
            p: p / 1000.0,
            q: q / 1000.0,
            pmin: 0.0,
            pmax: if dg { DG_PMAX_MW } else { 0.0 },
            qmin: 0.0,
            qmax: if dg { DG_QMAX_MVAR } else { 0.0 },
            vmin,
            vmax,
            cost: if dg { DG_COST } else { 0.0 },
            kind: if dg { BusKind::Dg } else { BusKind::Load },
        });
    }
    let lines = LINES
        .iter()
        .map(|&(from, to, r, x)| Line { from, to, r, x, lmax: None })
        .collect();
    GridModel {
        base_kv: BASE_KV,
        base_mva: BASE_MVA,
        slack: 1,
        buses,
        lines,
        placements: Placements {
            wt: WT_BUSES.to_vec(),
            pv: PV_BUSES.to_vec(),
            customer: Some(CUSTOMER_BUS),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let g = ieee33();
        assert_eq!(g.buses.len(), 33);
        assert_eq!(g.lines.len(), 32);
        g.validate().unwrap();
        let total: f64 = g.buses.iter().map(|b| b.p).sum();
        assert!((total - 3.715).abs() < 1e-12);
    }
}
