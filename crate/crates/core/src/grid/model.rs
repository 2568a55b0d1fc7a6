use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    #[default]
    Load,
    Slack,
    /// Controllable, cost-bearing generator.
    Dg,
}

/// A bus. Loads and generator limits in MW / MVar, voltage bounds in kV².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub pmin: f64,
    #[serde(default)]
    pub pmax: f64,
    #[serde(default)]
    pub qmin: f64,
    #[serde(default)]
    pub qmax: f64,
    pub vmin: f64,
    pub vmax: f64,
    #[serde(default)]
    pub cost: f64,
    #[serde(default)]
    pub kind: BusKind,
}

impl Bus {
    pub fn is_generator(&self) -> bool {
        self.kind != BusKind::Load
    }
}

/// A line. Impedance in Ω, optional squared-current limit in kA².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Placements {
    #[serde(default)]
    pub wt: Vec<usize>,
    #[serde(default)]
    pub pv: Vec<usize>,
    #[serde(default)]
    pub customer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    pub base_kv: f64,
    pub base_mva: f64,
    pub slack: usize,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    #[serde(default)]
    pub placements: Placements,
}

/// Lines oriented away from the slack, in breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// `(line index, parent bus index, child bus index)`, parents before children.
    pub order: Vec<(usize, usize, usize)>,
    /// Line feeding each bus; `None` for the slack.
    pub parent_line: Vec<Option<usize>>,
    pub slack: usize,
}

impl GridModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let grid: GridModel = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_mut(&mut self, id: usize) -> Option<&mut Bus> {
        self.buses.iter_mut().find(|b| b.id == id)
    }

    /// Ohms per unit impedance.
    pub fn z_base(&self) -> f64 {
        self.base_kv * self.base_kv / self.base_mva
    }

    /// Current base in kA.
    pub fn i_base(&self) -> f64 {
        self.base_mva / self.base_kv
    }

    pub fn validate(&self) -> Result<()> {
        self.topology().map(|_| ())
    }

    /// Check schema-level consistency and radiality, returning the oriented tree.
    pub fn topology(&self) -> Result<Topology> {
        let schema = |msg: String| Err(Error::Schema(msg));
        if !(self.base_kv > 0.0 && self.base_mva > 0.0) {
            return schema("base_kv and base_mva must be positive".into());
        }
        let mut index = HashMap::new();
        for (i, b) in self.buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return schema(format!("duplicate bus id {}", b.id));
            }
            let values = [b.p, b.q, b.pmin, b.pmax, b.qmin, b.qmax, b.vmin, b.vmax, b.cost];
            if values.iter().any(|v| !v.is_finite()) {
                return schema(format!("bus {} has a non-finite field", b.id));
            }
            if b.pmin > b.pmax || b.qmin > b.qmax || b.vmin > b.vmax {
                return schema(format!("bus {} has a lower bound above its upper bound", b.id));
            }
            if b.vmin <= 0.0 {
                return schema(format!("bus {} needs a positive lower voltage bound", b.id));
            }
            if b.kind == BusKind::Slack && b.id != self.slack {
                return schema(format!("bus {} is marked slack but the slack is {}", b.id, self.slack));
            }
        }
        let Some(&slack) = index.get(&self.slack) else {
            return schema(format!("slack bus {} is missing", self.slack));
        };
        for id in self.placements.wt.iter().chain(&self.placements.pv).chain(&self.placements.customer) {
            if !index.contains_key(id) {
                return schema(format!("placement refers to unknown bus {id}"));
            }
        }

        let n = self.buses.len();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut a: usize) -> usize {
            while uf[a] != a {
                uf[a] = uf[uf[a]];
                a = uf[a];
            }
            a
        }
        let mut adjacency = vec![Vec::new(); n];
        for (li, line) in self.lines.iter().enumerate() {
            let (Some(&a), Some(&b)) = (index.get(&line.from), index.get(&line.to)) else {
                return schema(format!("line {}-{} refers to an unknown bus", line.from, line.to));
            };
            if a == b {
                return Err(Error::Topology(format!("line {li} is a self loop at bus {}", line.from)));
            }
            if !(line.r >= 0.0 && line.x >= 0.0 && line.r.is_finite() && line.x.is_finite()) {
                return schema(format!("line {}-{} needs finite non-negative r and x", line.from, line.to));
            }
            if matches!(line.lmax, Some(l) if !(l > 0.0)) {
                return schema(format!("line {}-{} needs a positive current limit", line.from, line.to));
            }
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra == rb {
                return Err(Error::Topology(format!(
                    "line {}-{} closes a loop; the network must be radial",
                    line.from, line.to
                )));
            }
            uf[ra] = rb;
            adjacency[a].push((li, b));
            adjacency[b].push((li, a));
        }

        let mut parent_line = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n.saturating_sub(1));
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(u) = queue.pop_front() {
            for &(li, w) in &adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent_line[w] = Some(li);
                    order.push((li, u, w));
                    queue.push_back(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!(
                "bus {} is not connected to the slack",
                self.buses[i].id
            )));
        }
        Ok(Topology { order, parent_line, slack })
    }
}

/// Load a grid from a JSON file, or the built-in `"ieee33"`.
pub fn load_grid(source: &str) -> Result<GridModel> {
    match source {
        "ieee33" => Ok(super::ieee33()),
        path => GridModel::from_file(Path::new(path)),
    }
}
