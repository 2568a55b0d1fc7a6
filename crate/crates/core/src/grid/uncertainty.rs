use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};

use super::ieee33;
use super::model::GridModel;
use crate::error::{Error, Result};

/// One realisation of the uncertain inputs, MW.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertainSample {
    pub wind: Vec<f64>,
    pub solar: Vec<f64>,
    /// Additive change to the customer bus's nominal active load.
    pub load_perturbation: f64,
}

impl UncertainSample {
    /// The nominal operating point: no renewables, no perturbation.
    pub fn nominal(grid: &GridModel) -> Self {
        Self {
            wind: vec![0.0; grid.placements.wt.len()],
            solar: vec![0.0; grid.placements.pv.len()],
            load_perturbation: 0.0,
        }
    }

    /// Model features `(wind…, solar…, customer load)` in MW.
    pub fn features(&self, customer_nominal: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.wind.len() + self.solar.len() + 1);
        x.extend_from_slice(&self.wind);
        x.extend_from_slice(&self.solar);
        x.push(customer_nominal + self.load_perturbation);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullSpec {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub std: f64,
}

/// Distributions of the uncertain inputs.
///
/// Wind output is `min(W, wind_capacity)` with `W ~ Weibull`, solar output is
/// `B·solar_capacity` with `B ~ Beta`, and the customer's load becomes
/// `max(nominal + N, 0)` with `N ~ Normal`. All values in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub wind: WeibullSpec,
    pub wind_capacity: f64,
    pub wind_sites: usize,
    pub solar: BetaSpec,
    pub solar_capacity: f64,
    pub solar_sites: usize,
    pub load: NormalSpec,
    pub customer_bus: usize,
    pub customer_nominal: f64,
}

pub const WIND_CAPACITY_MW: f64 = 1.25;
pub const SOLAR_CAPACITY_MW: f64 = 0.5;

impl Default for DistributionSpec {
    fn default() -> Self {
        Self {
            wind: WeibullSpec { shape: 1.0, scale: 4.8 },
            wind_capacity: WIND_CAPACITY_MW,
            wind_sites: 2,
            solar: BetaSpec { a: 2.0, b: 5.0 },
            solar_capacity: SOLAR_CAPACITY_MW,
            solar_sites: 2,
            load: NormalSpec { mean: 0.0, std: 0.3 },
            customer_bus: ieee33::CUSTOMER_BUS,
            customer_nominal: 0.2,
        }
    }
}

impl DistributionSpec {
    /// Default distributions with site counts and customer taken from `grid`.
    pub fn for_grid(grid: &GridModel) -> Result<Self> {
        let customer = grid
            .placements
            .customer
            .ok_or_else(|| Error::Config("grid has no customer bus placement".into()))?;
        let bus = grid.bus(customer).ok_or_else(|| Error::Schema(format!("unknown customer bus {customer}")))?;
        Ok(Self {
            wind_sites: grid.placements.wt.len(),
            solar_sites: grid.placements.pv.len(),
            customer_bus: customer,
            customer_nominal: bus.p,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.wind.shape > 0.0
            && self.wind.scale > 0.0
            && self.solar.a > 0.0
            && self.solar.b > 0.0
            && self.load.std >= 0.0
            && self.load.mean.is_finite()
            && self.wind_capacity >= 0.0
            && self.solar_capacity >= 0.0
            && self.customer_nominal >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn n_features(&self) -> usize {
        self.wind_sites + self.solar_sites + 1
    }
}

/// Independent draws in a fixed order: each wind site, each solar site, load.
pub fn sample_uncertainty<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<UncertainSample> {
    spec.validate()?;
    let bad = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
    let weibull = Weibull::new(spec.wind.scale, spec.wind.shape).map_err(|e| bad(&e))?;
    let beta = Beta::new(spec.solar.a, spec.solar.b).map_err(|e| bad(&e))?;
    let normal = Normal::new(spec.load.mean, spec.load.std).map_err(|e| bad(&e))?;
    let wind = (0..spec.wind_sites)
        .map(|_| weibull.sample(rng).clamp(0.0, spec.wind_capacity))
        .collect();
    let solar = (0..spec.solar_sites)
        .map(|_| (beta.sample(rng) * spec.solar_capacity).clamp(0.0, spec.solar_capacity))
        .collect();
    let load_perturbation = normal.sample(rng).max(-spec.customer_nominal);
    Ok(UncertainSample { wind, solar, load_perturbation })
}

/// Customer load multiplier at timestep `t`:
/// `max{sin(0.05t), 0.7} + 0.05·sin(0.05t) + 0.025·sin(0.75t)`.
pub fn load_pattern(t: f64) -> f64 {
    let slow = (0.05 * t).sin();
    slow.max(0.7) + 0.05 * slow + 0.025 * (0.75 * t).sin()
}
