//! Single water reservoir with periodic stochastic inflow.
//!
//! State is `(day, storage)` with day in `1..=365`. Storage follows the mass
//! balance `s' = s + i - a`, where the release `a` is bounded by the water
//! above the minimum storage and the result is clamped to the capacity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{check_action, check_state, gaussian_noise, Environment, Step};
use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::policy::Policy;
use crate::rng::StreamRng;
use crate::task::TaskSpec;

pub const DAYS_PER_YEAR: f64 = 365.0;

/// Mean inflow `c0 + c1 sin(2 pi (t + phase) / 365)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InflowProfile {
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl InflowProfile {
    pub fn at(&self, day: f64) -> f64 {
        self.mean + self.amplitude * libm::sin(2.0 * PI * (day + self.phase) / DAYS_PER_YEAR)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaterReservoirConfig {
    pub alpha: f64,
    pub beta: f64,
    pub inflow: InflowProfile,
    #[cfg_attr(feature = "serde", serde(default = "default_capacity"))]
    pub capacity: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_min_storage"))]
    pub min_storage: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_flood"))]
    pub flood_threshold: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_demand"))]
    pub demand: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_noise"))]
    pub inflow_noise_var: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_releases"))]
    pub releases: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default = "default_initial"))]
    pub initial_storage: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_gamma"))]
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_horizon"))]
    pub horizon: usize,
}

fn default_capacity() -> f64 {
    500.0
}
fn default_min_storage() -> f64 {
    50.0
}
fn default_flood() -> f64 {
    300.0
}
fn default_demand() -> f64 {
    10.0
}
fn default_noise() -> f64 {
    2.0
}
fn default_releases() -> Vec<f64> {
    (0..8).map(|i| 5.0 * i as f64).collect()
}
fn default_initial() -> f64 {
    200.0
}
fn default_gamma() -> f64 {
    0.99
}
fn default_horizon() -> usize {
    365
}

impl WaterReservoirConfig {
    pub fn new(alpha: f64, beta: f64, inflow: InflowProfile) -> Self {
        Self {
            alpha,
            beta,
            inflow,
            capacity: default_capacity(),
            min_storage: default_min_storage(),
            flood_threshold: default_flood(),
            demand: default_demand(),
            inflow_noise_var: default_noise(),
            releases: default_releases(),
            initial_storage: default_initial(),
            gamma: default_gamma(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaterReservoir {
    config: WaterReservoirConfig,
    spec: TaskSpec,
}

impl WaterReservoir {
    pub fn new(config: WaterReservoirConfig) -> Result<Self> {
        if !(config.alpha >= 0.0 && config.beta >= 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be nonnegative"));
        }
        if !(config.min_storage < config.capacity && config.inflow_noise_var > 0.0) {
            return Err(Error::InvalidParameter("reservoir bounds or noise invalid"));
        }
        if config.releases.is_empty() || config.releases.iter().any(|&r| r < 0.0) {
            return Err(Error::InvalidParameter("release actions must be nonnegative"));
        }
        let flood = config.alpha * (config.capacity - config.flood_threshold).max(0.0);
        let deficit = config.beta * config.demand * config.demand;
        let r_max = (flood + deficit).max(1e-9);
        let spec = TaskSpec::new(2, config.releases.len(), config.gamma, config.horizon, r_max)?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &WaterReservoirConfig {
        &self.config
    }

    /// Release actually achieved given storage, inflow and requested volume.
    pub fn actual_release(&self, storage: f64, inflow: f64, action: usize) -> f64 {
        let available = (storage + inflow - self.config.min_storage).max(0.0);
        self.config.releases[action].min(available)
    }

    /// Storage after one day.
    pub fn next_storage(&self, storage: f64, inflow: f64, action: usize) -> f64 {
        let release = self.actual_release(storage, inflow, action);
        (storage + inflow - release).clamp(self.config.min_storage, self.config.capacity)
    }

    pub fn reward(&self, storage: f64, release: f64) -> f64 {
        let c = &self.config;
        let flood = (storage - c.flood_threshold).max(0.0);
        let deficit = (c.demand - release).max(0.0);
        -c.alpha * flood - c.beta * deficit * deficit
    }

    fn next_day(day: f64) -> f64 {
        if day >= DAYS_PER_YEAR {
            1.0
        } else {
            day + 1.0
        }
    }
}

impl Environment for WaterReservoir {
    fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    /// January 1st with the configured initial storage.
    fn reset(&self, _rng: &mut StreamRng) -> Vec<f64> {
        vec![1.0, self.config.initial_storage]
    }

    fn reset_exploring(&self, rng: &mut StreamRng) -> Vec<f64> {
        let day = rng.random_range(1..=365) as f64;
        vec![day, rng.random_range(self.config.min_storage..=self.config.capacity)]
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut StreamRng) -> Result<Step> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        let (day, storage) = (state[0], state[1]);
        let inflow = self.config.inflow.at(day) + gaussian_noise(rng, self.config.inflow_noise_var);
        let release = self.actual_release(storage, inflow, action);
        let next = (storage + inflow - release).clamp(self.config.min_storage, self.config.capacity);
        Ok(Step { next_state: vec![Self::next_day(day), next], reward: self.reward(storage, release), done: false })
    }

    fn evaluation_starts(&self, _count: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0, self.config.initial_storage]]
    }

    /// Day is deterministic; storage is Gaussian around the unconstrained
    /// mass balance (release limits and clamping are ignored).
    fn transition_distribution(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        let (day, storage) = (state[0], state[1]);
        let mean = storage + self.config.inflow.at(day) - self.config.releases[action];
        Ok(vec![Gaussian::point(Self::next_day(day)), Gaussian::new(mean, self.config.inflow_noise_var)])
    }
}

/// Hand-coded operator: release the demand plus whatever sits above the
/// flooding threshold, rounded to the nearest available action.
#[derive(Debug, Clone)]
pub struct ReservoirExpert {
    releases: Vec<f64>,
    demand: f64,
    flood_threshold: f64,
}

impl ReservoirExpert {
    pub fn new(config: &WaterReservoirConfig) -> Self {
        Self { releases: config.releases.clone(), demand: config.demand, flood_threshold: config.flood_threshold }
    }

    pub fn action_for(&self, storage: f64) -> usize {
        let wanted = self.demand + (storage - self.flood_threshold).max(0.0);
        let mut best = 0;
        for (i, r) in self.releases.iter().enumerate() {
            if libm::fabs(r - wanted) < libm::fabs(self.releases[best] - wanted) {
                best = i;
            }
        }
        best
    }
}

impl Policy for ReservoirExpert {
    fn act(&self, state: &[f64], _rng: &mut StreamRng) -> usize {
        self.action_for(state[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn target() -> WaterReservoir {
        WaterReservoir::new(WaterReservoirConfig::new(0.3, 0.7, InflowProfile { mean: 10.0, amplitude: 6.0, phase: 0.0 }))
            .unwrap()
    }

    #[test]
    fn evaluation_reset() {
        assert_eq!(target().reset(&mut rng_from_seed(0)), vec![1.0, 200.0]);
    }

    #[test]
    fn flooding_penalty() {
        assert!((target().reward(350.0, 10.0) + 15.0).abs() < 1e-12);
        assert!((target().reward(350.0, 20.0) + 15.0).abs() < 1e-12);
    }

    #[test]
    fn deficit_penalty() {
        assert!((target().reward(200.0, 5.0) + 0.7 * 25.0).abs() < 1e-12);
    }

    #[test]
    fn mass_balance() {
        let env = target();
        let a15 = env.config().releases.iter().position(|&r| r == 15.0).unwrap();
        assert_eq!(env.next_storage(200.0, 10.0, a15), 195.0);
    }

    #[test]
    fn release_bounded_by_available_water() {
        let env = target();
        assert_eq!(env.actual_release(52.0, 1.0, 7), 3.0);
        assert_eq!(env.next_storage(52.0, 1.0, 7), 50.0);
    }

    #[test]
    fn storage_stays_in_bounds() {
        let env = target();
        let mut rng = rng_from_seed(4);
        let mut s = env.reset(&mut rng);
        for t in 0..2000 {
            let step = env.step(&s, (t * 3) % 8, &mut rng).unwrap();
            assert!((50.0..=500.0).contains(&step.next_state[1]));
            assert!((1.0..=365.0).contains(&step.next_state[0]));
            s = step.next_state;
        }
    }

    #[test]
    fn expert_releases_demand_below_threshold() {
        let expert = ReservoirExpert::new(target().config());
        assert_eq!(expert.action_for(200.0), 2);
        assert_eq!(expert.action_for(300.0), 2);
        // 10 + 13 = 23 -> nearest release is 25
        assert_eq!(expert.action_for(313.0), 5);
    }

    #[test]
    fn day_wraps() {
        let env = target();
        let step = env.step(&[365.0, 200.0], 2, &mut rng_from_seed(1)).unwrap();
        assert_eq!(step.next_state[0], 1.0);
    }

    #[test]
    fn storage_density_peak() {
        let env = target();
        let d = env.transition_distribution(&[10.0, 200.0], 2).unwrap();
        let lp = env.log_transition_density(&[10.0, 200.0], 2, &[11.0, d[1].mean]).unwrap();
        assert!((lp - crate::gaussian::log_normal_pdf(0.0, 0.0, 2.0)).abs() < 1e-12);
        assert!(env.reward_density(&[10.0, 200.0], 2, -1.0).is_err());
    }
}
