//! Continuous puddle world on `[0, 10]^2` with Gaussian-shaped puddles.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{check_action, check_state, gaussian_noise, Environment, Step};
use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::rng::StreamRng;
use crate::task::TaskSpec;

pub const LOW: f64 = 0.0;
pub const HIGH: f64 = 10.0;

/// Unit moves for actions up, down, left, right.
const MOVES: [[f64; 2]; 4] = [[0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]];

/// Bivariate Gaussian puddle weight `W_u`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Puddle {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Puddle {
    fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Bivariate normal density at `s`.
    pub fn weight(&self, s: &[f64]) -> f64 {
        let det = self.det();
        let dx = s[0] - self.mean[0];
        let dy = s[1] - self.mean[1];
        // inverse of a 2x2 symmetric matrix
        let q = (self.cov[1][1] * dx * dx - 2.0 * self.cov[0][1] * dx * dy + self.cov[0][0] * dy * dy) / det;
        libm::exp(-0.5 * q) / (2.0 * PI * libm::sqrt(det))
    }

    pub fn peak(&self) -> f64 {
        1.0 / (2.0 * PI * libm::sqrt(self.det()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, s: &[f64]) -> bool {
        s[0] >= self.min[0] && s[0] <= self.max[0] && s[1] >= self.min[1] && s[1] <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DynamicsMode {
    /// Every move has length 1 in all tasks.
    Shared,
    /// Puddles slow the agent down.
    PuddleBased,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PuddleWorldConfig {
    pub puddles: Vec<Puddle>,
    #[cfg_attr(feature = "serde", serde(default = "default_goal"))]
    pub goal: Rect,
    pub dynamics: DynamicsMode,
    #[cfg_attr(feature = "serde", serde(default = "default_start"))]
    pub start: [f64; 2],
    #[cfg_attr(feature = "serde", serde(default = "default_reward_noise"))]
    pub reward_noise_var: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_transition_noise"))]
    pub transition_noise_var: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_gamma"))]
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_horizon"))]
    pub horizon: usize,
}

fn default_goal() -> Rect {
    Rect { min: [9.0, 9.0], max: [10.0, 10.0] }
}
fn default_start() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_reward_noise() -> f64 {
    0.01
}
fn default_transition_noise() -> f64 {
    0.04
}
fn default_gamma() -> f64 {
    0.99
}
fn default_horizon() -> usize {
    50
}

impl PuddleWorldConfig {
    pub fn new(puddles: Vec<Puddle>, dynamics: DynamicsMode) -> Self {
        Self {
            puddles,
            goal: default_goal(),
            dynamics,
            start: default_start(),
            reward_noise_var: default_reward_noise(),
            transition_noise_var: default_transition_noise(),
            gamma: default_gamma(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PuddleWorld {
    config: PuddleWorldConfig,
    spec: TaskSpec,
}

impl PuddleWorld {
    pub fn new(config: PuddleWorldConfig) -> Result<Self> {
        for p in &config.puddles {
            let c = &p.cov;
            if !(c[0][0] > 0.0 && c[0][1] == c[1][0] && p.det() > 0.0) {
                return Err(Error::InvalidParameter("puddle covariance must be symmetric positive-definite"));
            }
        }
        if !(config.reward_noise_var > 0.0 && config.transition_noise_var > 0.0) {
            return Err(Error::InvalidParameter("noise variances must be positive"));
        }
        let r_max = 1.0 + 100.0 * config.puddles.iter().map(Puddle::peak).sum::<f64>();
        let spec = TaskSpec::new(2, 4, config.gamma, config.horizon, r_max)?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &PuddleWorldConfig {
        &self.config
    }

    /// `sum_u W_u(s)`.
    pub fn puddle_weight(&self, s: &[f64]) -> f64 {
        self.config.puddles.iter().map(|p| p.weight(s)).sum()
    }

    pub fn in_goal(&self, s: &[f64]) -> bool {
        self.config.goal.contains(s)
    }

    /// Expected reward outside the goal.
    pub fn mean_reward(&self, s: &[f64]) -> f64 {
        if self.in_goal(s) {
            0.0
        } else {
            -1.0 - 100.0 * self.puddle_weight(s)
        }
    }

    /// Step length for a move from `s`. With puddle-based dynamics the
    /// slow-down is evaluated at the unit-move destination.
    pub fn step_length(&self, s: &[f64], action: usize) -> f64 {
        match self.config.dynamics {
            DynamicsMode::Shared => 1.0,
            DynamicsMode::PuddleBased => {
                let m = MOVES[action];
                let probe = [clip(s[0] + m[0]), clip(s[1] + m[1])];
                1.0 / (1.0 + 5.0 * self.puddle_weight(&probe))
            }
        }
    }

    /// Noiseless successor of `(s, a)`.
    pub fn mean_next_state(&self, s: &[f64], action: usize) -> [f64; 2] {
        let alpha = self.step_length(s, action);
        let m = MOVES[action];
        [clip(s[0] + alpha * m[0]), clip(s[1] + alpha * m[1])]
    }
}

fn clip(x: f64) -> f64 {
    x.clamp(LOW, HIGH)
}

impl Environment for PuddleWorld {
    fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    fn reset(&self, _rng: &mut StreamRng) -> Vec<f64> {
        self.config.start.to_vec()
    }

    fn reset_exploring(&self, rng: &mut StreamRng) -> Vec<f64> {
        loop {
            let s = vec![rng.random_range(LOW..HIGH), rng.random_range(LOW..HIGH)];
            if !self.in_goal(&s) {
                return s;
            }
        }
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut StreamRng) -> Result<Step> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        if self.in_goal(state) {
            return Ok(Step { next_state: state.to_vec(), reward: 0.0, done: true });
        }
        let mean = self.mean_next_state(state, action);
        let sd_var = self.config.transition_noise_var;
        let next_state = vec![
            clip(mean[0] + gaussian_noise(rng, sd_var)),
            clip(mean[1] + gaussian_noise(rng, sd_var)),
        ];
        let reward = self.mean_reward(state) + gaussian_noise(rng, self.config.reward_noise_var);
        let done = self.in_goal(&next_state);
        Ok(Step { next_state, reward, done })
    }

    fn evaluation_starts(&self, _count: usize) -> Vec<Vec<f64>> {
        vec![self.config.start.to_vec()]
    }

    fn reward_distribution(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        if self.in_goal(state) {
            Ok(Gaussian::point(0.0))
        } else {
            Ok(Gaussian::new(self.mean_reward(state), self.config.reward_noise_var))
        }
    }

    fn transition_distribution(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        if self.in_goal(state) {
            return Ok(state.iter().map(|&x| Gaussian::point(x)).collect());
        }
        let var = self.config.transition_noise_var;
        Ok(self.mean_next_state(state, action).iter().map(|&m| Gaussian::new(m, var)).collect())
    }
}
