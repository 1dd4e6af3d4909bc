//! Benchmark environments: puddle world, acrobot and water reservoir.
//!
//! Environments are immutable; `step` is a pure function of the state, the
//! action and the draws taken from the supplied generator.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::rng::StreamRng;
use crate::task::TaskSpec;

pub mod acrobot;
pub mod puddle;
pub mod reservoir;

pub use acrobot::{Acrobot, AcrobotConfig, AcrobotTask};
pub use puddle::{DynamicsMode, Puddle, PuddleWorld, PuddleWorldConfig, Rect};
pub use reservoir::{InflowProfile, ReservoirExpert, WaterReservoir, WaterReservoirConfig};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// Terminal state reached. Horizon truncation is the caller's business.
    pub done: bool,
}

pub trait Environment {
    fn spec(&self) -> &TaskSpec;

    /// Initial state of an episode.
    fn reset(&self, rng: &mut StreamRng) -> Vec<f64>;

    /// Initial state spread over the state space, used to gather exploratory
    /// data for pretraining.
    fn reset_exploring(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.reset(rng)
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut StreamRng) -> Result<Step>;

    /// Start states of the evaluation protocol.
    fn evaluation_starts(&self, count: usize) -> Vec<Vec<f64>>;

    /// True Gaussian reward distribution at `(s, a)`.
    fn reward_distribution(&self, _state: &[f64], _action: usize) -> Result<Gaussian> {
        Err(Error::UnsupportedDensity("reward kernel has no density"))
    }

    /// True per-dimension Gaussian transition distribution at `(s, a)`.
    fn transition_distribution(&self, _state: &[f64], _action: usize) -> Result<Vec<Gaussian>> {
        Err(Error::UnsupportedDensity("transition kernel has no density"))
    }

    fn log_reward_density(&self, state: &[f64], action: usize, reward: f64) -> Result<f64> {
        Ok(self.reward_distribution(state, action)?.log_density(reward))
    }

    /// Log density of `next` ignoring the probability mass moved by clipping.
    fn log_transition_density(&self, state: &[f64], action: usize, next: &[f64]) -> Result<f64> {
        let dist = self.transition_distribution(state, action)?;
        if dist.len() != next.len() {
            return Err(Error::DimensionMismatch { expected: dist.len(), found: next.len() });
        }
        Ok(dist.iter().zip(next).map(|(g, &x)| g.log_density(x)).sum())
    }

    fn reward_density(&self, state: &[f64], action: usize, reward: f64) -> Result<f64> {
        Ok(libm::exp(self.log_reward_density(state, action, reward)?))
    }

    fn transition_density(&self, state: &[f64], action: usize, next: &[f64]) -> Result<f64> {
        Ok(libm::exp(self.log_transition_density(state, action, next)?))
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn spec(&self) -> &TaskSpec {
        (**self).spec()
    }

    fn reset(&self, rng: &mut StreamRng) -> Vec<f64> {
        (**self).reset(rng)
    }

    fn reset_exploring(&self, rng: &mut StreamRng) -> Vec<f64> {
        (**self).reset_exploring(rng)
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut StreamRng) -> Result<Step> {
        (**self).step(state, action, rng)
    }

    fn evaluation_starts(&self, count: usize) -> Vec<Vec<f64>> {
        (**self).evaluation_starts(count)
    }

    fn reward_distribution(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        (**self).reward_distribution(state, action)
    }

    fn transition_distribution(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        (**self).transition_distribution(state, action)
    }
}

/// Declarative environment description, as stored in preset files.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum EnvConfig {
    PuddleWorld(PuddleWorldConfig),
    Acrobot(AcrobotConfig),
    WaterReservoir(WaterReservoirConfig),
}

impl EnvConfig {
    pub fn build(&self) -> Result<Task> {
        Ok(match self {
            EnvConfig::PuddleWorld(c) => Task::PuddleWorld(PuddleWorld::new(c.clone())?),
            EnvConfig::Acrobot(c) => Task::Acrobot(Acrobot::new(c.clone())?),
            EnvConfig::WaterReservoir(c) => Task::WaterReservoir(WaterReservoir::new(c.clone())?),
        })
    }
}

/// Any of the benchmark environments.
#[derive(Debug, Clone)]
pub enum Task {
    PuddleWorld(PuddleWorld),
    Acrobot(Acrobot),
    WaterReservoir(WaterReservoir),
}

macro_rules! dispatch {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            Task::PuddleWorld($env) => $body,
            Task::Acrobot($env) => $body,
            Task::WaterReservoir($env) => $body,
        }
    };
}

impl Environment for Task {
    fn spec(&self) -> &TaskSpec {
        dispatch!(self, e => e.spec())
    }

    fn reset(&self, rng: &mut StreamRng) -> Vec<f64> {
        dispatch!(self, e => e.reset(rng))
    }

    fn reset_exploring(&self, rng: &mut StreamRng) -> Vec<f64> {
        dispatch!(self, e => e.reset_exploring(rng))
    }

    fn step(&self, state: &[f64], action: usize, rng: &mut StreamRng) -> Result<Step> {
        dispatch!(self, e => e.step(state, action, rng))
    }

    fn evaluation_starts(&self, count: usize) -> Vec<Vec<f64>> {
        dispatch!(self, e => e.evaluation_starts(count))
    }

    fn reward_distribution(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        dispatch!(self, e => e.reward_distribution(state, action))
    }

    fn transition_distribution(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        dispatch!(self, e => e.transition_distribution(state, action))
    }
}

pub(crate) fn check_action(spec: &TaskSpec, action: usize) -> Result<()> {
    if action >= spec.action_count {
        Err(Error::InvalidAction { action, action_count: spec.action_count })
    } else {
        Ok(())
    }
}

pub(crate) fn check_state(spec: &TaskSpec, state: &[f64]) -> Result<()> {
    if state.len() != spec.state_dim {
        Err(Error::DimensionMismatch { expected: spec.state_dim, found: state.len() })
    } else {
        Ok(())
    }
}

/// Standard normal draw scaled to the given variance.
pub(crate) fn gaussian_noise(rng: &mut StreamRng, var: f64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let z: f64 = StandardNormal.sample(rng);
    z * libm::sqrt(var)
}
