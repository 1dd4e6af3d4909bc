//! Per-task bundles of reward and transition Gaussian processes.

use alloc::vec;
use alloc::vec::Vec;

use super::{FitOptions, GpModel, KernelParams, PriorMean};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::task::TransitionSample;

/// Predictive model of one task's reward and transition kernels.
pub trait TaskModel {
    /// Posterior over the mean reward at `(s, a)`.
    fn predict_reward(&self, state: &[f64], action: usize) -> Result<Gaussian>;

    /// Per-dimension posterior over the mean next state at `(s, a)`.
    fn predict_transition(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>>;
}

impl<T: TaskModel + ?Sized> TaskModel for &T {
    fn predict_reward(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        (**self).predict_reward(state, action)
    }

    fn predict_transition(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        (**self).predict_transition(state, action)
    }
}

/// A "perfect" model: the environment's true means with zero variance.
#[derive(Debug, Clone)]
pub struct ExactModel<E>(pub E);

impl<E: Environment> TaskModel for ExactModel<E> {
    fn predict_reward(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        Ok(Gaussian::point(self.0.reward_distribution(state, action)?.mean))
    }

    fn predict_transition(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        Ok(self.0.transition_distribution(state, action)?.into_iter().map(|g| Gaussian::point(g.mean)).collect())
    }
}

/// How task models are fitted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ModelSettings {
    /// Initial length scales, one per state dimension. Empty means 1.0.
    pub length_scales: Vec<f64>,
    pub fit: FitOptions,
    /// Fixed reward noise variance; optimized (or estimated) when `None`.
    pub reward_noise_var: Option<f64>,
    /// Fixed transition noise variances, one per state dimension.
    pub transition_noise_vars: Option<Vec<f64>>,
    /// Each GP is fitted on at most this many evenly strided samples.
    pub max_points: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            length_scales: Vec::new(),
            fit: FitOptions { optimize: true, prior_mean: PriorMean::Empirical, ..FitOptions::default() },
            reward_noise_var: None,
            transition_noise_vars: None,
            max_points: 300,
        }
    }
}

/// Reward GP and one GP per state dimension, for every action.
///
/// Transition GPs model the displacement `s' - s`; predictions add `s` back.
#[derive(Debug, Clone)]
pub struct TaskModels {
    state_dim: usize,
    reward: Vec<GpModel>,
    /// `transition[a][d]`.
    transition: Vec<Vec<GpModel>>,
}

impl TaskModels {
    pub fn fit<'a, I>(samples: I, state_dim: usize, action_count: usize, settings: &ModelSettings) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TransitionSample>,
    {
        let mut by_action: Vec<Vec<&TransitionSample>> = vec![Vec::new(); action_count];
        for s in samples {
            if s.state.len() != state_dim || s.next_state.len() != state_dim {
                return Err(Error::DimensionMismatch { expected: state_dim, found: s.state.len() });
            }
            if s.action >= action_count {
                return Err(Error::InvalidAction { action: s.action, action_count });
            }
            by_action[s.action].push(s);
        }
        let all: Vec<&TransitionSample> = by_action.iter().flatten().copied().collect();
        if all.is_empty() {
            return Err(Error::EmptyInput);
        }
        let ls = if settings.length_scales.is_empty() {
            vec![1.0; state_dim]
        } else if settings.length_scales.len() == state_dim {
            settings.length_scales.clone()
        } else {
            return Err(Error::DimensionMismatch { expected: state_dim, found: settings.length_scales.len() });
        };
        if let Some(v) = &settings.transition_noise_vars {
            if v.len() != state_dim {
                return Err(Error::DimensionMismatch { expected: state_dim, found: v.len() });
            }
        }

        let reward_of = |s: &TransitionSample| s.reward;
        let delta_of = |d: usize| move |s: &TransitionSample| s.next_state[d] - s.state[d];
        let global_reward = mean_of(&all, reward_of);
        let global_delta: Vec<f64> = (0..state_dim).map(|d| mean_of(&all, delta_of(d))).collect();

        let mut reward = Vec::with_capacity(action_count);
        let mut transition = Vec::with_capacity(action_count);
        for rows in &by_action {
            reward.push(fit_output(rows, reward_of, global_reward, &ls, settings.reward_noise_var, settings)?);
            let mut dims = Vec::with_capacity(state_dim);
            for d in 0..state_dim {
                let noise = settings.transition_noise_vars.as_ref().map(|v| v[d]);
                dims.push(fit_output(rows, delta_of(d), global_delta[d], &ls, noise, settings)?);
            }
            transition.push(dims);
        }
        Ok(Self { state_dim, reward, transition })
    }

    /// Assembles a bundle from already fitted models.
    pub fn from_models(reward: Vec<GpModel>, transition: Vec<Vec<GpModel>>) -> Result<Self> {
        if reward.is_empty() || reward.len() != transition.len() {
            return Err(Error::InvalidParameter("one reward and one transition set per action"));
        }
        let state_dim = transition[0].len();
        if state_dim == 0 || transition.iter().any(|t| t.len() != state_dim) {
            return Err(Error::InvalidParameter("transition models must cover every state dimension"));
        }
        let all_dims_match = reward.iter().chain(transition.iter().flatten()).all(|m| m.dim() == state_dim);
        if !all_dims_match {
            return Err(Error::InvalidParameter("model input dimension must equal the state dimension"));
        }
        Ok(Self { state_dim, reward, transition })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_count(&self) -> usize {
        self.reward.len()
    }

    pub fn reward_models(&self) -> &[GpModel] {
        &self.reward
    }

    pub fn transition_models(&self) -> &[Vec<GpModel>] {
        &self.transition
    }

    fn check(&self, state: &[f64], action: usize) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: state.len() });
        }
        if action >= self.reward.len() {
            return Err(Error::InvalidAction { action, action_count: self.reward.len() });
        }
        Ok(())
    }
}

impl TaskModel for TaskModels {
    fn predict_reward(&self, state: &[f64], action: usize) -> Result<Gaussian> {
        self.check(state, action)?;
        Ok(self.reward[action].predict(state))
    }

    fn predict_transition(&self, state: &[f64], action: usize) -> Result<Vec<Gaussian>> {
        self.check(state, action)?;
        Ok(self.transition[action]
            .iter()
            .zip(state)
            .map(|(gp, s)| {
                let g = gp.predict(state);
                Gaussian::new(s + g.mean, g.var)
            })
            .collect())
    }
}

fn mean_of<F: Fn(&TransitionSample) -> f64>(rows: &[&TransitionSample], f: F) -> f64 {
    if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|s| f(s)).sum::<f64>() / rows.len() as f64
    }
}

fn fit_output<F: Fn(&TransitionSample) -> f64>(
    rows: &[&TransitionSample],
    target: F,
    fallback_mean: f64,
    length_scales: &[f64],
    fixed_noise: Option<f64>,
    settings: &ModelSettings,
) -> Result<GpModel> {
    let n = rows.len();
    let m = settings.max_points.max(1).min(n);
    let picked: Vec<&TransitionSample> = (0..m).map(|i| rows[i * n / m.max(1)]).collect();
    let ys: Vec<f64> = picked.iter().map(|s| target(s)).collect();
    let mean = if ys.is_empty() { fallback_mean } else { ys.iter().sum::<f64>() / ys.len() as f64 };
    let spread = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len().max(1) as f64;
    let signal = spread.max(1e-4);
    let noise = fixed_noise.unwrap_or((0.1 * spread).max(1e-6));
    let kernel = KernelParams::new(signal, length_scales.to_vec(), noise)?;
    if ys.is_empty() {
        return GpModel::prior(kernel, fallback_mean);
    }
    let xs: Vec<Vec<f64>> = picked.iter().map(|s| s.state.clone()).collect();
    let options = FitOptions { optimize_noise: fixed_noise.is_none() && settings.fit.optimize_noise, ..settings.fit.clone() };
    GpModel::fit_with(&xs, &ys, &kernel, &options)
}
