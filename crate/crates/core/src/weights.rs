//! Expected importance weights under Gaussian-process task models.
//!
//! For a source sample with observed value `x` the expected weight is
//!
//! ```text
//! C * N(x | mu0, s0 + v0) / N(x | muj, sj - vj),   C = sj / (sj - vj)
//! ```
//!
//! where `(mu, v)` are GP posterior moments and `s` the model noise
//! variances. Transition weights multiply one such factor per state
//! dimension. Everything is evaluated in log-space.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gaussian::{log_normal_pdf, Gaussian};
use crate::gp::TaskModel;
use crate::task::{Dataset, TransitionSample, WeightedSample};

/// Noise variances of one task's reward and transition kernels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskNoise {
    pub reward_var: f64,
    /// One variance per state dimension.
    pub transition_vars: Vec<f64>,
}

/// Model noise of every task, scaled by an over-estimation factor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub tasks: BTreeMap<u32, TaskNoise>,
    pub overestimation: f64,
}

impl NoiseSpec {
    pub fn new(overestimation: f64) -> Result<Self> {
        if !(overestimation.is_finite() && overestimation >= 1.0) {
            return Err(Error::InvalidParameter("overestimation factor must be at least 1"));
        }
        Ok(Self { tasks: BTreeMap::new(), overestimation })
    }

    /// Same noise for every listed task.
    pub fn uniform(task_ids: &[u32], noise: TaskNoise, overestimation: f64) -> Result<Self> {
        let mut spec = Self::new(overestimation)?;
        for &id in task_ids {
            spec.insert(id, noise.clone())?;
        }
        Ok(spec)
    }

    pub fn insert(&mut self, task_id: u32, noise: TaskNoise) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(noise.reward_var) || !noise.transition_vars.iter().all(|&v| ok(v)) {
            return Err(Error::InvalidParameter("noise variances must be strictly positive"));
        }
        self.tasks.insert(task_id, noise);
        Ok(())
    }

    /// `kappa * sigma_j^2`.
    pub fn reward_var(&self, task_id: u32) -> Result<f64> {
        Ok(self.overestimation * self.get(task_id)?.reward_var)
    }

    /// `kappa * delta_{j,d}^2` for every dimension.
    pub fn transition_vars(&self, task_id: u32) -> Result<Vec<f64>> {
        Ok(self.get(task_id)?.transition_vars.iter().map(|v| self.overestimation * v).collect())
    }

    fn get(&self, task_id: u32) -> Result<&TaskNoise> {
        self.tasks.get(&task_id).ok_or(Error::MissingModel { task_id })
    }
}

/// Clamping policy that keeps expected weights finite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DivergenceGuard {
    /// Source GP variance is clamped to this fraction of the source noise.
    pub max_variance_ratio: f64,
    /// Upper bound on any single weight.
    pub max_weight: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self { max_variance_ratio: 0.95, max_weight: 1000.0 }
    }
}

impl DivergenceGuard {
    /// Variance clamp only; weights are never capped.
    pub fn uncapped() -> Self {
        Self { max_weight: f64::INFINITY, ..Self::default() }
    }
}

/// A weight together with whether the guard had to intervene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardedWeight {
    pub value: f64,
    pub clamped: bool,
}

/// Log of one Gaussian expected-weight factor, before the weight cap.
fn log_factor(target: Gaussian, source: Gaussian, target_noise: f64, source_noise: f64, x: f64, guard: &DivergenceGuard) -> (f64, bool) {
    let limit = guard.max_variance_ratio * source_noise;
    let clamped = source.var > limit;
    let v_src = if clamped { limit } else { source.var.max(0.0) };
    let v_tgt = target.var.max(0.0);
    let rest = source_noise - v_src;
    let log_c = libm::log(source_noise) - libm::log(rest);
    let lw = log_c + log_normal_pdf(x, target.mean, target_noise + v_tgt) - log_normal_pdf(x, source.mean, rest);
    (lw, clamped)
}

fn cap(value: f64, guard: &DivergenceGuard) -> GuardedWeight {
    if value.is_nan() {
        return GuardedWeight { value: guard.max_weight.min(f64::MAX), clamped: true };
    }
    if value > guard.max_weight {
        GuardedWeight { value: guard.max_weight, clamped: true }
    } else {
        GuardedWeight { value, clamped: false }
    }
}

/// Expected reward weight of a source sample with reward `r`.
pub fn expected_reward_weight(
    target: Gaussian,
    source: Gaussian,
    target_noise_var: f64,
    source_noise_var: f64,
    r: f64,
    guard: &DivergenceGuard,
) -> GuardedWeight {
    let (lw, clamped) = log_factor(target, source, target_noise_var, source_noise_var, r, guard);
    let w = cap(libm::exp(lw), guard);
    GuardedWeight { value: w.value, clamped: clamped || w.clamped }
}

/// Expected transition weight: the product over dimensions of the
/// reward-form factor, capped once at the end.
pub fn expected_transition_weight(
    target: &[Gaussian],
    source: &[Gaussian],
    target_noise_vars: &[f64],
    source_noise_vars: &[f64],
    next_state: &[f64],
    guard: &DivergenceGuard,
) -> Result<GuardedWeight> {
    let d = next_state.len();
    for len in [target.len(), source.len(), target_noise_vars.len(), source_noise_vars.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, found: len });
        }
    }
    let mut product = 1.0;
    let mut log_sum = 0.0;
    let mut clamped = false;
    for i in 0..d {
        let (lw, c) = log_factor(target[i], source[i], target_noise_vars[i], source_noise_vars[i], next_state[i], guard);
        product *= libm::exp(lw);
        log_sum += lw;
        clamped |= c;
    }
    if !product.is_finite() || (product == 0.0 && log_sum > -700.0) {
        product = libm::exp(log_sum);
    }
    let w = cap(product, guard);
    Ok(GuardedWeight { value: w.value, clamped: clamped || w.clamped })
}

/// Weights from the true densities of two environments.
pub fn ideal_weights<T: Environment + ?Sized, S: Environment + ?Sized>(
    target: &T,
    source: &S,
    sample: &TransitionSample,
) -> Result<(f64, f64)> {
    let (s, a) = (&sample.state[..], sample.action);
    let lr0 = target.log_reward_density(s, a, sample.reward)?;
    let lrj = source.log_reward_density(s, a, sample.reward)?;
    let lp0 = target.log_transition_density(s, a, &sample.next_state)?;
    let lpj = source.log_transition_density(s, a, &sample.next_state)?;
    if lrj == f64::NEG_INFINITY || lpj == f64::NEG_INFINITY {
        return Err(Error::UndefinedWeight);
    }
    Ok((libm::exp(lr0 - lrj), libm::exp(lp0 - lpj)))
}

/// Summary statistics of a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightDiagnostics {
    /// Mean of squared weights.
    pub empirical_second_moment: f64,
    /// `(sum w)^2 / sum w^2`.
    pub effective_sample_size: f64,
    pub max_weight: f64,
    pub divergence_count: usize,
}

impl WeightDiagnostics {
    pub fn from_weights(weights: &[f64], divergence_count: usize) -> Self {
        let n = weights.len();
        if n == 0 {
            return Self { divergence_count, ..Self::default() };
        }
        let sum: f64 = weights.iter().sum();
        let sq: f64 = weights.iter().map(|w| w * w).sum();
        Self {
            empirical_second_moment: sq / n as f64,
            effective_sample_size: if sq > 0.0 { sum * sum / sq } else { 0.0 },
            max_weight: weights.iter().copied().fold(0.0, f64::max),
            divergence_count,
        }
    }
}

/// Weighted samples of a pooled dataset with reward and transition
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetWeights {
    pub samples: Vec<WeightedSample>,
    pub reward: WeightDiagnostics,
    pub transition: WeightDiagnostics,
}

impl DatasetWeights {
    /// Target samples get weight one; the rest come from `weigh`.
    fn build<F>(pooled: &Dataset, mut weigh: F) -> Result<Self>
    where
        F: FnMut(&TransitionSample) -> Result<(GuardedWeight, GuardedWeight)>,
    {
        let mut samples = Vec::with_capacity(pooled.len());
        let (mut div_r, mut div_p) = (0, 0);
        for s in pooled.samples() {
            if s.task_id == 0 {
                samples.push(WeightedSample::unit(s.clone()));
                continue;
            }
            let (wr, wp) = weigh(s)?;
            div_r += usize::from(wr.clamped);
            div_p += usize::from(wp.clamped);
            samples.push(WeightedSample::new(s.clone(), wr.value, wp.value)?);
        }
        let wr: Vec<f64> = samples.iter().map(|w| w.w_r).collect();
        let wp: Vec<f64> = samples.iter().map(|w| w.w_p).collect();
        Ok(Self {
            reward: WeightDiagnostics::from_weights(&wr, div_r),
            transition: WeightDiagnostics::from_weights(&wp, div_p),
            samples,
        })
    }

    /// Self-normalization constants `(Z_r, Z_p)`.
    pub fn normalizers(&self) -> (f64, f64) {
        self.samples.iter().fold((0.0, 0.0), |(zr, zp), w| (zr + w.w_r, zp + w.w_p))
    }

    /// Per-source share of the source weight mass, `(task_id, reward, transition)`.
    pub fn transfer_ratios(&self) -> Vec<(u32, f64, f64)> {
        let mut mass: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for w in self.samples.iter().filter(|w| w.sample.task_id != 0) {
            let e = mass.entry(w.sample.task_id).or_insert((0.0, 0.0));
            e.0 += w.w_r;
            e.1 += w.w_p;
        }
        let (tr, tp) = mass.values().fold((0.0, 0.0), |(a, b), (r, p)| (a + r, b + p));
        let share = |x: f64, total: f64| if total > 0.0 { x / total } else { 0.0 };
        mass.into_iter().map(|(id, (r, p))| (id, share(r, tr), share(p, tp))).collect()
    }
}

/// One weight per sample of a single source task.
pub fn sample_weights<M: TaskModel + ?Sized, N: TaskModel + ?Sized>(
    sample: &TransitionSample,
    target: &M,
    source: &N,
    noise: &NoiseSpec,
    guard: &DivergenceGuard,
) -> Result<(GuardedWeight, GuardedWeight)> {
    let (s, a) = (&sample.state[..], sample.action);
    let wr = expected_reward_weight(
        target.predict_reward(s, a)?,
        source.predict_reward(s, a)?,
        noise.reward_var(0)?,
        noise.reward_var(sample.task_id)?,
        sample.reward,
        guard,
    );
    let wp = expected_transition_weight(
        &target.predict_transition(s, a)?,
        &source.predict_transition(s, a)?,
        &noise.transition_vars(0)?,
        &noise.transition_vars(sample.task_id)?,
        &sample.next_state,
        guard,
    )?;
    Ok((wr, wp))
}

/// Expected weights for every sample of a pooled dataset. `models` must hold
/// the target (task 0) and every source present in the data.
pub fn compute_dataset_weights<M: TaskModel>(
    pooled: &Dataset,
    models: &BTreeMap<u32, M>,
    noise: &NoiseSpec,
    guard: &DivergenceGuard,
) -> Result<DatasetWeights> {
    let target = models.get(&0).ok_or(Error::MissingModel { task_id: 0 })?;
    DatasetWeights::build(pooled, |s| {
        let source = models.get(&s.task_id).ok_or(Error::MissingModel { task_id: s.task_id })?;
        sample_weights(s, target, source, noise, guard)
    })
}

/// Ideal weights for every sample of a pooled dataset.
pub fn compute_ideal_weights<E: Environment>(pooled: &Dataset, envs: &BTreeMap<u32, E>) -> Result<DatasetWeights> {
    let target = envs.get(&0).ok_or(Error::MissingModel { task_id: 0 })?;
    DatasetWeights::build(pooled, |s| {
        let source = envs.get(&s.task_id).ok_or(Error::MissingModel { task_id: s.task_id })?;
        let (wr, wp) = ideal_weights(target, source, s)?;
        let plain = |value| GuardedWeight { value, clamped: false };
        Ok((plain(wr), plain(wp)))
    })
}

/// Unit weights for every sample.
pub fn unit_weights(pooled: &Dataset) -> DatasetWeights {
    let samples: Vec<WeightedSample> = pooled.samples().iter().cloned().map(WeightedSample::unit).collect();
    let ones: Vec<f64> = samples.iter().map(|_| 1.0).collect();
    let diag = WeightDiagnostics::from_weights(&ones, 0);
    DatasetWeights { samples, reward: diag, transition: diag }
}
