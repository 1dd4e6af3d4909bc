//! Fitted Q-iteration, plain and importance weighted.
//!
//! Plain FQI regresses `r + gamma max Q_k(s', .)` on the target data with unit
//! weights. IWFQI first fits a reward model `R_hat` on all samples with the
//! reward weights, starts from `Q_0 = R_hat` and regresses
//! `R_hat(s, a) + gamma max Q_k(s', .)` with the transition weights.
//! Self-normalizing by the weight sums leaves the least-squares minimizer
//! unchanged, so weights enter the regressors directly.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::env::Environment;
use crate::ert::{ErtModel, ErtParams, FeatureMatrix};
use crate::error::{Error, Result};
use crate::gp::TaskModel;
use crate::policy::{ActionValues, QPolicy};
use crate::rng::SeedStream;
use crate::task::{pool_datasets, Dataset, TaskSpec, WeightedSample};
use crate::weights::{compute_dataset_weights, compute_ideal_weights, unit_weights, DatasetWeights, DivergenceGuard, NoiseSpec};

/// A fitted function of `(state, action)`.
pub trait Predictor {
    fn predict(&self, state: &[f64], action: usize) -> f64;
}

/// Weighted least-squares regression over `(state, action)` inputs.
pub trait Regressor {
    type Model: Predictor;

    /// Fits `targets[i]` at the state and action of `samples[i]` with
    /// weights `weights[i]`.
    fn fit(&self, samples: &[WeightedSample], targets: &[f64], weights: &[f64], seed: u64) -> Result<Self::Model>;
}

/// Extra-trees regressor; the action is either an extra input feature or
/// selects one forest per action.
#[derive(Debug, Clone, PartialEq)]
pub struct ErtRegressor {
    pub params: ErtParams,
    pub per_action: bool,
    pub action_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ErtQ {
    Joint(ErtModel),
    /// Actions without data predict `fallback`.
    PerAction { forests: Vec<Option<ErtModel>>, fallback: f64 },
}

impl Predictor for ErtQ {
    fn predict(&self, state: &[f64], action: usize) -> f64 {
        match self {
            ErtQ::Joint(m) => {
                let mut row = [0.0; 16];
                if state.len() < row.len() {
                    row[..state.len()].copy_from_slice(state);
                    row[state.len()] = action as f64;
                    m.predict_row(&row[..=state.len()])
                } else {
                    let mut row = state.to_vec();
                    row.push(action as f64);
                    m.predict_row(&row)
                }
            }
            ErtQ::PerAction { forests, fallback } => match forests.get(action) {
                Some(Some(m)) => m.predict_row(state),
                _ => *fallback,
            },
        }
    }
}

impl Regressor for ErtRegressor {
    type Model = ErtQ;

    fn fit(&self, samples: &[WeightedSample], targets: &[f64], weights: &[f64], seed: u64) -> Result<ErtQ> {
        let first = samples.first().ok_or(Error::EmptyInput)?;
        let dim = first.sample.state.len();
        let params = ErtParams { seed, ..self.params.clone() };
        if !self.per_action {
            let mut x = FeatureMatrix::with_capacity(dim + 1, samples.len());
            let mut row = Vec::with_capacity(dim + 1);
            for s in samples {
                row.clear();
                row.extend_from_slice(&s.sample.state);
                row.push(s.sample.action as f64);
                x.push_row(&row)?;
            }
            return Ok(ErtQ::Joint(ErtModel::fit(&x, targets, weights, &params)?));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (y, w) in targets.iter().zip(weights) {
            num += w * y;
            den += w;
        }
        if den <= 0.0 {
            return Err(Error::ZeroWeights);
        }
        let streams = SeedStream::new(seed);
        let mut forests = Vec::with_capacity(self.action_count);
        for a in 0..self.action_count {
            let mut x = FeatureMatrix::new(dim);
            let (mut ys, mut ws) = (Vec::new(), Vec::new());
            for ((s, &y), &w) in samples.iter().zip(targets).zip(weights) {
                if s.sample.action == a {
                    x.push_row(&s.sample.state)?;
                    ys.push(y);
                    ws.push(w);
                }
            }
            let forest = if ws.iter().any(|&w| w > 0.0) {
                Some(ErtModel::fit(&x, &ys, &ws, &ErtParams { seed: streams.seed("action", a as u64), ..params.clone() })?)
            } else {
                None
            };
            forests.push(forest);
        }
        Ok(ErtQ::PerAction { forests, fallback: num / den })
    }
}

/// Exact regressor for finite inputs: the weighted mean of the targets
/// observed at each distinct `(state, action)`. Unseen inputs predict 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct TabularRegressor;

#[derive(Debug, Clone, Default)]
pub struct TabularModel {
    table: BTreeMap<(Vec<u64>, usize), f64>,
}

impl TabularModel {
    fn key(state: &[f64], action: usize) -> (Vec<u64>, usize) {
        (state.iter().map(|v| v.to_bits()).collect(), action)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Predictor for TabularModel {
    fn predict(&self, state: &[f64], action: usize) -> f64 {
        self.table.get(&Self::key(state, action)).copied().unwrap_or(0.0)
    }
}

impl Regressor for TabularRegressor {
    type Model = TabularModel;

    fn fit(&self, samples: &[WeightedSample], targets: &[f64], weights: &[f64], _seed: u64) -> Result<TabularModel> {
        let mut acc: BTreeMap<(Vec<u64>, usize), (f64, f64)> = BTreeMap::new();
        for ((s, &y), &w) in samples.iter().zip(targets).zip(weights) {
            if w > 0.0 {
                let e = acc.entry(TabularModel::key(&s.sample.state, s.sample.action)).or_insert((0.0, 0.0));
                e.0 += w * y;
                e.1 += w;
            }
        }
        if acc.is_empty() {
            return Err(Error::ZeroWeights);
        }
        Ok(TabularModel { table: acc.into_iter().map(|(k, (s, w))| (k, s / w)).collect() })
    }
}

/// Action-value function backed by a regressor, optionally clamped to
/// `[-bound, bound]`.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QFunction<M> {
    model: M,
    action_count: usize,
    bound: Option<f64>,
}

impl<M: Predictor> QFunction<M> {
    pub fn new(model: M, action_count: usize, bound: Option<f64>) -> Self {
        Self { model, action_count, bound }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn greedy_policy(&self) -> QPolicy<&Self> {
        QPolicy::greedy(self)
    }
}

impl<M: Predictor> ActionValues for QFunction<M> {
    fn action_count(&self) -> usize {
        self.action_count
    }

    fn q_value(&self, state: &[f64], action: usize) -> f64 {
        let v = self.model.predict(state, action);
        match self.bound {
            Some(b) => v.clamp(-b, b),
            None => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    Plain,
    Iwfqi,
    #[cfg_attr(feature = "serde", serde(alias = "iwfqi-ideal"))]
    IwfqiIdeal,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Iwfqi => "iwfqi",
            Variant::IwfqiIdeal => "iwfqi-ideal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(Variant::Plain),
            "iwfqi" => Some(Variant::Iwfqi),
            "iwfqi-ideal" | "iwfqi_ideal" => Some(Variant::IwfqiIdeal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FqiConfig {
    pub iterations: usize,
    pub ert: ErtParams,
    pub clamp_q: bool,
    pub variant: Variant,
    /// One forest per action instead of the action as an input feature.
    pub per_action_forests: bool,
}

impl Default for FqiConfig {
    fn default() -> Self {
        Self { iterations: 50, ert: ErtParams::default(), clamp_q: true, variant: Variant::Iwfqi, per_action_forests: false }
    }
}

impl FqiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be positive"));
        }
        self.ert.validate()
    }

    pub fn regressor(&self, action_count: usize) -> ErtRegressor {
        ErtRegressor { params: self.ert.clone(), per_action: self.per_action_forests, action_count }
    }
}

/// One row of the per-iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationStats {
    pub iter: usize,
    pub mean_abs_td_target: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub fit_seconds: f64,
}

/// Wall clock in seconds, supplied by std callers.
pub type Clock<'a> = &'a dyn Fn() -> f64;

/// Reward model `R_hat` fitted with the reward weights, clamped to
/// `[-r_max, r_max]`.
pub fn fit_reward_model<R: Regressor>(
    regressor: &R,
    samples: &[WeightedSample],
    spec: &TaskSpec,
    seed: u64,
) -> Result<QFunction<R::Model>> {
    let targets: Vec<f64> = samples.iter().map(|s| s.sample.reward).collect();
    let weights: Vec<f64> = samples.iter().map(|s| s.w_r).collect();
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let model = regressor.fit(samples, &targets, &weights, seed)?;
    Ok(QFunction::new(model, spec.action_count, Some(spec.r_max)))
}

/// Bellman targets `base_i + gamma (1 - terminal_i) max_a Q(s'_i, a)`.
pub fn bellman_targets<Q: ActionValues + ?Sized>(q: &Q, samples: &[WeightedSample], base: &[f64], gamma: f64) -> Vec<f64> {
    samples
        .iter()
        .zip(base)
        .map(|(s, &b)| if s.sample.terminal { b } else { b + gamma * q.max_q(&s.sample.next_state) })
        .collect()
}

/// One weighted FQI step from `q` with precomputed reward terms `base`.
pub fn fqi_iterate<Q: ActionValues + ?Sized, R: Regressor>(
    q: &Q,
    samples: &[WeightedSample],
    base: &[f64],
    spec: &TaskSpec,
    regressor: &R,
    clamp_q: bool,
    seed: u64,
) -> Result<QFunction<R::Model>> {
    let targets = bellman_targets(q, samples, base, spec.gamma);
    let weights: Vec<f64> = samples.iter().map(|s| s.w_p).collect();
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let model = regressor.fit(samples, &targets, &weights, seed)?;
    Ok(QFunction::new(model, spec.action_count, clamp_q.then(|| spec.q_max())))
}

/// Result of a full FQI run.
#[derive(Debug, Clone)]
pub struct FqiRun<M> {
    pub q: QFunction<M>,
    pub log: Vec<IterationStats>,
}

/// Loop settings of [`fitted_q_iteration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSettings {
    pub iterations: usize,
    /// Replace raw rewards in the targets by the reward model.
    pub use_reward_model: bool,
    pub clamp_q: bool,
    pub seed: u64,
}

/// Runs the weighted FQI loop. `Q_0` is always the reward regression.
pub fn fitted_q_iteration<R: Regressor>(
    regressor: &R,
    samples: &[WeightedSample],
    spec: &TaskSpec,
    settings: LoopSettings,
    clock: Option<Clock<'_>>,
) -> Result<FqiRun<R::Model>> {
    let LoopSettings { iterations, use_reward_model, clamp_q, seed } = settings;
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let streams = SeedStream::new(seed);
    let now = || clock.map_or(0.0, |c| c());
    let reward = fit_reward_model(regressor, samples, spec, streams.seed("reward", 0))?;
    let base: Vec<f64> = if use_reward_model {
        samples.iter().map(|s| reward.q_value(&s.sample.state, s.sample.action)).collect()
    } else {
        samples.iter().map(|s| s.sample.reward).collect()
    };

    let mut log = Vec::with_capacity(iterations);
    let mut q = reward;
    for k in 0..iterations {
        let start = now();
        let targets = bellman_targets(&q, samples, &base, spec.gamma);
        let weights: Vec<f64> = samples.iter().map(|s| s.w_p).collect();
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::ZeroWeights);
        }
        let model = regressor.fit(samples, &targets, &weights, streams.seed("iteration", k as u64))?;
        q = QFunction::new(model, spec.action_count, clamp_q.then(|| spec.q_max()));
        let fit_seconds = now() - start;

        let (mut q_min, mut q_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            let v = q.q_value(&s.sample.state, s.sample.action);
            q_min = q_min.min(v);
            q_max = q_max.max(v);
        }
        let mean_abs = targets.iter().map(|t| libm::fabs(*t)).sum::<f64>() / targets.len() as f64;
        log.push(IterationStats { iter: k + 1, mean_abs_td_target: mean_abs, q_min, q_max, fit_seconds });
    }
    Ok(FqiRun { q, log })
}

/// Where sample weights come from.
#[derive(Clone, Copy)]
pub enum Weighting<'a> {
    /// Estimated from task models; must contain task 0 and every source.
    Estimated { models: &'a BTreeMap<u32, &'a dyn TaskModel>, noise: &'a NoiseSpec, guard: DivergenceGuard },
    /// Ratios of the true densities.
    Ideal { envs: &'a BTreeMap<u32, &'a dyn Environment> },
}

impl core::fmt::Debug for Weighting<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Weighting::Estimated { models, noise, guard } => f
                .debug_struct("Estimated")
                .field("tasks", &models.keys().collect::<Vec<_>>())
                .field("noise", noise)
                .field("guard", guard)
                .finish(),
            Weighting::Ideal { envs } => f.debug_struct("Ideal").field("tasks", &envs.keys().collect::<Vec<_>>()).finish(),
        }
    }
}

/// Output of [`run_algorithm`].
#[derive(Debug, Clone)]
pub struct AlgorithmOutput<M> {
    pub q: QFunction<M>,
    pub log: Vec<IterationStats>,
    pub weights: DatasetWeights,
}

impl<M: Predictor> AlgorithmOutput<M> {
    pub fn policy(&self) -> QPolicy<&QFunction<M>> {
        self.q.greedy_policy()
    }
}

/// Data and weight source of one algorithm run.
#[derive(Debug, Clone, Copy)]
pub struct AlgorithmInput<'a> {
    pub target: &'a Dataset,
    pub sources: &'a [Dataset],
    pub weighting: Option<Weighting<'a>>,
}

/// Plain FQI, IWFQI or IWFQI with ideal weights, according to
/// `config.variant`. Plain FQI ignores the sources and the weighting.
pub fn run_algorithm<R: Regressor>(
    config: &FqiConfig,
    spec: &TaskSpec,
    regressor: &R,
    input: AlgorithmInput<'_>,
    seed: u64,
    clock: Option<Clock<'_>>,
) -> Result<AlgorithmOutput<R::Model>> {
    config.validate()?;
    let AlgorithmInput { target, sources, weighting } = input;
    let weights = match config.variant {
        Variant::Plain => unit_weights(target),
        Variant::Iwfqi => {
            let pooled = pool_datasets(target, sources)?;
            match weighting {
                Some(Weighting::Estimated { models, noise, guard }) => compute_dataset_weights(&pooled, models, noise, &guard)?,
                _ => return Err(Error::InvalidParameter("iwfqi needs estimated task models")),
            }
        }
        Variant::IwfqiIdeal => {
            let pooled = pool_datasets(target, sources)?;
            match weighting {
                Some(Weighting::Ideal { envs }) => compute_ideal_weights(&pooled, envs)?,
                _ => return Err(Error::InvalidParameter("iwfqi-ideal needs the true environments")),
            }
        }
    };
    let use_reward_model = config.variant != Variant::Plain;
    let settings = LoopSettings { iterations: config.iterations, use_reward_model, clamp_q: config.clamp_q, seed };
    let run = fitted_q_iteration(regressor, &weights.samples, spec, settings, clock)?;
    Ok(AlgorithmOutput { q: run.q, log: run.log, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TransitionSample;
    use alloc::vec;

    fn raw(iterations: usize) -> LoopSettings {
        LoopSettings { iterations, use_reward_model: false, clamp_q: true, seed: 0 }
    }

    fn spec(gamma: f64) -> TaskSpec {
        TaskSpec::new(1, 2, gamma, 10, 10.0).unwrap()
    }

    fn ws(s: f64, a: usize, sp: f64, r: f64) -> WeightedSample {
        WeightedSample::unit(TransitionSample { state: vec![s], action: a, next_state: vec![sp], reward: r, terminal: false, task_id: 0 })
    }

    #[test]
    fn constant_rewards_give_constant_reward_model() {
        let samples: Vec<WeightedSample> = (0..30).map(|i| ws(i as f64 * 0.1, i % 2, 0.0, 2.5)).collect();
        let r = fit_reward_model(&ErtRegressor { params: ErtParams::default(), per_action: false, action_count: 2 }, &samples, &spec(0.9), 1).unwrap();
        assert!((0..10).all(|i| r.q_value(&[i as f64 * 0.3], i % 2) == 2.5));
    }

    #[test]
    fn tabular_weighted_mean() {
        let mut samples = vec![ws(0.0, 0, 0.0, 1.0), ws(0.0, 0, 0.0, 3.0), ws(1.0, 1, 0.0, 5.0)];
        samples[1].w_r = 3.0;
        let r = fit_reward_model(&TabularRegressor, &samples, &spec(0.9), 0).unwrap();
        assert_eq!(r.q_value(&[0.0], 0), 2.5);
        assert_eq!(r.q_value(&[1.0], 1), 5.0);
        assert_eq!(r.q_value(&[1.0], 0), 0.0);
    }

    #[test]
    fn gamma_zero_reproduces_reward_model() {
        let samples = vec![ws(0.0, 0, 1.0, 1.0), ws(1.0, 1, 0.0, -2.0), ws(1.0, 0, 1.0, 0.5)];
        let sp = spec(0.0);
        let r = fit_reward_model(&TabularRegressor, &samples, &sp, 0).unwrap();
        let base: Vec<f64> = samples.iter().map(|s| r.q_value(&s.sample.state, s.sample.action)).collect();
        let q1 = fqi_iterate(&r, &samples, &base, &sp, &TabularRegressor, true, 0).unwrap();
        for s in &samples {
            assert_eq!(q1.q_value(&s.sample.state, s.sample.action), r.q_value(&s.sample.state, s.sample.action));
        }
    }

    #[test]
    fn raw_rewards_give_empirical_bellman_backup() {
        let samples = vec![ws(0.0, 0, 1.0, 1.0), ws(0.0, 1, 0.0, 0.0), ws(1.0, 0, 1.0, 2.0), ws(1.0, 1, 0.0, -1.0)];
        let sp = spec(0.5);
        let q0 = fit_reward_model(&TabularRegressor, &samples, &sp, 0).unwrap();
        let base: Vec<f64> = samples.iter().map(|s| s.sample.reward).collect();
        let q1 = fqi_iterate(&q0, &samples, &base, &sp, &TabularRegressor, false, 0).unwrap();
        for s in &samples {
            let expected = s.sample.reward + 0.5 * q0.max_q(&s.sample.next_state);
            assert_eq!(q1.q_value(&s.sample.state, s.sample.action), expected);
        }
    }

    #[test]
    fn terminal_samples_do_not_bootstrap() {
        let mut s = ws(0.0, 0, 0.0, 1.0);
        s.sample.terminal = true;
        let run = fitted_q_iteration(&TabularRegressor, &[s], &spec(0.9), raw(20), None).unwrap();
        assert_eq!(run.q.q_value(&[0.0], 0), 1.0);
        assert_eq!(run.log.len(), 20);
    }

    #[test]
    fn q_stays_within_bound() {
        // self loop with reward r_max: Q* = q_max
        let samples = vec![ws(0.0, 0, 0.0, 10.0), ws(0.0, 1, 0.0, 10.0)];
        let sp = spec(0.9);
        let run = fitted_q_iteration(&TabularRegressor, &samples, &sp, raw(400), None).unwrap();
        assert!(run.log.iter().all(|l| l.q_max <= sp.q_max() + 1e-9));
        assert!((run.q.q_value(&[0.0], 0) - sp.q_max()).abs() < 1e-6);
    }

    #[test]
    fn zero_weights_rejected() {
        let mut s = ws(0.0, 0, 0.0, 1.0);
        s.w_r = 0.0;
        assert!(matches!(fit_reward_model(&TabularRegressor, &[s], &spec(0.9), 0), Err(Error::ZeroWeights)));
    }

    #[test]
    fn per_action_forests_fit_each_action() {
        let samples: Vec<WeightedSample> = (0..40).map(|i| ws(i as f64 * 0.05, i % 2, 0.0, if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let reg = ErtRegressor { params: ErtParams { n_estimators: 5, ..ErtParams::default() }, per_action: true, action_count: 3 };
        let r = fit_reward_model(&reg, &samples, &spec(0.9), 3).unwrap();
        assert_eq!(r.q_value(&[0.4], 0), 1.0);
        assert_eq!(r.q_value(&[0.4], 1), -1.0);
        assert_eq!(r.q_value(&[0.4], 2), 0.0);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [Variant::Plain, Variant::Iwfqi, Variant::IwfqiIdeal] {
            assert_eq!(Variant::parse(v.name()), Some(v));
        }
    }
}
