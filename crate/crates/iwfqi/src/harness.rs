//! Experiment orchestration: data collection, model fitting, algorithm runs,
//! evaluation and aggregation over seeds.
//!
//! Every random draw comes from a stream derived from the seed and a fixed
//! path (`source/j/episode/e`, `target/b/episode/e`, `eval/b/...`). All
//! variants of a seed see the same streams, so they are compared under common
//! random numbers, and a seed's output never depends on thread scheduling.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use iwfqi_core::env::{AcrobotTask, Environment, ReservoirExpert, Task};
use iwfqi_core::fqi::{
    fitted_q_iteration, run_algorithm, AlgorithmInput, ErtQ, IterationStats, LoopSettings, QFunction, Variant, Weighting,
};
use iwfqi_core::gp::{TaskModel, TaskModels};
use iwfqi_core::policy::{Policy, QPolicy, UniformPolicy};
use iwfqi_core::weights::{NoiseSpec, TaskNoise, WeightDiagnostics};
use iwfqi_core::{Dataset, SeedStream, StreamRng, TransitionSample, WeightedSample};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{EvaluationSection, ExperimentConfig, FirstBatchPolicy, NoiseSection, SourcePolicyKind};
use crate::io::{self, CurvePoint, TaskModelsRecord, TransferPoint};
use crate::presets;
use crate::svg;

/// A behaviour policy usable from worker threads.
pub type BoxPolicy = Box<dyn Policy + Send + Sync>;

/// Acts randomly with probability `epsilon`, otherwise defers to `inner`.
#[derive(Debug, Clone)]
pub struct EpsilonGreedy<P> {
    pub inner: P,
    pub epsilon: f64,
    pub action_count: usize,
}

impl<P: Policy> Policy for EpsilonGreedy<P> {
    fn act(&self, state: &[f64], rng: &mut StreamRng) -> usize {
        if self.epsilon > 0.0 && rng.random::<f64>() < self.epsilon {
            rng.random_range(0..self.action_count)
        } else {
            self.inner.act(state, rng)
        }
    }
}

/// Environment-specific rules.
#[derive(Debug, Clone)]
pub enum Handcoded {
    /// Head for the goal corner along the axis with the larger gap.
    Puddle,
    /// Torque against the first joint's velocity pumps energy in.
    AcrobotSwing,
    /// Drive the first joint's velocity towards the spin target.
    AcrobotSpin,
    Reservoir(ReservoirExpert),
}

impl Handcoded {
    pub fn for_task(task: &Task) -> Self {
        match task {
            Task::PuddleWorld(_) => Handcoded::Puddle,
            Task::Acrobot(a) => match a.config().task {
                AcrobotTask::SwingUp => Handcoded::AcrobotSwing,
                AcrobotTask::ConstantSpin => Handcoded::AcrobotSpin,
            },
            Task::WaterReservoir(r) => Handcoded::Reservoir(ReservoirExpert::new(r.config())),
        }
    }
}

impl Policy for Handcoded {
    fn act(&self, s: &[f64], rng: &mut StreamRng) -> usize {
        match self {
            Handcoded::Puddle => {
                if 9.5 - s[0] > 9.5 - s[1] {
                    3
                } else {
                    0
                }
            }
            Handcoded::AcrobotSwing => usize::from(s[2] < 0.0),
            Handcoded::AcrobotSpin => usize::from(s[2] < std::f64::consts::PI),
            Handcoded::Reservoir(e) => e.act(s, rng),
        }
    }
}

/// Runs `n` episodes, truncated at the horizon or on termination. Episode
/// `e` draws from `streams.rng("episode", e)` only.
pub fn collect_episodes<E, P>(env: &E, policy: &P, n: usize, task_id: u32, streams: &SeedStream, exploring: bool) -> Result<Dataset>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    let spec = env.spec();
    let mut data = Dataset::new(spec.state_dim, spec.action_count);
    for e in 0..n {
        let mut rng = streams.rng("episode", e as u64);
        let mut state = if exploring { env.reset_exploring(&mut rng) } else { env.reset(&mut rng) };
        for _ in 0..spec.horizon {
            let action = policy.act(&state, &mut rng);
            let step = env.step(&state, action, &mut rng).map_err(|e| anyhow!("{e}"))?;
            let done = step.done;
            data.push(TransitionSample {
                state,
                action,
                next_state: step.next_state.clone(),
                reward: step.reward,
                terminal: done,
                task_id,
            })
            .map_err(|e| anyhow!("{e}"))?;
            if done {
                break;
            }
            state = step.next_state;
        }
    }
    Ok(data)
}

/// Discounted returns of one rollout per `(start, repetition)`.
pub fn rollout_returns<E, P>(env: &E, policy: &P, protocol: &EvaluationSection, streams: &SeedStream) -> Result<Vec<f64>>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    let spec = env.spec();
    let starts = env.evaluation_starts(protocol.starts);
    let mut returns = Vec::with_capacity(starts.len() * protocol.episodes);
    for (i, start) in starts.iter().enumerate() {
        for k in 0..protocol.episodes {
            let mut rng = streams.rng("episode", (i * protocol.episodes + k) as u64);
            let (mut state, mut total, mut discount) = (start.clone(), 0.0, 1.0);
            for _ in 0..spec.horizon {
                let action = policy.act(&state, &mut rng);
                let step = env.step(&state, action, &mut rng).map_err(|e| anyhow!("{e}"))?;
                total += discount * step.reward;
                discount *= spec.gamma;
                if step.done {
                    break;
                }
                state = step.next_state;
            }
            returns.push(total);
        }
    }
    Ok(returns)
}

/// Mean discounted return and its 95% half-width.
pub fn evaluate_policy<E, P>(env: &E, policy: &P, protocol: &EvaluationSection, streams: &SeedStream) -> Result<(f64, f64)>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    Ok(mean_ci95(&rollout_returns(env, policy, protocol, streams)?))
}

/// Sample mean and Student-t 95% half-width; the width is 0 below two values.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    (mean, t * (var / n as f64).sqrt())
}

/// Noise variances of a task for weight computation: the true ones where the
/// environment has them, the floors elsewhere.
pub fn task_noise(task: &Task, floors: &NoiseSection) -> TaskNoise {
    let dim = task.spec().state_dim;
    match task {
        Task::PuddleWorld(p) => TaskNoise {
            reward_var: p.config().reward_noise_var.max(floors.reward_var_floor),
            transition_vars: vec![p.config().transition_noise_var.max(floors.transition_var_floor); dim],
        },
        Task::Acrobot(_) => TaskNoise { reward_var: floors.reward_var_floor, transition_vars: vec![floors.transition_var_floor; dim] },
        Task::WaterReservoir(r) => TaskNoise {
            reward_var: floors.reward_var_floor,
            transition_vars: vec![floors.transition_var_floor, r.config().inflow_noise_var.max(floors.transition_var_floor)],
        },
    }
}

/// Plain FQI on exploratory random data, greedy.
pub fn pretrain_policy(env: &Task, config: &ExperimentConfig, streams: &SeedStream) -> Result<QFunction<ErtQ>> {
    let spec = env.spec();
    let explore = UniformPolicy { action_count: spec.action_count };
    let data = collect_episodes(env, &explore, config.pretrain.episodes, 0, streams, true)?;
    let fqi = config.fqi.to_fqi_config(Variant::Plain);
    let regressor = fqi.regressor(spec.action_count);
    let samples: Vec<WeightedSample> = data.samples().iter().cloned().map(WeightedSample::unit).collect();
    let settings = LoopSettings { iterations: config.pretrain.iterations, use_reward_model: false, clamp_q: fqi.clamp_q, seed: streams.seed("fqi", 0) };
    let run = fitted_q_iteration(&regressor, &samples, spec, settings, None).map_err(|e| anyhow!("{e}"))?;
    Ok(run.q)
}

/// Behaviour policy of source `index` (0-based).
pub fn make_source_policy(env: &Task, index: usize, config: &ExperimentConfig) -> Result<BoxPolicy> {
    let action_count = env.spec().action_count;
    let wrap = |inner: BoxPolicy| -> BoxPolicy { Box::new(EpsilonGreedy { inner, epsilon: config.source_epsilon, action_count }) };
    Ok(match config.source_policy {
        SourcePolicyKind::Random => Box::new(UniformPolicy { action_count }),
        SourcePolicyKind::Handcoded => wrap(Box::new(Handcoded::for_task(env))),
        SourcePolicyKind::Pretrained => {
            let streams = SeedStream::new(config.pretrain.seed).child("pretrain", index as u64);
            wrap(Box::new(QPolicy::greedy(pretrain_policy(env, config, &streams)?)))
        }
    })
}

/// Per-dimension standard deviation of the states, floored at 1e-3.
fn state_spread(samples: &[TransitionSample], dim: usize) -> Vec<f64> {
    let n = samples.len().max(1) as f64;
    (0..dim)
        .map(|d| {
            let mean = samples.iter().map(|s| s.state[d]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s.state[d] - mean).powi(2)).sum::<f64>() / n;
            var.sqrt().max(1e-3)
        })
        .collect()
}

/// Outcome of one algorithm run after one target batch.
#[derive(Debug, Clone, Serialize)]
pub struct BatchOutcome {
    pub batch: usize,
    pub episodes_seen: usize,
    pub target_samples: usize,
    pub pooled_samples: usize,
    pub mean_return: f64,
    /// `(source id, reward share, transition share)`.
    pub transfer: Vec<(u32, f64, f64)>,
    pub reward: WeightDiagnostics,
    pub transition: WeightDiagnostics,
    #[serde(skip)]
    pub log: Vec<IterationStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantRun {
    pub variant: Variant,
    pub batches: Vec<BatchOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub variants: Vec<VariantRun>,
}

/// Resolved environments and source policies of an experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub target: Task,
    pub sources: Vec<Task>,
    pub source_policies: Vec<BoxPolicy>,
    pub noise: NoiseSpec,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("config", &self.config.name).field("sources", &self.sources.len()).finish()
    }
}

impl Experiment {
    /// Builds the environments and trains the source policies.
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        let mut exp = Self::load(config)?;
        exp.source_policies = exp
            .sources
            .par_iter()
            .enumerate()
            .map(|(j, env)| make_source_policy(env, j, &exp.config).with_context(|| format!("source policy {}", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok(exp)
    }

    /// Builds the environments only; enough to train on collected data.
    pub fn load(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let target = presets::environment(&config.target)?;
        let sources = config.sources.iter().map(|s| presets::environment(&s.preset)).collect::<Result<Vec<_>>>()?;
        for (s, c) in sources.iter().zip(&config.sources) {
            let (a, b) = (s.spec(), target.spec());
            if a.state_dim != b.state_dim || a.action_count != b.action_count {
                bail!("source `{}` has a different state or action space than the target", c.preset);
            }
        }
        let mut noise = NoiseSpec::new(config.noise.overestimation).map_err(|e| anyhow!("{e}"))?;
        for (id, task) in std::iter::once(&target).chain(&sources).enumerate() {
            noise.insert(id as u32, task_noise(task, &config.noise)).map_err(|e| anyhow!("{e}"))?;
        }
        Ok(Self { config, target, sources, source_policies: Vec::new(), noise })
    }

    pub fn action_count(&self) -> usize {
        self.target.spec().action_count
    }

    pub fn state_dim(&self) -> usize {
        self.target.spec().state_dim
    }

    /// Source datasets of a seed, ids `1..`.
    pub fn collect_sources(&self, seed: u64) -> Result<Vec<Dataset>> {
        if self.source_policies.len() != self.sources.len() {
            bail!("source policies have not been prepared");
        }
        let streams = SeedStream::new(seed).child("source", 0);
        self.sources
            .iter()
            .zip(&self.source_policies)
            .zip(&self.config.sources)
            .enumerate()
            .map(|(j, ((env, policy), sc))| {
                collect_episodes(env, policy.as_ref(), sc.episodes, j as u32 + 1, &streams.child("task", j as u64), false)
            })
            .collect()
    }

    /// Behaviour policy for target batch `batch` (1-based).
    fn behaviour<'a>(&'a self, batch: usize, q: Option<&'a QFunction<ErtQ>>) -> BoxPolicyRef<'a> {
        let action_count = self.action_count();
        match (batch, q) {
            (1, _) | (_, None) => match self.config.first_batch {
                FirstBatchPolicy::Random => BoxPolicyRef::Owned(Box::new(UniformPolicy { action_count })),
                FirstBatchPolicy::Expert => BoxPolicyRef::Owned(Box::new(Handcoded::for_task(&self.target))),
            },
            (_, Some(q)) => BoxPolicyRef::Q(QPolicy::epsilon_greedy(q, self.config.epsilon)),
        }
    }

    /// Collects target batch `batch` with the given policy.
    pub fn collect_target_batch<P: Policy + ?Sized>(&self, seed: u64, batch: usize, policy: &P) -> Result<Dataset> {
        let streams = SeedStream::new(seed).child("target", batch as u64);
        collect_episodes(&self.target, policy, self.config.batch_episodes, 0, &streams, false)
    }

    /// GP bundle of one task's data.
    pub fn fit_models(&self, task_id: u32, data: &Dataset) -> Result<TaskModels> {
        let settings = self.config.gp.model_settings(
            state_spread(data.samples(), self.state_dim()),
            self.noise.reward_var(task_id).map_err(|e| anyhow!("{e}"))?,
            self.noise.transition_vars(task_id).map_err(|e| anyhow!("{e}"))?,
        );
        TaskModels::fit(data.samples(), self.state_dim(), self.action_count(), &settings)
            .map_err(|e| anyhow!("task {task_id} models: {e}"))
    }

    /// Source GP bundles, fitted once per seed.
    pub fn fit_source_models(&self, sources: &[Dataset]) -> Result<Vec<TaskModels>> {
        sources.iter().enumerate().map(|(j, d)| self.fit_models(j as u32 + 1, d)).collect()
    }

    /// One algorithm run on the given data.
    pub fn train(
        &self,
        variant: Variant,
        target: &Dataset,
        sources: &[Dataset],
        source_models: &[TaskModels],
        seed: u64,
    ) -> Result<(iwfqi_core::fqi::AlgorithmOutput<ErtQ>, Option<TaskModels>)> {
        let fqi = self.config.fqi.to_fqi_config(variant);
        let regressor = fqi.regressor(self.action_count());
        let start = Instant::now();
        let clock = move || start.elapsed().as_secs_f64();
        let clock_ref: &dyn Fn() -> f64 = &clock;
        let clock = self.config.fqi.record_timings.then_some(clock_ref);
        let spec = self.target.spec();
        match variant {
            Variant::Plain => {
                let input = AlgorithmInput { target, sources: &[], weighting: None };
                Ok((run_algorithm(&fqi, spec, &regressor, input, seed, clock).map_err(|e| anyhow!("{e}"))?, None))
            }
            Variant::Iwfqi => {
                let target_models = self.fit_models(0, target)?;
                let mut models: BTreeMap<u32, &dyn TaskModel> = BTreeMap::new();
                models.insert(0, &target_models);
                for (j, m) in source_models.iter().enumerate() {
                    models.insert(j as u32 + 1, m);
                }
                let weighting = Weighting::Estimated { models: &models, noise: &self.noise, guard: self.config.weights };
                let input = AlgorithmInput { target, sources, weighting: Some(weighting) };
                let out = run_algorithm(&fqi, spec, &regressor, input, seed, clock).map_err(|e| anyhow!("{e}"))?;
                Ok((out, Some(target_models)))
            }
            Variant::IwfqiIdeal => {
                let mut envs: BTreeMap<u32, &dyn Environment> = BTreeMap::new();
                envs.insert(0, &self.target);
                for (j, e) in self.sources.iter().enumerate() {
                    envs.insert(j as u32 + 1, e);
                }
                let input = AlgorithmInput { target, sources, weighting: Some(Weighting::Ideal { envs: &envs }) };
                Ok((run_algorithm(&fqi, spec, &regressor, input, seed, clock).map_err(|e| anyhow!("{e}"))?, None))
            }
        }
    }

    /// Mean discounted return of the greedy policy after batch `batch`.
    pub fn evaluate<P: Policy + ?Sized>(&self, seed: u64, batch: usize, policy: &P) -> Result<f64> {
        let streams = SeedStream::new(seed).child("eval", batch as u64);
        Ok(evaluate_policy(&self.target, policy, &self.config.evaluation, &streams)?.0)
    }

    /// The full batch loop of every variant for one seed.
    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let sources = self.collect_sources(seed)?;
        let needs_models = self.config.variants.contains(&Variant::Iwfqi);
        let source_models = if needs_models { self.fit_source_models(&sources)? } else { Vec::new() };
        let pooled_sources: usize = sources.iter().map(Dataset::len).sum();
        let streams = SeedStream::new(seed);
        let mut variants = Vec::new();
        for &variant in &self.config.variants {
            let mut target = Dataset::new(self.state_dim(), self.action_count());
            let mut q: Option<QFunction<ErtQ>> = None;
            let mut batches = Vec::with_capacity(self.config.batches);
            for b in 1..=self.config.batches {
                let behaviour = self.behaviour(b, q.as_ref());
                let batch = self.collect_target_batch(seed, b, behaviour.as_policy())?;
                drop(behaviour);
                target.extend_from(&batch).map_err(|e| anyhow!("{e}"))?;
                let (out, _) = self
                    .train(variant, &target, &sources, &source_models, streams.seed("fqi", b as u64))
                    .with_context(|| format!("{} batch {b}", variant.name()))?;
                let mean_return = self.evaluate(seed, b, &out.policy())?;
                log::info!("seed {seed} {} batch {b}: return {mean_return:.4}", variant.name());
                batches.push(BatchOutcome {
                    batch: b,
                    episodes_seen: b * self.config.batch_episodes,
                    target_samples: target.len(),
                    pooled_samples: if variant == Variant::Plain { target.len() } else { target.len() + pooled_sources },
                    mean_return,
                    transfer: out.weights.transfer_ratios(),
                    reward: out.weights.reward,
                    transition: out.weights.transition,
                    log: out.log,
                });
                q = Some(out.q);
            }
            variants.push(VariantRun { variant, batches });
        }
        Ok(SeedRun { seed, variants })
    }

    /// Runs every seed (in parallel) and aggregates the completed ones.
    pub fn run(&self) -> Result<ExperimentResult> {
        let outcomes: Vec<(u64, Result<SeedRun>)> = self.config.seeds.par_iter().map(|&s| (s, self.run_seed(s))).collect();
        let mut seeds = Vec::new();
        let mut failed = Vec::new();
        for (seed, r) in outcomes {
            match r {
                Ok(run) => seeds.push(run),
                Err(e) => {
                    log::warn!("seed {seed} failed: {e:#}");
                    failed.push((seed, format!("{e:#}")));
                }
            }
        }
        if seeds.is_empty() {
            bail!("every seed failed; first error: {}", failed.first().map_or("", |f| f.1.as_str()));
        }
        if !failed.is_empty() {
            log::warn!("aggregating {} of {} seeds", seeds.len(), self.config.seeds.len());
        }
        Ok(ExperimentResult::aggregate(&self.config, seeds, failed))
    }
}

enum BoxPolicyRef<'a> {
    Owned(BoxPolicy),
    Q(QPolicy<&'a QFunction<ErtQ>>),
}

impl BoxPolicyRef<'_> {
    fn as_policy(&self) -> &dyn Policy {
        match self {
            BoxPolicyRef::Owned(p) => p.as_ref(),
            BoxPolicyRef::Q(q) => q,
        }
    }
}

/// Aggregated curves plus the raw per-seed runs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub curves: Vec<CurvePoint>,
    pub transfer: BTreeMap<String, Vec<TransferPoint>>,
    pub failed: Vec<(u64, String)>,
    pub seeds: Vec<SeedRun>,
}

impl ExperimentResult {
    pub fn aggregate(config: &ExperimentConfig, mut seeds: Vec<SeedRun>, failed: Vec<(u64, String)>) -> Self {
        seeds.sort_by_key(|s| s.seed);
        let mut curves = Vec::new();
        let mut transfer = BTreeMap::new();
        for (vi, &variant) in config.variants.iter().enumerate() {
            let mut tp = Vec::new();
            for b in 0..config.batches {
                let outcomes: Vec<&BatchOutcome> = seeds.iter().map(|s| &s.variants[vi].batches[b]).collect();
                let returns: Vec<f64> = outcomes.iter().map(|o| o.mean_return).collect();
                let (mean, ci) = mean_ci95(&returns);
                curves.push(CurvePoint {
                    batch: b + 1,
                    episodes_seen: (b + 1) * config.batch_episodes,
                    mean_return: mean,
                    ci95: ci,
                    variant: variant.name().to_string(),
                    seed_count: returns.len(),
                });
                let mut mass: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
                for o in &outcomes {
                    for &(id, r, p) in &o.transfer {
                        let e = mass.entry(id).or_insert((0.0, 0.0));
                        e.0 += r;
                        e.1 += p;
                    }
                }
                let n = outcomes.len() as f64;
                tp.extend(mass.into_iter().map(|(id, (r, p))| TransferPoint {
                    batch: b + 1,
                    source_id: id,
                    reward_mass: r / n,
                    transition_mass: p / n,
                }));
            }
            if variant != Variant::Plain {
                transfer.insert(variant.name().to_string(), tp);
            }
        }
        Self { name: config.name.clone(), curves, transfer, failed, seeds }
    }

    /// Curve of one variant, in batch order.
    pub fn curve(&self, variant: Variant) -> Vec<&CurvePoint> {
        self.curves.iter().filter(|c| c.variant == variant.name()).collect()
    }

    /// Writes results, transfer ratios, diagnostics, iteration logs and charts.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        io::save_text(&dir.join("config.toml"), &config.to_toml()?)?;
        io::save_results(&dir.join("results.csv"), &self.curves)?;
        for (variant, rows) in &self.transfer {
            io::save_transfer(&dir.join(format!("transfer_{variant}.csv")), rows)?;
            io::save_text(&dir.join(format!("transfer_{variant}.svg")), &svg::transfer_chart(&format!("{} ({variant})", self.name), rows))?;
        }
        io::save_json(&dir.join("diagnostics.json"), &Diagnostics::from(self))?;
        for s in &self.seeds {
            for v in &s.variants {
                for b in &v.batches {
                    let path = dir.join(format!("seed-{}", s.seed)).join(v.variant.name()).join(format!("iterations-batch-{}.csv", b.batch));
                    io::save_iterations(&path, &b.log)?;
                }
            }
        }
        io::save_text(&dir.join("learning_curve.svg"), &svg::learning_curve(&self.name, &self.curves))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    name: &'a str,
    completed_seeds: Vec<u64>,
    failed_seeds: &'a [(u64, String)],
    runs: &'a [SeedRun],
}

impl<'a> From<&'a ExperimentResult> for Diagnostics<'a> {
    fn from(r: &'a ExperimentResult) -> Self {
        Self { name: &r.name, completed_seeds: r.seeds.iter().map(|s| s.seed).collect(), failed_seeds: &r.failed, runs: &r.seeds }
    }
}

/// Saves a fitted model bundle as JSON.
pub fn save_models(path: &Path, models: &TaskModels) -> Result<()> {
    io::save_json(path, &TaskModelsRecord::from_models(models))
}
