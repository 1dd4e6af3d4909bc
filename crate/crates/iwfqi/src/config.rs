//! Experiment configuration files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use iwfqi_core::ert::ErtParams;
use iwfqi_core::fqi::{FqiConfig, Variant};
use iwfqi_core::gp::{FitOptions, ModelSettings, PriorMean};
use iwfqi_core::weights::DivergenceGuard;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePolicyKind {
    /// Plain FQI trained on exploratory data from the source task.
    Pretrained,
    /// Environment-specific rule.
    Handcoded,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstBatchPolicy {
    Random,
    /// The environment's hand-coded policy.
    Expert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub preset: String,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FqiSection {
    pub iterations: usize,
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub n_candidate_splits: Option<usize>,
    pub clamp_q: bool,
    pub per_action_forests: bool,
    /// Fill the `fit_seconds` column of iteration logs.
    pub record_timings: bool,
}

impl Default for FqiSection {
    fn default() -> Self {
        Self {
            iterations: 50,
            n_estimators: 50,
            min_samples_split: 2,
            n_candidate_splits: None,
            clamp_q: true,
            per_action_forests: false,
            record_timings: false,
        }
    }
}

impl FqiSection {
    pub fn to_fqi_config(&self, variant: Variant) -> FqiConfig {
        FqiConfig {
            iterations: self.iterations,
            ert: ErtParams {
                n_estimators: self.n_estimators,
                min_samples_split: self.min_samples_split,
                n_candidate_splits: self.n_candidate_splits,
                seed: 0,
            },
            clamp_q: self.clamp_q,
            variant,
            per_action_forests: self.per_action_forests,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSection {
    pub optimize: bool,
    pub restarts: usize,
    pub max_evaluations: usize,
    pub max_search_points: usize,
    /// Points per fitted GP.
    pub max_points: usize,
    /// Initial length scales; empty derives them from the data spread.
    pub length_scales: Vec<f64>,
    /// Hold the GP noise at the (over-estimated) model noise.
    pub fix_noise: bool,
}

impl Default for GpSection {
    fn default() -> Self {
        Self {
            optimize: true,
            restarts: 2,
            max_evaluations: 150,
            max_search_points: 100,
            max_points: 300,
            length_scales: Vec::new(),
            fix_noise: true,
        }
    }
}

impl GpSection {
    pub fn model_settings(&self, length_scales: Vec<f64>, reward_var: f64, transition_vars: Vec<f64>) -> ModelSettings {
        let (reward_noise_var, transition_noise_vars) =
            if self.fix_noise { (Some(reward_var), Some(transition_vars)) } else { (None, None) };
        ModelSettings {
            length_scales: if self.length_scales.is_empty() { length_scales } else { self.length_scales.clone() },
            fit: FitOptions {
                optimize: self.optimize,
                optimize_noise: !self.fix_noise,
                restarts: self.restarts,
                max_evaluations: self.max_evaluations,
                max_search_points: self.max_search_points,
                prior_mean: PriorMean::Empirical,
            },
            reward_noise_var,
            transition_noise_vars,
            max_points: self.max_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Multiplies every model noise variance.
    pub overestimation: f64,
    /// Used where a task has no reward noise of its own.
    pub reward_var_floor: f64,
    /// Used for state dimensions without transition noise.
    pub transition_var_floor: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { overestimation: 1.0, reward_var_floor: 0.01, transition_var_floor: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Number of start states requested from the environment.
    pub starts: usize,
    /// Episodes per start state.
    pub episodes: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { starts: 1, episodes: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub episodes: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self { episodes: 500, iterations: 50, seed: 1 }
    }
}

/// Complete declarative description of one transfer experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Environment preset name or path of the target task.
    pub target: String,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default = "default_source_policy")]
    pub source_policy: SourcePolicyKind,
    #[serde(default)]
    pub source_epsilon: f64,
    pub batch_episodes: usize,
    pub batches: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_first_batch")]
    pub first_batch: FirstBatchPolicy,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub fqi: FqiSection,
    #[serde(default)]
    pub gp: GpSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub weights: DivergenceGuard,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub pretrain: PretrainSection,
}

fn default_source_policy() -> SourcePolicyKind {
    SourcePolicyKind::Pretrained
}
fn default_epsilon() -> f64 {
    0.3
}
fn default_first_batch() -> FirstBatchPolicy {
    FirstBatchPolicy::Random
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).context("invalid experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_episodes == 0 || self.batches == 0 {
            bail!("batch_episodes and batches must be positive");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.variants.is_empty() {
            bail!("at least one variant is required");
        }
        if self.sources.iter().any(|s| s.episodes == 0) {
            bail!("source budgets must be positive");
        }
        for eps in [self.epsilon, self.source_epsilon] {
            if !(0.0..=1.0).contains(&eps) {
                bail!("epsilon must lie in [0, 1]");
            }
        }
        if self.noise.overestimation < 1.0 {
            bail!("noise overestimation must be at least 1");
        }
        if self.evaluation.starts == 0 || self.evaluation.episodes == 0 {
            bail!("evaluation needs at least one start and one episode");
        }
        self.fqi.to_fqi_config(Variant::Plain).validate()?;
        Ok(())
    }

    /// Copy restricted to the given seed and, optionally, one variant.
    pub fn restricted(&self, seed: Option<u64>, variant: Option<Variant>) -> Self {
        let mut c = self.clone();
        if let Some(s) = seed {
            c.seeds = vec![s];
        }
        if let Some(v) = variant {
            c.variants = vec![v];
        }
        c
    }
}
