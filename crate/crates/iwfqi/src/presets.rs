//! Built-in environment and experiment presets.
//!
//! A name resolves to the embedded preset; anything ending in `.toml` is read
//! from disk instead.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use iwfqi_core::env::{EnvConfig, Task};

use crate::config::ExperimentConfig;

macro_rules! embed {
    ($dir:literal: $($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../presets/", $dir, "/", $name, ".toml")))),*]
    };
}

pub const ENVIRONMENTS: &[(&str, &str)] = embed!("env":
    "puddle-shared-target",
    "puddle-shared-source-1",
    "puddle-shared-source-2",
    "puddle-shared-source-3",
    "puddle-based-target",
    "puddle-based-source-1",
    "puddle-based-source-2",
    "puddle-based-source-3",
    "acrobot-target",
    "acrobot-source-swing",
    "acrobot-source-spin",
    "reservoir-target",
    "reservoir-source-1",
    "reservoir-source-2",
    "reservoir-source-3",
    "reservoir-source-4",
    "reservoir-source-5",
    "reservoir-source-6",
);

pub const EXPERIMENTS: &[(&str, &str)] = embed!("experiments":
    "puddle-shared",
    "puddle-based",
    "acrobot",
    "acrobot-transfer",
    "reservoir",
    "puddle-shared-full",
    "puddle-based-full",
    "acrobot-full",
    "reservoir-full",
);

fn is_path(name: &str) -> bool {
    name.ends_with(".toml")
}

fn lookup<'a>(table: &'a [(&str, &str)], name: &str) -> Option<&'a str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn env_config(name: &str) -> Result<EnvConfig> {
    let text = if is_path(name) {
        std::fs::read_to_string(name).with_context(|| format!("reading {name}"))?
    } else {
        lookup(ENVIRONMENTS, name).ok_or_else(|| anyhow!("unknown environment preset `{name}`"))?.to_string()
    };
    toml::from_str(&text).with_context(|| format!("invalid environment `{name}`"))
}

pub fn environment(name: &str) -> Result<Task> {
    env_config(name)?.build().map_err(|e| anyhow!("environment `{name}`: {e}"))
}

pub fn experiment(name: &str) -> Result<ExperimentConfig> {
    if is_path(name) {
        return ExperimentConfig::load(Path::new(name));
    }
    let text = lookup(EXPERIMENTS, name).ok_or_else(|| anyhow!("unknown experiment preset `{name}`"))?;
    ExperimentConfig::from_toml(text).with_context(|| format!("in preset `{name}`"))
}
