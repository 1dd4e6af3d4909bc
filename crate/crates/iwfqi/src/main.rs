use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iwfqi::config::ExperimentConfig;
use iwfqi::harness::{self, collect_episodes, Experiment, Handcoded};
use iwfqi::{io, presets, svg};
use iwfqi_core::env::Environment;
use iwfqi_core::fqi::{ErtQ, QFunction, Variant};
use iwfqi_core::policy::UniformPolicy;
use iwfqi_core::{Dataset, SeedStream};

#[derive(Parser)]
#[command(name = "iwfqi", version, about = "Importance weighted fitted Q-iteration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect source datasets and the first target batch of an experiment,
    /// or raw episodes of one environment with --env.
    Collect {
        #[command(flatten)]
        exp: ExpArgs,
        /// Environment preset (or .toml path) to sample from directly.
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        env: Option<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, value_enum, default_value_t = RawPolicy::Random)]
        policy: RawPolicy,
    },
    /// Fit models and weights and run one algorithm on collected data.
    Train {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Evaluate a trained Q-function in the target task.
    Evaluate {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Redraw charts and print the learning curves of a finished run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// The full multi-seed pipeline.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// Experiment config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long)]
    preset: Option<String>,
    /// Restrict to a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to a single variant: plain, iwfqi or iwfqi-ideal.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RawPolicy {
    Random,
    Handcoded,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant `{s}`"))
}

impl ExpArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let config = match (&self.config, &self.preset) {
            (Some(p), None) => ExperimentConfig::load(p)?,
            (None, Some(name)) => presets::experiment(name)?,
            (None, None) => bail!("pass --config <path> or --preset <name>"),
            (Some(_), Some(_)) => bail!("--config and --preset are exclusive"),
        };
        Ok(config.restricted(self.seed, self.variant))
    }

    fn seed(&self, config: &ExperimentConfig) -> u64 {
        self.seed.unwrap_or(config.seeds[0])
    }

    fn variant(&self, config: &ExperimentConfig) -> Variant {
        self.variant.unwrap_or(config.variants[0])
    }
}

fn source_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("source-{id}.csv"))
}

fn load_sources(exp: &Experiment, dir: &Path) -> Result<Vec<Dataset>> {
    (1..=exp.sources.len()).map(|id| io::load_dataset(&source_path(dir, id), Some(exp.action_count()))).collect()
}

fn collect(exp_args: &ExpArgs, env: Option<&str>, episodes: usize, policy: RawPolicy) -> Result<()> {
    if let Some(name) = env {
        let task = presets::environment(name)?;
        let streams = SeedStream::new(exp_args.seed.unwrap_or(0));
        let data = match policy {
            RawPolicy::Random => collect_episodes(&task, &UniformPolicy { action_count: task.spec().action_count }, episodes, 0, &streams, false)?,
            RawPolicy::Handcoded => collect_episodes(&task, &Handcoded::for_task(&task), episodes, 0, &streams, false)?,
        };
        let path = if exp_args.out.extension().is_some() { exp_args.out.clone() } else { exp_args.out.join("episodes.csv") };
        io::save_dataset(&path, &data)?;
        println!("{} samples -> {}", data.len(), path.display());
        return Ok(());
    }
    let config = exp_args.load()?;
    let seed = exp_args.seed(&config);
    let exp = Experiment::prepare(config)?;
    for (j, d) in exp.collect_sources(seed)?.iter().enumerate() {
        io::save_dataset(&source_path(&exp_args.out, j + 1), d)?;
        println!("source {}: {} samples", j + 1, d.len());
    }
    let first = exp.collect_target_batch(seed, 1, &first_batch_policy(&exp))?;
    io::save_dataset(&exp_args.out.join("target.csv"), &first)?;
    println!("target: {} samples -> {}", first.len(), exp_args.out.display());
    Ok(())
}

fn first_batch_policy(exp: &Experiment) -> Box<dyn iwfqi_core::Policy> {
    match exp.config.first_batch {
        iwfqi::config::FirstBatchPolicy::Random => Box::new(UniformPolicy { action_count: exp.action_count() }),
        iwfqi::config::FirstBatchPolicy::Expert => Box::new(Handcoded::for_task(&exp.target)),
    }
}

fn train(args: &ExpArgs) -> Result<()> {
    let config = args.load()?;
    let (seed, variant) = (args.seed(&config), args.variant(&config));
    let exp = Experiment::load(config)?;
    let target = io::load_dataset(&args.out.join("target.csv"), Some(exp.action_count()))?;
    let sources = if variant == Variant::Plain { Vec::new() } else { load_sources(&exp, &args.out)? };
    let source_models = if variant == Variant::Iwfqi { exp.fit_source_models(&sources)? } else { Vec::new() };
    for (j, m) in source_models.iter().enumerate() {
        harness::save_models(&args.out.join("models").join(format!("task-{}.json", j + 1)), m)?;
    }
    let (out, target_models) = exp.train(variant, &target, &sources, &source_models, SeedStream::new(seed).seed("fqi", 1))?;
    if let Some(m) = &target_models {
        harness::save_models(&args.out.join("models").join("task-0.json"), m)?;
    }
    io::save_weighted(&args.out.join("weighted.csv"), &out.weights.samples)?;
    io::save_iterations(&args.out.join("iterations.csv"), &out.log)?;
    io::save_json(&args.out.join("q.json"), &out.q)?;
    let diag = serde_json::json!({
        "variant": variant.name(),
        "seed": seed,
        "reward": out.weights.reward,
        "transition": out.weights.transition,
        "transfer": out.weights.transfer_ratios(),
    });
    io::save_json(&args.out.join("diagnostics.json"), &diag)?;
    let last = out.log.last().ok_or_else(|| anyhow!("no iterations ran"))?;
    println!("{}: {} samples, final q range [{:.4}, {:.4}]", variant.name(), out.weights.samples.len(), last.q_min, last.q_max);
    Ok(())
}

fn evaluate(args: &ExpArgs) -> Result<()> {
    let config = args.load()?;
    let seed = args.seed(&config);
    let target = presets::environment(&config.target)?;
    let q: QFunction<ErtQ> = io::load_json(&args.out.join("q.json"))?;
    let streams = SeedStream::new(seed).child("eval", 0);
    let (mean, ci) = harness::evaluate_policy(&target, &q.greedy_policy(), &config.evaluation, &streams)?;
    io::save_json(&args.out.join("evaluation.json"), &serde_json::json!({ "mean_return": mean, "ci95": ci }))?;
    println!("mean discounted return {mean:.4} +/- {ci:.4}");
    Ok(())
}

fn report(out: &Path) -> Result<()> {
    let curves = io::load_results(&out.join("results.csv"))?;
    let name = out.file_name().map_or("results".to_string(), |n| n.to_string_lossy().into_owned());
    io::save_text(&out.join("learning_curve.svg"), &svg::learning_curve(&name, &curves))?;
    println!("{:>6} {:>9} {:>14} {:>10}  variant", "batch", "episodes", "mean_return", "ci95");
    for c in &curves {
        println!("{:>6} {:>9} {:>14.4} {:>10.4}  {}", c.batch, c.episodes_seen, c.mean_return, c.ci95, c.variant);
    }
    for entry in std::fs::read_dir(out).with_context(|| format!("listing {}", out.display()))? {
        let path = entry?.path();
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if let (Some(variant), Some("csv")) = (stem.strip_prefix("transfer_"), path.extension().and_then(|e| e.to_str())) {
            let rows = io::load_transfer(&path)?;
            io::save_text(&path.with_extension("svg"), &svg::transfer_chart(&format!("{name} ({variant})"), &rows))?;
        }
    }
    Ok(())
}

fn run(args: &ExpArgs) -> Result<()> {
    let config = args.load()?;
    let exp = Experiment::prepare(config.clone())?;
    let result = exp.run()?;
    result.write(&args.out, &config)?;
    for c in &result.curves {
        println!("{} batch {:>3} ({:>4} episodes): {:>12.4} +/- {:.4}", c.variant, c.batch, c.episodes_seen, c.mean_return, c.ci95);
    }
    if !result.failed.is_empty() {
        eprintln!("{} seed(s) failed; see diagnostics.json", result.failed.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Collect { exp, env, episodes, policy } => collect(&exp, env.as_deref(), episodes, policy),
        Command::Train { exp } => train(&exp),
        Command::Evaluate { exp } => evaluate(&exp),
        Command::Report { out } => report(&out),
        Command::Run { exp } => run(&exp),
    }
}
