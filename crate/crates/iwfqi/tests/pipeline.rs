//! End-to-end runs of the experiment pipeline on a tiny configuration.

use std::path::Path;
use std::process::Command;

use iwfqi::harness::{evaluate_policy, pretrain_policy, Experiment};
use iwfqi::{presets, ExperimentConfig};
use iwfqi_core::env::Environment;
use iwfqi_core::fqi::Variant;
use iwfqi_core::policy::UniformPolicy;
use iwfqi_core::SeedStream;

const TINY: &str = r#"
name = "tiny"
target = "puddle-shared-target"
source_policy = "handcoded"
source_epsilon = 0.2
batch_episodes = 1
batches = 2
variants = ["plain", "iwfqi", "iwfqi_ideal"]
seeds = [3, 4]

[[sources]]
preset = "puddle-shared-source-1"
episodes = 2

[[sources]]
preset = "puddle-shared-source-2"
episodes = 2

[fqi]
iterations = 3
n_estimators = 5

[gp]
restarts = 1
max_evaluations = 30

[noise]
overestimation = 10.0

[evaluation]
episodes = 2
"#;

fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_toml(TINY).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn library_runs_are_reproducible() {
    let config = tiny();
    let exp = Experiment::prepare(config.clone()).unwrap();
    let (a, b) = (exp.run().unwrap(), exp.run().unwrap());
    assert!(a.failed.is_empty());
    assert_eq!(a.curves.len(), 3 * 2);
    assert_eq!(a.curves, b.curves);
    assert!(a.curve(Variant::Plain).iter().all(|p| p.seed_count == 2));
    assert_eq!(a.transfer.len(), 2);
    for points in a.transfer.values() {
        for batch in 1..=2 {
            let total: f64 = points.iter().filter(|p| p.batch == batch).map(|p| p.reward_mass).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path(), &config).unwrap();
    for name in ["config.toml", "results.csv", "transfer_iwfqi.csv", "learning_curve.svg", "diagnostics.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(dir.path().join("seed-3/iwfqi/iterations-batch-2.csv").exists());
    let written = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(written, config);
}

#[test]
fn cli_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let bin = env!("CARGO_BIN_EXE_iwfqi");
    for out in ["a", "b"] {
        let status = Command::new(bin)
            .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    for name in ["results.csv", "transfer_iwfqi.csv", "transfer_iwfqi-ideal.csv"] {
        assert_eq!(read(&dir.path().join("a").join(name)), read(&dir.path().join("b").join(name)), "{name}");
    }
    let report = Command::new(bin).args(["report", "--out"]).arg(dir.path().join("a")).output().unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("iwfqi-ideal"));
}

#[test]
fn cli_stages_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let bin = env!("CARGO_BIN_EXE_iwfqi");
    let out = dir.path().join("stages");
    let stage = |args: &[&str]| {
        let o = Command::new(bin).args(args).args(["--config", cfg.to_str().unwrap(), "--out"]).arg(&out).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    stage(&["collect"]);
    assert!(out.join("source-2.csv").exists() && out.join("target.csv").exists());
    stage(&["train", "--variant", "iwfqi"]);
    for name in ["weighted.csv", "iterations.csv", "q.json", "diagnostics.json", "models/task-0.json", "models/task-1.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    stage(&["evaluate"]);
    let eval: serde_json::Value = serde_json::from_slice(&read(&out.join("evaluation.json"))).unwrap();
    assert!(eval["mean_return"].as_f64().unwrap().is_finite());

    let raw = dir.path().join("raw.csv");
    let o = Command::new(bin).args(["collect", "--env", "acrobot-source-swing", "--episodes", "1", "--out"]).arg(&raw).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let n = iwfqi::io::load_dataset(&raw, Some(2)).unwrap().len();
    assert!(n > 0 && n <= 100);
}

#[test]
fn bad_inputs_are_reported() {
    let bin = env!("CARGO_BIN_EXE_iwfqi");
    let o = Command::new(bin).args(["run", "--preset", "no-such-preset", "--out", "/tmp/unused"]).output().unwrap();
    assert!(!o.status.success());
    let o = Command::new(bin).args(["train", "--preset", "puddle-shared", "--variant", "fast", "--out", "/tmp/unused"]).output().unwrap();
    assert!(!o.status.success());
}

/// The source policies of the puddle presets must beat random behaviour by
/// a wide margin, or transfer has nothing to offer.
#[test]
fn pretrained_puddle_policy_beats_random() {
    let mut config = presets::experiment("puddle-shared").unwrap();
    config.pretrain.episodes = 100;
    config.pretrain.iterations = 30;
    config.fqi.n_estimators = 20;
    let env = presets::environment("puddle-shared-source-2").unwrap();
    let q = pretrain_policy(&env, &config, &SeedStream::new(1).child("pretrain", 2)).unwrap();
    let streams = SeedStream::new(5);
    let (trained, _) = evaluate_policy(&env, &q.greedy_policy(), &config.evaluation, &streams).unwrap();
    let (random, _) = evaluate_policy(&env, &UniformPolicy { action_count: env.spec().action_count }, &config.evaluation, &streams).unwrap();
    assert!(trained > random + 10.0, "{trained} vs {random}");
}
