//! File formats: datasets, weighted datasets, GP models, logs and results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical and equal runs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use iwfqi_core::fqi::IterationStats;
use iwfqi_core::gp::{GpModel, KernelParams, TaskModels};
use iwfqi_core::{Dataset, TransitionSample, WeightedSample};
use serde::{Deserialize, Serialize};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn dataset_header(dim: usize, weighted: bool) -> Vec<String> {
    let mut h: Vec<String> = ["task_id", "action", "reward"].iter().map(|s| s.to_string()).collect();
    h.extend((0..dim).map(|d| format!("s_{d}")));
    h.extend((0..dim).map(|d| format!("sp_{d}")));
    h.push("done".into());
    if weighted {
        h.push("w_r".into());
        h.push("w_p".into());
    }
    h
}

fn sample_record(s: &TransitionSample) -> Vec<String> {
    let mut r = vec![s.task_id.to_string(), s.action.to_string(), s.reward.to_string()];
    r.extend(s.state.iter().map(f64::to_string));
    r.extend(s.next_state.iter().map(f64::to_string));
    r.push(u8::from(s.terminal).to_string());
    r
}

/// Writes `task_id,action,reward,s_*,sp_*,done`.
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(dataset_header(data.state_dim(), false))?;
    for s in data.samples() {
        w.write_record(sample_record(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset(create(path)?, data)
}

/// Reads a dataset CSV. The action count defaults to the largest action
/// seen plus one. A missing `done` column means no terminal samples.
pub fn read_dataset<R: Read>(input: R, action_count: Option<usize>) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (task, action, reward) = match (col("task_id"), col("action"), col("reward")) {
        (Some(t), Some(a), Some(r)) => (t, a, r),
        _ => bail!("dataset header needs task_id, action and reward"),
    };
    let s_cols: Vec<usize> = (0..).map_while(|d| col(&format!("s_{d}"))).collect();
    let sp_cols: Vec<usize> = (0..).map_while(|d| col(&format!("sp_{d}"))).collect();
    if s_cols.is_empty() || s_cols.len() != sp_cols.len() {
        bail!("dataset header needs matching s_* and sp_* columns");
    }
    let done = col("done");
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| anyhow!("row {}: column {}: {e}", line + 2, &header[i]))
        };
        samples.push(TransitionSample {
            task_id: rec[task].trim().parse().with_context(|| format!("row {}: task_id", line + 2))?,
            action: rec[action].trim().parse().with_context(|| format!("row {}: action", line + 2))?,
            reward: num(reward)?,
            state: s_cols.iter().map(|&i| num(i)).collect::<Result<_>>()?,
            next_state: sp_cols.iter().map(|&i| num(i)).collect::<Result<_>>()?,
            terminal: match done {
                Some(i) => matches!(rec[i].trim(), "1" | "true"),
                None => false,
            },
        });
    }
    let action_count = action_count.unwrap_or_else(|| samples.iter().map(|s| s.action + 1).max().unwrap_or(1));
    Dataset::from_samples(s_cols.len(), action_count, samples).map_err(|e| anyhow!("{e}"))
}

pub fn load_dataset(path: &Path, action_count: Option<usize>) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_dataset(f, action_count).with_context(|| format!("in {}", path.display()))
}

/// The dataset schema followed by `w_r,w_p`.
pub fn write_weighted<W: Write>(out: W, samples: &[WeightedSample]) -> Result<()> {
    let dim = samples.first().map_or(0, |s| s.sample.state.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(dataset_header(dim, true))?;
    for s in samples {
        let mut r = sample_record(&s.sample);
        r.push(s.w_r.to_string());
        r.push(s.w_p.to_string());
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_weighted(path: &Path, samples: &[WeightedSample]) -> Result<()> {
    write_weighted(create(path)?, samples)
}

/// Kernel and training data of a GP; the factorization is recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpRecord {
    pub kernel: KernelParams,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub mean_offset: f64,
}

impl GpRecord {
    pub fn from_model(gp: &GpModel) -> Self {
        let dim = gp.dim().max(1);
        Self {
            kernel: gp.kernel().clone(),
            inputs: gp.inputs().chunks(dim).map(<[f64]>::to_vec).collect(),
            targets: gp.targets().to_vec(),
            mean_offset: gp.mean_offset(),
        }
    }

    pub fn to_model(&self) -> Result<GpModel> {
        let flat: Vec<f64> = self.inputs.iter().flatten().copied().collect();
        GpModel::from_parts(self.kernel.clone(), flat, self.targets.clone(), self.mean_offset).map_err(|e| anyhow!("{e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskModelsRecord {
    /// One per action.
    pub reward: Vec<GpRecord>,
    /// `transition[action][dim]`, modelling `s' - s`.
    pub transition: Vec<Vec<GpRecord>>,
}

impl TaskModelsRecord {
    pub fn from_models(m: &TaskModels) -> Self {
        Self {
            reward: m.reward_models().iter().map(GpRecord::from_model).collect(),
            transition: m.transition_models().iter().map(|t| t.iter().map(GpRecord::from_model).collect()).collect(),
        }
    }

    pub fn to_models(&self) -> Result<TaskModels> {
        let reward = self.reward.iter().map(GpRecord::to_model).collect::<Result<_>>()?;
        let transition = self
            .transition
            .iter()
            .map(|t| t.iter().map(GpRecord::to_model).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        TaskModels::from_models(reward, transition).map_err(|e| anyhow!("{e}"))
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

/// `iter,mean_abs_td_target,q_min,q_max,fit_seconds`.
pub fn write_iterations<W: Write>(out: W, log: &[IterationStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "mean_abs_td_target", "q_min", "q_max", "fit_seconds"])?;
    for s in log {
        w.write_record([
            s.iter.to_string(),
            s.mean_abs_td_target.to_string(),
            s.q_min.to_string(),
            s.q_max.to_string(),
            s.fit_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_iterations(path: &Path, log: &[IterationStats]) -> Result<()> {
    write_iterations(create(path)?, log)
}

/// One row of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub batch: usize,
    pub episodes_seen: usize,
    pub mean_return: f64,
    pub ci95: f64,
    pub variant: String,
    pub seed_count: usize,
}

/// Mean source weight share of one source at one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPoint {
    pub batch: usize,
    pub source_id: u32,
    pub reward_mass: f64,
    pub transition_mass: f64,
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// `batch,episodes_seen,mean_return,ci95,variant,seed_count`.
pub fn write_results<W: Write>(out: W, rows: &[CurvePoint]) -> Result<()> {
    write_rows(out, rows)
}

pub fn save_results(path: &Path, rows: &[CurvePoint]) -> Result<()> {
    write_results(create(path)?, rows)
}

pub fn load_results(path: &Path) -> Result<Vec<CurvePoint>> {
    read_rows(path)
}

/// `batch,source_id,reward_mass,transition_mass`.
pub fn write_transfer<W: Write>(out: W, rows: &[TransferPoint]) -> Result<()> {
    write_rows(out, rows)
}

pub fn save_transfer(path: &Path, rows: &[TransferPoint]) -> Result<()> {
    write_transfer(create(path)?, rows)
}

pub fn load_transfer(path: &Path) -> Result<Vec<TransferPoint>> {
    read_rows(path)
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
