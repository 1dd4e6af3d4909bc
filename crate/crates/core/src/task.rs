//! Tasks, transition samples and datasets.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Static description of an MDP shared by all its samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskSpec {
    pub state_dim: usize,
    pub action_count: usize,
    pub gamma: f64,
    pub horizon: usize,
    /// Uniform bound on the mean reward.
    pub r_max: f64,
}

impl TaskSpec {
    pub fn new(state_dim: usize, action_count: usize, gamma: f64, horizon: usize, r_max: f64) -> Result<Self> {
        let spec = Self { state_dim, action_count, gamma, horizon, r_max };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 {
            return Err(Error::InvalidParameter("state_dim must be positive"));
        }
        if self.action_count == 0 {
            return Err(Error::InvalidParameter("action_count must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter("gamma must lie in [0, 1)"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive"));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::InvalidParameter("r_max must be positive and finite"));
        }
        Ok(())
    }

    /// `r_max / (1 - gamma)`, the bound on every action value.
    pub fn q_max(&self) -> f64 {
        self.r_max / (1.0 - self.gamma)
    }
}

/// One `<s, a, s', r>` tuple tagged with the task that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransitionSample {
    pub state: Vec<f64>,
    pub action: usize,
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// The episode ended in `next_state`; no bootstrap from it.
    pub terminal: bool,
    /// 0 is the target task, 1.. are sources.
    pub task_id: u32,
}

/// Contiguous run of samples that share a task id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskRange {
    pub task_id: u32,
    pub start: usize,
    pub end: usize,
}

impl TaskRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Ordered samples with a partition into per-task ranges.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    state_dim: usize,
    action_count: usize,
    samples: Vec<TransitionSample>,
    partitions: Vec<TaskRange>,
}

impl Dataset {
    pub fn new(state_dim: usize, action_count: usize) -> Self {
        Self { state_dim, action_count, samples: Vec::new(), partitions: Vec::new() }
    }

    pub fn from_samples(state_dim: usize, action_count: usize, samples: Vec<TransitionSample>) -> Result<Self> {
        let mut ds = Self::new(state_dim, action_count);
        ds.samples.reserve(samples.len());
        for s in samples {
            ds.push(s)?;
        }
        Ok(ds)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn samples(&self) -> &[TransitionSample] {
        &self.samples
    }

    pub fn partitions(&self) -> &[TaskRange] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends a sample, extending the last partition when the task matches.
    pub fn push(&mut self, sample: TransitionSample) -> Result<()> {
        self.check(&sample)?;
        let idx = self.samples.len();
        match self.partitions.last_mut() {
            Some(last) if last.task_id == sample.task_id => last.end = idx + 1,
            _ => self.partitions.push(TaskRange { task_id: sample.task_id, start: idx, end: idx + 1 }),
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn extend_from(&mut self, other: &Dataset) -> Result<()> {
        self.check_compatible(other)?;
        for s in &other.samples {
            self.push(s.clone())?;
        }
        Ok(())
    }

    /// Sorted, de-duplicated task ids present in the data.
    pub fn task_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.partitions.iter().map(|p| p.task_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Samples belonging to one task, in order.
    pub fn task_samples(&self, task_id: u32) -> impl Iterator<Item = &TransitionSample> {
        self.partitions
            .iter()
            .filter(move |p| p.task_id == task_id)
            .flat_map(move |p| self.samples[p.start..p.end].iter())
    }

    /// Copy of the data of one task.
    pub fn subset(&self, task_id: u32) -> Dataset {
        let mut out = Dataset::new(self.state_dim, self.action_count);
        for s in self.task_samples(task_id) {
            out.samples.push(s.clone());
        }
        if !out.samples.is_empty() {
            out.partitions.push(TaskRange { task_id, start: 0, end: out.samples.len() });
        }
        out
    }

    /// Same samples with every task id replaced.
    pub fn relabel(mut self, task_id: u32) -> Dataset {
        for s in &mut self.samples {
            s.task_id = task_id;
        }
        self.partitions.clear();
        if !self.samples.is_empty() {
            self.partitions.push(TaskRange { task_id, start: 0, end: self.samples.len() });
        }
        self
    }

    fn check(&self, s: &TransitionSample) -> Result<()> {
        if s.state.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: s.state.len() });
        }
        if s.next_state.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: s.next_state.len() });
        }
        if s.action >= self.action_count {
            return Err(Error::InvalidAction { action: s.action, action_count: self.action_count });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Dataset) -> Result<()> {
        if other.state_dim != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, found: other.state_dim });
        }
        if other.action_count != self.action_count {
            return Err(Error::DimensionMismatch { expected: self.action_count, found: other.action_count });
        }
        Ok(())
    }
}

/// Concatenates the target data with every source dataset, keeping the
/// per-task partition.
pub fn pool_datasets(target: &Dataset, sources: &[Dataset]) -> Result<Dataset> {
    let mut pooled = Dataset::new(target.state_dim, target.action_count);
    pooled.samples.reserve(target.len() + sources.iter().map(Dataset::len).sum::<usize>());
    pooled.extend_from(target)?;
    for src in sources {
        pooled.extend_from(src)?;
    }
    Ok(pooled)
}

/// A transition sample with its estimated reward and transition weights.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedSample {
    pub sample: TransitionSample,
    pub w_r: f64,
    pub w_p: f64,
}

impl WeightedSample {
    pub fn new(sample: TransitionSample, w_r: f64, w_p: f64) -> Result<Self> {
        if !(w_r.is_finite() && w_r >= 0.0 && w_p.is_finite() && w_p >= 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative"));
        }
        Ok(Self { sample, w_r, w_p })
    }

    pub fn unit(sample: TransitionSample) -> Self {
        Self { sample, w_r: 1.0, w_p: 1.0 }
    }
}
