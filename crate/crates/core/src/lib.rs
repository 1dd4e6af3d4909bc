//! Importance weighted fitted Q-iteration.
//!
//! Samples collected in several source tasks are pooled with the data of a
//! target task. Gaussian-process models of every task's reward and
//! transition kernels yield closed-form expected importance weights, and a
//! weighted fitted Q-iteration loop over extremely randomized trees uses
//! those weights to learn a policy for the target task.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, presets and
//! the experiment harness live in the `iwfqi` companion crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod env;
pub mod ert;
pub mod error;
pub mod fqi;
pub mod gaussian;
pub mod gp;
pub mod policy;
pub mod rng;
pub mod task;
pub mod weights;

pub use error::{Error, Result};
pub use policy::{epsilon_greedy_action, greedy_action, ActionValues, Policy};
pub use rng::{SeedStream, StreamRng};
pub use task::{pool_datasets, Dataset, TaskRange, TaskSpec, TransitionSample, WeightedSample};
