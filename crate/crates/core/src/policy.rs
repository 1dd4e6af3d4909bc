//! Action selection from action-value functions.

use alloc::vec::Vec;

use rand::Rng;

use crate::rng::StreamRng;

/// A total action-value function over a finite action set.
pub trait ActionValues {
    fn action_count(&self) -> usize;

    fn q_value(&self, state: &[f64], action: usize) -> f64;

    fn q_values(&self, state: &[f64]) -> Vec<f64> {
        (0..self.action_count()).map(|a| self.q_value(state, a)).collect()
    }

    fn max_q(&self, state: &[f64]) -> f64 {
        (0..self.action_count()).map(|a| self.q_value(state, a)).fold(f64::NEG_INFINITY, f64::max)
    }
}

impl<T: ActionValues + ?Sized> ActionValues for &T {
    fn action_count(&self) -> usize {
        (**self).action_count()
    }

    fn q_value(&self, state: &[f64], action: usize) -> f64 {
        (**self).q_value(state, action)
    }
}

/// Argmax over actions; ties go to the lowest action index.
pub fn greedy_action<Q: ActionValues + ?Sized>(q: &Q, state: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..q.action_count() {
        let v = q.q_value(state, a);
        if v > best_value {
            best = a;
            best_value = v;
        }
    }
    best
}

/// Uniform random action with probability `epsilon`, greedy otherwise.
pub fn epsilon_greedy_action<Q: ActionValues + ?Sized>(
    q: &Q,
    state: &[f64],
    epsilon: f64,
    rng: &mut StreamRng,
) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    // Both draws are always taken so the stream position does not depend on Q.
    let explore = rng.random::<f64>() < epsilon;
    let random_action = rng.random_range(0..q.action_count());
    if explore {
        random_action
    } else {
        greedy_action(q, state)
    }
}

/// A (possibly stochastic) behaviour policy.
pub trait Policy {
    fn act(&self, state: &[f64], rng: &mut StreamRng) -> usize;
}

/// Epsilon-greedy policy over an action-value function.
#[derive(Debug, Clone)]
pub struct QPolicy<Q> {
    pub q: Q,
    pub epsilon: f64,
}

impl<Q: ActionValues> QPolicy<Q> {
    pub fn greedy(q: Q) -> Self {
        Self { q, epsilon: 0.0 }
    }

    pub fn epsilon_greedy(q: Q, epsilon: f64) -> Self {
        Self { q, epsilon }
    }
}

impl<Q: ActionValues> Policy for QPolicy<Q> {
    fn act(&self, state: &[f64], rng: &mut StreamRng) -> usize {
        if self.epsilon <= 0.0 {
            greedy_action(&self.q, state)
        } else {
            epsilon_greedy_action(&self.q, state, self.epsilon, rng)
        }
    }
}

/// Uniformly random actions.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub action_count: usize,
}

impl Policy for UniformPolicy {
    fn act(&self, _state: &[f64], rng: &mut StreamRng) -> usize {
        rng.random_range(0..self.action_count)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, state: &[f64], rng: &mut StreamRng) -> usize {
        (**self).act(state, rng)
    }
}

impl<P: Policy + ?Sized> Policy for alloc::boxed::Box<P> {
    fn act(&self, state: &[f64], rng: &mut StreamRng) -> usize {
        (**self).act(state, rng)
    }
}
