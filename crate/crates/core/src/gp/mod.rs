//! Gaussian-process regression with an anisotropic squared exponential kernel.
//!
//! A [`GpModel`] is the posterior for one scalar output. Predictions return
//! the latent (noise-free) mean and variance. Hyperparameters may be set by
//! maximizing the log marginal likelihood with a multi-restart bounded
//! Nelder-Mead search over log-parameters.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;

mod models;
mod optim;

pub use models::{ExactModel, ModelSettings, TaskModel, TaskModels};

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

/// Squared exponential kernel hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelParams {
    pub signal_variance: f64,
    /// One length scale per input dimension.
    pub length_scales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, length_scales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let k = Self { signal_variance, length_scales, noise_variance };
        k.validate()?;
        Ok(k)
    }

    pub fn isotropic(signal_variance: f64, length_scale: f64, dim: usize, noise_variance: f64) -> Result<Self> {
        Self::new(signal_variance, vec![length_scale; dim], noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.signal_variance) || !ok(self.noise_variance) || !self.length_scales.iter().all(|&l| ok(l)) {
            return Err(Error::InvalidParameter("kernel parameters must be strictly positive"));
        }
        if self.length_scales.is_empty() {
            return Err(Error::InvalidParameter("kernel needs at least one length scale"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// `sf2 * exp(-0.5 * sum_d ((a_d - b_d) / l_d)^2)`.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.length_scales) {
            let d = (x - y) / l;
            r2 += d * d;
        }
        self.signal_variance * libm::exp(-0.5 * r2)
    }

    fn to_log(&self, with_noise: bool) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim() + 2);
        v.push(libm::log(self.signal_variance));
        v.extend(self.length_scales.iter().map(|&l| libm::log(l)));
        if with_noise {
            v.push(libm::log(self.noise_variance));
        }
        v
    }

    fn from_log(theta: &[f64], dim: usize, fixed_noise: Option<f64>) -> Self {
        let noise = fixed_noise.unwrap_or_else(|| libm::exp(theta[dim + 1]));
        Self {
            signal_variance: libm::exp(theta[0]),
            length_scales: theta[1..=dim].iter().map(|&t| libm::exp(t)).collect(),
            noise_variance: noise,
        }
    }
}

/// Constant prior mean of the process.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PriorMean {
    Zero,
    Constant(f64),
    /// Mean of the training targets.
    Empirical,
}

/// Options of the maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FitOptions {
    pub optimize: bool,
    /// Keep the noise variance at its initial value while optimizing.
    pub optimize_noise: bool,
    pub restarts: usize,
    pub max_evaluations: usize,
    /// Hyperparameters are searched on at most this many evenly strided
    /// training points; the final posterior always uses every point.
    pub max_search_points: usize,
    pub prior_mean: PriorMean,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimize: false,
            optimize_noise: true,
            restarts: 5,
            max_evaluations: 200,
            max_search_points: 200,
            prior_mean: PriorMean::Zero,
        }
    }
}

/// Fitted Gaussian-process posterior for one scalar output.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelParams,
    dim: usize,
    /// Row-major `n x dim`.
    inputs: Vec<f64>,
    targets: Vec<f64>,
    mean_offset: f64,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Zero-mean fit; hyperparameters are optimized when `optimize` is set.
    pub fn fit(inputs: &[Vec<f64>], targets: &[f64], init: &KernelParams, optimize: bool) -> Result<Self> {
        Self::fit_with(inputs, targets, init, &FitOptions { optimize, ..FitOptions::default() })
    }

    pub fn fit_with(inputs: &[Vec<f64>], targets: &[f64], init: &KernelParams, options: &FitOptions) -> Result<Self> {
        init.validate()?;
        let dim = init.dim();
        if inputs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), found: targets.len() });
        }
        let mut flat = Vec::with_capacity(inputs.len() * dim);
        for row in inputs {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        let offset = match options.prior_mean {
            PriorMean::Zero => 0.0,
            PriorMean::Constant(c) => c,
            PriorMean::Empirical => targets.iter().sum::<f64>() / targets.len() as f64,
        };
        let kernel = if options.optimize {
            optimize_kernel(&flat, targets, dim, offset, init, options)
        } else {
            init.clone()
        };
        Self::build(kernel, dim, flat, targets.to_vec(), offset)
    }

    /// Rebuilds a posterior from stored parts, recomputing the factorization.
    pub fn from_parts(kernel: KernelParams, inputs: Vec<f64>, targets: Vec<f64>, mean_offset: f64) -> Result<Self> {
        kernel.validate()?;
        let dim = kernel.dim();
        if inputs.len() != targets.len() * dim {
            return Err(Error::DimensionMismatch { expected: targets.len() * dim, found: inputs.len() });
        }
        Self::build(kernel, dim, inputs, targets, mean_offset)
    }

    /// Model with no training data: predictions are the prior.
    pub fn prior(kernel: KernelParams, mean_offset: f64) -> Result<Self> {
        Self::from_parts(kernel, Vec::new(), Vec::new(), mean_offset)
    }

    fn build(kernel: KernelParams, dim: usize, inputs: Vec<f64>, targets: Vec<f64>, mean_offset: f64) -> Result<Self> {
        let n = targets.len();
        if n == 0 {
            return Ok(Self { kernel, dim, inputs, targets, mean_offset, jitter: 0.0, chol: None, alpha: DVector::zeros(0) });
        }
        let (chol, jitter) = factorize(&kernel, &inputs, dim).ok_or(Error::FitFailure("kernel matrix not positive-definite"))?;
        let centered = DVector::from_iterator(n, targets.iter().map(|y| y - mean_offset));
        let alpha = chol.solve(&centered);
        Ok(Self { kernel, dim, inputs, targets, mean_offset, jitter, chol: Some(chol), alpha })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross_covariance(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.inputs.chunks(self.dim).map(|row| self.kernel.covariance(row, x)))
    }

    /// Posterior mean and latent variance at `x`. Variance is clamped to
    /// `[0, signal_variance]`.
    pub fn predict(&self, x: &[f64]) -> Gaussian {
        debug_assert_eq!(x.len(), self.dim);
        let prior_var = self.kernel.signal_variance;
        let Some(chol) = &self.chol else {
            return Gaussian::new(self.mean_offset, prior_var);
        };
        let k = self.cross_covariance(x);
        let mean = self.mean_offset + k.dot(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&k).unwrap_or_else(|| DVector::zeros(k.len()));
        let var = (prior_var - v.norm_squared()).clamp(0.0, prior_var);
        Gaussian::new(mean, var)
    }

    /// Predictions for many points at once.
    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Vec<Gaussian> {
        let prior_var = self.kernel.signal_variance;
        let Some(chol) = &self.chol else {
            return xs.iter().map(|_| Gaussian::new(self.mean_offset, prior_var)).collect();
        };
        let n = self.len();
        let mut kstar = DMatrix::zeros(n, xs.len());
        for (j, x) in xs.iter().enumerate() {
            for (i, row) in self.inputs.chunks(self.dim).enumerate() {
                kstar[(i, j)] = self.kernel.covariance(row, x);
            }
        }
        let means = kstar.tr_mul(&self.alpha);
        let l = chol.l_dirty();
        let v = l.solve_lower_triangular(&kstar).unwrap_or_else(|| DMatrix::zeros(n, xs.len()));
        (0..xs.len())
            .map(|j| {
                let var = (prior_var - v.column(j).norm_squared()).clamp(0.0, prior_var);
                Gaussian::new(self.mean_offset + means[j], var)
            })
            .collect()
    }

    /// Exact log marginal likelihood of the training targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.chol {
            None => 0.0,
            Some(chol) => {
                let centered = DVector::from_iterator(self.len(), self.targets.iter().map(|y| y - self.mean_offset));
                lml_from(chol, &self.alpha, &centered)
            }
        }
    }
}

fn lml_from(chol: &Cholesky<f64, Dyn>, alpha: &DVector<f64>, centered: &DVector<f64>) -> f64 {
    let n = centered.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum();
    -0.5 * centered.dot(alpha) - log_det_half - 0.5 * n * libm::log(2.0 * PI)
}

fn kernel_matrix(kernel: &KernelParams, inputs: &[f64], dim: usize, extra_diag: f64) -> DMatrix<f64> {
    let n = inputs.len() / dim;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let a = &inputs[i * dim..(i + 1) * dim];
        for j in 0..=i {
            let v = kernel.covariance(a, &inputs[j * dim..(j + 1) * dim]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += kernel.noise_variance + extra_diag;
    }
    k
}

/// Cholesky of `K + noise I`, retried with growing jitter on failure.
fn factorize(kernel: &KernelParams, inputs: &[f64], dim: usize) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let base = kernel_matrix(kernel, inputs, dim, 0.0);
    if let Some(c) = Cholesky::new(base.clone()) {
        return Some((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-12) {
        let extra = jitter * kernel.signal_variance;
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += extra;
        }
        if let Some(c) = Cholesky::new(k) {
            return Some((c, extra));
        }
        jitter *= 10.0;
    }
    None
}

fn negative_lml(kernel: &KernelParams, inputs: &[f64], targets: &DVector<f64>, dim: usize) -> f64 {
    match factorize(kernel, inputs, dim) {
        Some((chol, _)) => {
            let alpha = chol.solve(targets);
            -lml_from(&chol, &alpha, targets)
        }
        None => f64::INFINITY,
    }
}

fn optimize_kernel(
    inputs: &[f64],
    targets: &[f64],
    dim: usize,
    offset: f64,
    init: &KernelParams,
    options: &FitOptions,
) -> KernelParams {
    let n = targets.len();
    let m = options.max_search_points.max(1).min(n);
    let (xs, ys): (Vec<f64>, Vec<f64>) = if m < n {
        let mut xs = Vec::with_capacity(m * dim);
        let mut ys = Vec::with_capacity(m);
        for i in 0..m {
            let idx = i * n / m;
            xs.extend_from_slice(&inputs[idx * dim..(idx + 1) * dim]);
            ys.push(targets[idx]);
        }
        (xs, ys)
    } else {
        (inputs.to_vec(), targets.to_vec())
    };
    let centered = DVector::from_iterator(ys.len(), ys.iter().map(|y| y - offset));
    let fixed_noise = if options.optimize_noise { None } else { Some(init.noise_variance) };
    let start = init.to_log(fixed_noise.is_none());
    let p = start.len();
    let mut lower = vec![libm::log(1e-6); p];
    let mut upper = vec![libm::log(1e6); p];
    for i in 1..=dim {
        lower[i] = libm::log(1e-3);
        upper[i] = libm::log(1e4);
    }
    if fixed_noise.is_none() {
        lower[p - 1] = libm::log(1e-8);
        upper[p - 1] = libm::log(1e4);
    }

    let nm = optim::NelderMead { max_evaluations: options.max_evaluations, ..Default::default() };
    let objective = |theta: &[f64]| negative_lml(&KernelParams::from_log(theta, dim, fixed_noise), &xs, &centered, dim);

    // Deterministic restarts: the initial point, then length scales and
    // signal variance shifted by one e-fold in alternating directions.
    let mut best_theta = start.clone();
    let mut best_value = objective(&start);
    for r in 0..options.restarts.max(1) {
        let mut s = start.clone();
        match r {
            0 => {}
            r => {
                let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
                let target = if (r - 1) / 2 % 2 == 0 { 1..=dim } else { 0..=0 };
                for i in target {
                    s[i] += sign * (1.0 + ((r - 1) / 4) as f64);
                }
            }
        }
        let (theta, value) = nm.minimize(objective, &s, &lower, &upper);
        if value < best_value {
            best_value = value;
            best_theta = theta;
        }
    }
    KernelParams::from_log(&best_theta, dim, fixed_noise)
}
