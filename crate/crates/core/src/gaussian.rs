//! Univariate Gaussian densities and product identities.

use core::f64::consts::PI;

/// `ln N(x | mean, var)`.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + libm::log(2.0 * PI * var))
}

/// `N(x | mean, var)`.
#[inline]
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    libm::exp(log_normal_pdf(x, mean, var))
}

/// Mean and variance of a univariate Gaussian. A zero variance denotes a
/// point mass at `mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gaussian {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian {
    pub fn new(mean: f64, var: f64) -> Self {
        Self { mean, var }
    }

    pub fn point(mean: f64) -> Self {
        Self { mean, var: 0.0 }
    }

    /// Log density at `x`. A point mass reports 0 at its location and
    /// `-inf` elsewhere, so ratios of coincident point masses are 1.
    pub fn log_density(&self, x: f64) -> f64 {
        if self.var > 0.0 {
            log_normal_pdf(x, self.mean, self.var)
        } else if x == self.mean {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Normalizer of the product of two Gaussian densities:
/// `∫ N(x|m1,v1) N(x|m2,v2) dx = N(m1 | m2, v1 + v2)`.
pub fn product_normalizer(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    normal_pdf(m1, m2, v1 + v2)
}

/// Mean and variance of the normalized product `N(x|m1,v1) N(x|m2,v2)`.
pub fn product_moments(m1: f64, v1: f64, m2: f64, v2: f64) -> (f64, f64) {
    let var = v1 * v2 / (v1 + v2);
    (var * (m1 / v1 + m2 / v2), var)
}
