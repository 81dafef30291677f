//! Kolmogorov-Smirnov statistics, empirical CDFs and empirical Laplace
//! transforms with standard errors.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

fn total_cmp<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Sorted sample with a right-continuous ECDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalDistribution<T> {
    pub fn new(samples: &[T]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("empirical distribution needs at least one sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[T] {
        &self.sorted
    }

    /// F_n(x) = #{x_i ≤ x} / n.
    pub fn cdf(&self, x: T) -> T {
        let k = self.sorted.partition_point(|v| *v <= x);
        T::from_usize_lossy(k) / T::from_usize_lossy(self.sorted.len())
    }

    pub fn mean(&self) -> T {
        mean_and_stderr(&self.sorted).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// sup |F_a - F_b|
    pub d: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p: f64,
}

/// Two-sample KS statistic with the asymptotic p-value at effective size
/// `nm/(n+m)`.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("two-sample KS needs two nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(total_cmp);
    b.sort_by(total_cmp);
    let (n, m) = (a.len(), b.len());
    let (nf, mf) = (n as f64, m as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / nf - j as f64 / mf).abs());
    }
    let ne = nf * mf / (nf + mf);
    Ok(KsResult { d, p: kolmogorov_sf(ks_lambda(ne, d)) })
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample<T: Real, F: Fn(T) -> T>(a: &[T], cdf: F) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyInput("one-sample KS needs a nonempty sample"));
    }
    let mut a = a.to_vec();
    a.sort_by(total_cmp);
    let n = a.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in a.iter().enumerate() {
        let f = cdf(*x).to_f64_lossy();
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((hi - f).abs()).max((f - lo).abs());
    }
    Ok(d)
}

/// Same as [`ks_one_sample`] with the asymptotic p-value attached.
pub fn ks_one_sample_test<T: Real, F: Fn(T) -> T>(a: &[T], cdf: F) -> Result<KsResult> {
    let d = ks_one_sample(a, cdf)?;
    Ok(KsResult { d, p: kolmogorov_sf(ks_lambda(a.len() as f64, d)) })
}

fn ks_lambda(ne: f64, d: f64) -> f64 {
    let s = ne.sqrt();
    (s + 0.12 + 0.11 / s) * d
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic one-sample critical value `sqrt(-ln(α/2)/2) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().fold(T::zero(), |acc, &x| acc + x) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss = xs.iter().fold(T::zero(), |acc, &x| acc + (x - mean) * (x - mean));
    let var = ss / (n - T::one());
    (mean, (var / n).sqrt())
}

/// Estimate and standard error of E exp(-αX - βY) from paired samples.
pub fn empirical_joint_lt<T: Real>(pairs: &[(T, T)], alpha: T, beta: T) -> Result<(T, T)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("joint Laplace transform needs samples"));
    }
    let vals: Vec<T> = pairs.iter().map(|&(x, y)| (-alpha * x - beta * y).exp()).collect();
    Ok(mean_and_stderr(&vals))
}
