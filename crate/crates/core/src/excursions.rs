//! The excursion straddling time 0 of a stationary diffusion.
//!
//! `X₀` is drawn from the stationary law; two independent legs started at
//! `X₀` give `d₀` (forward) and `-g₀` (backward, by reversibility). The
//! occupation times above and below `X₀` sum over both legs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::models::DiffusionModel;
use crate::pathsim::{advance, run_leg, PathConfig};
use crate::rng::{substream, StreamRng};
use crate::stats::{ks_one_sample, mean_and_stderr};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraddlingExcursion<T> {
    pub x0: T,
    pub g0: T,
    pub d0: T,
    /// Excursion length; equal to `i_plus + i_minus` bit for bit.
    pub v: T,
    pub i_plus: T,
    pub i_minus: T,
    /// Level-`X₀` band occupation of both legs, when bands are enabled.
    pub band_at_x0: Option<T>,
    pub censored: bool,
}

/// Samples one straddling excursion from a forward and a backward stream.
/// `X₀` is drawn from the forward stream.
pub fn sample_straddling<T: Real, R: Rng + ?Sized>(
    model: &DiffusionModel<T>,
    cfg: &PathConfig<T>,
    forward: &mut R,
    backward: &mut R,
) -> Result<StraddlingExcursion<T>> {
    let x0 = model.stationary_sample(forward);
    let fwd = run_leg(model, x0, cfg, forward)?;
    let bwd = run_leg(model, x0, cfg, backward)?;
    let i_plus = fwd.time_above + bwd.time_above;
    let i_minus = fwd.time_below + bwd.time_below;
    let band_at_x0 = match (fwd.band_occupations.first(), bwd.band_occupations.first()) {
        (Some(a), Some(b)) => Some(a.1 + b.1),
        _ => None,
    };
    Ok(StraddlingExcursion {
        x0,
        g0: -bwd.hit_time,
        d0: fwd.hit_time,
        v: i_plus + i_minus,
        i_plus,
        i_minus,
        band_at_x0,
        censored: fwd.censored || bwd.censored,
    })
}

/// Streams `2i` and `2i + 1` of `seed`.
pub fn excursion_streams(seed: u64, index: u64) -> (StreamRng, StreamRng) {
    (substream(seed, 2 * index), substream(seed, 2 * index + 1))
}

/// Column-aligned samples of the four functionals of the main identity,
/// uncensored excursions only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentitySamples<T> {
    pub minus_g0: Vec<T>,
    pub d0: Vec<T>,
    pub i_plus: Vec<T>,
    pub i_minus: Vec<T>,
    /// Band occupation at `X₀` per excursion (empty without bands).
    pub band_at_x0: Vec<T>,
    pub requested: usize,
    pub censored: usize,
}

impl<T: Real> IdentitySamples<T> {
    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d0.is_empty()
    }

    pub fn v(&self) -> Vec<T> {
        self.i_plus.iter().zip(&self.i_minus).map(|(&a, &b)| a + b).collect()
    }

    pub fn occupation_pairs(&self) -> Vec<(T, T)> {
        self.i_plus.iter().copied().zip(self.i_minus.iter().copied()).collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.censored as f64 / self.requested as f64
        }
    }
}

/// `n` independent straddling excursions keyed by `seed`, computed in
/// parallel on the current rayon pool and gathered in index order.
pub fn identity_samples<T: Real>(
    model: &DiffusionModel<T>,
    cfg: &PathConfig<T>,
    n: usize,
    seed: u64,
) -> Result<IdentitySamples<T>> {
    ensure(n >= 1, || "identity_samples requires N >= 1".into())?;
    let draws: Vec<StraddlingExcursion<T>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut f, mut b) = excursion_streams(seed, i);
            sample_straddling(model, cfg, &mut f, &mut b)
        })
        .collect::<Result<_>>()?;
    let mut out = IdentitySamples { requested: n, ..Default::default() };
    for e in draws {
        if e.censored {
            out.censored += 1;
            continue;
        }
        out.minus_g0.push(-e.g0);
        out.d0.push(e.d0);
        out.i_plus.push(e.i_plus);
        out.i_minus.push(e.i_minus);
        if let Some(b) = e.band_at_x0 {
            out.band_at_x0.push(b);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityBin {
    pub bin: usize,
    pub v_lo: f64,
    pub v_hi: f64,
    pub count: usize,
    /// KS distance of `i_plus / V` from uniform(0,1); `None` if under-filled.
    pub ks: Option<f64>,
}

/// Bins pairs `(i_plus, V)` into `bins` equal-count groups by `V` and tests
/// `i_plus / V` against uniform(0,1) in each group. Groups with fewer than
/// `min_count` pairs are reported without a statistic.
pub fn conditional_uniformity<T: Real>(pairs: &[(T, T)], bins: usize, min_count: usize) -> Result<Vec<UniformityBin>> {
    ensure(bins >= 1, || "bins must be >= 1".into())?;
    let mut sorted: Vec<(T, T)> = pairs.iter().copied().filter(|p| p.1 > T::zero()).collect();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite V"));
    let n = sorted.len();
    let mut out = Vec::with_capacity(bins);
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = (b + 1) * n / bins;
        let chunk = &sorted[lo..hi];
        let ratios: Vec<T> = chunk.iter().map(|&(u, v)| u / v).collect();
        let ks = if chunk.len() >= min_count && !chunk.is_empty() {
            Some(ks_one_sample(&ratios, |r: T| r.max(T::zero()).min(T::one()))?)
        } else {
            None
        };
        out.push(UniformityBin {
            bin: b,
            v_lo: chunk.first().map_or(f64::NAN, |p| p.1.to_f64_lossy()),
            v_hi: chunk.last().map_or(f64::NAN, |p| p.1.to_f64_lossy()),
            count: chunk.len(),
            ks,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceEstimate {
    /// P̂(X_s > X₀, d₀ > s)
    pub joint: f64,
    pub joint_se: f64,
    /// P̂(X_s > X₀)
    pub above: f64,
    pub above_se: f64,
    /// P̂(d₀ > s)
    pub alive: f64,
    pub alive_se: f64,
    /// P̂(X_s > X₀)·P̂(d₀ > s)
    pub product: f64,
    pub product_se: f64,
}

/// Empirical check that `{X_s > X₀}` and `{d₀ > s}` are independent.
/// Runs longer than the censoring horizon count as neither event.
pub fn independence_check<T: Real>(
    model: &DiffusionModel<T>,
    cfg: &PathConfig<T>,
    s: T,
    n: usize,
    seed: u64,
) -> Result<IndependenceEstimate> {
    ensure(s > T::zero(), || format!("s must be > 0, got {s}"))?;
    ensure(n >= 2, || "independence_check requires N >= 2".into())?;
    let flags: Vec<(bool, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = substream(seed, 2 * i);
            let x0 = model.stationary_sample(&mut r);
            let a = advance(model, x0, s, cfg, &mut r)?;
            if a.censored {
                return Ok((false, false));
            }
            Ok((a.x_end > x0, !a.hit_zero))
        })
        .collect::<Result<_>>()?;
    let ind = |f: &dyn Fn(&(bool, bool)) -> bool| -> Vec<f64> {
        flags.iter().map(|p| if f(p) { 1.0 } else { 0.0 }).collect()
    };
    let (joint, joint_se) = mean_and_stderr(&ind(&|p| p.0 && p.1));
    let (above, above_se) = mean_and_stderr(&ind(&|p| p.0));
    let (alive, alive_se) = mean_and_stderr(&ind(&|p| p.1));
    let product = above * alive;
    let product_se = ((alive * above_se).powi(2) + (above * alive_se).powi(2)).sqrt();
    Ok(IndependenceEstimate { joint, joint_se, above, above_se, alive, alive_se, product, product_se })
}
