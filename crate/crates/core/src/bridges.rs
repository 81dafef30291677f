//! Excursion bridges of Brownian motion (Bessel(3) bridges), occupation
//! times relative to the level at an independent uniform time, and the
//! Vervaat transform onto a Brownian bridge.
//!
//! Paths live on a uniform mesh of `n` cells; occupation is a step-function
//! quadrature over left endpoints. The cell holding the split time `U` ties
//! with itself and is assigned to neither side, so
//! `i_plus + i_minus + tie = l` with `tie ≥ h`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::rng::{self, substream};
use crate::Real;

/// A nonnegative path on the mesh `t_j = j·h`, `j = 0..=n`, pinned at 0 on
/// both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSample<T> {
    pub l: T,
    /// Mesh width `l / n`.
    pub h: T,
    pub values: Vec<T>,
}

impl<T: Real> BridgeSample<T> {
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.h
    }

    /// Index of the mesh cell holding time `u`, wrapping `u = l` to 0.
    fn cell_of(&self, u: T) -> usize {
        let n = self.cells();
        let k = (u / self.h).floor().to_usize().unwrap_or(0);
        k % n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeOccupation<T> {
    pub u: T,
    /// Time with value strictly above value(U).
    pub i_plus: T,
    /// Time with value strictly below value(U).
    pub i_minus: T,
    /// Time tied with value(U); at least the cell of U.
    pub tie: T,
}

fn mesh<T: Real>(l: T, dt: T) -> Result<(usize, T)> {
    ensure(l > T::zero() && l.is_finite(), || format!("bridge length must be > 0, got {l}"))?;
    ensure(dt > T::zero() && dt < l / T::lit(10.0), || {
        format!("bridge step must satisfy 0 < dt < l/10, got dt={dt}, l={l}")
    })?;
    let n = (l / dt).round().to_usize().unwrap_or(10).max(10);
    Ok((n, l / T::from_usize_lossy(n)))
}

/// Brownian bridge 0 → 0 of length `l` on `n` cells via the exact
/// conditioned-increment recursion.
pub fn brownian_bridge_path<T: Real, R: Rng + ?Sized>(l: T, n: usize, rng: &mut R) -> Vec<T> {
    let h = l / T::from_usize_lossy(n);
    let mut out = Vec::with_capacity(n + 1);
    let mut b = T::zero();
    out.push(b);
    for j in 0..n - 1 {
        let rem = l - T::from_usize_lossy(j) * h;
        let rem_next = rem - h;
        let z: T = rng::normal(rng);
        b = b - b * h / rem + (h * rem_next / rem).sqrt() * z;
        out.push(b);
    }
    out.push(T::zero());
    out
}

/// Bessel(3) bridge of length `l` as the norm of three independent Brownian
/// bridges.
pub fn sample_bessel3_bridge<T: Real, R: Rng + ?Sized>(l: T, dt: T, rng: &mut R) -> Result<BridgeSample<T>> {
    let (n, h) = mesh(l, dt)?;
    let b1 = brownian_bridge_path(l, n, rng);
    let b2 = brownian_bridge_path(l, n, rng);
    let b3 = brownian_bridge_path(l, n, rng);
    let values = b1.iter().zip(&b2).zip(&b3).map(|((&x, &y), &z)| (x * x + y * y + z * z).sqrt()).collect();
    Ok(BridgeSample { l, h, values })
}

fn occupation_at_cell<T: Real>(values: &[T], h: T, k: usize) -> (T, T, T) {
    let level = values[k];
    let (mut above, mut below, mut tie) = (0usize, 0usize, 0usize);
    for &v in &values[..values.len() - 1] {
        if v > level {
            above += 1;
        } else if v < level {
            below += 1;
        } else {
            tie += 1;
        }
    }
    let t = |c: usize| T::from_usize_lossy(c) * h;
    (t(above), t(below), t(tie))
}

/// Draws `U ~ uniform(0, l)` and measures occupation above and below the
/// bridge value at `U`.
pub fn bridge_occupation<T: Real, R: Rng + ?Sized>(bridge: &BridgeSample<T>, rng: &mut R) -> BridgeOccupation<T> {
    let u = bridge.l * rng::uniform_open::<T, R>(rng);
    occupation_at(bridge, u)
}

/// Occupation pair at a given split time `u ∈ (0, l)`.
pub fn occupation_at<T: Real>(bridge: &BridgeSample<T>, u: T) -> BridgeOccupation<T> {
    let k = bridge.cell_of(u);
    let (i_plus, i_minus, tie) = occupation_at_cell(&bridge.values, bridge.h, k);
    BridgeOccupation { u, i_plus, i_minus, tie }
}

/// Vervaat transform: the path re-rooted at `U` and shifted down by its value
/// there, `t ↦ X(t + U mod l) - X(U)`, on the same mesh.
pub fn vervaat<T: Real>(bridge: &BridgeSample<T>, u: T) -> Result<Vec<T>> {
    ensure(u > T::zero() && u <= bridge.l, || format!("split time must lie in (0, l], got {u} for l = {}", bridge.l))?;
    let n = bridge.cells();
    let k = bridge.cell_of(u);
    let base = bridge.values[k];
    let mut out: Vec<T> = (0..n).map(|j| bridge.values[(j + k) % n] - base).collect();
    out.push(T::zero());
    Ok(out)
}

/// Time spent strictly above 0 by a path on a mesh of width `h`.
pub fn positive_occupation<T: Real>(values: &[T], h: T) -> T {
    let c = values[..values.len() - 1].iter().filter(|&&v| v > T::zero()).count();
    T::from_usize_lossy(c) * h
}

/// Positive occupation of `count` independent Brownian bridges of length `l`;
/// bridge `i` uses stream `i` of `seed`.
pub fn brownian_bridge_occupation<T: Real>(l: T, dt: T, count: usize, seed: u64) -> Result<Vec<T>> {
    let (n, h) = mesh(l, dt)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| positive_occupation(&brownian_bridge_path(l, n, &mut substream(seed, i)), h))
        .collect())
}

/// Per-path output of the bridge experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeDraw<T> {
    pub occupation: BridgeOccupation<T>,
    /// Positive occupation of the Vervaat image at the same split.
    pub vervaat_plus: T,
}

/// `count` Bessel(3) bridges, each split at an independent uniform time and
/// also pushed through the Vervaat transform.
pub fn bessel_bridge_draws<T: Real>(l: T, dt: T, count: usize, seed: u64) -> Result<Vec<BridgeDraw<T>>> {
    mesh(l, dt)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = substream(seed, i);
            let b = sample_bessel3_bridge(l, dt, &mut r)?;
            let occupation = bridge_occupation(&b, &mut r);
            let image = vervaat(&b, occupation.u)?;
            Ok(BridgeDraw { occupation, vervaat_plus: positive_occupation(&image, b.h) })
        })
        .collect()
}
