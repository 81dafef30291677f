//! Local-time processes of reflecting Brownian motion with drift `-μ`.
//!
//! The local-time profile of a straddling excursion, read as a process in the
//! space variable `y`, is a squared radial Ornstein-Uhlenbeck process
//! `Z^(n, 2μ)` with generator `2z d²/dz² + (n - 2μz) d/dz`: dimension 4 from
//! 0 up to the level `X₀`, then dimension 0 until absorption. The area under
//! the dimension-0 part is the occupation time above `X₀`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
pub use crate::rng::inverse_gaussian;
use crate::rng::{self, substream};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CirMode<T> {
    /// Run until the iterate is `≤ 0`, giving up after `max_len`.
    UntilAbsorbed { max_len: T },
    /// Run over `[0, x]` exactly.
    FixedLength(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirRun<T> {
    pub n: T,
    pub mu: T,
    pub z0: T,
    pub dy: T,
    /// Absorption "time" for `UntilAbsorbed`; run length otherwise.
    pub zeta: T,
    /// `∫₀^ζ Z dy`, left-endpoint rule.
    pub area: T,
    pub end_value: T,
    pub absorbed: bool,
}

/// Full-truncation Euler path of `dZ = (n - 2μZ⁺)dy + 2√Z⁺ dW`.
pub fn simulate_cir<T: Real, R: Rng + ?Sized>(
    n: T,
    mu: T,
    z0: T,
    mode: CirMode<T>,
    dy: T,
    rng: &mut R,
) -> Result<CirRun<T>> {
    ensure(n >= T::zero(), || format!("dimension n must be >= 0, got {n}"))?;
    ensure(mu > T::zero(), || format!("mu must be > 0, got {mu}"))?;
    ensure(z0 >= T::zero(), || format!("z0 must be >= 0, got {z0}"))?;
    ensure(dy > T::zero(), || format!("dy must be > 0, got {dy}"))?;
    let mut run = CirRun { n, mu, z0, dy, zeta: T::zero(), area: T::zero(), end_value: z0, absorbed: false };
    let two = T::lit(2.0);
    let sqrt_dy = dy.sqrt();
    let (steps, until_absorbed) = match mode {
        CirMode::UntilAbsorbed { max_len } => {
            if z0 == T::zero() && n == T::zero() {
                run.absorbed = true;
                return Ok(run);
            }
            ((max_len / dy).ceil().to_u64().unwrap_or(0), true)
        }
        CirMode::FixedLength(x) => {
            ensure(x >= T::zero(), || format!("run length must be >= 0, got {x}"))?;
            ((x / dy).round().to_u64().unwrap_or(0), false)
        }
    };
    let mut z = z0;
    let mut area = T::zero();
    let mut taken = 0u64;
    for i in 0..steps {
        let zp = z.max(T::zero());
        area = area + zp * dy;
        taken += 1;
        let w: T = rng::normal(rng);
        let next = z + (n - two * mu * zp) * dy + two * zp.sqrt() * sqrt_dy * w;
        if !next.is_finite() {
            return Err(Error::NonFinite { step: i + 1, last: z.to_f64_lossy() });
        }
        z = next;
        if until_absorbed && z <= T::zero() {
            run.absorbed = true;
            break;
        }
    }
    run.zeta = T::from_u64(taken).unwrap() * dy;
    run.area = area;
    run.end_value = if run.absorbed { T::zero() } else { z.max(T::zero()) };
    Ok(run)
}

/// Dimension-0 run started from `Exp(μ)`: its area is the occupation above
/// `X₀`, its lifetime the reach of the excursion above `X₀`.
pub fn area_run<T: Real, R: Rng + ?Sized>(mu: T, dy: T, max_len: T, rng: &mut R) -> Result<CirRun<T>> {
    let z0 = rng::exponential(mu, rng);
    simulate_cir(T::zero(), mu, z0, CirMode::UntilAbsorbed { max_len }, dy, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTimeProfile<T> {
    /// Stationary level `X₀ ~ Exp(2μ)`.
    pub x0: T,
    /// Total local time of the excursion at `X₀`.
    pub l_at_x0: T,
    /// Distance above `X₀` at which the profile dies.
    pub h0_l: T,
    pub absorbed: bool,
}

/// Simulates the local-time profile: `Z^(4,2μ)` from 0 over `[0, X₀]`, then
/// `Z^(0,2μ)` from the value reached until absorption.
pub fn total_local_time_profile<T: Real, R: Rng + ?Sized>(
    mu: T,
    dy: T,
    max_len: T,
    rng: &mut R,
) -> Result<LocalTimeProfile<T>> {
    ensure(mu > T::zero(), || format!("mu must be > 0, got {mu}"))?;
    let x0 = rng::exponential(T::lit(2.0) * mu, rng);
    let up = simulate_cir(T::lit(4.0), mu, T::zero(), CirMode::FixedLength(x0), dy, rng)?;
    let down = simulate_cir(T::zero(), mu, up.end_value, CirMode::UntilAbsorbed { max_len }, dy, rng)?;
    Ok(LocalTimeProfile { x0, l_at_x0: up.end_value, h0_l: down.zeta, absorbed: down.absorbed })
}

/// First passage of Brownian motion with drift `μ` to an independent
/// `Exp(2μ)` level `c`: inverse Gaussian with mean `c/μ` and shape `c²`.
pub fn sample_hit_exp_level<T: Real, R: Rng + ?Sized>(mu: T, rng: &mut R) -> T {
    let c = rng::exponential(T::lit(2.0) * mu, rng);
    hit_level(mu, c, rng)
}

/// First passage of Brownian motion with drift `μ` to level `c ≥ 0`.
pub fn hit_level<T: Real, R: Rng + ?Sized>(mu: T, c: T, rng: &mut R) -> T {
    if c == T::zero() {
        return T::zero();
    }
    inverse_gaussian(c / mu, c * c, rng)
}

/// Band estimator of Lebesgue local time at `y` from a recorded path with
/// step `dt`: occupation of `(y - eps, y + eps)` over `2 eps`.
pub fn local_time_band_estimate<T: Real>(path: &[T], dt: T, y: T, eps: T) -> Result<T> {
    ensure(eps > T::zero(), || format!("band half-width must be > 0, got {eps}"))?;
    let c = path.iter().filter(|&&x| (x - y).abs() < eps).count();
    Ok(T::from_usize_lossy(c) * dt / (T::lit(2.0) * eps))
}

/// `count` independent area runs (stream `i` of `seed`), as `(ζ, area)`.
pub fn area_samples<T: Real>(mu: T, dy: T, max_len: T, count: usize, seed: u64) -> Result<Vec<CirRun<T>>> {
    (0..count as u64).into_par_iter().map(|i| area_run(mu, dy, max_len, &mut substream(seed, i))).collect()
}

pub fn profile_samples<T: Real>(mu: T, dy: T, max_len: T, count: usize, seed: u64) -> Result<Vec<LocalTimeProfile<T>>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| total_local_time_profile(mu, dy, max_len, &mut substream(seed, i)))
        .collect()
}

pub fn hit_exp_level_samples<T: Real>(mu: T, count: usize, seed: u64) -> Vec<T> {
    (0..count as u64).into_par_iter().map(|i| sample_hit_exp_level(mu, &mut substream(seed, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::DiffusionModel;
    use crate::pathsim::{run_leg, PathConfig};
    use crate::stats::{ks_one_sample, mean_and_stderr};

    #[test]
    fn absorbing_start() {
        let r = simulate_cir(0.0f64, 1.0, 0.0, CirMode::UntilAbsorbed { max_len: 10.0 }, 1e-3, &mut substream(1, 0))
            .unwrap();
        assert_eq!((r.zeta, r.area), (0.0, 0.0));
        assert!(r.absorbed);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut r = substream(1, 0);
        let mode = CirMode::FixedLength(1.0f64);
        assert!(simulate_cir(-1.0, 1.0, 0.0, mode, 1e-3, &mut r).is_err());
        assert!(simulate_cir(0.0, 0.0, 0.0, mode, 1e-3, &mut r).is_err());
        assert!(simulate_cir(0.0, 1.0, -1.0, mode, 1e-3, &mut r).is_err());
        assert!(local_time_band_estimate(&[1.0f64], 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn fixed_length_values_nonnegative() {
        for i in 0..100 {
            let r = simulate_cir(4.0f64, 1.0, 0.0, CirMode::FixedLength(0.7), 1e-3, &mut substream(2, i)).unwrap();
            assert!(r.end_value >= 0.0 && r.area >= 0.0);
            assert!((r.zeta - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn area_run_moments() {
        let runs = area_samples(1.0f64, 1e-3, 50.0, 20_000, 4).unwrap();
        let zeta: Vec<f64> = runs.iter().map(|r| r.zeta).collect();
        let area: Vec<f64> = runs.iter().map(|r| r.area).collect();
        let (mz, _) = mean_and_stderr(&zeta);
        let (ma, _) = mean_and_stderr(&area);
        assert!((mz - 0.5).abs() < 0.03, "ζ mean {mz}");
        assert!((ma - 0.5).abs() < 0.03, "area mean {ma}");
    }

    #[test]
    fn zero_level_hit_is_zero() {
        assert_eq!(hit_level(1.0f64, 0.0, &mut substream(1, 0)), 0.0);
        assert_eq!(inverse_gaussian(0.0f64, 1.0, &mut substream(1, 0)), 0.0);
    }

    #[test]
    fn hit_exp_level_mean() {
        let xs = hit_exp_level_samples(1.0f64, 100_000, 8);
        let (m, _) = mean_and_stderr(&xs);
        assert!((m - 0.5).abs() < 0.01, "{m}");
    }

    #[test]
    fn inverse_gaussian_mean_and_variance() {
        // mean m, variance m³/λ
        let (m, lam) = (1.5f64, 2.0);
        let xs: Vec<f64> = (0..100_000u64).map(|i| inverse_gaussian(m, lam, &mut substream(10, i))).collect();
        let (mean, se) = mean_and_stderr(&xs);
        assert!((mean - m).abs() < 3.0 * se);
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((var - m.powi(3) / lam).abs() / (m.powi(3) / lam) < 0.05, "{var}");
    }

    #[test]
    fn profile_exponential_laws_small() {
        let ps = profile_samples(1.0f64, 1e-3, 50.0, 10_000, 6).unwrap();
        let l: Vec<f64> = ps.iter().map(|p| p.l_at_x0).collect();
        let h: Vec<f64> = ps.iter().map(|p| p.h0_l).collect();
        assert!(ps.iter().all(|p| p.absorbed));
        assert!(ks_one_sample(&l, |x| 1.0 - (-x).exp()).unwrap() < 0.03);
        assert!(ks_one_sample(&h, |x| 1.0 - (-2.0 * x).exp()).unwrap() < 0.03);
    }

    #[test]
    fn band_estimate_empty_and_mean() {
        assert_eq!(local_time_band_estimate(&[5.0f64, 6.0], 1e-3, 1.0, 0.02).unwrap(), 0.0);
        // E L(H₀, x) = (1 - e^{-2μx})/μ for a leg from x
        let m = DiffusionModel::rbm(1.0f64).unwrap();
        let cfg = PathConfig::new(1e-3, 50.0).unwrap().with_record_path(true);
        let (mut wide, mut narrow) = (Vec::new(), Vec::new());
        for i in 0..10_000u64 {
            let leg = run_leg(&m, 1.0, &cfg, &mut substream(13, i)).unwrap();
            let p = leg.path.unwrap();
            wide.push(local_time_band_estimate(&p, 1e-3, 1.0, 0.04).unwrap());
            narrow.push(local_time_band_estimate(&p, 1e-3, 1.0, 0.02).unwrap());
        }
        let (mw, _) = mean_and_stderr(&wide);
        let (mn, _) = mean_and_stderr(&narrow);
        let want = 1.0 - (-2.0f64).exp();
        assert!((mn - want).abs() / want < 0.05, "{mn}");
        assert!((mw - mn).abs() / mn < 0.05, "{mw} vs {mn}");
    }
}
