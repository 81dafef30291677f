//! Euler-type simulation of one leg of a diffusion, from a start point until
//! the first hit of 0.
//!
//! Occupation functionals are streamed while stepping; the path itself is
//! only kept when `record_path` is set. Every step's duration is split
//! between "above" and "below", so `time_above + time_below` is the hitting
//! time by construction.
//!
//! Per-model stepping:
//! * unit-diffusion models (RBM, ReflBM01) take exact Gaussian increments;
//!   with `bridge_correction` a step that stays positive is still declared a
//!   hit with the Brownian-bridge crossing probability `exp(-2 x y / dt)`,
//!   the hit time within the step is drawn from the bridge, and occupation
//!   is the bridge's expected time above the start level.
//!   ReflBM01 folds `x ↦ 2 - x` at the upper wall.
//! * SqOU uses full-truncation Euler for `dX = (n - 2γX)dt + 2√X⁺ dW`,
//!   declares a hit when the iterate is `≤ 0` and classifies whole steps by
//!   their left endpoint.

use rand::Rng;

use crate::error::{ensure, Error, Result};
use crate::models::DiffusionModel;
use crate::special::erfc;
use crate::{rng, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig<T> {
    pub dt: T,
    /// Censoring horizon; legs still alive at `t_max` are flagged.
    pub t_max: T,
    pub bridge_correction: bool,
    pub record_path: bool,
    /// Half-width of the occupation bands; `None` disables band tracking.
    pub band_eps: Option<T>,
    /// Extra band centres; the start level is always tracked first.
    pub band_levels: Vec<T>,
}

impl<T: Real> PathConfig<T> {
    pub fn new(dt: T, t_max: T) -> Result<Self> {
        ensure(dt > T::zero() && dt.is_finite(), || format!("dt must be > 0, got {dt}"))?;
        ensure(t_max >= dt, || format!("t_max ({t_max}) must be >= dt ({dt})"))?;
        Ok(Self { dt, t_max, bridge_correction: true, record_path: false, band_eps: None, band_levels: Vec::new() })
    }

    /// `dt` with the model's default horizon.
    pub fn for_model(model: &DiffusionModel<T>, dt: T) -> Result<Self> {
        Self::new(dt, model.default_t_max())
    }

    pub fn with_bridge_correction(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn with_record_path(mut self, on: bool) -> Self {
        self.record_path = on;
        self
    }

    pub fn with_bands(mut self, eps: T, levels: Vec<T>) -> Self {
        self.band_eps = Some(eps);
        self.band_levels = levels;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegResult<T> {
    pub x0: T,
    /// First hitting time of 0 (or elapsed time when censored).
    pub hit_time: T,
    /// Time with X strictly above `x0`.
    pub time_above: T,
    /// Time with X in `(0, x0]`.
    pub time_below: T,
    /// Number of simulation steps taken.
    pub steps: u64,
    /// `(level, occupation of (level - eps, level + eps))`, start level first.
    pub band_occupations: Vec<(T, T)>,
    pub censored: bool,
    /// Left endpoints of every step, when recorded.
    pub path: Option<Vec<T>>,
}

impl<T: Real> LegResult<T> {
    fn at_boundary(x0: T, cfg: &PathConfig<T>) -> Self {
        let bands = match cfg.band_eps {
            Some(_) => std::iter::once(x0).chain(cfg.band_levels.iter().copied()).map(|l| (l, T::zero())).collect(),
            None => Vec::new(),
        };
        Self {
            x0,
            hit_time: T::zero(),
            time_above: T::zero(),
            time_below: T::zero(),
            steps: 0,
            band_occupations: bands,
            censored: false,
            path: cfg.record_path.then(Vec::new),
        }
    }
}

/// Outcome of one Euler step away from the boundary.
enum Step<T> {
    Alive(T),
    /// Zero reached after this much of the step.
    Hit(T),
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫_0^h p(s) ds` by Gauss-Legendre in `θ`, `s = h(1 - cos θ)/2`, which
/// puts the nodes where the bridge variance vanishes.
fn bridge_quadrature<T: Real>(h: T, p: impl Fn(T, T) -> T) -> T {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for (&node, &weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        let theta = (T::lit(node) + T::one()) * T::FRAC_PI_2();
        let (sin, cos) = theta.sin_cos();
        let frac = (T::one() - cos) * half;
        let sd = h.sqrt() * sin * half;
        acc = acc + T::lit(weight) * p(frac, sd) * sin;
    }
    acc * h * T::FRAC_PI_4()
}

#[inline]
fn upper_tail<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(z / T::SQRT_2())
}

/// Expected time above `c` of Brownian motion killed at 0, pinned at `x` and
/// `y` over a step of length `h` that it survives.
fn bridge_time_above<T: Real>(x: T, y: T, h: T, c: T) -> T {
    let reach = T::lit(6.0) * h.sqrt();
    if x.min(y) - c > reach {
        return h;
    }
    if c - x.max(y) > reach {
        return T::zero();
    }
    let k = (-T::lit(2.0) * x * y / h).exp();
    let survive = -(-T::lit(2.0) * x * y / h).exp_m1();
    bridge_quadrature(h, |f, sd| {
        let m1 = x + (y - x) * f;
        let free = upper_tail((c - m1) / sd) + upper_tail((c + m1) / sd);
        if k == T::zero() {
            return free;
        }
        let m2 = (y + x) * f - x;
        (free - k * (upper_tail((c - m2) / sd) + upper_tail((c + m2) / sd))) / survive
    })
}

/// Expected time above `c` of Brownian motion from `x` over `[0, τ]`, given
/// that it first reaches 0 at `τ`.
fn first_passage_time_above<T: Real>(x: T, tau: T, c: T) -> T {
    let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
    let density = |z: T| inv_sqrt_2pi * (-z * z / T::lit(2.0)).exp();
    bridge_quadrature(tau, |f, sd| {
        let m = x * (T::one() - f);
        if sd == T::zero() || m == T::zero() {
            return if m > c { T::one() } else { T::zero() };
        }
        let (lo, hi) = ((c - m) / sd, (c + m) / sd);
        let p = (m * (upper_tail(lo) + upper_tail(hi)) + sd * (density(lo) - density(hi))) / m;
        p.max(T::zero()).min(T::one())
    })
}

struct Stepper<'a, T> {
    model: &'a DiffusionModel<T>,
    bridge: bool,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(model: &'a DiffusionModel<T>, cfg: &PathConfig<T>) -> Self {
        Self { model, bridge: cfg.bridge_correction && model.unit_diffusion() }
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, x: T, h: T, rng: &mut R) -> Step<T> {
        let z: T = rng::normal(rng);
        let mut y = if self.model.unit_diffusion() {
            x + self.model.drift(x) * h + h.sqrt() * z
        } else {
            let xp = x.max(T::zero());
            x + self.model.drift(xp) * h + self.model.diffusion_coeff(xp) * h.sqrt() * z
        };
        if let Some(b) = self.model.upper_boundary() {
            if y > b {
                y = b + b - y;
            }
        }
        if !self.bridge {
            return if y > T::zero() { Step::Alive(y) } else { Step::Hit(h) };
        }
        if y > T::zero() {
            let p = (-T::lit(2.0) * x * y / h).exp();
            if rng::uniform_open::<T, R>(rng) >= p {
                return Step::Alive(y);
            }
        }
        Step::Hit(bridge_hit_time(x, y.abs(), h, rng))
    }
}

/// Time at which a Brownian bridge from `x > 0` to `±y` over `h`, known to
/// reach 0, first does so: under `r = s h/(h - s)` it is the passage of
/// Brownian motion with drift `y/h` to level `x`.
fn bridge_hit_time<T: Real, R: Rng + ?Sized>(x: T, y: T, h: T, rng: &mut R) -> T {
    if y == T::zero() {
        return h;
    }
    let r = rng::inverse_gaussian(x * h / y, x * x, rng);
    (r * h / (h + r)).min(h)
}

/// Step sizes of the bridge treatment: a leg from `x0` starts at `x0²/64`
/// and grows by `1/16` per step up to `dt`, so the first moments of the leg
/// (which carry the split of short excursions) are resolved at their own
/// scale.
struct StepSchedule<T> {
    h: T,
    dt: T,
    growth: T,
}

impl<T: Real> StepSchedule<T> {
    fn new(x0: T, dt: T, ramp: bool) -> Self {
        let h = if ramp { (x0 * x0 / T::lit(64.0)).min(dt) } else { dt };
        Self { h, dt, growth: T::lit(1.0 + 1.0 / 16.0) }
    }

    fn next(&mut self) -> T {
        let h = self.h;
        self.h = (h * self.growth).min(self.dt);
        h
    }
}

/// Runs one copy of the diffusion from `x0` to its first zero.
///
/// With the bridge treatment (unit-diffusion models, `bridge_correction`
/// on) each step is read as a Brownian bridge between its endpoints: the hit
/// time inside the final step is exact and every step contributes its
/// expected time above `x0`. Otherwise steps count whole and are classified
/// by their left endpoint.
pub fn run_leg<T: Real, R: Rng + ?Sized>(
    model: &DiffusionModel<T>,
    x0: T,
    cfg: &PathConfig<T>,
    rng: &mut R,
) -> Result<LegResult<T>> {
    if !model.contains(x0) {
        return Err(Error::OutsideInterval {
            x: x0.to_f64_lossy(),
            interval: match model.upper_boundary() {
                Some(b) => format!("[0, {b}]"),
                None => "[0, ∞)".into(),
            },
        });
    }
    let mut out = LegResult::at_boundary(x0, cfg);
    if x0 == T::zero() {
        return Ok(out);
    }
    let stepper = Stepper::new(model, cfg);
    let mut schedule = StepSchedule::new(x0, cfg.dt, stepper.bridge);
    let mut band_counts = vec![T::zero(); out.band_occupations.len()];
    let eps = cfg.band_eps.unwrap_or_else(T::zero);
    let (mut above, mut below) = (T::zero(), T::zero());
    let mut elapsed = T::zero();
    let mut x = x0;
    let mut hit = false;
    while elapsed < cfg.t_max {
        if let Some(p) = out.path.as_mut() {
            p.push(x);
        }
        let step_len = schedule.next().min(cfg.t_max - elapsed);
        for ((level, _), c) in out.band_occupations.iter().zip(band_counts.iter_mut()) {
            if (x - *level).abs() < eps {
                *c = *c + step_len;
            }
        }
        out.steps += 1;
        let step = stepper.step(x, step_len, rng);
        let (y, h) = match step {
            Step::Alive(y) if !y.is_finite() => {
                return Err(Error::NonFinite { step: out.steps, last: x.to_f64_lossy() });
            }
            Step::Alive(y) => (y, step_len),
            Step::Hit(h) => (T::zero(), h),
        };
        let a = if !stepper.bridge {
            if x > x0 {
                h
            } else {
                T::zero()
            }
        } else if let Step::Hit(_) = step {
            first_passage_time_above(x, h, x0)
        } else {
            bridge_time_above(x, y, h, x0)
        };
        above = above + a;
        below = below + (h - a);
        elapsed = elapsed + h;
        if let Step::Hit(_) = step {
            hit = true;
            break;
        }
        x = y;
    }
    out.censored = !hit;
    out.time_above = above;
    out.time_below = below;
    out.hit_time = above + below;
    for ((_, occ), c) in out.band_occupations.iter_mut().zip(band_counts) {
        *occ = c;
    }
    Ok(out)
}

/// State after running for `horizon` with reflection at 0, and whether 0 was
/// reached on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance<T> {
    pub x_end: T,
    pub hit_zero: bool,
    /// `horizon` exceeded the censoring horizon; nothing was simulated.
    pub censored: bool,
}

/// Runs the reflected process (not killed at 0) from `x0` for `horizon`.
///
/// Reflection is by `|x|` for unit-diffusion models and by the positive part
/// for SqOU. Zero hits use the same detection as [`run_leg`].
pub fn advance<T: Real, R: Rng + ?Sized>(
    model: &DiffusionModel<T>,
    x0: T,
    horizon: T,
    cfg: &PathConfig<T>,
    rng: &mut R,
) -> Result<Advance<T>> {
    ensure(horizon >= T::zero(), || format!("horizon must be >= 0, got {horizon}"))?;
    if !model.contains(x0) {
        return Err(Error::OutsideInterval { x: x0.to_f64_lossy(), interval: "model interval".into() });
    }
    if horizon > cfg.t_max {
        return Ok(Advance { x_end: x0, hit_zero: false, censored: true });
    }
    let n = (horizon / cfg.dt).round().to_u64().unwrap_or(0);
    let stepper = Stepper::new(model, cfg);
    let unit = model.unit_diffusion();
    let mut x = x0;
    let mut hit_zero = x0 == T::zero();
    for i in 0..n {
        let z: T = rng::normal(rng);
        let xp = x.max(T::zero());
        let mut y = if unit {
            x + model.drift(x) * cfg.dt + cfg.dt.sqrt() * z
        } else {
            x + model.drift(xp) * cfg.dt + model.diffusion_coeff(xp) * cfg.dt.sqrt() * z
        };
        if let Some(b) = model.upper_boundary() {
            if y > b {
                y = b + b - y;
            }
        }
        if !y.is_finite() {
            return Err(Error::NonFinite { step: i + 1, last: x.to_f64_lossy() });
        }
        if y <= T::zero() {
            hit_zero = true;
            y = if unit { -y } else { T::zero() };
        } else if stepper.bridge && !hit_zero && x > T::zero() {
            let p = (-T::lit(2.0) * x * y / cfg.dt).exp();
            if rng::uniform_open::<T, R>(rng) < p {
                hit_zero = true;
            }
        }
        x = y;
    }
    Ok(Advance { x_end: x, hit_zero, censored: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rayon::prelude::*;

    fn rbm1() -> DiffusionModel<f64> {
        DiffusionModel::rbm(1.0).unwrap()
    }

    #[test]
    fn start_at_zero_is_immediate_hit() {
        let cfg = PathConfig::new(1e-3, 10.0).unwrap();
        let r = run_leg(&rbm1(), 0.0, &cfg, &mut substream(1, 0)).unwrap();
        assert_eq!((r.hit_time, r.time_above, r.time_below), (0.0, 0.0, 0.0));
        assert!(!r.censored);
    }

    #[test]
    fn forced_censoring() {
        let cfg = PathConfig::new(1e-3, 1e-3).unwrap();
        let r = run_leg(&rbm1(), 50.0, &cfg, &mut substream(1, 0)).unwrap();
        assert!(r.censored);
        assert!(r.hit_time <= cfg.t_max);
    }

    #[test]
    fn rejects_bad_start_and_config() {
        let cfg = PathConfig::new(1e-3, 1.0).unwrap();
        assert!(run_leg(&rbm1(), -0.1, &cfg, &mut substream(1, 0)).is_err());
        let m = DiffusionModel::reflbm01();
        assert!(run_leg(&m, 1.5, &cfg, &mut substream(1, 0)).is_err());
        assert!(PathConfig::new(0.0, 1.0).is_err());
        assert!(PathConfig::new(1e-2, 1e-3).is_err());
    }

    #[test]
    fn occupation_adds_up_to_hit_time() {
        let models = [rbm1(), DiffusionModel::reflbm01(), DiffusionModel::sqou(1.0, -0.5).unwrap()];
        for m in models {
            let cfg = PathConfig::for_model(&m, 1e-3).unwrap();
            for i in 0..200 {
                let mut r = substream(9, i);
                let x0 = m.stationary_sample(&mut r);
                let leg = run_leg(&m, x0, &cfg, &mut r).unwrap();
                assert_eq!(leg.time_above + leg.time_below, leg.hit_time);
                assert!(leg.hit_time <= cfg.t_max);
            }
        }
    }

    #[test]
    fn reflbm01_path_stays_in_unit_interval() {
        let m = DiffusionModel::reflbm01();
        let cfg = PathConfig::new(1e-3, 50.0).unwrap().with_record_path(true);
        for i in 0..50 {
            let leg = run_leg(&m, 0.9, &cfg, &mut substream(2, i)).unwrap();
            assert!(leg.path.unwrap().iter().all(|&x| x > 0.0 && x <= 1.0));
        }
    }

    fn mean_hit(cfg: &PathConfig<f64>, n: u64, seed: u64) -> f64 {
        let m = rbm1();
        let s: f64 = (0..n)
            .into_par_iter()
            .map(|i| run_leg(&m, 1.0, cfg, &mut substream(seed, i)).unwrap().hit_time)
            .collect::<Vec<_>>()
            .iter()
            .sum();
        s / n as f64
    }

    #[test]
    fn rbm_mean_first_passage() {
        // E_x H_0 = x / μ for Brownian motion with drift -μ
        let cfg = PathConfig::new(1e-4, 50.0).unwrap();
        let mean = mean_hit(&cfg, 100_000, 21);
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn bridge_correction_reduces_step_size_sensitivity() {
        let n = 10_000;
        let drift = |corr: bool| {
            let coarse = PathConfig::new(4e-2, 50.0).unwrap().with_bridge_correction(corr);
            let fine = PathConfig::new(2e-2, 50.0).unwrap().with_bridge_correction(corr);
            (mean_hit(&coarse, n, 5) - mean_hit(&fine, n, 5)).abs()
        };
        let with = drift(true);
        let without = drift(false);
        assert!(with < without, "with {with}, without {without}");
    }

    #[test]
    fn bitwise_reproducible_per_index() {
        let m = DiffusionModel::sqou(1.0, -0.5).unwrap();
        let cfg = PathConfig::for_model(&m, 1e-3).unwrap();
        let a = run_leg(&m, 0.7, &cfg, &mut substream(4, 17)).unwrap();
        let b = run_leg(&m, 0.7, &cfg, &mut substream(4, 17)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn band_occupation_tracks_start_level() {
        let cfg = PathConfig::new(1e-3, 50.0).unwrap().with_bands(0.02, vec![0.5]);
        let leg = run_leg(&rbm1(), 1.0, &cfg, &mut substream(8, 0)).unwrap();
        assert_eq!(leg.band_occupations.len(), 2);
        assert_eq!(leg.band_occupations[0].0, 1.0);
        assert!(leg.band_occupations[0].1 > 0.0);
    }

    #[test]
    fn f32_leg_runs() {
        let m = DiffusionModel::<f32>::rbm(1.0).unwrap();
        let cfg = PathConfig::new(1e-3f32, 50.0).unwrap();
        let leg = run_leg(&m, 0.5f32, &cfg, &mut substream(1, 1)).unwrap();
        assert!(leg.hit_time > 0.0);
    }

    #[test]
    fn advance_beyond_horizon_is_censored() {
        let cfg = PathConfig::new(1e-3, 1.0).unwrap();
        let a = advance(&rbm1(), 0.5, 5.0, &cfg, &mut substream(1, 0)).unwrap();
        assert!(a.censored && !a.hit_zero);
        let a = advance(&rbm1(), 0.5, 0.5, &cfg, &mut substream(1, 0)).unwrap();
        assert!(!a.censored && a.x_end >= 0.0);
    }
}
