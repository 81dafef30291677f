//! Registry of positively recurrent diffusions on `[0, b]` reflected at 0.
//!
//! Each model carries its scale derivative, speed density, total mass, Green
//! function at (0,0), stationary law and (where known in closed form) the
//! density of the first zero after a stationary start.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::special::{beta, coth, erfc, gamma, gamma_p_inv};
use crate::{rng, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    /// Reflecting Brownian motion with drift `-μ`.
    Rbm,
    /// Brownian motion reflected at 0 and 1.
    #[serde(rename = "reflbm01")]
    ReflBm01,
    /// Squared radial Ornstein-Uhlenbeck process, generator
    /// `2x d²/dx² + (n - 2γx) d/dx`, `n = 2ν + 2`.
    #[serde(rename = "sqou")]
    SqOu,
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelName::Rbm => "rbm",
            ModelName::ReflBm01 => "reflbm01",
            ModelName::SqOu => "sqou",
        })
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbm" => Ok(ModelName::Rbm),
            "reflbm01" => Ok(ModelName::ReflBm01),
            "sqou" => Ok(ModelName::SqOu),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}` (expected rbm, reflbm01 or sqou)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind<T> {
    Rbm { mu: T },
    ReflBm01,
    SqOu { gamma: T, nu: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionModel<T> {
    kind: ModelKind<T>,
    total_mass: T,
}

/// Builds a model from its name and parameter list.
///
/// `Rbm` takes `[μ]` with μ > 0, `ReflBm01` takes `[]`, `SqOu` takes
/// `[γ, ν]` with γ > 0 and -1 < ν < 0.
pub fn make_model<T: Real>(name: ModelName, params: &[T]) -> Result<DiffusionModel<T>> {
    let expect =
        |n: usize| ensure(params.len() == n, || format!("{name} takes {n} parameter(s), got {}", params.len()));
    match name {
        ModelName::Rbm => {
            expect(1)?;
            DiffusionModel::rbm(params[0])
        }
        ModelName::ReflBm01 => {
            expect(0)?;
            Ok(DiffusionModel::reflbm01())
        }
        ModelName::SqOu => {
            expect(2)?;
            DiffusionModel::sqou(params[0], params[1])
        }
    }
}

impl<T: Real> DiffusionModel<T> {
    pub fn rbm(mu: T) -> Result<Self> {
        ensure(mu > T::zero() && mu.is_finite(), || format!("rbm requires mu > 0, got {mu}"))?;
        Ok(Self { kind: ModelKind::Rbm { mu }, total_mass: mu.recip() })
    }

    pub fn reflbm01() -> Self {
        Self { kind: ModelKind::ReflBm01, total_mass: T::lit(2.0) }
    }

    pub fn sqou(gamma_: T, nu: T) -> Result<Self> {
        ensure(gamma_ > T::zero() && gamma_.is_finite(), || format!("sqou requires gamma > 0, got {gamma_}"))?;
        ensure(nu > -T::one() && nu < T::zero(), || format!("sqou requires -1 < nu < 0, got {nu}"))?;
        let total_mass = gamma(nu + T::one()) / (T::lit(2.0) * gamma_.powf(nu + T::one()));
        Ok(Self { kind: ModelKind::SqOu { gamma: gamma_, nu }, total_mass })
    }

    pub fn kind(&self) -> ModelKind<T> {
        self.kind
    }

    pub fn name(&self) -> ModelName {
        match self.kind {
            ModelKind::Rbm { .. } => ModelName::Rbm,
            ModelKind::ReflBm01 => ModelName::ReflBm01,
            ModelKind::SqOu { .. } => ModelName::SqOu,
        }
    }

    /// Parameters in the order accepted by [`make_model`].
    pub fn params(&self) -> Vec<T> {
        match self.kind {
            ModelKind::Rbm { mu } => vec![mu],
            ModelKind::ReflBm01 => vec![],
            ModelKind::SqOu { gamma, nu } => vec![gamma, nu],
        }
    }

    /// Right end `b` of the state interval; `None` for `b = ∞`.
    pub fn upper_boundary(&self) -> Option<T> {
        match self.kind {
            ModelKind::ReflBm01 => Some(T::one()),
            _ => None,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= T::zero() && x.is_finite() && self.upper_boundary().is_none_or(|b| x <= b)
    }

    /// True when the diffusion coefficient is identically 1.
    pub fn unit_diffusion(&self) -> bool {
        !matches!(self.kind, ModelKind::SqOu { .. })
    }

    pub fn drift(&self, x: T) -> T {
        match self.kind {
            ModelKind::Rbm { mu } => -mu,
            ModelKind::ReflBm01 => T::zero(),
            ModelKind::SqOu { gamma, nu } => T::lit(2.0) * nu + T::lit(2.0) - T::lit(2.0) * gamma * x,
        }
    }

    /// Diffusion coefficient σ(x) in `dX = b(X)dt + σ(X)dW`.
    pub fn diffusion_coeff(&self, x: T) -> T {
        match self.kind {
            ModelKind::SqOu { .. } => T::lit(2.0) * x.max(T::zero()).sqrt(),
            _ => T::one(),
        }
    }

    pub fn scale_deriv(&self, x: T) -> T {
        match self.kind {
            ModelKind::Rbm { mu } => (T::lit(2.0) * mu * x).exp(),
            ModelKind::ReflBm01 => T::one(),
            // m(x) = 2 / (σ²(x) S'(x)) with σ²(x) = 4x
            ModelKind::SqOu { gamma, nu } => x.powf(-nu - T::one()) * (gamma * x).exp(),
        }
    }

    pub fn speed_density(&self, x: T) -> T {
        match self.kind {
            ModelKind::Rbm { mu } => T::lit(2.0) * (-T::lit(2.0) * mu * x).exp(),
            ModelKind::ReflBm01 => T::lit(2.0),
            ModelKind::SqOu { gamma, nu } => T::lit(0.5) * x.powf(nu) * (-gamma * x).exp(),
        }
    }

    /// M = m(I), finite for every registry model.
    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    /// Quantile function of the stationary law m(dx)/M.
    pub fn stationary_quantile(&self, p: T) -> T {
        match self.kind {
            ModelKind::Rbm { mu } => -(T::one() - p).ln() / (T::lit(2.0) * mu),
            ModelKind::ReflBm01 => p,
            ModelKind::SqOu { gamma, nu } => gamma_p_inv(nu + T::one(), p) / gamma,
        }
    }

    /// One draw from the stationary law by inversion.
    pub fn stationary_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.stationary_quantile(rng::uniform_open(rng))
    }

    /// Green function G_α(0,0) with respect to the speed measure.
    pub fn green00(&self, alpha: T) -> Result<T> {
        ensure(alpha > T::zero(), || format!("green00 requires alpha > 0, got {alpha}"))?;
        let two = T::lit(2.0);
        Ok(match self.kind {
            ModelKind::Rbm { mu } => ((two * alpha + mu * mu).sqrt() - mu).recip(),
            ModelKind::ReflBm01 => {
                let r = (two * alpha).sqrt();
                coth(r) / r
            }
            ModelKind::SqOu { gamma: g, nu } => g.powf(nu) * beta(alpha / (two * g), -nu) / gamma(T::one() + nu),
        })
    }

    /// Laplace exponent Ψ(α) = 1/G_α(0,0) of the inverse local time at 0,
    /// with Ψ(0) = 0.
    pub fn inv_green00(&self, alpha: T) -> Result<T> {
        ensure(alpha >= T::zero(), || format!("alpha must be >= 0, got {alpha}"))?;
        if alpha == T::zero() {
            return Ok(T::zero());
        }
        let two = T::lit(2.0);
        Ok(match self.kind {
            // conjugate form of √(2α+μ²) - μ, free of cancellation at small α
            ModelKind::Rbm { mu } => two * alpha / ((two * alpha + mu * mu).sqrt() + mu),
            ModelKind::ReflBm01 => {
                let r = (two * alpha).sqrt();
                r * r.tanh()
            }
            _ => self.green00(alpha)?.recip(),
        })
    }

    /// Density of d₀ (first zero after time 0 from the stationary state),
    /// where a closed form exists.
    pub fn d0_density(&self, t: T) -> Option<T> {
        if t <= T::zero() {
            return Some(T::zero());
        }
        let two = T::lit(2.0);
        match self.kind {
            ModelKind::Rbm { mu } => {
                let head = (two / (T::PI() * t)).sqrt() * (-mu * mu * t / two).exp();
                Some(mu * (head - mu * erfc(mu * (t / two).sqrt())).max(T::zero()))
            }
            ModelKind::ReflBm01 => None,
            ModelKind::SqOu { gamma: g, nu } => {
                let c = two * g / (gamma(-nu) * gamma(T::one() + nu));
                let one_minus = -(-two * g * t).exp_m1();
                Some(c * (two * g * nu * t).exp() * one_minus.powf(nu))
            }
        }
    }

    /// Default censoring horizon: 50/μ², 50, 50/γ.
    pub fn default_t_max(&self) -> T {
        let fifty = T::lit(50.0);
        match self.kind {
            ModelKind::Rbm { mu } => fifty / (mu * mu),
            ModelKind::ReflBm01 => fifty,
            ModelKind::SqOu { gamma, .. } => fifty / gamma,
        }
    }
}

/// Joint Laplace transform E exp(-α d₀ + β g₀) from the Green function:
/// `(Ψ(α) - Ψ(β)) / (M (α - β))`, with the diagonal `|α - β| < 1e-8` taken
/// as `Ψ'(γ)/M` by a central difference of step `1e-5·max(1, γ)`.
pub fn lt_joint_from_green<T: Real>(model: &DiffusionModel<T>, alpha: T, beta_: T) -> Result<T> {
    ensure(alpha >= T::zero() && beta_ >= T::zero(), || {
        format!("alpha and beta must be >= 0, got ({alpha}, {beta_})")
    })?;
    let m = model.total_mass();
    if (alpha - beta_).abs() >= T::lit(1e-8) {
        let num = model.inv_green00(alpha)? - model.inv_green00(beta_)?;
        return Ok(num / (m * (alpha - beta_)));
    }
    let g = (alpha + beta_) * T::lit(0.5);
    if g == T::zero() {
        return Ok(T::one());
    }
    let h = T::lit(1e-5) * g.max(T::one());
    let psi = |x: T| model.inv_green00(x);
    let deriv = if g > h {
        (psi(g + h)? - psi(g - h)?) / (T::lit(2.0) * h)
    } else {
        // one-sided second-order stencil near the origin
        (-T::lit(3.0) * psi(g)? + T::lit(4.0) * psi(g + h)? - psi(g + T::lit(2.0) * h)?) / (T::lit(2.0) * h)
    };
    Ok(deriv / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_half_line;
    use crate::rng::substream;

    fn rbm1() -> DiffusionModel<f64> {
        DiffusionModel::rbm(1.0).unwrap()
    }

    fn sqou() -> DiffusionModel<f64> {
        DiffusionModel::sqou(1.0, -0.5).unwrap()
    }

    #[test]
    fn total_masses() {
        assert!((rbm1().total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(DiffusionModel::<f64>::reflbm01().total_mass(), 2.0);
        assert!((sqou().total_mass() - 0.886_226_925_452_758).abs() < 1e-14);
    }

    #[test]
    fn total_mass_matches_speed_integral() {
        for m in [rbm1(), sqou(), DiffusionModel::rbm(2.5).unwrap()] {
            let int = integrate_half_line(|x| m.speed_density(x), 0.0, 1e-11);
            assert!((int - m.total_mass()).abs() < 1e-8, "{:?}: {int}", m.name());
        }
    }

    #[test]
    fn parameter_validation_names_constraint() {
        let e = make_model::<f64>(ModelName::Rbm, &[-1.0]).unwrap_err();
        assert!(e.to_string().contains("mu > 0"));
        let e = make_model::<f64>(ModelName::SqOu, &[1.0, 0.5]).unwrap_err();
        assert!(e.to_string().contains("-1 < nu < 0"));
        let e = make_model::<f64>(ModelName::SqOu, &[0.0, -0.5]).unwrap_err();
        assert!(e.to_string().contains("gamma > 0"));
        assert!(make_model::<f64>(ModelName::ReflBm01, &[1.0]).is_err());
        assert!(make_model::<f64>(ModelName::ReflBm01, &[]).is_ok());
    }

    #[test]
    fn green00_examples() {
        assert!((rbm1().green00(1.5).unwrap() - 1.0).abs() < 1e-14);
        let r = DiffusionModel::<f64>::reflbm01().green00(0.5).unwrap();
        assert!((r - 1.313_035_285_499_331_3).abs() < 1e-12);
        let s = sqou().green00(2.0).unwrap();
        assert!((s - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
        assert!(rbm1().green00(0.0).is_err());
        assert!(rbm1().green00(-1.0).is_err());
    }

    #[test]
    fn recurrence_limit() {
        for m in [rbm1(), DiffusionModel::reflbm01(), sqou()] {
            for a in [1e-3, 1e-4] {
                let lim = a * m.green00(a).unwrap() * m.total_mass();
                assert!((lim - 1.0).abs() < 0.01, "{:?} α={a}: {lim}", m.name());
            }
        }
    }

    #[test]
    fn scale_and_speed_positive_on_interior() {
        for m in [rbm1(), DiffusionModel::reflbm01(), sqou()] {
            for x in [1e-3, 0.1, 0.5, 0.99] {
                assert!(m.scale_deriv(x) > 0.0 && m.speed_density(x) > 0.0);
            }
        }
    }

    #[test]
    fn joint_lt_examples() {
        let m = rbm1();
        assert!((lt_joint_from_green(&m, 1.5, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(lt_joint_from_green(&m, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(lt_joint_from_green(&sqou(), 0.0, 0.0).unwrap(), 1.0);
        let d = lt_joint_from_green(&m, 1.0, 1.0).unwrap();
        assert!((d - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        // ReflBM01 diagonal at 1: Ψ'(1)/2 from mpmath
        let r = lt_joint_from_green(&DiffusionModel::<f64>::reflbm01(), 1.0, 1.0).unwrap();
        assert!((r - 0.419_477_274_435_785_2).abs() < 1e-9);
        assert!(lt_joint_from_green(&m, -1.0, 0.0).is_err());
    }

    #[test]
    fn joint_lt_matches_rbm_closed_form_on_grid() {
        let grid = [0.25f64, 0.5, 1.0, 2.0, 4.0];
        for mu in [0.5f64, 1.0, 2.0] {
            let m = DiffusionModel::rbm(mu).unwrap();
            for &a in &grid {
                for &b in &grid {
                    let closed = 2.0 * mu / ((2.0 * a + mu * mu).sqrt() + (2.0 * b + mu * mu).sqrt());
                    let v = lt_joint_from_green(&m, a, b).unwrap();
                    let tol = if a == b { 1e-9 } else { 1e-10 };
                    assert!((v - closed).abs() < tol, "μ={mu} ({a},{b}): {v} vs {closed}");
                }
            }
        }
    }

    #[test]
    fn joint_lt_in_unit_interval_and_decreasing() {
        let grid = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        for m in [rbm1(), DiffusionModel::reflbm01(), sqou()] {
            for &b in &grid {
                let mut prev = f64::INFINITY;
                for &a in grid.iter().filter(|&&a| a > b) {
                    let v = lt_joint_from_green(&m, a, b).unwrap();
                    assert!(v > 0.0 && v < 1.0);
                    assert!(v < prev);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn stationary_means() {
        let n = 100_000;
        for (m, mean, var) in [(rbm1(), 0.5, 0.25), (sqou(), 0.5, 0.5)] {
            let mut r = substream(11, 0);
            let s: f64 = (0..n).map(|_| m.stationary_sample(&mut r)).sum();
            let est = s / n as f64;
            let se = (var / n as f64).sqrt();
            assert!((est - mean).abs() < 3.0 * se, "{:?}: {est}", m.name());
        }
    }

    #[test]
    fn reflbm01_stationary_is_uniform() {
        let m = DiffusionModel::<f64>::reflbm01();
        let mut r = substream(3, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| m.stationary_sample(&mut r)).collect();
        let d = crate::stats::ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.63 / (xs.len() as f64).sqrt());
    }

    #[test]
    fn sqou_quantile_inverts_gamma_cdf() {
        let m = DiffusionModel::sqou(2.0, -0.3).unwrap();
        for p in [0.01f64, 0.3, 0.77] {
            let x = m.stationary_quantile(p);
            let back = crate::special::gamma_p(0.7, 2.0 * x);
            assert!((back - p).abs() < 1e-12);
        }
    }

    #[test]
    fn d0_density_presence() {
        assert!(rbm1().d0_density(1.0).is_some());
        assert!(DiffusionModel::<f64>::reflbm01().d0_density(1.0).is_none());
        let v = sqou().d0_density(1.0).unwrap();
        assert!((v - 0.251_861_492_287_365_7).abs() < 1e-12);
        let r = rbm1().d0_density(1.0).unwrap();
        assert!((r - 0.166_630_941_175_372_6).abs() < 1e-12);
    }

    #[test]
    fn model_name_parsing() {
        assert_eq!("RBM".parse::<ModelName>().unwrap(), ModelName::Rbm);
        assert_eq!("sqou".parse::<ModelName>().unwrap(), ModelName::SqOu);
        assert!("bessel".parse::<ModelName>().is_err());
    }
}
