//! Closed-form transforms and densities, class-K algebra, Lévy-measure
//! relations and spectral mixtures.
//!
//! Conventions: `M` is the total speed mass, `Ψ(α) = 1/G_α(0,0)` the Laplace
//! exponent of the inverse local time at 0, `n⁺` its Lévy measure with density
//! `ν(t)`. The stationary straddling excursion has
//! `P(d₀ ∈ dt) = n⁺(t,∞)/M dt` and `P(V ∈ dv) = v ν(v)/M dv`.

use crate::error::{ensure, Error, Result};
use crate::models::{lt_joint_from_green, DiffusionModel, ModelKind};
use crate::quad::{adaptive_simpson, integrate_half_line, integrate_sqrt_singular};
use crate::special::{erfc, gamma, ln_gamma};
use crate::Real;

/// Joint Laplace transform of a pair `(ξ₁, ξ₂)` together with the transform
/// of the sum, `diag(γ) = E e^{-γ(ξ₁+ξ₂)}`.
pub struct JointLt<T> {
    eval: Box<dyn Fn(T, T) -> T + Send + Sync>,
    diag: Box<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> JointLt<T> {
    pub fn new(
        eval: impl Fn(T, T) -> T + Send + Sync + 'static,
        diag: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Box::new(eval), diag: Box::new(diag) }
    }

    /// Reflecting Brownian motion with drift `-μ`.
    pub fn rbm(mu: T) -> Self {
        Self::new(move |a, b| lt_rbm(mu, a, b), move |g| lt_rbm(mu, g, g))
    }

    /// Transform built from the model's Green function at (0,0).
    pub fn from_model(model: DiffusionModel<T>) -> Self {
        Self::new(
            move |a, b| lt_joint_from_green(&model, a, b).unwrap_or_else(|_| T::nan()),
            move |g| lt_joint_from_green(&model, g, g).unwrap_or_else(|_| T::nan()),
        )
    }

    pub fn eval(&self, alpha: T, beta: T) -> T {
        (self.eval)(alpha, beta)
    }

    pub fn diag(&self, gamma: T) -> T {
        (self.diag)(gamma)
    }
}

impl<T> std::fmt::Debug for JointLt<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("JointLt { .. }")
    }
}

/// `2μ / (√(2α+μ²) + √(2β+μ²))`.
pub fn lt_rbm<T: Real>(mu: T, alpha: T, beta: T) -> T {
    let two = T::lit(2.0);
    two * mu / ((two * alpha + mu * mu).sqrt() + (two * beta + mu * mu).sqrt())
}

/// Joint density of `(d₀, -g₀)` for RBM, a function of `t + s` only.
pub fn joint_density_rbm<T: Real>(mu: T, t: T, s: T) -> Result<T> {
    let v = t + s;
    ensure(v > T::zero(), || format!("t + s must be > 0, got {v}"))?;
    Ok(mu / (T::lit(2.0) * T::PI() * v * v * v).sqrt() * (-mu * mu * v / T::lit(2.0)).exp())
}

/// E e^{-α d₀} for Brownian motion reflected at 0 and 1: `tanh(√(2α))/√(2α)`.
pub fn lt_reflbm01_d0<T: Real>(alpha: T) -> Result<T> {
    ensure(alpha >= T::zero(), || format!("alpha must be >= 0, got {alpha}"))?;
    let r = (T::lit(2.0) * alpha).sqrt();
    if r < T::lit(1e-6) {
        return Ok(T::one() - r * r / T::lit(3.0));
    }
    Ok(r.tanh() / r)
}

/// Density of `d₀` for the squared radial OU process,
/// `2γ/(Γ(-ν)Γ(1+ν)) · e^{2γνt} (1 - e^{-2γt})^ν`.
pub fn density_d0_sqou<T: Real>(gamma_: T, nu: T, t: T) -> Result<T> {
    ensure(t > T::zero(), || format!("t must be > 0, got {t}"))?;
    ensure(gamma_ > T::zero() && nu > -T::one() && nu < T::zero(), || {
        format!("need gamma > 0 and -1 < nu < 0, got ({gamma_}, {nu})")
    })?;
    let two = T::lit(2.0);
    let c = two * gamma_ / (gamma(-nu) * gamma(T::one() + nu));
    // 1 - e^{-x} without cancellation at small x
    let one_minus = -(-two * gamma_ * t).exp_m1();
    Ok(c * (two * gamma_ * nu * t).exp() * one_minus.powf(nu))
}

/// CDF of `d₀` for the squared radial OU process by quadrature of the density
/// (the `t^ν` singularity at 0 is removed by `t = w²`).
pub fn cdf_d0_sqou<T: Real>(gamma_: T, nu: T, t: T) -> Result<T> {
    if t <= T::zero() {
        return Ok(T::zero());
    }
    density_d0_sqou(gamma_, nu, t)?;
    let f = |s: T| density_d0_sqou(gamma_, nu, s).unwrap_or_else(|_| T::zero());
    Ok(integrate_sqrt_singular(f, t, T::lit(1e-12)).min(T::one()))
}

/// Distance of a joint transform from the class-K identity
/// `E e^{-αξ₁-βξ₂} = (α-β)⁻¹ ∫_β^α E e^{-γ(ξ₁+ξ₂)} dγ`.
pub fn class_k_residual<T: Real>(lt: &JointLt<T>, alpha: T, beta: T) -> Result<T> {
    ensure(alpha >= T::zero() && beta >= T::zero(), || format!("alpha and beta must be >= 0, got ({alpha}, {beta})"))?;
    ensure(alpha != beta, || "class-K residual is defined off the diagonal (alpha != beta)".into())?;
    let int = adaptive_simpson(|g| lt.diag(g), beta, alpha, T::lit(1e-10));
    Ok((lt.eval(alpha, beta) - int / (alpha - beta)).abs())
}

/// Joint density `p(x+y)/(x+y)` of a class-K pair whose sum has density `p`.
pub fn density_from_sum<T: Real, F: Fn(T) -> T>(p: F, x: T, y: T) -> Result<T> {
    ensure(x > T::zero() && y > T::zero(), || format!("x and y must be > 0, got ({x}, {y})"))?;
    let v = x + y;
    Ok(p(v) / v)
}

/// Lévy tail `n⁺(t, ∞) = M · P(d₀ ∈ dt)/dt`.
pub fn levy_tail<T: Real>(model: &DiffusionModel<T>, t: T) -> Result<T> {
    ensure(t > T::zero(), || format!("t must be > 0, got {t}"))?;
    model.d0_density(t).map(|d| model.total_mass() * d).ok_or(Error::NoClosedForm("Lévy tail"))
}

/// Lévy density `ν(t) = -d/dt n⁺(t, ∞)`; analytic for RBM, central
/// difference (step `1e-6·t`) for SqOU.
pub fn levy_density<T: Real>(model: &DiffusionModel<T>, t: T) -> Result<T> {
    ensure(t > T::zero(), || format!("t must be > 0, got {t}"))?;
    match model.kind() {
        ModelKind::Rbm { mu } => {
            let two = T::lit(2.0);
            Ok((-mu * mu * t / two).exp() / (two * T::PI() * t * t * t).sqrt())
        }
        ModelKind::SqOu { .. } => {
            let h = T::lit(1e-6) * t;
            Ok(-(levy_tail(model, t + h)? - levy_tail(model, t - h)?) / (T::lit(2.0) * h))
        }
        ModelKind::ReflBm01 => Err(Error::NoClosedForm("Lévy density")),
    }
}

/// Density of `V = d₀ - g₀`: `v ν(v) / M`.
pub fn v_density<T: Real>(model: &DiffusionModel<T>, v: T) -> Result<T> {
    Ok(v * levy_density(model, v)? / model.total_mass())
}

/// `E d₀`: `1/(2μ²)` for RBM, `2/3` for ReflBM01, quadrature of the density
/// for SqOU.
pub fn mean_d0<T: Real>(model: &DiffusionModel<T>) -> Result<T> {
    match model.kind() {
        ModelKind::Rbm { mu } => Ok(T::one() / (T::lit(2.0) * mu * mu)),
        ModelKind::ReflBm01 => Ok(T::lit(2.0) / T::lit(3.0)),
        ModelKind::SqOu { gamma: g, nu } => Ok(integrate_half_line(
            |t| t * density_d0_sqou(g, nu, t).unwrap_or_else(|_| T::zero()),
            T::zero(),
            T::lit(1e-11),
        )),
    }
}

/// Closed form of the RBM d₀ density, `μ(√(2/(πt)) e^{-μ²t/2} - μ erfc(μ√(t/2)))`.
pub fn density_d0_rbm<T: Real>(mu: T, t: T) -> Result<T> {
    ensure(t > T::zero(), || format!("t must be > 0, got {t}"))?;
    let two = T::lit(2.0);
    let head = (two / (T::PI() * t)).sqrt() * (-mu * mu * t / two).exp();
    Ok(mu * (head - mu * erfc(mu * (t / two).sqrt())))
}

/// `√2 / (√α + √β)`: the speed-weighted joint transform of the null-recurrent
/// reflecting Brownian motion.
pub fn lt_null_reflbm<T: Real>(alpha: T, beta: T) -> Result<T> {
    ensure(alpha >= T::zero() && beta >= T::zero(), || format!("alpha and beta must be >= 0, got ({alpha}, {beta})"))?;
    ensure(alpha > T::zero() || beta > T::zero(), || "alpha and beta cannot both be 0".into())?;
    Ok(T::SQRT_2() / (alpha.sqrt() + beta.sqrt()))
}

/// Discrete mixing measure over exponential rates: atoms `(z_k, w_k)`.
///
/// `d₀` has density `Σ w_k z_k e^{-z_k t}` and `V` has density
/// `Σ w_k z_k² v e^{-z_k v}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMixture<T> {
    pub atoms: Vec<(T, T)>,
    /// Mass of the truncated remainder, lumped at a rate above every atom.
    pub tail_atom: Option<(T, T)>,
    pub normalized: bool,
}

impl<T: Real> SpectralMixture<T> {
    fn all_atoms(&self) -> impl Iterator<Item = &(T, T)> {
        self.atoms.iter().chain(self.tail_atom.iter())
    }

    pub fn total_weight(&self) -> T {
        self.all_atoms().fold(T::zero(), |acc, &(_, w)| acc + w)
    }

    pub fn tail_weight(&self) -> T {
        self.tail_atom.map_or(T::zero(), |(_, w)| w)
    }

    pub fn d0_density(&self, t: T) -> T {
        self.all_atoms().fold(T::zero(), |acc, &(z, w)| acc + w * z * (-z * t).exp())
    }

    pub fn v_density(&self, v: T) -> T {
        self.all_atoms().fold(T::zero(), |acc, &(z, w)| acc + w * z * z * v * (-z * v).exp())
    }

    /// Upper bound on how far the lumped tail can move the density at `t`.
    pub fn tail_density_bound(&self, t: T) -> T {
        match self.tail_atom {
            // z e^{-zt} is decreasing for z ≥ 1/t
            Some((z, w)) if z * t >= T::one() => w * z * (-z * t).exp(),
            Some((_, w)) => w / (t * T::E()),
            None => T::zero(),
        }
    }

    /// [`Self::d0_density`], failing when the tail bound at `t` exceeds 1e-8.
    pub fn density_checked(&self, t: T) -> Result<T> {
        let bound = self.tail_density_bound(t);
        if bound > T::lit(1e-8) {
            return Err(Error::Truncation { tail: bound.to_f64_lossy(), bound: 1e-8 });
        }
        Ok(self.d0_density(t))
    }

    /// Unnormalized spectral atoms `Δ_k = M z_k² w_k` (tail atom excluded).
    pub fn unnormalized(&self, total_mass: T) -> Vec<(T, T)> {
        self.atoms.iter().map(|&(z, w)| (z, total_mass * z * z * w)).collect()
    }
}

fn sqou_weight_scale<T: Real>(nu: T) -> T {
    let g = gamma(-nu);
    T::one() / (g * g * gamma(T::one() + nu))
}

/// `w_k = Γ(k-ν) / (Γ(-ν)² Γ(1+ν) Γ(k+1) (k-ν))`; independent of γ.
fn sqou_weight<T: Real>(nu: T, k: usize, scale: T) -> T {
    let kf = T::from_usize_lossy(k);
    scale * (ln_gamma(kf - nu) - ln_gamma(kf + T::one())).exp() / (kf - nu)
}

/// `Σ_{k ≥ n} w_k` by Euler-Maclaurin on the large-k expansion
/// `w(x) = A x^{-ν-2} (1 + c₁/x + c₂/x² + c₃/x³ + …)`.
fn sqou_weight_tail_from<T: Real>(nu: T, n: usize, scale: T) -> T {
    let l = T::lit;
    let nu2 = nu * nu;
    let nu3 = nu2 * nu;
    let c = [
        T::one(),
        nu * (nu + l(3.0)) / l(2.0),
        nu * (l(3.0) * nu3 + l(22.0) * nu2 + l(45.0) * nu + l(2.0)) / l(24.0),
        nu2 * (nu + l(5.0)) * (nu3 + l(8.0) * nu2 + l(21.0) * nu + l(2.0)) / l(48.0),
    ];
    let p = nu + l(2.0);
    let x = T::from_usize_lossy(n);
    let (mut integral, mut value, mut d1, mut d3) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (j, &cj) in c.iter().enumerate() {
        let q = p + T::from_usize_lossy(j);
        integral = integral + cj * x.powf(T::one() - q) / (q - T::one());
        value = value + cj * x.powf(-q);
        d1 = d1 - cj * q * x.powf(-q - T::one());
        d3 = d3 - cj * q * (q + T::one()) * (q + l(2.0)) * x.powf(-q - l(3.0));
    }
    scale * (integral + value / l(2.0) - d1 / l(12.0) + d3 / l(720.0))
}

/// Exponential-mixture representation of the SqOU `d₀` law from the binomial
/// expansion of `(1 - e^{-2γt})^ν`: rates `z_k = 2γ(k - ν)`, `k = 0..=K`,
/// plus the remaining mass lumped at `z_{K+1}`.
pub fn sqou_spectral<T: Real>(gamma_: T, nu: T, k_max: usize) -> Result<SpectralMixture<T>> {
    ensure(k_max >= 1, || format!("truncation K must be >= 1, got {k_max}"))?;
    ensure(gamma_ > T::zero() && nu > -T::one() && nu < T::zero(), || {
        format!("need gamma > 0 and -1 < nu < 0, got ({gamma_}, {nu})")
    })?;
    const EXPANSION_START: usize = 1000;
    let scale = sqou_weight_scale(nu);
    let rate = |k: usize| T::lit(2.0) * gamma_ * (T::from_usize_lossy(k) - nu);
    let atoms: Vec<(T, T)> = (0..=k_max).map(|k| (rate(k), sqou_weight(nu, k, scale))).collect();
    let start = (k_max + 1).max(EXPANSION_START);
    let explicit = (k_max + 1..start).fold(T::zero(), |acc, k| acc + sqou_weight(nu, k, scale));
    let tail = explicit + sqou_weight_tail_from(nu, start, scale);
    Ok(SpectralMixture { atoms, tail_atom: Some((rate(k_max + 1), tail)), normalized: true })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceVerdict<T> {
    pub positive: bool,
    /// `Σ Δ_k / z_k²` over the supplied atoms.
    pub partial_sum: T,
    /// Fitted `p` in `Δ_k / z_k² ~ z_k^{-p}` over the upper half of atoms.
    pub decay_exponent: T,
    /// Integral estimate of the remainder; infinite when divergent.
    pub tail_estimate: T,
}

/// Positive-recurrence test `∫ Δ(dz)/z² < ∞` on a truncated atomic `Δ`.
///
/// Convergence is decided from the decay of the terms: a fitted power-law
/// exponent of at least 1.1 counts as summable.
pub fn recurrence_test<T: Real>(delta: &[(T, T)]) -> Result<RecurrenceVerdict<T>> {
    if delta.is_empty() {
        return Err(Error::EmptyInput("no atoms"));
    }
    let terms: Vec<(T, T)> = delta.iter().map(|&(z, d)| (z, d / (z * z))).collect();
    let partial_sum = terms.iter().fold(T::zero(), |acc, &(_, t)| acc + t);
    let upper = &terms[terms.len() / 2..];
    if upper.len() < 2 {
        let positive = partial_sum.is_finite();
        return Ok(RecurrenceVerdict {
            positive,
            partial_sum,
            decay_exponent: T::nan(),
            tail_estimate: if positive { T::zero() } else { T::infinity() },
        });
    }
    // least-squares slope of ln(term) against ln(z)
    let pts: Vec<(T, T)> = upper.iter().map(|&(z, t)| (z.ln(), t.ln())).collect();
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let sxy = pts.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let sxx = pts.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let p = -sxy / sxx;
    let positive = p >= T::lit(1.1);
    let tail_estimate = if positive {
        let &(z_last, t_last) = terms.last().unwrap();
        let (z_prev, _) = terms[terms.len() - 2];
        // ∫_{z_K}^∞ t_K (z/z_K)^{-p} dz / Δz
        t_last * z_last / ((p - T::one()) * (z_last - z_prev))
    } else {
        T::infinity()
    };
    Ok(RecurrenceVerdict { positive, partial_sum, decay_exponent: p, tail_estimate })
}
