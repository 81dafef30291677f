//! Adaptive Simpson quadrature, plus a half-line variant that maps
//! `[a, ∞)` onto `[0, 1)` through `t = a + (u / (1 - u))²`.
//!
//! The squared map absorbs integrable `t^{-1/2}` endpoint singularities, which
//! every excursion-length density in this crate has at the origin.

use crate::Real;

const MAX_DEPTH: u32 = 50;
const MIN_DEPTH: u32 = 4;

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    step(&f, a, b, fa, fm, fb, whole, tol, 0)
}

#[inline]
fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let fifteen = T::lit(15.0);
    let floor = T::epsilon() * T::lit(64.0) * (left + right).abs();
    let converged = delta.abs() <= fifteen * tol || delta.abs() <= floor;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && converged) {
        return left + right + delta / fifteen;
    }
    step(f, a, m, fa, flm, fm, left, tol * half, depth + 1) + step(f, m, b, fm, frm, fb, right, tol * half, depth + 1)
}

/// `∫_a^∞ f` to absolute tolerance `tol`.
///
/// The transformed integrand is evaluated at `u` nudged inside `(0, 1)` and
/// non-finite products (far tail) count as zero.
pub fn integrate_half_line<T: Real, F: Fn(T) -> T>(f: F, a: T, tol: T) -> T {
    let nudge = T::epsilon() * T::lit(16.0);
    let one = T::one();
    let two = T::lit(2.0);
    let g = |u: T| {
        let u = u.max(nudge).min(one - nudge);
        let w = one - u;
        let s = u / w;
        let t = a + s * s;
        let v = f(t) * two * s / (w * w);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    adaptive_simpson(g, T::zero(), one, tol)
}

/// `∫_0^b f` for `f` with an integrable `t^{-1/2}` singularity at 0, through
/// `t = w²`.
pub fn integrate_sqrt_singular<T: Real, F: Fn(T) -> T>(f: F, b: T, tol: T) -> T {
    let nudge = T::epsilon() * T::lit(16.0) * b.sqrt();
    let two = T::lit(2.0);
    let g = |w: T| {
        let w = w.max(nudge);
        two * w * f(w * w)
    };
    adaptive_simpson(g, T::zero(), b.sqrt(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn half_line_exponential() {
        let v = integrate_half_line(|t: f64| (-t).exp(), 0.0, 1e-11);
        assert!((v - 1.0).abs() < 1e-9);
        let v = integrate_half_line(|t: f64| (-t).exp(), 2.0, 1e-11);
        assert!((v - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn half_line_inverse_sqrt_singularity() {
        // ∫ e^{-t}/√(πt) dt = 1
        let pi = std::f64::consts::PI;
        let v = integrate_half_line(|t: f64| (-t).exp() / (pi * t).sqrt(), 0.0, 1e-11);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sqrt_singular_finite_interval() {
        // ∫_0^1 t^{-1/2} dt = 2
        let v = integrate_sqrt_singular(|t: f64| 1.0 / t.sqrt(), 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
    }
}
