//! Monte Carlo laboratory for excursions of stationary one-dimensional
//! diffusions.
//!
//! The crate samples the excursion straddling time zero of a stationary
//! diffusion in its stationary state, measures the occupation times above and
//! below the observed level, and checks the resulting laws against closed-form
//! transforms and densities. The building blocks are:
//!
//! * [`models`]: reflecting Brownian motion with drift, Brownian motion
//!   reflected at 0 and 1, and the squared radial Ornstein-Uhlenbeck process,
//!   each with scale, speed, Green function and stationary law.
//! * [`pathsim`]: Euler-type leg simulation until the first hit of 0.
//! * [`excursions`]: two-leg construction of the straddling excursion.
//! * [`bridges`]: Bessel(3) and Brownian bridges, the Vervaat transform.
//! * [`rayknight`]: squared radial OU (CIR-type) local-time processes.
//! * [`analytics`]: joint Laplace transforms, densities, Lévy and spectral
//!   representations.
//! * [`stats`]: Kolmogorov-Smirnov statistics and empirical transforms.
//! * [`experiments`] / [`cli`]: seeded experiments and the `exlab` binary.
//!
//! Numerical code is generic over [`Real`]; the experiment layer uses `f64`
//! through the aliases below.

pub mod analytics;
pub mod bridges;
pub mod cli;
pub mod error;
pub mod excursions;
pub mod experiments;
pub mod models;
pub mod pathsim;
pub mod quad;
pub mod rayknight;
pub mod report;
pub mod rng;
pub mod special;
pub mod stats;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Scalar type used by every numerical routine: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type DiffusionModel64 = models::DiffusionModel<f64>;
pub type DiffusionModel32 = models::DiffusionModel<f32>;
pub type PathConfig64 = pathsim::PathConfig<f64>;
pub type PathConfig32 = pathsim::PathConfig<f32>;
pub type LegResult64 = pathsim::LegResult<f64>;
pub type StraddlingExcursion64 = excursions::StraddlingExcursion<f64>;
pub type IdentitySamples64 = excursions::IdentitySamples<f64>;
pub type BridgeSample64 = bridges::BridgeSample<f64>;
pub type CirRun64 = rayknight::CirRun<f64>;
pub type SpectralMixture64 = analytics::SpectralMixture<f64>;
pub type JointLt64 = analytics::JointLt<f64>;
pub type EmpiricalDistribution64 = stats::EmpiricalDistribution<f64>;
