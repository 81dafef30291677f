//! Named, seeded experiments. Each returns an [`ExperimentReport`] whose
//! metrics carry their own tolerances; optional sample columns go to CSV.
//!
//! Sampling runs on a dedicated rayon pool of `workers` threads. Every
//! sampled object owns a random stream fixed by `(seed, index)` and results
//! are gathered in index order, so metric values do not depend on `workers`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::analytics::{
    class_k_residual, density_d0_sqou, lt_null_reflbm, lt_rbm, lt_reflbm01_d0, mean_d0, recurrence_test, sqou_spectral,
    v_density, JointLt,
};
use crate::bridges::{bessel_bridge_draws, brownian_bridge_occupation};
use crate::error::{Error, Result};
use crate::excursions::{conditional_uniformity, identity_samples, independence_check, IdentitySamples};
use crate::models::{lt_joint_from_green, make_model, DiffusionModel, ModelKind, ModelName};
use crate::pathsim::PathConfig;
use crate::quad::integrate_half_line;
use crate::rayknight::{area_samples, hit_exp_level_samples, profile_samples};
use crate::report::{write_csv, ExperimentReport, Metric};
use crate::rng::derive_seed;
use crate::stats::{empirical_joint_lt, ks_one_sample, ks_two_sample, mean_and_stderr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Identity,
    Bridge,
    RayKnight,
    Levy,
    AnalyticCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [Self::Identity, Self::Bridge, Self::RayKnight, Self::Levy, Self::AnalyticCheck];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Bridge => "bridge",
            Self::RayKnight => "rayknight",
            Self::Levy => "levy",
            Self::AnalyticCheck => "analytic-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub experiment: Experiment,
    pub model: ModelName,
    pub mu: f64,
    pub gamma: f64,
    pub nu: f64,
    pub paths: usize,
    /// Time step (identity), mesh width (bridge) or space step (rayknight).
    pub dt: f64,
    pub seed: u64,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub workers: usize,
    pub bridge_correction: bool,
    /// Bridge length.
    pub length: f64,
    pub bins: usize,
    pub min_bin_count: usize,
    /// Lag of the independence check.
    pub lag: f64,
    /// Time step of the d₀ batch and band paths in `rayknight`.
    pub identity_dt: f64,
    /// Excursions for the band-estimator cross-check in `rayknight`.
    pub band_paths: usize,
    pub band_eps: f64,
    /// SqOU series truncation.
    pub truncation: usize,
    pub out: Option<PathBuf>,
    pub samples_out: Option<PathBuf>,
}

impl Settings {
    /// Built-in defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let (paths, dt, model) = match experiment {
            Experiment::Identity => (50_000, 1e-3, ModelName::Rbm),
            Experiment::Bridge => (20_000, 5e-4, ModelName::Rbm),
            Experiment::RayKnight => (50_000, 1e-4, ModelName::Rbm),
            Experiment::Levy => (0, 0.0, ModelName::SqOu),
            Experiment::AnalyticCheck => (0, 0.0, ModelName::Rbm),
        };
        Self {
            experiment,
            model,
            mu: 1.0,
            gamma: 1.0,
            nu: -0.5,
            paths,
            dt,
            seed: 7,
            alpha_grid: vec![0.5, 1.0, 2.0],
            beta_grid: vec![0.0, 0.5, 1.0],
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            bridge_correction: true,
            length: 1.0,
            bins: 10,
            min_bin_count: 3000,
            lag: 0.3,
            identity_dt: 1e-3,
            band_paths: 10_000,
            band_eps: 0.02,
            truncation: 200,
            out: None,
            samples_out: None,
        }
    }

    /// Sets one key from its text form. Keys use `_` or `-` interchangeably.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got '{v}'"));
        let real = || v.parse::<f64>().map_err(|_| bad("a real number"));
        let count = || v.parse::<usize>().map_err(|_| bad("a nonnegative integer"));
        match key.trim().replace('-', "_").as_str() {
            "model" => {
                let model: ModelName = v.parse()?;
                if model == ModelName::SqOu && self.experiment == Experiment::Identity && self.dt == 1e-3 {
                    self.dt = 1e-4;
                }
                self.model = model;
            }
            "mu" => self.mu = real()?,
            "gamma" => self.gamma = real()?,
            "nu" => self.nu = real()?,
            "paths" => self.paths = count()?,
            "dt" => self.dt = real()?,
            "seed" => self.seed = v.parse().map_err(|_| bad("an unsigned integer"))?,
            "alpha_grid" => self.alpha_grid = parse_grid(v).map_err(|_| bad("comma-separated reals"))?,
            "beta_grid" => self.beta_grid = parse_grid(v).map_err(|_| bad("comma-separated reals"))?,
            "workers" => self.workers = count()?,
            "bridge_correction" => self.bridge_correction = v.parse().map_err(|_| bad("true or false"))?,
            "length" => self.length = real()?,
            "bins" => self.bins = count()?,
            "min_bin_count" => self.min_bin_count = count()?,
            "lag" => self.lag = real()?,
            "identity_dt" => self.identity_dt = real()?,
            "band_paths" => self.band_paths = count()?,
            "band_eps" => self.band_eps = real()?,
            "truncation" => self.truncation = count()?,
            "out" => self.out = Some(PathBuf::from(v)),
            "samples_out" => self.samples_out = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Defaults for `experiment` overridden by `pairs` in order, so later
    /// pairs win. The model is applied first so that its default step does
    /// not clobber an explicit `dt`.
    pub fn resolve<'a>(experiment: Experiment, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut s = Self::defaults(experiment);
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let is_model = |k: &str| k.trim() == "model";
        for (k, v) in pairs.iter().filter(|p| is_model(p.0)).chain(pairs.iter().filter(|p| !is_model(p.0))) {
            s.set(k, v)?;
        }
        Ok(s)
    }

    /// The resolved settings as text, as echoed into reports.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let grid = |g: &[f64]| g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        [
            ("experiment", self.experiment.to_string()),
            ("model", self.model.to_string()),
            ("mu", self.mu.to_string()),
            ("gamma", self.gamma.to_string()),
            ("nu", self.nu.to_string()),
            ("paths", self.paths.to_string()),
            ("dt", self.dt.to_string()),
            ("seed", self.seed.to_string()),
            ("alpha_grid", grid(&self.alpha_grid)),
            ("beta_grid", grid(&self.beta_grid)),
            ("workers", self.workers.to_string()),
            ("bridge_correction", self.bridge_correction.to_string()),
            ("length", self.length.to_string()),
            ("bins", self.bins.to_string()),
            ("min_bin_count", self.min_bin_count.to_string()),
            ("lag", self.lag.to_string()),
            ("identity_dt", self.identity_dt.to_string()),
            ("band_paths", self.band_paths.to_string()),
            ("band_eps", self.band_eps.to_string()),
            ("truncation", self.truncation.to_string()),
            ("out", path(&self.out)),
            ("samples_out", path(&self.samples_out)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn build_model(&self) -> Result<DiffusionModel<f64>> {
        match self.model {
            ModelName::Rbm => make_model(self.model, &[self.mu]),
            ModelName::ReflBm01 => make_model(self.model, &[]),
            ModelName::SqOu => make_model(self.model, &[self.gamma, self.nu]),
        }
    }

    /// Checks everything that can be checked before sampling.
    pub fn validate(&self) -> Result<()> {
        let model = self.build_model()?;
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {x}")))
            }
        };
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        if self.alpha_grid.iter().chain(&self.beta_grid).any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("transform grids must hold finite values >= 0".into()));
        }
        match self.experiment {
            Experiment::Identity | Experiment::Bridge | Experiment::RayKnight => {
                positive("dt", self.dt)?;
                if self.paths < 2 {
                    return Err(Error::InvalidParameter(format!("paths must be >= 2, got {}", self.paths)));
                }
            }
            Experiment::Levy if model.d0_density(1.0).is_none() => {
                return Err(Error::NoClosedForm("the Lévy tail"));
            }
            _ => {}
        }
        match self.experiment {
            Experiment::Bridge => {
                positive("length", self.length)?;
                if self.dt >= self.length / 10.0 {
                    return Err(Error::InvalidParameter("bridge mesh needs dt < length/10".into()));
                }
            }
            Experiment::RayKnight => {
                positive("identity_dt", self.identity_dt)?;
                positive("band_eps", self.band_eps)?;
            }
            Experiment::Identity => {
                positive("lag", self.lag)?;
                if self.bins == 0 {
                    return Err(Error::InvalidParameter("bins must be >= 1".into()));
                }
            }
            Experiment::Levy | Experiment::AnalyticCheck => {
                if self.truncation == 0 {
                    return Err(Error::InvalidParameter("truncation must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse()).collect()
}

/// Output of a run: the report plus sample columns for CSV export.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub header: Vec<&'static str>,
    pub columns: Vec<Vec<f64>>,
}

impl Outcome {
    pub fn write_samples(&self, path: &std::path::Path) -> Result<()> {
        let cols: Vec<&[f64]> = self.columns.iter().map(|c| c.as_slice()).collect();
        write_csv(path, &self.header, &cols)
    }
}

/// Validates `settings`, runs the experiment on a pool of `workers` threads
/// and writes the requested outputs.
pub fn run(settings: &Settings) -> Result<Outcome> {
    settings.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let start = Instant::now();
    let mut outcome = pool.install(|| match settings.experiment {
        Experiment::Identity => identity(settings),
        Experiment::Bridge => bridge(settings),
        Experiment::RayKnight => rayknight(settings),
        Experiment::Levy => levy(settings),
        Experiment::AnalyticCheck => analytic_check(settings),
    })?;
    outcome.report.wall_time_seconds = start.elapsed().as_secs_f64();
    if let Some(p) = &settings.out {
        outcome.report.write_json(p)?;
    }
    if let Some(p) = &settings.samples_out {
        outcome.write_samples(p)?;
    }
    Ok(outcome)
}

fn report(settings: &Settings, model: &str, parameters: &[(&str, f64)], n: usize, dt: f64) -> ExperimentReport {
    ExperimentReport {
        experiment: settings.experiment.to_string(),
        model: model.to_string(),
        parameters: parameters.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        n,
        dt,
        seed: settings.seed,
        metrics: Vec::new(),
        censored_fraction: 0.0,
        wall_time_seconds: 0.0,
        config: settings.to_map(),
    }
}

fn model_parameters(model: &DiffusionModel<f64>) -> Vec<(&'static str, f64)> {
    match model.kind() {
        ModelKind::Rbm { mu } => vec![("mu", mu)],
        ModelKind::ReflBm01 => vec![],
        ModelKind::SqOu { gamma, nu } => vec![("gamma", gamma), ("nu", nu)],
    }
}

const CENSORED_LIMIT: f64 = 1e-3;
const KS_IDENTITY: f64 = 0.02;
const KS_UNIFORMITY: f64 = 0.05;
const KS_SQOU_DENSITY: f64 = 0.03;
const MEAN_REL: f64 = 0.02;
const MEAN_REL_SQOU: f64 = 0.03;
const LT_FLOOR: f64 = 0.01;
const RK_MEAN_REL: f64 = 0.03;
const KS_BAND: f64 = 0.05;
const ANALYTIC: f64 = 1e-8;
const NORMALISATION: f64 = 1e-6;
const MIXTURE_V: f64 = 1e-5;
const ALGEBRAIC: f64 = 1e-12;
/// Pairs shorter than this many steps are left out of the uniformity bins
/// when occupations are whole-step counts (`i_plus / V` is then a lattice
/// variable with spacing `dt / V`).
const LATTICE_MIN_STEPS: f64 = 50.0;

fn ks2(name: &str, a: &[f64], b: &[f64], tol: f64) -> Result<Metric> {
    Ok(Metric::below(name, ks_two_sample(a, b)?.d, tol))
}

/// Main identity suite on straddling excursions of the chosen model.
pub fn identity(settings: &Settings) -> Result<Outcome> {
    let model = settings.build_model()?;
    let n = settings.paths;
    let cfg = PathConfig::for_model(&model, settings.dt)?.with_bridge_correction(settings.bridge_correction);
    let s = identity_samples(&model, &cfg, n, settings.seed)?;
    let other = identity_samples(&model, &cfg, n, derive_seed(settings.seed, 1))?;
    if s.len() < 2 || other.len() < 2 {
        return Err(Error::EmptyInput("every excursion was censored"));
    }
    let mut r = report(settings, &model.name().to_string(), &model_parameters(&model), n, settings.dt);
    r.censored_fraction = s.censored_fraction().max(other.censored_fraction());
    let m = &mut r.metrics;
    m.push(Metric::below("censored_fraction", r.censored_fraction, CENSORED_LIMIT));

    let v_other: Vec<f64> = other.d0.iter().zip(&other.minus_g0).map(|(d, g)| d + g).collect();
    m.push(ks2("ks_i_plus_vs_d0", &s.i_plus, &s.d0, KS_IDENTITY)?);
    m.push(ks2("ks_i_minus_vs_minus_g0", &s.i_minus, &s.minus_g0, KS_IDENTITY)?);
    m.push(ks2("ks_i_plus_vs_minus_g0", &s.i_plus, &s.minus_g0, KS_IDENTITY)?);
    m.push(ks2("ks_occupation_sum_vs_independent_v", &s.v(), &v_other, KS_IDENTITY)?);

    let pairs = s.occupation_pairs();
    for &a in &settings.alpha_grid {
        for &b in &settings.beta_grid {
            let (est, se) = empirical_joint_lt(&pairs, a, b)?;
            let exact = match model.kind() {
                ModelKind::Rbm { mu } => lt_rbm(mu, a, b),
                _ => lt_joint_from_green(&model, a, b)?,
            };
            m.push(Metric::deviation(format!("joint_lt[{a},{b}]"), est, exact, (3.0 * se).max(LT_FLOOR)));
        }
    }

    let target = mean_d0(&model)?;
    for (name, xs) in [("i_plus", &s.i_plus), ("i_minus", &s.i_minus), ("minus_g0", &s.minus_g0), ("d0", &s.d0)] {
        let (mean, se) = mean_and_stderr(xs);
        let tol = match model.kind() {
            ModelKind::Rbm { .. } => MEAN_REL,
            ModelKind::ReflBm01 => MEAN_REL.max(3.0 * se / target),
            ModelKind::SqOu { .. } => MEAN_REL_SQOU.max(3.0 * se / target),
        };
        m.push(Metric::relative(format!("mean_{name}_rel_err"), mean, target, tol));
    }

    let bridged = settings.bridge_correction && model.unit_diffusion();
    let min_v = if bridged { 0.0 } else { LATTICE_MIN_STEPS * settings.dt };
    let binned: Vec<(f64, f64)> = s.i_plus.iter().zip(s.v()).map(|(&u, v)| (u, v)).filter(|p| p.1 > min_v).collect();
    let bins = conditional_uniformity(&binned, settings.bins, settings.min_bin_count)?;
    let fullest = bins.iter().map(|b| b.count).min().unwrap_or(0);
    m.push(Metric::at_least("uniformity_min_bin_count", fullest as f64, settings.min_bin_count as f64));
    for b in bins.iter().filter(|b| b.ks.is_some()) {
        m.push(Metric::below(format!("uniformity_ks[bin {}]", b.bin), b.ks.unwrap(), KS_UNIFORMITY));
    }

    let ind = independence_check(&model, &cfg, settings.lag, n.min(20_000), derive_seed(settings.seed, 2))?;
    let tol = 3.0 * (ind.joint_se.powi(2) + ind.product_se.powi(2)).sqrt();
    m.push(Metric::deviation("independence_joint_vs_product", ind.joint, ind.product, tol));
    m.push(Metric::deviation("independence_p_above", ind.above, 0.5, 3.0 * ind.above_se));

    match model.kind() {
        ModelKind::ReflBm01 => {
            let d0: Vec<(f64, f64)> = s.d0.iter().map(|&d| (d, 0.0)).collect();
            for &a in &settings.alpha_grid {
                let (est, se) = empirical_joint_lt(&d0, a, 0.0)?;
                m.push(Metric::deviation(format!("d0_lt[{a}]"), est, lt_reflbm01_d0(a)?, (3.0 * se).max(LT_FLOOR)));
            }
        }
        ModelKind::SqOu { gamma, nu } => {
            let cdf = sqou_cdf_table(gamma, nu, &s.d0)?;
            m.push(Metric::below("ks_d0_vs_closed_form", ks_one_sample(&s.d0, cdf)?, KS_SQOU_DENSITY));
        }
        ModelKind::Rbm { .. } => {}
    }

    Ok(Outcome { report: r, header: vec!["minus_g0", "d0", "i_plus", "i_minus"], columns: identity_columns(&s) })
}

fn identity_columns(s: &IdentitySamples<f64>) -> Vec<Vec<f64>> {
    vec![s.minus_g0.clone(), s.d0.clone(), s.i_plus.clone(), s.i_minus.clone()]
}

/// CDF of the SqOU `d₀` evaluated at every sample: the density is integrated
/// once between consecutive sorted sample points.
fn sqou_cdf_table(gamma: f64, nu: f64, samples: &[f64]) -> Result<impl Fn(f64) -> f64> {
    let mut pts: Vec<f64> = samples.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    pts.dedup();
    let density = move |t: f64| density_d0_sqou(gamma, nu, t).unwrap_or(0.0);
    let mut values = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in &pts {
        acc += if prev == 0.0 {
            crate::quad::integrate_sqrt_singular(density, t, 1e-12)
        } else {
            crate::quad::adaptive_simpson(density, prev, t, 1e-13)
        };
        values.push(acc.min(1.0));
        prev = t;
    }
    Ok(move |t: f64| match pts.binary_search_by(|p| p.partial_cmp(&t).expect("finite")) {
        Ok(i) => values[i],
        Err(0) => 0.0,
        Err(i) => values[i - 1],
    })
}

/// Bessel(3) bridges split at a uniform time, the Vervaat image, and the
/// positive occupation of Brownian bridges.
pub fn bridge(settings: &Settings) -> Result<Outcome> {
    let (l, dt, n) = (settings.length, settings.dt, settings.paths);
    let draws = bessel_bridge_draws(l, dt, n, settings.seed)?;
    let bb = brownian_bridge_occupation(l, dt, n, derive_seed(settings.seed, 1))?;
    let mut r = report(settings, "bessel3-bridge", &[("length", l)], n, dt);
    let u: Vec<f64> = draws.iter().map(|d| d.occupation.u).collect();
    let plus: Vec<f64> = draws.iter().map(|d| d.occupation.i_plus).collect();
    let minus: Vec<f64> = draws.iter().map(|d| d.occupation.i_minus).collect();
    let vervaat: Vec<f64> = draws.iter().map(|d| d.vervaat_plus).collect();
    let uniform = |x: f64| (x / l).clamp(0.0, 1.0);
    let m = &mut r.metrics;
    m.push(Metric::below("ks_i_plus_vs_uniform", ks_one_sample(&plus, uniform)?, KS_IDENTITY));
    m.push(ks2("ks_i_plus_vs_i_minus", &plus, &minus, KS_IDENTITY)?);
    let mismatches = plus.iter().zip(&vervaat).filter(|(a, b)| a != b).count();
    m.push(Metric::exact("vervaat_mismatches", mismatches as f64, 0.0));
    m.push(Metric::below("ks_brownian_bridge_vs_uniform", ks_one_sample(&bb, uniform)?, KS_IDENTITY));
    let (mean, se) = mean_and_stderr(&plus);
    m.push(Metric::deviation("mean_i_plus", mean, l / 2.0, 3.0 * se));
    Ok(Outcome {
        report: r,
        header: vec!["u", "i_plus", "i_minus", "vervaat_plus", "brownian_plus"],
        columns: vec![u, plus, minus, vervaat, bb],
    })
}

/// Local-time profiles, CIR areas and first passages of RBM with drift `-μ`,
/// against the exponential laws and the `d₀` samples of `identity`.
pub fn rayknight(settings: &Settings) -> Result<Outcome> {
    let mu = settings.mu;
    let model = DiffusionModel::rbm(mu)?;
    let (dy, n, seed) = (settings.dt, settings.paths, settings.seed);
    let max_len = 50.0 / mu;
    let profiles = profile_samples(mu, dy, max_len, n, derive_seed(seed, 10))?;
    let areas = area_samples(mu, dy, max_len, n, derive_seed(seed, 11))?;
    let hits = hit_exp_level_samples(mu, n, derive_seed(seed, 12));
    let cfg = PathConfig::for_model(&model, settings.identity_dt)?.with_bridge_correction(settings.bridge_correction);
    let d0 = identity_samples(&model, &cfg, n, seed)?;

    let mut r = report(settings, "rbm", &[("mu", mu)], n, dy);
    let unabsorbed = profiles.iter().filter(|p| !p.absorbed).count() + areas.iter().filter(|a| !a.absorbed).count();
    r.censored_fraction = (unabsorbed as f64 / (2 * n) as f64).max(d0.censored_fraction());
    let m = &mut r.metrics;
    m.push(Metric::below("censored_fraction", r.censored_fraction, CENSORED_LIMIT));

    let h0: Vec<f64> = profiles.iter().map(|p| p.h0_l).collect();
    let le: Vec<f64> = profiles.iter().map(|p| p.l_at_x0).collect();
    m.push(Metric::relative("mean_h0_l_rel_err", mean_and_stderr(&h0).0, 1.0 / (2.0 * mu), RK_MEAN_REL));
    m.push(Metric::below("ks_h0_l_vs_exp", ks_one_sample(&h0, |x| -(-2.0 * mu * x).exp_m1())?, KS_IDENTITY));
    m.push(Metric::relative("mean_l_at_x0_rel_err", mean_and_stderr(&le).0, 1.0 / mu, RK_MEAN_REL));
    m.push(Metric::below("ks_l_at_x0_vs_exp", ks_one_sample(&le, |x| -(-mu * x).exp_m1())?, KS_IDENTITY));

    let area: Vec<f64> = areas.iter().map(|a| a.area).collect();
    let zeta: Vec<f64> = areas.iter().map(|a| a.zeta).collect();
    let target = 1.0 / (2.0 * mu * mu);
    m.push(Metric::relative("mean_area_rel_err", mean_and_stderr(&area).0, target, RK_MEAN_REL));
    m.push(Metric::relative("mean_zeta_rel_err", mean_and_stderr(&zeta).0, 1.0 / (2.0 * mu), RK_MEAN_REL));
    m.push(ks2("ks_area_vs_hit", &area, &hits, KS_IDENTITY)?);
    m.push(ks2("ks_area_vs_d0", &area, &d0.d0, KS_IDENTITY)?);
    m.push(ks2("ks_hit_vs_d0", &hits, &d0.d0, KS_IDENTITY)?);

    if settings.band_paths >= 2 {
        let eps = settings.band_eps;
        let banded = cfg.clone().with_bands(eps, Vec::new());
        let b = identity_samples(&model, &banded, settings.band_paths, derive_seed(seed, 13))?;
        let estimate: Vec<f64> = b.band_at_x0.iter().map(|o| o / (2.0 * eps)).collect();
        let k = settings.band_paths.min(n);
        m.push(ks2("ks_band_local_time_vs_profile", &estimate, &le[..k], KS_BAND)?);
    }

    let take = |v: &[f64]| v[..n.min(v.len())].to_vec();
    Ok(Outcome {
        report: r,
        header: vec!["zeta", "area", "l_at_x0", "h0_l", "hit"],
        columns: vec![take(&zeta), take(&area), take(&le), take(&h0), take(&hits)],
    })
}

/// Lévy-measure relations of the chosen model and, for SqOU, its spectral
/// mixture.
pub fn levy(settings: &Settings) -> Result<Outcome> {
    let model = settings.build_model()?;
    let mut r = report(settings, &model.name().to_string(), &model_parameters(&model), 0, 0.0);
    levy_metrics(&model, settings.truncation, "", &mut r.metrics)?;
    Ok(Outcome { report: r, header: Vec::new(), columns: Vec::new() })
}

fn levy_metrics(model: &DiffusionModel<f64>, truncation: usize, prefix: &str, m: &mut Vec<Metric>) -> Result<()> {
    let tail = |t: f64| crate::analytics::levy_tail(model, t).unwrap_or(f64::NAN);
    let total = integrate_half_line(tail, 0.0, 1e-11);
    m.push(Metric::deviation(format!("{prefix}levy_tail_integral_vs_mass"), total, model.total_mass(), NORMALISATION));
    let vd = |v: f64| v_density(model, v).unwrap_or(f64::NAN);
    // finite-difference noise in the SqOU integrand limits the quadrature tolerance
    m.push(Metric::deviation(
        format!("{prefix}v_density_integral"),
        integrate_half_line(vd, 0.0, 1e-9),
        1.0,
        NORMALISATION,
    ));
    let d0 = |t: f64| model.d0_density(t).unwrap_or(f64::NAN);
    m.push(Metric::deviation(
        format!("{prefix}d0_density_integral"),
        integrate_half_line(d0, 0.0, 1e-11),
        1.0,
        NORMALISATION,
    ));
    for a in [0.5f64, 1.0, 2.0] {
        let lt = integrate_half_line(|t| (-a * t).exp() * d0(t), 0.0, 1e-11);
        m.push(Metric::deviation(
            format!("{prefix}d0_lt_vs_green[{a}]"),
            lt,
            lt_joint_from_green(model, a, 0.0)?,
            NORMALISATION,
        ));
    }
    if let ModelKind::SqOu { gamma, nu } = model.kind() {
        let mix = sqou_spectral(gamma, nu, truncation)?;
        m.push(Metric::deviation(format!("{prefix}spectral_weight_sum"), mix.total_weight(), 1.0, ANALYTIC));
        for t in [0.5, 1.0, 2.0] {
            let closed = density_d0_sqou(gamma, nu, t)?;
            m.push(Metric::deviation(
                format!("{prefix}spectral_d0_density[{t}]"),
                mix.density_checked(t)?,
                closed,
                NORMALISATION,
            ));
        }
        m.push(Metric::deviation(
            format!("{prefix}spectral_v_density[1]"),
            mix.v_density(1.0),
            v_density(model, 1.0)?,
            MIXTURE_V,
        ));
        let verdict = recurrence_test(&mix.unnormalized(model.total_mass()))?;
        m.push(Metric::exact(format!("{prefix}recurrence_positive"), f64::from(u8::from(verdict.positive)), 1.0));
    }
    Ok(())
}

/// Quadrature-only checks of the closed forms: class-K residuals,
/// normalisations, spectral mixture and the null-recurrent transform.
pub fn analytic_check(settings: &Settings) -> Result<Outcome> {
    let rbm = DiffusionModel::rbm(settings.mu)?;
    let refl = DiffusionModel::reflbm01();
    let sqou = DiffusionModel::sqou(settings.gamma, settings.nu)?;
    let params = [("mu", settings.mu), ("gamma", settings.gamma), ("nu", settings.nu)];
    let mut r = report(settings, "all", &params, 0, 0.0);
    let m = &mut r.metrics;

    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mu = settings.mu;
    let transforms: [(&str, JointLt<f64>); 4] = [
        ("rbm_closed", JointLt::new(move |a, b| lt_rbm(mu, a, b), move |g| lt_rbm(mu, g, g))),
        ("rbm_green", JointLt::from_model(rbm)),
        ("reflbm01_green", JointLt::from_model(refl)),
        ("sqou_green", JointLt::from_model(sqou)),
    ];
    for (name, lt) in &transforms {
        let mut worst: f64 = 0.0;
        for &a in &grid {
            for &b in grid.iter().filter(|&&b| b != a) {
                worst = worst.max(class_k_residual(lt, a, b)?);
            }
        }
        m.push(Metric::below(format!("class_k_max_residual[{name}]"), worst, ANALYTIC));
    }

    levy_metrics(&rbm, settings.truncation, "rbm_", m)?;
    levy_metrics(&sqou, settings.truncation, "sqou_", m)?;

    let harmonic: Vec<(f64, f64)> = (1..=settings.truncation.max(2)).map(|k| (k as f64, k as f64)).collect();
    let verdict = recurrence_test(&harmonic)?;
    m.push(Metric::exact("recurrence_harmonic_positive", f64::from(u8::from(verdict.positive)), 0.0));

    for a in [0.3f64, 1.0, 2.5] {
        let x: f64 = (2.0 * a).sqrt();
        let closed = ((2.0 * x).sinh() + 2.0 * x) / (4.0 * x * x.cosh().powi(2));
        m.push(Metric::deviation(format!("reflbm01_v_lt[{a}]"), lt_joint_from_green(&refl, a, a)?, closed, ANALYTIC));
    }

    let mut worst: f64 = 0.0;
    for &a in &grid {
        for &b in grid.iter().filter(|&&b| b != a) {
            let lhs = ((2.0 * a).sqrt() - (2.0 * b).sqrt()) / (a - b);
            worst = worst.max((lhs - lt_null_reflbm(a, b)?).abs());
        }
    }
    m.push(Metric::below("null_recurrent_identity_max_err", worst, ALGEBRAIC));

    Ok(Outcome { report: r, header: Vec::new(), columns: Vec::new() })
}
