//! Experiment reports (JSON) and sample exports (CSV).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Metric {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value.is_finite() && value < tolerance }
    }

    /// `|value - target|` against `tolerance`.
    pub fn deviation(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::below(name, (value - target).abs(), tolerance)
    }

    /// Relative deviation `|value/target - 1|` against `tolerance`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::below(name, (value / target - 1.0).abs(), tolerance)
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value >= tolerance }
    }

    /// Passes when `value == tolerance` exactly.
    pub fn exact(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value == tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub censored_fraction: f64,
    pub wall_time_seconds: f64,
    /// Resolved settings, after flags, config file and defaults.
    pub config: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.pass)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Metric values alone, for comparing runs.
    pub fn metric_values(&self) -> Vec<(String, f64)> {
        self.metrics.iter().map(|m| (m.name.clone(), m.value)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    /// One line per metric.
    pub fn summary(&self) -> String {
        let mut s = format!("{} [{}] n={} dt={} seed={}\n", self.experiment, self.model, self.n, self.dt, self.seed);
        for m in &self.metrics {
            let tag = if m.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("  {tag}  {:<40} {:>14.6e}  (tol {:e})\n", m.name, m.value, m.tolerance));
        }
        s.push_str(&format!(
            "  {} metrics, {} failed, censored {:.4}%, {:.1}s\n",
            self.metrics.len(),
            self.metrics.iter().filter(|m| !m.pass).count(),
            100.0 * self.censored_fraction,
            self.wall_time_seconds
        ));
        s
    }
}

/// Writes equal-length columns as CSV with a one-line header. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    crate::error::ensure(header.len() == columns.len(), || "header and column count differ".into())?;
    let rows = columns.first().map_or(0, |c| c.len());
    crate::error::ensure(columns.iter().all(|c| c.len() == rows), || "columns differ in length".into())?;
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..rows {
        line.clear();
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{:?}", c[i]).expect("writing to a String");
        }
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        ExperimentReport {
            experiment: "identity".into(),
            model: "rbm".into(),
            parameters: [("mu".to_string(), 1.0)].into_iter().collect(),
            n: 50_000,
            dt: 1e-3,
            seed: 7,
            metrics: vec![
                Metric::below("ks", 0.1 + 0.2, 0.02),
                Metric::relative("mean", 0.499_999_999_999_999_94, 0.5, 0.02),
                Metric::below("tiny", 5e-324, 1e-300),
            ],
            censored_fraction: 1.0 / 3.0,
            wall_time_seconds: 12.345_678_901_234_567,
            config: [("paths".to_string(), "50000".to_string())].into_iter().collect(),
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        for (a, b) in back.metrics.iter().zip(&r.metrics) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn json_keys_are_the_field_names() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in [
            "experiment",
            "model",
            "parameters",
            "n",
            "dt",
            "seed",
            "metrics",
            "censored_fraction",
            "wall_time_seconds",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
    }

    #[test]
    fn overall_pass_requires_every_metric() {
        let mut r = sample();
        assert!(!r.passed());
        r.metrics.retain(|m| m.pass);
        assert!(r.passed());
        assert!(Metric::at_least("count", 3000.0, 3000.0).pass);
        assert!(!Metric::below("nan", f64::NAN, 1.0).pass);
        assert!(Metric::exact("mismatches", 0.0, 0.0).pass);
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv(&p, &["a", "b"], &[&[1.0, 0.1 + 0.2], &[-2.5, 1e-300]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "a,b\n1.0,-2.5\n0.30000000000000004,1e-300\n");
        assert!(write_csv(&p, &["a"], &[&[1.0], &[2.0]]).is_err());
    }
}
