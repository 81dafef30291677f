//! Command-line front end of the `exlab` binary.
//!
//! Exit codes: 0 when every metric passes, 1 on a metric failure or a
//! runtime error, 2 on usage, configuration or parameter errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{self, Experiment, Settings};

#[derive(Debug, Parser)]
#[command(name = "exlab", version, about = "Occupation-time experiments on stationary diffusion excursions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Straddling-excursion identities: KS, joint transform, moments, uniformity
    Identity(Flags),
    /// Bessel(3) bridge occupation, Vervaat transform, Brownian bridge
    Bridge(Flags),
    /// Local-time exponentials and the area / hitting-time / d0 chain
    Rayknight(Flags),
    /// Lévy tail and spectral mixture checks (quadrature only)
    Levy(Flags),
    /// Closed-form consistency suite (quadrature only)
    AnalyticCheck(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// rbm, reflbm01 or sqou
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Time step, bridge mesh width or space step, depending on the experiment
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV sample export path
    #[arg(long)]
    samples_out: Option<PathBuf>,
    /// Comma-separated reals
    #[arg(long, allow_hyphen_values = true)]
    alpha_grid: Option<String>,
    /// Comma-separated reals
    #[arg(long, allow_hyphen_values = true)]
    beta_grid: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// key=value file, one per line, `#` comments
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any other setting as key=value (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Identity(f) => (Experiment::Identity, f),
            Command::Bridge(f) => (Experiment::Bridge, f),
            Command::Rayknight(f) => (Experiment::RayKnight, f),
            Command::Levy(f) => (Experiment::Levy, f),
            Command::AnalyticCheck(f) => (Experiment::AnalyticCheck, f),
        }
    }
}

fn split_pair(line: &str) -> Result<(String, String)> {
    let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{line}'")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Parses a flat `key=value` config text. Blank lines and `#` comments are
/// skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(|l| l.split_once('#').map_or(l, |(head, _)| head).trim())
        .filter(|l| !l.is_empty())
        .map(split_pair)
        .collect()
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn settings_from(experiment: Experiment, flags: Flags) -> Result<Settings> {
    let mut pairs = match &flags.config {
        Some(p) => read_config(p)?,
        None => Vec::new(),
    };
    for s in &flags.set {
        pairs.push(split_pair(s)?);
    }
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let named = [
        ("model", flags.model),
        ("mu", flags.mu),
        ("gamma", flags.gamma),
        ("nu", flags.nu),
        ("paths", flags.paths),
        ("dt", flags.dt),
        ("seed", flags.seed),
        ("out", path(&flags.out)),
        ("samples_out", path(&flags.samples_out)),
        ("alpha_grid", flags.alpha_grid),
        ("beta_grid", flags.beta_grid),
        ("workers", flags.workers),
    ];
    pairs.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    Settings::resolve(experiment, pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidParameter(_) | Error::Config(_) | Error::NoClosedForm(_) | Error::OutsideInterval { .. })
}

/// Runs one command line (program name first) and returns the exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (experiment, flags) = cli.command.split();
    let outcome = settings_from(experiment, flags).and_then(|s| experiments::run(&s));
    match outcome {
        Ok(o) => {
            print!("{}", o.report.summary());
            if o.report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) if is_usage_error(&e) => {
            eprintln!("error: {e}\n\nRun `exlab {experiment} --help` for usage.");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_skips_comments_and_blanks() {
        let pairs = parse_config("# header\n\nmu = 2  # drift\nalpha_grid=0.5,1\n").unwrap();
        assert_eq!(pairs, vec![("mu".into(), "2".into()), ("alpha_grid".into(), "0.5,1".into())]);
        assert!(parse_config("mu 2").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "mu=2\nseed=3\n").unwrap();
        let cli = Cli::try_parse_from(["exlab", "identity", "--config", p.to_str().unwrap(), "--mu", "4"]).unwrap();
        let (e, f) = cli.command.split();
        let s = settings_from(e, f).unwrap();
        assert_eq!((s.mu, s.seed), (4.0, 3));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["exlab", "identity", "--bogus"]), 2);
        assert_eq!(run(["exlab", "identity", "--mu", "-1"]), 2);
        assert_eq!(run(["exlab", "identity", "--paths", "many"]), 2);
        assert_eq!(run(["exlab", "levy", "--model", "reflbm01"]), 2);
        assert_eq!(run(["exlab"]), 2);
    }
}
