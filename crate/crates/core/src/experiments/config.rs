use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::PI_STDERR_TARGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Prop1,
    Scales,
    Profile,
    FreezeDiag,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Prop1 => "prop1",
            ExperimentKind::Scales => "scales",
            ExperimentKind::Profile => "profile",
            ExperimentKind::FreezeDiag => "freeze-diag",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prop1" => Ok(ExperimentKind::Prop1),
            "scales" => Ok(ExperimentKind::Scales),
            "profile" => Ok(ExperimentKind::Profile),
            "freeze-diag" => Ok(ExperimentKind::FreezeDiag),
            _ => Err(Error::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

/// Parameters shared by every experiment. Serialises to `key=value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    /// Volume thresholds N.
    pub n_values: Vec<u32>,
    pub c_grid: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub delta: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Scale depth K.
    pub depth: usize,
    pub pi_stderr: f64,
    pub exact_pi1: bool,
    /// Trials per θ̂ evaluation in the window solver.
    pub theta_trials: u64,
    /// Largest θ̂ proxy box the window solver may build.
    pub proxy_cap: u32,
    /// Largest box radius any experiment point may build.
    pub radius_cap: u32,
    pub threads: Option<usize>,
    /// Fill the `wall_ms` CSV column (breaks byte-identical reruns).
    pub record_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "glacier".into(),
            n_values: vec![10_000],
            c_grid: vec![0.45, 0.75, 1.0, 1.5, 2.0],
            c1: 1.0,
            c2: 2.0,
            c3: 1.0,
            c4: 0.25,
            delta: 0.01,
            trials: 2000,
            master_seed: 7,
            out_dir: PathBuf::from("glacier-out"),
            depth: 3,
            pi_stderr: PI_STDERR_TARGET,
            exact_pi1: true,
            theta_trials: 20_000,
            proxy_cap: 600,
            radius_cap: 4000,
            threads: None,
            record_timings: false,
        }
    }
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value for {key}: {value:?}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

pub(crate) fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| scalar(key, v)).collect()
}

impl ExperimentConfig {
    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "name" => self.name = value.to_string(),
            "N" => self.n_values = parse_list(key, value)?,
            "C" => self.c_grid = parse_list(key, value)?,
            "C1" => self.c1 = scalar(key, value)?,
            "C2" => self.c2 = scalar(key, value)?,
            "C3" => self.c3 = scalar(key, value)?,
            "C4" => self.c4 = scalar(key, value)?,
            "delta" => self.delta = scalar(key, value)?,
            "trials" => self.trials = scalar(key, value)?,
            "seed" => self.master_seed = scalar(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "depth" => self.depth = scalar(key, value)?,
            "pi_stderr" => self.pi_stderr = scalar(key, value)?,
            "exact_pi1" => self.exact_pi1 = scalar(key, value)?,
            "theta_trials" => self.theta_trials = scalar(key, value)?,
            "proxy_cap" => self.proxy_cap = scalar(key, value)?,
            "radius_cap" => self.radius_cap = scalar(key, value)?,
            "threads" => {
                self.threads = match value {
                    "" | "auto" => None,
                    v => Some(scalar(key, v)?),
                }
            }
            "record_timings" => self.record_timings = scalar(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Overlays `key=value` lines (`#` starts a comment) onto `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn emit(&self) -> String {
        let threads = self.threads.map_or("auto".to_string(), |t| t.to_string());
        let pairs: [(&str, String); 19] = [
            ("name", self.name.clone()),
            ("N", list(&self.n_values)),
            ("C", list(&self.c_grid)),
            ("C1", self.c1.to_string()),
            ("C2", self.c2.to_string()),
            ("C3", self.c3.to_string()),
            ("C4", self.c4.to_string()),
            ("delta", self.delta.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.master_seed.to_string()),
            ("out", self.out_dir.display().to_string()),
            ("depth", self.depth.to_string()),
            ("pi_stderr", self.pi_stderr.to_string()),
            ("exact_pi1", self.exact_pi1.to_string()),
            ("theta_trials", self.theta_trials.to_string()),
            ("proxy_cap", self.proxy_cap.to_string()),
            ("radius_cap", self.radius_cap.to_string()),
            ("threads", threads),
            ("record_timings", self.record_timings.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Checks the fields `kind` reads.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return fail("N list is empty".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        match kind {
            ExperimentKind::Prop1 => {
                if self.c_grid.is_empty() {
                    return fail("C grid is empty".into());
                }
                if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
                    return fail(format!("C values must be positive, got {c}"));
                }
                if self.n_values.contains(&0) {
                    return fail("N must be at least 1".into());
                }
            }
            ExperimentKind::Scales => {
                if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
                    return fail(format!("scales need N >= 2, got {n}"));
                }
                if self.depth == 0 {
                    return fail("depth must be at least 1".into());
                }
                if !(self.pi_stderr > 0.0) {
                    return fail("pi_stderr must be positive".into());
                }
            }
            ExperimentKind::Profile | ExperimentKind::FreezeDiag => {
                if let Some(n) = self.n_values.iter().find(|&&n| n < 100) {
                    return fail(format!("{kind} needs N >= 100, got {n}"));
                }
                if !(self.pi_stderr > 0.0) {
                    return fail("pi_stderr must be positive".into());
                }
                if kind == ExperimentKind::FreezeDiag {
                    self.validate_geometry()?;
                }
            }
        }
        Ok(())
    }

    pub fn validate_geometry(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return fail(format!("delta must lie in (0, 0.1], got {}", self.delta));
        }
        for (k, v) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3), ("C4", self.c4)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{k} must be positive, got {v}"));
            }
        }
        if self.c2 <= self.c1 {
            return fail(format!("C2 must exceed C1, got C1={} C2={}", self.c1, self.c2));
        }
        if self.theta_trials == 0 {
            return fail("theta_trials must be at least 1".into());
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        c.merge_text(s)?;
        Ok(c)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.emit())
    }
}
