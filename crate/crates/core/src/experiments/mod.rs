//! Experiment harness: configs, runs, CSV/JSON output and manifests.
//!
//! Every run writes `<out>/<experiment>.csv` (fixed schema, rows sorted by
//! experiment, N and point label), `<out>/<experiment>.json` with the full
//! result details, and `<out>/<experiment>.manifest.json`. Row values are
//! deterministic in the config; the `wall_ms` column stays empty unless
//! `record_timings` is set, so reruns reproduce the CSV byte for byte.

mod config;
mod diag;
mod runs;
mod window;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use config::{ExperimentConfig, ExperimentKind};
pub use diag::{
    run_freeze_diagnostics, EventFrequencies, FreezeDiagnostics, HoleStats, FREEZE_BINS,
};
pub use runs::{
    run_prop1_profile, run_scale_profile, run_scales, ProfilePoint, ScaleProfile, PROFILE_LABELS,
};
pub use window::{
    invert_theta, solve_freeze_window, window_targets, FreezeWindow, ProxyTheta, ThetaSource,
    BISECTION_STEPS, P_HIGH, P_LOW, RESIDUAL_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::estimators::Estimate;

pub const CSV_HEADER: &str = "experiment,N,n_or_C,point_label,estimate,stderr,trials,master_seed,wall_ms";
pub const SCALES_CSV_HEADER: &str = "k,m_k,pi_hat,pi_stderr,m_lo,m_hi";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub n_or_c: String,
    pub point_label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub wall_ms: Option<u64>,
}

impl CsvRow {
    pub(crate) fn from_estimate(
        kind: ExperimentKind,
        n: u64,
        n_or_c: impl ToString,
        label: impl Into<String>,
        e: &Estimate,
    ) -> Self {
        CsvRow {
            experiment: kind.label().to_string(),
            n,
            n_or_c: n_or_c.to_string(),
            point_label: label.into(),
            estimate: e.value,
            stderr: e.stderr,
            trials: e.trials,
            master_seed: e.master_seed,
            wall_ms: None,
        }
    }

    fn write(&self, out: &mut String) {
        let wall = self.wall_ms.map(|w| w.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.n,
            self.n_or_c,
            self.point_label,
            self.estimate,
            self.stderr,
            self.trials,
            self.master_seed,
            wall
        );
    }
}

/// Wall time of one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    pub label: String,
    pub wall_ms: u64,
    pub stream_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: ExperimentKind,
    pub rows: Vec<CsvRow>,
    /// Extra CSV files (name, contents) written next to the main one.
    pub extra_csv: Vec<(String, String)>,
    pub details: Value,
    pub warnings: Vec<String>,
    pub timings: Vec<PointTiming>,
}

impl ResultTable {
    pub(crate) fn new(experiment: ExperimentKind) -> Self {
        ResultTable {
            experiment,
            rows: Vec::new(),
            extra_csv: Vec::new(),
            details: Value::Null,
            warnings: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub(crate) fn finish(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.experiment.as_str(), a.n, a.point_label.as_str())
                .cmp(&(b.experiment.as_str(), b.n, b.point_label.as_str()))
        });
        self.timings.sort_by(|a, b| a.label.cmp(&b.label));
    }

    pub fn row(&self, n: u64, label: &str) -> Option<&CsvRow> {
        self.rows.iter().find(|r| r.n == n && r.point_label == label)
    }

    /// The main CSV; `wall_ms` is filled only when `timings` is true.
    pub fn csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let mut r = r.clone();
            if timings {
                r.wall_ms = self
                    .timings
                    .iter()
                    .find(|t| t.label == format!("N={}:{}", r.n, r.point_label) || t.label == format!("N={}", r.n))
                    .map(|t| t.wall_ms);
            } else {
                r.wall_ms = None;
            }
            r.write(&mut out);
        }
        out
    }
}

/// Runs `f` on a pool of `threads` workers (rayon's global pool if `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Validates `config` and runs one experiment without touching the disk.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate(kind)?;
    let mut table = with_threads(config.threads, || match kind {
        ExperimentKind::Prop1 => run_prop1_profile(config),
        ExperimentKind::Scales => run_scales(config),
        ExperimentKind::Profile => run_scale_profile(config),
        ExperimentKind::FreezeDiag => run_freeze_diagnostics(config),
    })??;
    table.finish();
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub version: String,
    /// The config as `key=value` text; parses back to the config.
    pub config: String,
    pub master_seed: u64,
    pub stream_labels: Vec<String>,
    pub threads: usize,
    pub started_unix_ms: u128,
    pub wall_ms: u64,
    pub points: Vec<PointTiming>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn config(&self) -> Result<ExperimentConfig> {
        self.config.parse()
    }
}

/// `git describe`-style identifier of the running build.
pub fn version_string() -> String {
    let pkg = concat!("v", env!("CARGO_PKG_VERSION"));
    std::process::Command::new("git")
        .args(["describe", "--tags", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| format!("{pkg}-g{}", s.trim()))
        .unwrap_or_else(|| pkg.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs `kind` and writes CSV, JSON results and the manifest into
/// `config.out_dir`.
pub fn run_manifest(kind: ExperimentKind, config: &ExperimentConfig) -> Result<(ResultTable, Manifest)> {
    config.validate(kind)?;
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let table = run_experiment(kind, config)?;
    let wall_ms = clock.elapsed().as_millis() as u64;
    let stem = kind.label();
    let mut outputs = Vec::new();
    let mut put = |name: String, contents: &str| -> Result<()> {
        write_file(&dir.join(&name), contents)?;
        outputs.push(name);
        Ok(())
    };
    put(format!("{stem}.csv"), &table.csv(config.record_timings))?;
    for (name, contents) in &table.extra_csv {
        put(name.clone(), contents)?;
    }
    put(format!("{stem}.json"), &serde_json::to_string_pretty(&table.details)?)?;
    let manifest_name = format!("{stem}.manifest.json");
    outputs.push(manifest_name.clone());
    let manifest = Manifest {
        experiment: kind,
        version: version_string(),
        config: config.emit(),
        master_seed: config.master_seed,
        stream_labels: table.timings.iter().filter_map(|t| t.stream_label.clone()).collect(),
        threads: config.threads.unwrap_or_else(rayon::current_num_threads),
        started_unix_ms: started,
        wall_ms,
        points: table.timings.clone(),
        outputs,
        warnings: table.warnings.clone(),
    };
    write_file(&dir.join(&manifest_name), &serde_json::to_string_pretty(&manifest)?)?;
    Ok((table, manifest))
}

/// Path of the main CSV a run of `kind` writes.
pub fn csv_path(kind: ExperimentKind, config: &ExperimentConfig) -> PathBuf {
    config.out_dir.join(format!("{}.csv", kind.label()))
}
