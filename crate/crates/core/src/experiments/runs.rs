use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CsvRow, ExperimentConfig, ExperimentKind, PointTiming, ResultTable};
use crate::error::{Error, Result};
use crate::estimators::{estimate_f, reference_phi, Estimate};
use crate::scales::{
    check_scale_bounds, check_volume_plateau, compute_scales, PiSource, ScaleOptions, ScaleTable,
};

pub(crate) fn scale_options(config: &ExperimentConfig) -> ScaleOptions {
    ScaleOptions {
        source: if config.exact_pi1 {
            PiSource::ExactPi1
        } else {
            PiSource::MonteCarlo
        },
        stderr_target: config.pi_stderr,
        radius_cap: config.radius_cap,
    }
}

fn f_stream(n_threshold: u32, n: u32) -> String {
    format!("F:N={n_threshold}:n={n}")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_millis() as u64)
}

#[derive(Debug, Clone, Serialize)]
struct Prop1Point {
    #[serde(rename = "N")]
    n_threshold: u32,
    c: f64,
    n: u32,
    estimate: Estimate,
    phi: Option<f64>,
    exact_zero: bool,
}

/// F̂_N(⌈C√N⌉) over the N × C grid, next to φ(C).
pub fn run_prop1_profile(config: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Prop1;
    let mut table = ResultTable::new(kind);
    let mut points = Vec::new();
    for &nn in &config.n_values {
        for &c in &config.c_grid {
            let n = (c * (nn as f64).sqrt()).ceil() as u32;
            if n > config.radius_cap {
                table.warnings.push(format!(
                    "skipped N={nn} C={c}: box radius {n} exceeds radius_cap {}",
                    config.radius_cap
                ));
            } else {
                points.push((nn, c, n));
            }
        }
    }
    let results: Vec<(Prop1Point, u64)> = points
        .par_iter()
        .map(|&(nn, c, n)| {
            let (e, ms) = timed(|| estimate_f(nn, n, config.trials, config.master_seed));
            let e = e?;
            let side = 2 * n as u64 + 1;
            let exact_zero = side * side < nn as u64;
            if exact_zero && (e.value != 0.0 || e.stderr != 0.0) {
                return Err(Error::Runtime(format!(
                    "N={nn} C={c}: box volume below N but F̂ = {}",
                    e.value
                )));
            }
            let p = Prop1Point {
                n_threshold: nn,
                c,
                n,
                phi: reference_phi(c).ok(),
                estimate: e,
                exact_zero,
            };
            Ok((p, ms))
        })
        .collect::<Result<_>>()?;
    for (p, ms) in &results {
        let label = format!("C={}", p.c);
        table
            .rows
            .push(CsvRow::from_estimate(kind, p.n_threshold as u64, p.c, label.clone(), &p.estimate));
        table.timings.push(PointTiming {
            label: format!("N={}:{label}", p.n_threshold),
            wall_ms: *ms,
            stream_label: Some(f_stream(p.n_threshold, p.n)),
        });
    }
    table.details = json!({ "points": results.iter().map(|(p, _)| p).collect::<Vec<_>>() });
    Ok(table)
}

fn levels_csv(t: &ScaleTable) -> String {
    let mut out = String::from(super::SCALES_CSV_HEADER);
    out.push('\n');
    for (k, &m) in t.scales.iter().enumerate() {
        let (lo, hi) = t.intervals[k];
        let (pi, se) = match t.pi_used.get(k) {
            Some(e) => (e.value.to_string(), e.stderr.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{k},{m},{pi},{se},{lo},{hi}");
    }
    out
}

/// Scale tables with their bound and plateau reports, one per N.
pub fn run_scales(config: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Scales;
    let mut table = ResultTable::new(kind);
    let opts = scale_options(config);
    let tables: Vec<(ScaleTable, u64)> = config
        .n_values
        .par_iter()
        .map(|&nn| {
            let (t, ms) = timed(|| compute_scales(nn as u64, config.depth, opts, config.master_seed));
            t.map(|t| (t, ms))
        })
        .collect::<Result<_>>()?;
    let mut details = Vec::new();
    for (t, ms) in &tables {
        for (k, e) in t.pi_used.iter().enumerate() {
            table
                .rows
                .push(CsvRow::from_estimate(kind, t.n, k, format!("pi(m_{k})"), e));
        }
        table.extra_csv.push((format!("scales-N{}.csv", t.n), levels_csv(t)));
        table.timings.push(PointTiming {
            label: format!("N={}", t.n),
            wall_ms: *ms,
            stream_label: None,
        });
        let bounds = check_scale_bounds(t).ok();
        let plateau = check_volume_plateau(t, None);
        details.push(json!({ "table": t, "bounds": bounds, "plateau": plateau }));
    }
    table.details = json!({ "tables": details });
    Ok(table)
}

/// Profile probe labels; sorted order equals scale order.
pub const PROFILE_LABELS: [&str; 5] = ["1:m_1", "2:g_1", "3:m_2", "4:g_2", "5:m_3"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub label: String,
    pub n: u32,
    pub estimate: Estimate,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    #[serde(rename = "N")]
    pub n: u64,
    pub table: ScaleTable,
    pub points: Vec<ProfilePoint>,
    /// F̂(m_2) above F̂(g_1) with disjoint 95% intervals.
    pub m2_exceeds_g1: Option<bool>,
    pub m2_exceeds_g2: Option<bool>,
}

fn separated(hi: &ProfilePoint, lo: &ProfilePoint) -> bool {
    hi.ci95.0 > lo.ci95.1
}

/// F̂_N at m_1, g_1, m_2, g_2, m_3 with g_k = ⌈√(m_k·m_{k+1})⌉.
pub fn run_scale_profile(config: &ExperimentConfig) -> Result<ResultTable> {
    let kind = ExperimentKind::Profile;
    let mut table = ResultTable::new(kind);
    let opts = scale_options(config);
    let depth = config.depth.max(3);
    let scale_tables: Vec<ScaleTable> = config
        .n_values
        .par_iter()
        .map(|&nn| compute_scales(nn as u64, depth, opts, config.master_seed))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for t in &scale_tables {
        let ns = [t.m(1), t.midpoint(1), t.m(2), t.midpoint(2), t.m(3)];
        for (label, n) in PROFILE_LABELS.iter().zip(ns) {
            if n > config.radius_cap {
                table.warnings.push(format!(
                    "skipped N={} {label}: box radius {n} exceeds radius_cap {}",
                    t.n, config.radius_cap
                ));
            } else {
                jobs.push((t.n as u32, *label, n));
            }
        }
    }
    let estimates: Vec<(Estimate, u64)> = jobs
        .par_iter()
        .map(|&(nn, _, n)| {
            let (e, ms) = timed(|| estimate_f(nn, n, config.trials, config.master_seed));
            e.map(|e| (e, ms))
        })
        .collect::<Result<_>>()?;
    let mut profiles: Vec<ScaleProfile> = scale_tables
        .into_iter()
        .map(|t| ScaleProfile {
            n: t.n,
            table: t,
            points: Vec::new(),
            m2_exceeds_g1: None,
            m2_exceeds_g2: None,
        })
        .collect();
    for ((nn, label, n), (e, ms)) in jobs.iter().zip(estimates) {
        table
            .rows
            .push(CsvRow::from_estimate(kind, *nn as u64, n, *label, &e));
        table.timings.push(PointTiming {
            label: format!("N={nn}:{label}"),
            wall_ms: ms,
            stream_label: Some(f_stream(*nn, *n)),
        });
        let prof = profiles
            .iter_mut()
            .find(|p| p.n == *nn as u64)
            .expect("profile per N");
        prof.points.push(ProfilePoint {
            label: label.to_string(),
            n: *n,
            ci95: e.ci95(),
            estimate: e,
        });
    }
    for prof in &mut profiles {
        let get = |l: &str| prof.points.iter().find(|p| p.label == l);
        let m2 = get(PROFILE_LABELS[2]);
        let cmp = |other: &str| Some(separated(m2?, get(other)?));
        prof.m2_exceeds_g1 = cmp(PROFILE_LABELS[1]);
        prof.m2_exceeds_g2 = cmp(PROFILE_LABELS[3]);
    }
    table.details = json!({ "profiles": profiles });
    Ok(table)
}
