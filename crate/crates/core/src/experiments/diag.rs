//! Freeze-window diagnostics at the m_2 geometry: first freeze times near the
//! origin, the hole left around it, and the static events E1–E5 at p1/p2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::runs::scale_options;
use super::window::{solve_freeze_window, FreezeWindow, ProxyTheta};
use super::{CsvRow, ExperimentConfig, ExperimentKind, PointTiming, ResultTable};
use crate::error::{Error, Result};
use crate::estimators::{map_trials, Estimate};
use crate::frozen::{sample_clocks, run_frozen, FrozenState};
use crate::lattice::{build_box, Domain, Vertex};
use crate::percolation::{
    has_dual_open_circuit, has_open_circuit, largest_cluster_volume, largest_cluster_volume_in,
    Annulus, Configuration, EdgeWeights, Explorer,
};
use crate::scales::compute_scales;
use crate::streams::Streams;

/// Histogram bins of first freeze times on [0, 1].
pub const FREEZE_BINS: usize = 100;

fn ceil_radius(x: f64) -> u32 {
    x.ceil() as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleStats {
    /// Runs in which the origin ended frozen (no hole).
    pub origin_frozen: u64,
    /// Runs whose hole reaches the domain boundary.
    pub unbounded: u64,
    /// Mean over bounded holes of (min, max) boundary radius divided by m_k.
    pub mean_inner_over_mk: Option<f64>,
    pub mean_outer_over_mk: Option<f64>,
    /// Fraction of all runs whose hole boundary lies in A(C3·m_k, 4·C3·m_k).
    pub in_annulus: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFrequencies {
    pub e1: Estimate,
    pub e2: Estimate,
    pub e3: Estimate,
    pub e4: Estimate,
    pub e5: Estimate,
    /// p1-dual-open circuit in A(C4·L̂(p2), C3·L̂(p2)); absent if that annulus is empty.
    pub e5_l: Option<Estimate>,
    pub all: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeDiagnostics {
    #[serde(rename = "N")]
    pub n: u64,
    pub m_k: u32,
    pub scale: u32,
    pub box_radius: u32,
    pub region_radius: u32,
    pub trials: u64,
    pub window: Option<FreezeWindow>,
    pub window_error: Option<String>,
    pub histogram: Vec<u64>,
    pub never_froze: u64,
    /// Mean first freeze time in the region over runs where it froze.
    pub first_freeze: Option<Estimate>,
    pub fraction_in_window: Option<Estimate>,
    pub holes: HoleStats,
    pub events: Option<EventFrequencies>,
}

struct RunSummary {
    first: Option<f64>,
    hole: Option<(u32, u32, bool)>,
}

/// (min, max) doubled max-norm of boundary edge midpoints, and whether the
/// hole meets the domain boundary.
fn hole_extent(state: &FrozenState<'_, f64>, box_radius: u32) -> Option<(u32, u32, bool)> {
    let d = state.domain();
    let hole = state.hole_containing(Vertex::ORIGIN).ok()?;
    let touches = hole.vertices.iter().any(|&v| d.vertex(v).max_norm() == box_radius);
    let mids = hole.boundary.iter().map(|&e| {
        let (a, b) = d.endpoints(e);
        let (a, b) = (d.vertex(a), d.vertex(b));
        let (x, y) = (a.x + b.x, a.y + b.y);
        x.unsigned_abs().max(y.unsigned_abs())
    });
    let (lo, hi) = mids.fold((u32::MAX, 0), |(lo, hi), r| (lo.min(r), hi.max(r)));
    Some((lo, hi, touches || hole.boundary.is_empty()))
}

fn count(flags: &[bool]) -> u64 {
    flags.iter().filter(|&&b| b).count() as u64
}

fn frozen_runs(
    domain: &Domain,
    n_threshold: u32,
    region: &[usize],
    box_radius: u32,
    trials: u64,
    streams: &Streams,
) -> Vec<RunSummary> {
    map_trials(streams, trials, || (), |_, rng| {
        let clocks = sample_clocks::<f64, _>(domain, rng);
        let state = run_frozen(domain, &clocks, n_threshold).expect("valid run arguments");
        RunSummary {
            first: state.first_freeze_time_in(region),
            hole: hole_extent(&state, box_radius),
        }
    })
}

struct Geometry {
    r07: u32,
    r08: u32,
    r09: u32,
    r10: u32,
    c3m: u32,
    c3m2: u32,
    c3m4: u32,
    l_annulus: Option<Annulus>,
}

fn event_flags(
    weights: &EdgeWeights,
    domain: &Domain,
    w: &FreezeWindow,
    g: &Geometry,
    explorer: &mut Explorer,
) -> Result<[bool; 6]> {
    let n = w.n as u32;
    let at_p1 = weights.config_at(domain, w.p1);
    let at_p2 = weights.config_at(domain, w.p2);
    let ann = |a, b| Annulus::new(a, b);
    let e1 = has_open_circuit(&at_p2, ann(g.r07, g.r08)?)? && has_open_circuit(&at_p2, ann(g.r09, g.r10)?)?;
    let e2 = largest_cluster_volume_in(&at_p1, |v| v.max_norm() <= g.r09) >= n;
    let e3 = largest_cluster_volume_in(&at_p1, |v| v.max_norm() <= g.r08) < n
        && largest_cluster_volume_in(&at_p1, |v| (g.r07 + 1..=g.r10).contains(&v.max_norm())) < n
        && largest_cluster_volume(&at_p2) < n;
    let e4 = reaches(explorer, &at_p2, g.c3m2, g.r10) && has_open_circuit(&at_p2, ann(g.c3m2, g.c3m4)?)?;
    let e5 = has_dual_open_circuit(&at_p1, ann(g.c3m, g.c3m2)?)?;
    let e5_l = match g.l_annulus {
        Some(a) => has_dual_open_circuit(&at_p1, a)?,
        None => false,
    };
    Ok([e1, e2, e3, e4, e5, e5_l])
}

/// Open path from B(inner) to ∂B(outer) inside B(outer).
fn reaches(explorer: &mut Explorer, config: &Configuration<'_>, inner: u32, outer: u32) -> bool {
    let d = config.domain();
    let sources = (0..d.vertex_count()).filter(|&v| d.vertex(v).max_norm() <= inner);
    explorer.reaches(
        config,
        sources,
        |v| d.vertex(v).max_norm() <= outer,
        |v| d.vertex(v).max_norm() == outer,
    )
}

fn diagnose(config: &ExperimentConfig, n_threshold: u32) -> Result<FreezeDiagnostics> {
    let seed = config.master_seed;
    let scales = compute_scales(n_threshold as u64, 2, scale_options(config), seed)?;
    let (m_k, scale) = (scales.m(1), scales.m(2));
    let box_radius = ceil_radius(config.c2 * scale as f64);
    if box_radius > config.radius_cap {
        return Err(Error::MemoryCap {
            radius: box_radius as u64,
            cap: config.radius_cap as u64,
        });
    }
    let region_radius = ceil_radius(0.9 * config.c1 * scale as f64);
    let mut source = ProxyTheta::new(config.theta_trials, seed, config.proxy_cap);
    let (window, window_error) =
        match solve_freeze_window(n_threshold as u64, scale, config.c1, config.c2, config.delta, &mut source) {
            Ok(w) => (Some(w), None),
            Err(e @ Error::WindowUnreachable(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };

    let domain = build_box(box_radius);
    let region: Vec<usize> = (0..domain.vertex_count())
        .filter(|&v| domain.vertex(v).max_norm() <= region_radius)
        .collect();
    let streams = Streams::new(seed, &format!("freeze-diag:N={n_threshold}"));
    let runs = frozen_runs(&domain, n_threshold, &region, box_radius, config.trials, &streams);

    let mut histogram = vec![0u64; FREEZE_BINS];
    let times: Vec<f64> = runs.iter().filter_map(|r| r.first).collect();
    for &t in &times {
        histogram[((t * FREEZE_BINS as f64) as usize).min(FREEZE_BINS - 1)] += 1;
    }
    let first_freeze = (!times.is_empty()).then(|| {
        let k = times.len() as f64;
        let mean = times.iter().sum::<f64>() / k;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        Estimate::exact(mean, times.len() as u64, seed).with_stderr((var / k).sqrt())
    });
    let fraction_in_window = window.as_ref().map(|w| {
        let inside = times.iter().filter(|&&t| t > w.p2 && t < w.p1).count() as u64;
        Estimate::bernoulli(inside, config.trials, seed)
    });

    let mk = m_k as f64;
    let (c3_lo, c3_hi) = (2.0 * config.c3 * mk, 2.0 * 4.0 * config.c3 * mk);
    let bounded: Vec<(u32, u32)> = runs
        .iter()
        .filter_map(|r| r.hole)
        .filter(|h| !h.2)
        .map(|h| (h.0, h.1))
        .collect();
    let in_annulus = bounded
        .iter()
        .filter(|(lo, hi)| *lo as f64 > c3_lo && *hi as f64 <= c3_hi)
        .count() as u64;
    let mean_of = |f: fn(&(u32, u32)) -> u32| {
        (!bounded.is_empty())
            .then(|| bounded.iter().map(|h| f(h) as f64 / 2.0 / mk).sum::<f64>() / bounded.len() as f64)
    };
    let holes = HoleStats {
        origin_frozen: runs.iter().filter(|r| r.hole.is_none()).count() as u64,
        unbounded: runs.iter().filter(|r| r.hole.is_some_and(|h| h.2)).count() as u64,
        mean_inner_over_mk: mean_of(|h| h.0),
        mean_outer_over_mk: mean_of(|h| h.1),
        in_annulus: Estimate::bernoulli(in_annulus, config.trials, seed),
    };

    let events = match &window {
        None => None,
        Some(w) => Some(event_frequencies(config, w, &domain, m_k, scale)?),
    };
    Ok(FreezeDiagnostics {
        n: n_threshold as u64,
        m_k,
        scale,
        box_radius,
        region_radius,
        trials: config.trials,
        window,
        window_error,
        histogram,
        never_froze: config.trials - times.len() as u64,
        first_freeze,
        fraction_in_window,
        holes,
        events,
    })
}

fn event_frequencies(
    config: &ExperimentConfig,
    w: &FreezeWindow,
    domain: &Domain,
    m_k: u32,
    scale: u32,
) -> Result<EventFrequencies> {
    let s = config.c1 * scale as f64;
    let mk = m_k as f64;
    let l2 = w.theta_p2.meta.get("l_hat").and_then(|v| v.as_f64());
    let l_annulus = l2.and_then(|l| Annulus::new(ceil_radius(config.c4 * l), ceil_radius(config.c3 * l)).ok());
    let g = Geometry {
        r07: ceil_radius(0.7 * s),
        r08: ceil_radius(0.8 * s),
        r09: ceil_radius(0.9 * s),
        r10: ceil_radius(s),
        c3m: ceil_radius(config.c3 * mk),
        c3m2: ceil_radius(2.0 * config.c3 * mk),
        c3m4: ceil_radius(4.0 * config.c3 * mk),
        l_annulus,
    };
    let streams = Streams::new(config.master_seed, &format!("events:N={}", w.n));
    let flags: Vec<[bool; 6]> = (0..config.trials)
        .into_par_iter()
        .map_init(Explorer::new, |ex, i| {
            let weights = EdgeWeights::sample(domain, &mut streams.trial(i));
            event_flags(&weights, domain, w, &g, ex)
        })
        .collect::<Result<_>>()?;
    let seed = config.master_seed;
    let freq = |i: usize| {
        let col: Vec<bool> = flags.iter().map(|f| f[i]).collect();
        Estimate::bernoulli(count(&col), config.trials, seed)
    };
    let all: Vec<bool> = flags.iter().map(|f| f[..5].iter().all(|&b| b)).collect();
    Ok(EventFrequencies {
        e1: freq(0),
        e2: freq(1),
        e3: freq(2),
        e4: freq(3),
        e5: freq(4),
        e5_l: g.l_annulus.map(|_| freq(5)),
        all: Estimate::bernoulli(count(&all), config.trials, seed),
    })
}

/// Freeze-time, hole and event diagnostics at scale m_2 for every N.
pub fn run_freeze_diagnostics(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate_geometry()?;
    let kind = ExperimentKind::FreezeDiag;
    let mut table = ResultTable::new(kind);
    let results: Vec<(FreezeDiagnostics, u64)> = config
        .n_values
        .par_iter()
        .map(|&nn| {
            let t = std::time::Instant::now();
            diagnose(config, nn).map(|d| (d, t.elapsed().as_millis() as u64))
        })
        .collect::<Result<_>>()?;
    for (d, ms) in &results {
        let nn = d.n;
        let mut push = |label: &str, e: &Estimate| {
            table
                .rows
                .push(CsvRow::from_estimate(kind, nn, d.scale, label, e));
        };
        if let Some(w) = &d.window {
            push("p1", &Estimate::exact(w.p1, w.theta_p1.trials, w.theta_p1.master_seed));
            push("p2", &Estimate::exact(w.p2, w.theta_p2.trials, w.theta_p2.master_seed));
        }
        if let Some(f) = &d.fraction_in_window {
            push("fraction_in_window", f);
        }
        if let Some(f) = &d.first_freeze {
            push("first_freeze_mean", f);
        }
        push("hole_in_annulus", &d.holes.in_annulus);
        if let Some(ev) = &d.events {
            for (label, e) in [("E1", &ev.e1), ("E2", &ev.e2), ("E3", &ev.e3), ("E4", &ev.e4), ("E5", &ev.e5), ("E_all", &ev.all)] {
                push(label, e);
            }
            if let Some(e) = &ev.e5_l {
                push("E5_L", e);
            }
        }
        if let Some(err) = &d.window_error {
            table.warnings.push(format!("N={nn}: {err}"));
        }
        table.timings.push(PointTiming {
            label: format!("N={nn}"),
            wall_ms: *ms,
            stream_label: Some(format!("freeze-diag:N={nn}")),
        });
    }
    table.details = json!({ "diagnostics": results.iter().map(|(d, _)| d).collect::<Vec<_>>() });
    Ok(table)
}
