//! Monte Carlo estimators for π(n), θ(p), crossing probabilities, L(p) and
//! F_N(n).
//!
//! Every estimator counts integer successes over trials run in parallel; trial
//! `i` uses [`Streams::trial`]`(i)`, so results are bit-identical for any
//! worker count. Stream labels never include `p`, which couples estimates at
//! different parameters on the same samples (edge `e` is open at `p` iff its
//! weight is below `p`).

mod diagnostics;

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use diagnostics::{
    apriori_ratios, essentially_increasing, subcritical_decay, theta_pi_ratio, DecayReport,
    PiTable, RatioCheck, ThetaPiReport, SIGMA_SLACK, THETA_PI_BAND,
};

use crate::error::{Error, Result};
use crate::frozen::FrozenScratch;
use crate::lattice::{build_box, build_rectangle, Domain, Vertex};
use crate::percolation::{crossing_with, Configuration, Explorer, Orientation, Rect};
use crate::scalar::Scalar;
use crate::streams::{derive_seed, Streams};

/// Trials per crossing probe in the L̂ search: stderr ≤ 0.01 at the 3/4
/// decision boundary needs 1875.
pub const MIN_PROBE_TRIALS: u64 = 1875;

/// Largest rectangle height probed by the L̂ search.
pub const MAX_L: u32 = 4096;

/// Box multiple of L̂(p) required by the θ proxy.
pub const THETA_BOX_FACTOR: u32 = 8;

/// Smallest θ proxy box.
pub const THETA_MIN_BOX: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub n: u32,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// A Monte Carlo point estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(rename = "params")]
    pub meta: BTreeMap<String, Value>,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probes: Option<Vec<Probe>>,
}

impl Estimate {
    pub fn bernoulli(successes: u64, trials: u64, master_seed: u64) -> Self {
        let value = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Estimate {
            meta: BTreeMap::new(),
            value,
            stderr: bernoulli_stderr(value, trials),
            trials,
            master_seed,
            probes: None,
        }
    }

    /// A value known without sampling.
    pub fn exact(value: f64, trials: u64, master_seed: u64) -> Self {
        Estimate {
            stderr: 0.0,
            ..Estimate::bernoulli(0, trials, master_seed)
        }
        .with_value(value)
    }

    fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }

    /// Replaces the standard error (for non-Bernoulli means).
    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = stderr;
        self
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }
}

pub fn bernoulli_stderr(v: f64, trials: u64) -> f64 {
    if trials == 0 {
        0.0
    } else {
        (v * (1.0 - v) / trials as f64).max(0.0).sqrt()
    }
}

/// `|a - b|` measured in joint standard errors.
pub fn joint_sigmas(a: &Estimate, b: &Estimate) -> f64 {
    let s = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let d = (a.value - b.value).abs();
    if s == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / s
    }
}

/// Number of trials for which `trial` returns true.
pub(crate) fn count_trials<S, I, F>(streams: &Streams, trials: u64, init: I, trial: F) -> u64
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut ChaCha8Rng) -> bool + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map_init(init, |s, i| trial(s, &mut streams.trial(i)) as u64)
        .sum()
}

/// Per-trial outputs in trial order.
pub(crate) fn map_trials<S, T, I, F>(streams: &Streams, trials: u64, init: I, trial: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map_init(init, |s, i| trial(s, &mut streams.trial(i)))
        .collect()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::param("trials must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("probability {p} outside [0, 1]")))
    }
}

/// Probability that a p-configuration on B(n) connects the origin to ∂B(n).
fn one_arm(p: f64, n: u32, trials: u64, streams: &Streams) -> u64 {
    let domain = build_box(n);
    count_trials(
        streams,
        trials,
        || (Configuration::all_closed(&domain, p), Explorer::new()),
        |(config, explorer), rng| {
            if p == 0.5 {
                config.resample_fair(rng);
            } else {
                config.resample(p, rng);
            }
            explorer.origin_reaches_box_boundary(config, n)
        },
    )
}

/// π̂(n) = P_{1/2}(0 ↝ ∂B(n)).
pub fn estimate_pi(n: u32, trials: u64, master_seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    let est = if n == 0 {
        Estimate::exact(1.0, trials, master_seed)
    } else {
        let hits = one_arm(0.5, n, trials, &Streams::new(master_seed, &format!("pi:n={n}")));
        Estimate::bernoulli(hits, trials, master_seed)
    };
    Ok(est.with("quantity", "pi").with("n", n))
}

/// Smallest proxy box accepted by [`estimate_theta`] at `p`.
pub fn theta_proxy_box(p: f64, master_seed: u64) -> Result<u32> {
    let l = estimate_l(p, MIN_PROBE_TRIALS, derive_seed(master_seed, "theta/L"))?;
    Ok(THETA_MIN_BOX.max(THETA_BOX_FACTOR * l.value as u32))
}

/// Finite-box proxy θ̂(p) = P_p(0 ↝ ∂B(n)) for p > 1/2. It overestimates θ(p);
/// `n` must be at least `8·L̂(p)`, with L̂ computed from a seed derived from
/// `master_seed`.
pub fn estimate_theta(p: f64, n: u32, trials: u64, master_seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    check_p(p)?;
    if p <= 0.5 {
        return Err(Error::param(format!(
            "theta proxy needs p > 1/2, got {p}"
        )));
    }
    let l = estimate_l(p, MIN_PROBE_TRIALS, derive_seed(master_seed, "theta/L"))?.value as u32;
    if n < THETA_BOX_FACTOR * l {
        return Err(Error::param(format!(
            "theta proxy box {n} is below {THETA_BOX_FACTOR}·L̂(p) = {}",
            THETA_BOX_FACTOR * l
        )));
    }
    Ok(theta_unchecked(p, n, trials, master_seed).with("l_hat", l))
}

/// θ̂ without the box-size guard; shares streams with [`estimate_theta`].
pub(crate) fn theta_unchecked(p: f64, n: u32, trials: u64, master_seed: u64) -> Estimate {
    let hits = one_arm(p, n, trials, &Streams::new(master_seed, &format!("theta:n={n}")));
    Estimate::bernoulli(hits, trials, master_seed)
        .with("quantity", "theta")
        .with("p", p)
        .with("n", n)
}

fn crossing_frequency(
    p: f64,
    rect: Rect,
    orientation: Orientation,
    trials: u64,
    streams: &Streams,
) -> u64 {
    let domain = build_rectangle(rect.x1, rect.x2, rect.y1, rect.y2).expect("valid rectangle");
    count_trials(
        streams,
        trials,
        || (Configuration::all_closed(&domain, p), Explorer::new()),
        |(config, explorer), rng| {
            config.resample(p, rng);
            crossing_with(explorer, config, rect, orientation)
        },
    )
}

/// Frequency of a horizontal open crossing of [0, 2n] × [0, n].
pub fn estimate_crossing(p: f64, n: u32, trials: u64, master_seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    check_p(p)?;
    if n == 0 {
        return Err(Error::param("crossing needs n >= 1"));
    }
    let rect = Rect::new(0, 2 * n as i32, 0, n as i32);
    let streams = Streams::new(master_seed, &format!("crossing:n={n}"));
    let hits = crossing_frequency(p, rect, Orientation::Horizontal, trials, &streams);
    Ok(Estimate::bernoulli(hits, trials, master_seed)
        .with("quantity", "crossing")
        .with("p", p)
        .with("n", n))
}

/// Frequency of a vertical open crossing of [0, 2k] × [0, k].
pub fn estimate_vertical_crossing(p: f64, k: u32, trials: u64, master_seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    check_p(p)?;
    if k == 0 {
        return Err(Error::param("crossing needs k >= 1"));
    }
    let rect = Rect::new(0, 2 * k as i32, 0, k as i32);
    let streams = Streams::new(master_seed, &format!("vcrossing:k={k}"));
    let hits = crossing_frequency(p, rect, Orientation::Vertical, trials, &streams);
    Ok(Estimate::bernoulli(hits, trials, master_seed)
        .with("quantity", "vertical_crossing")
        .with("p", p)
        .with("k", k))
}

/// Horizontal crossing of the (n+1)-wide, n-tall vertex rectangle
/// [0, n] × [0, n-1]; exactly 1/2 at p = 1/2 by self-duality.
pub fn estimate_self_dual_crossing(
    p: f64,
    n: u32,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(trials)?;
    check_p(p)?;
    if n == 0 {
        return Err(Error::param("self-dual rectangle needs n >= 1"));
    }
    let rect = Rect::new(0, n as i32, 0, n as i32 - 1);
    let streams = Streams::new(master_seed, &format!("self-dual:n={n}"));
    let hits = crossing_frequency(p, rect, Orientation::Horizontal, trials, &streams);
    Ok(Estimate::bernoulli(hits, trials, master_seed)
        .with("quantity", "self_dual_crossing")
        .with("p", p)
        .with("n", n))
}

/// L̂_{1/4}(p): the smallest probed n whose crossing estimate reaches 3/4,
/// found by doubling then bisection. For p < 1/2 the search runs at 1 - p.
/// `stderr` holds the half-width of the final bracket `(lo, value]`.
pub fn estimate_l(p: f64, trials_per_probe: u64, master_seed: u64) -> Result<Estimate> {
    search_l(p, trials_per_probe, master_seed, MAX_L)?.ok_or_else(|| {
        Error::param(format!("L(p) exceeds the probe cap {MAX_L} at p = {p}"))
    })
}

/// [`estimate_l`] with probes limited to `n <= max_n`; `None` when the
/// crossing estimate stays below 3/4 up to the cap.
pub fn search_l(p: f64, trials_per_probe: u64, master_seed: u64, max_n: u32) -> Result<Option<Estimate>> {
    check_p(p)?;
    if p == 0.5 {
        return Err(Error::param("L(p) is infinite at p = 1/2"));
    }
    let q = if p < 0.5 { 1.0 - p } else { p };
    let trials = trials_per_probe.max(MIN_PROBE_TRIALS);
    let mut probes: Vec<Probe> = Vec::new();
    let mut probe = |n: u32| -> Result<bool> {
        let e = estimate_crossing(q, n, trials, master_seed)?;
        probes.push(Probe {
            n,
            value: e.value,
            stderr: e.stderr,
            trials,
        });
        Ok(e.value >= 0.75)
    };
    let mut lo = 0;
    let mut hi = 1;
    loop {
        if hi > max_n {
            return Ok(None);
        }
        if probe(hi)? {
            break;
        }
        lo = hi;
        hi = if hi == max_n { max_n + 1 } else { (2 * hi).min(max_n) };
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let total = trials * probes.len() as u64;
    let mut est = Estimate::exact(hi as f64, total, master_seed)
        .with("quantity", "L")
        .with("p", p)
        .with("trials_per_probe", trials)
        .with("bracket_lo", lo)
        .with("bracket_hi", hi);
    est.stderr = (hi - lo) as f64 / 2.0;
    est.probes = Some(probes);
    Ok(Some(est))
}

/// F̂_N(n): fraction of frozen runs on B(n) in which the origin ends frozen.
pub fn estimate_f(threshold: u32, n: u32, trials: u64, master_seed: u64) -> Result<Estimate> {
    check_trials(trials)?;
    if threshold == 0 {
        return Err(Error::param("volume threshold N must be at least 1"));
    }
    let side = 2 * n as u64 + 1;
    let est = if threshold == 1 {
        Estimate::exact(1.0, trials, master_seed)
    } else if side * side < threshold as u64 {
        Estimate::exact(0.0, trials, master_seed)
    } else {
        let domain = build_box(n);
        let hits = frozen_origin_count(&domain, threshold, trials, master_seed, &format!("F:N={threshold}:n={n}"));
        Estimate::bernoulli(hits, trials, master_seed)
    };
    Ok(est.with("quantity", "F").with("N", threshold).with("n", n))
}

pub(crate) fn frozen_origin_count(
    domain: &Domain,
    threshold: u32,
    trials: u64,
    master_seed: u64,
    label: &str,
) -> u64 {
    let origin = domain.vertex_id(Vertex::ORIGIN).expect("origin in domain");
    let streams = Streams::new(master_seed, label);
    count_trials(&streams, trials, FrozenScratch::new, |scratch, rng| {
        scratch.run_random(domain, threshold, rng).volume_of(origin) >= threshold
    })
}

/// φ(C) = 1/(4C²) for C > 1/2 and 0 for C < 1/2; undefined at C = 1/2.
pub fn reference_phi<T: Scalar>(c: T) -> Result<T> {
    let half = T::of(0.5);
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::param(format!("phi needs C > 0, got {c}")));
    }
    if c == half {
        return Err(Error::param("phi is undefined at C = 1/2"));
    }
    if c < half {
        Ok(T::zero())
    } else {
        Ok(T::one() / (T::of(4.0) * c * c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(reference_phi(1.0f64).unwrap(), 0.25);
        assert_eq!(reference_phi(0.4f64).unwrap(), 0.0);
        assert!((reference_phi(5.0f64).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(reference_phi(1.0f32).unwrap(), 0.25f32);
        assert!(reference_phi(0.5f64).is_err());
        assert!(reference_phi(0.0f64).is_err());
        assert!(reference_phi(-1.0f64).is_err());
    }

    #[test]
    fn pi_at_zero_is_exact() {
        let e = estimate_pi(0, 10, 1).unwrap();
        assert_eq!((e.value, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn f_degenerate_thresholds() {
        assert_eq!(estimate_f(1, 5, 20, 3).unwrap().value, 1.0);
        let e = estimate_f(26, 2, 20, 3).unwrap();
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
        assert!(estimate_f(0, 2, 20, 3).is_err());
        assert!(estimate_f(2, 2, 0, 3).is_err());
    }

    #[test]
    fn crossing_extremes() {
        assert_eq!(estimate_crossing(1.0, 3, 50, 1).unwrap().value, 1.0);
        assert_eq!(estimate_crossing(0.0, 3, 50, 1).unwrap().value, 0.0);
        assert!(estimate_crossing(0.5, 0, 50, 1).is_err());
    }

    #[test]
    fn l_edge_cases() {
        let l = estimate_l(1.0, 10, 1).unwrap();
        assert_eq!(l.value, 1.0);
        assert!(estimate_l(0.5, 10, 1).is_err());
        assert!(estimate_l(1.2, 10, 1).is_err());
    }

    #[test]
    fn theta_guards() {
        assert!(estimate_theta(0.5, 100, 10, 1).is_err());
        assert!(estimate_theta(0.4, 100, 10, 1).is_err());
        assert_eq!(estimate_theta(1.0, 8, 10, 1).unwrap().value, 1.0);
        assert!(estimate_theta(1.0, 7, 10, 1).is_err());
    }

    #[test]
    fn estimate_json_shape() {
        let e = Estimate::bernoulli(3, 4, 9).with("n", 2);
        let v: Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["params"]["n"], 2);
        assert_eq!(v["value"], 0.75);
        assert_eq!(v["trials"], 4);
        assert_eq!(v["master_seed"], 9);
        assert!(v.get("probes").is_none());
        assert!((e.stderr - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
    }
}
