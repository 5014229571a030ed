//! Exceptional scales: m_0 = 1, m_{k+1} = ⌈√(N / π(m_k))⌉.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_pi, Estimate, SIGMA_SLACK};

/// Exact one-arm probability to ∂B(1).
pub const PI_1: f64 = 15.0 / 16.0;

/// Standard-error target for π̂ at the recursion points.
pub const PI_STDERR_TARGET: f64 = 0.002;

/// Largest box radius a scale table may ask for by default.
pub const DEFAULT_RADIUS_CAP: u32 = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiSource {
    /// π(m_0) = π(1) = 15/16 exactly; Monte Carlo deeper.
    ExactPi1,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleOptions {
    pub source: PiSource,
    pub stderr_target: f64,
    pub radius_cap: u32,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            source: PiSource::ExactPi1,
            stderr_target: PI_STDERR_TARGET,
            radius_cap: DEFAULT_RADIUS_CAP,
        }
    }
}

/// Worst-case Bernoulli trial count meeting `stderr` (v = 1/2).
pub fn trials_for_stderr(stderr: f64) -> u64 {
    (0.25 / (stderr * stderr)).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTable {
    #[serde(rename = "N")]
    pub n: u64,
    pub depth: usize,
    /// m_0, …, m_K.
    pub scales: Vec<u32>,
    /// π̂(m_0), …, π̂(m_{K-1}).
    pub pi_used: Vec<Estimate>,
    /// `intervals[k]` brackets m_k using π̂(m_{k-1}) ± 3σ; exact for k = 0.
    pub intervals: Vec<(u32, u32)>,
    pub master_seed: u64,
}

impl ScaleTable {
    pub fn m(&self, k: usize) -> u32 {
        self.scales[k]
    }

    /// g_k = ⌈√(m_k·m_{k+1})⌉.
    pub fn midpoint(&self, k: usize) -> u32 {
        ((self.scales[k] as f64) * (self.scales[k + 1] as f64)).sqrt().ceil() as u32
    }
}

fn next_scale(n: u64, pi: f64) -> u32 {
    let m = (n as f64 / pi).sqrt().ceil();
    if m > u32::MAX as f64 {
        u32::MAX
    } else {
        m as u32
    }
}

/// The recursion with π̂(m_k) supplied by `pi(k, m_k)`.
pub fn compute_scales_with(
    n: u64,
    depth: usize,
    radius_cap: u32,
    master_seed: u64,
    mut pi: impl FnMut(usize, u32) -> Result<Estimate>,
) -> Result<ScaleTable> {
    if n < 2 {
        return Err(Error::param(format!("scales need N >= 2, got {n}")));
    }
    if depth < 1 {
        return Err(Error::param("scale depth must be at least 1"));
    }
    let mut t = ScaleTable {
        n,
        depth,
        scales: vec![1],
        pi_used: Vec::with_capacity(depth),
        intervals: vec![(1, 1)],
        master_seed,
    };
    for k in 0..depth {
        let m = t.scales[k];
        let e = pi(k, m)?;
        if !(e.value > 0.0) {
            return Err(Error::param(format!(
                "pi estimate at m_{k} = {m} is zero; raise trials"
            )));
        }
        let spread = SIGMA_SLACK * e.stderr;
        let next = next_scale(n, e.value);
        let lo = next_scale(n, (e.value + spread).min(1.0));
        let hi = next_scale(n, (e.value - spread).max(f64::MIN_POSITIVE));
        if next > radius_cap {
            return Err(Error::MemoryCap {
                radius: next as u64,
                cap: radius_cap as u64,
            });
        }
        t.scales.push(next);
        t.intervals.push((lo, hi));
        t.pi_used.push(e);
    }
    Ok(t)
}

pub fn compute_scales(n: u64, depth: usize, opts: ScaleOptions, master_seed: u64) -> Result<ScaleTable> {
    if !(opts.stderr_target > 0.0) {
        return Err(Error::param("stderr target must be positive"));
    }
    let trials = trials_for_stderr(opts.stderr_target);
    compute_scales_with(n, depth, opts.radius_cap, master_seed, |k, m| {
        if k == 0 && opts.source == PiSource::ExactPi1 {
            Ok(Estimate::exact(PI_1, 0, master_seed)
                .with("quantity", "pi")
                .with("n", 1)
                .with("exact", true))
        } else {
            estimate_pi(m, trials, master_seed)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    pub ratio: f64,
    /// log(m_{k+1}/m_k) / log N.
    pub exponent: f64,
    /// N^{3^{-k}}.
    pub upper: f64,
    pub upper_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub all_upper_hold: bool,
    pub all_exponents_positive: bool,
    /// m_k ≤ N^{2/3} for every k.
    pub below_two_thirds: bool,
}

/// Ratio bounds m_{k+1}/m_k ≤ N^{3^{-k}}; the lower exponent is reported only.
pub fn check_scale_bounds(table: &ScaleTable) -> Result<BoundReport> {
    if table.depth < 2 {
        return Err(Error::param("scale bounds need depth >= 2"));
    }
    let n = table.n as f64;
    let rows: Vec<BoundRow> = table
        .scales
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let ratio = w[1] as f64 / w[0] as f64;
            let upper = n.powf(3f64.powi(-(k as i32)));
            BoundRow {
                k,
                ratio,
                exponent: ratio.ln() / n.ln(),
                upper,
                upper_holds: ratio <= upper,
            }
        })
        .collect();
    let cap = n.powf(2.0 / 3.0);
    Ok(BoundReport {
        all_upper_hold: rows.iter().all(|r| r.upper_holds),
        all_exponents_positive: rows.iter().all(|r| r.exponent > 0.0),
        below_two_thirds: table.scales.iter().all(|&m| m as f64 <= cap),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauRow {
    pub k: usize,
    pub m: u32,
    /// m_k²·π̂(m_k)/N.
    pub value: f64,
    pub stderr: f64,
    /// m_k²·π̂(m_{k-1})/N, which the ceiling pins to [1, (1 + 1/m_k)²].
    pub recursion: Option<f64>,
    pub within_slack: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    pub rows: Vec<PlateauRow>,
    pub all_within_slack: bool,
    pub nondecreasing: bool,
}

/// m_k²·π̂(m_k)/N for k = 0…K. `tail` supplies π̂(m_K), which the table does
/// not hold; without it the last level is skipped.
pub fn check_volume_plateau(table: &ScaleTable, tail: Option<&Estimate>) -> PlateauReport {
    let n = table.n as f64;
    let pis: Vec<&Estimate> = table.pi_used.iter().chain(tail).collect();
    let rows: Vec<PlateauRow> = pis
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let m = table.scales[k];
            let m2 = (m as f64).powi(2);
            let value = m2 * e.value / n;
            let stderr = m2 * e.stderr / n;
            let slack = (1.0 + 1.0 / m as f64).powi(2);
            let recursion = (k > 0).then(|| m2 * table.pi_used[k - 1].value / n);
            PlateauRow {
                k,
                m,
                value,
                stderr,
                recursion,
                within_slack: value > 0.0 && value <= slack + SIGMA_SLACK * stderr,
            }
        })
        .collect();
    let nondecreasing = rows.windows(2).all(|w| {
        let tol = SIGMA_SLACK * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].value + tol >= w[0].value
    });
    PlateauReport {
        all_within_slack: rows.iter().all(|r| r.within_slack),
        nondecreasing,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn synthetic(f: impl Fn(u32) -> f64) -> impl FnMut(usize, u32) -> Result<Estimate> {
        move |_, m| Ok(Estimate::exact(f(m), 1, 0))
    }

    #[test]
    fn first_scale_from_exact_pi1() {
        let t = compute_scales(10_000, 1, ScaleOptions::default(), 1).unwrap();
        assert_eq!(t.scales, vec![1, 104]);
        assert_eq!(t.intervals[1], (104, 104));
        assert_eq!(t.pi_used[0].value, PI_1);
    }

    #[test]
    fn first_scale_over_root_n_approaches_c0() {
        let c0 = (16.0f64 / 15.0).sqrt();
        for n in [10_000u64, 1_000_000] {
            let t = compute_scales(n, 1, ScaleOptions::default(), 1).unwrap();
            let r = t.m(1) as f64 / (n as f64).sqrt();
            assert!((r - c0).abs() < 1.5 / (n as f64).sqrt(), "{n}: {r}");
        }
    }

    #[test]
    fn validation() {
        assert!(compute_scales(1, 1, ScaleOptions::default(), 1).is_err());
        assert!(compute_scales(100, 0, ScaleOptions::default(), 1).is_err());
        let e = compute_scales_with(1_000_000, 2, 500, 0, synthetic(|_| 0.5)).unwrap_err();
        assert!(matches!(e, Error::MemoryCap { .. }));
    }

    #[test]
    fn bounds_on_power_law() {
        let t = compute_scales_with(10_000, 3, 10_000, 0, synthetic(|m| {
            if m == 1 { PI_1 } else { 0.9 * (m as f64).powf(-5.0 / 48.0) }
        }))
        .unwrap();
        let b = check_scale_bounds(&t).unwrap();
        assert!(b.all_upper_hold && b.all_exponents_positive && b.below_two_thirds);
        assert!(check_scale_bounds(&compute_scales_with(100, 1, 100, 0, synthetic(|_| 0.5)).unwrap()).is_err());
        let p = check_volume_plateau(&t, None);
        assert!(p.all_within_slack && p.nondecreasing);
        for r in &p.rows[1..] {
            let s = r.recursion.unwrap();
            assert!((1.0..=(1.0 + 1.0 / r.m as f64).powi(2)).contains(&s));
        }
    }

    proptest! {
        #[test]
        fn nonincreasing_pi_gives_nondecreasing_scales(
            n in 2u64..10_000_000,
            a in 0.01f64..1.0,
            e in 0.0f64..0.5,
            depth in 1usize..6,
        ) {
            let t = compute_scales_with(n, depth, u32::MAX, 0, synthetic(|m| a * (m as f64).powf(-e)))
                .unwrap();
            prop_assert!(t.scales.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(t.scales[0], 1);
        }
    }
}
