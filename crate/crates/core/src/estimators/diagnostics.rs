//! Measurable diagnostics on π̂, crossing decay and θ̂.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{estimate_l, estimate_pi, estimate_theta, estimate_vertical_crossing, Estimate};
use crate::error::{Error, Result};
use crate::streams::derive_seed;

/// Joint-stderr slack used by every monotonicity check here.
pub const SIGMA_SLACK: f64 = 3.0;

/// π̂(n) over a grid of n; π(0) is stored exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiTable {
    pub entries: BTreeMap<u32, Estimate>,
}

impl PiTable {
    pub fn build(ns: &[u32], trials: u64, master_seed: u64) -> Result<Self> {
        let mut t = PiTable::default();
        for &n in ns {
            t.entries.insert(n, estimate_pi(n, trials, master_seed)?);
        }
        Ok(t)
    }

    pub fn get(&self, n: u32) -> Option<&Estimate> {
        self.entries.get(&n)
    }

    /// Consecutive pairs violating π̂(n) ≥ π̂(n') beyond 3 joint stderr.
    pub fn monotone_violations(&self) -> Vec<(u32, u32)> {
        pairs(self)
            .filter(|(_, a, _, b)| b.value - a.value > SIGMA_SLACK * joint(a.stderr, b.stderr))
            .map(|(n, _, m, _)| (n, m))
            .collect()
    }
}

fn pairs(t: &PiTable) -> impl Iterator<Item = (u32, &Estimate, u32, &Estimate)> {
    t.entries
        .iter()
        .zip(t.entries.iter().skip(1))
        .map(|((&n, a), (&m, b))| (n, a, m, b))
}

fn joint(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// One comparison `lhs ≤ rhs` between two grid points, tolerated up to
/// 3 joint stderr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub n: u32,
    pub m: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

fn scaled_check(n: u32, a: &Estimate, m: u32, b: &Estimate, weight: impl Fn(u32) -> f64) -> RatioCheck {
    let (wa, wb) = (weight(n), weight(m));
    let (lhs, rhs) = (wa * a.value, wb * b.value);
    let tol = SIGMA_SLACK * joint(wa * a.stderr, wb * b.stderr);
    RatioCheck {
        n,
        m,
        lhs,
        rhs,
        ratio: if lhs > 0.0 { rhs / lhs } else { f64::INFINITY },
        holds: lhs <= rhs + tol,
    }
}

/// n²·π̂(n) nondecreasing across consecutive grid points.
pub fn essentially_increasing(table: &PiTable) -> Vec<RatioCheck> {
    pairs(table)
        .map(|(n, a, m, b)| scaled_check(n, a, m, b, |k| (k as f64).powi(2)))
        .collect()
}

/// For every grid pair (n, 2n) with n ≥ 1: √n·π̂(n) ≤ √(2n)·π̂(2n) within
/// tolerance. `ratio` holds π̂(2n)/π̂(n), which should stay below 1.
pub fn apriori_ratios(table: &PiTable) -> Vec<RatioCheck> {
    table
        .entries
        .iter()
        .filter(|(&n, _)| n >= 1)
        .filter_map(|(&n, a)| {
            let b = table.get(n.checked_mul(2)?)?;
            let mut c = scaled_check(n, a, 2 * n, b, |k| (k as f64).sqrt());
            c.ratio = if a.value > 0.0 { b.value / a.value } else { f64::INFINITY };
            Some(c)
        })
        .collect()
}

/// Least-squares fit of log P(C_V([0,2k]×[0,k])) against k at fixed p < 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub p: f64,
    pub points: Vec<Estimate>,
    pub slope: f64,
    pub intercept: f64,
    pub decreasing: bool,
}

pub fn subcritical_decay(p: f64, ks: &[u32], trials: u64, master_seed: u64) -> Result<DecayReport> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::param(format!("decay diagnostic needs 0 < p < 1/2, got {p}")));
    }
    let points = ks
        .iter()
        .map(|&k| estimate_vertical_crossing(p, k, trials, master_seed))
        .collect::<Result<Vec<_>>>()?;
    let xy: Vec<(f64, f64)> = ks
        .iter()
        .zip(&points)
        .filter(|(_, e)| e.value > 0.0)
        .map(|(&k, e)| (k as f64, e.value.ln()))
        .collect();
    if xy.len() < 2 {
        return Err(Error::param("decay fit needs two points with nonzero frequency"));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(DecayReport {
        p,
        points,
        slope,
        intercept: my - slope * mx,
        decreasing: slope < 0.0,
    })
}

/// θ̂(p) against π̂(L̂(p)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaPiReport {
    pub p: f64,
    pub l_hat: u32,
    pub theta: Estimate,
    pub pi: Estimate,
    pub ratio: f64,
    pub within_band: bool,
}

/// Band asserted on θ̂(p)/π̂(L̂(p)).
pub const THETA_PI_BAND: (f64, f64) = (0.1, 10.0);

pub fn theta_pi_ratio(p: f64, trials: u64, master_seed: u64) -> Result<ThetaPiReport> {
    let l = estimate_l(p, super::MIN_PROBE_TRIALS, derive_seed(master_seed, "theta/L"))?.value as u32;
    let n = super::THETA_MIN_BOX.max(super::THETA_BOX_FACTOR * l);
    let theta = estimate_theta(p, n, trials, master_seed)?;
    let pi = estimate_pi(l, trials, master_seed)?;
    let ratio = theta.value / pi.value;
    Ok(ThetaPiReport {
        p,
        l_hat: l,
        theta,
        pi,
        ratio,
        within_band: (THETA_PI_BAND.0..=THETA_PI_BAND.1).contains(&ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(n_vals: &[(u32, f64, f64)]) -> PiTable {
        let mut t = PiTable::default();
        for &(n, v, s) in n_vals {
            let mut e = Estimate::exact(v, 100, 0);
            e.stderr = s;
            t.entries.insert(n, e);
        }
        t
    }

    #[test]
    fn monotone_tolerates_noise_only() {
        let t = fake(&[(1, 0.9, 0.01), (2, 0.91, 0.01), (4, 0.5, 0.01)]);
        assert!(t.monotone_violations().is_empty());
        let t = fake(&[(1, 0.5, 0.01), (2, 0.9, 0.01)]);
        assert_eq!(t.monotone_violations(), vec![(1, 2)]);
    }

    #[test]
    fn apriori_pairs_only_doublings() {
        let t = fake(&[(1, 0.9, 0.0), (2, 0.8, 0.0), (3, 0.7, 0.0), (4, 0.7, 0.0)]);
        let r = apriori_ratios(&t);
        assert_eq!(r.iter().map(|c| (c.n, c.m)).collect::<Vec<_>>(), vec![(1, 2), (2, 4)]);
        assert!(r.iter().all(|c| c.holds && c.ratio <= 1.0));
        let inc = essentially_increasing(&t);
        assert_eq!(inc.len(), 3);
        assert!(inc.iter().all(|c| c.holds));
    }

    #[test]
    fn small_table_is_monotone() {
        let t = PiTable::build(&[0, 1, 2, 4, 8], 4000, 11).unwrap();
        assert_eq!(t.get(0).unwrap().value, 1.0);
        assert!(t.monotone_violations().is_empty());
        assert!(essentially_increasing(&t).iter().all(|c| c.holds));
        assert!(apriori_ratios(&t).iter().all(|c| c.holds && c.ratio < 1.0));
    }

    #[test]
    fn decay_rejects_bad_p() {
        assert!(subcritical_decay(0.5, &[1, 2], 10, 1).is_err());
        assert!(subcritical_decay(0.0, &[1, 2], 10, 1).is_err());
    }
}
