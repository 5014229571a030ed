//! Inversion of p ↦ θ̂(p) for the freeze window (p2, p1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{search_l, theta_unchecked, Estimate, MIN_PROBE_TRIALS, THETA_BOX_FACTOR, THETA_MIN_BOX};
use crate::streams::derive_seed;

/// Bisection bracket and effort.
pub const P_LOW: f64 = 0.5;
pub const P_HIGH: f64 = 0.999;
pub const BISECTION_STEPS: usize = 20;
/// Largest accepted |θ̂(p)/target - 1|.
pub const RESIDUAL_TOLERANCE: f64 = 0.02;

/// A monotone estimate of θ on (1/2, 1).
pub trait ThetaSource {
    fn theta(&mut self, p: f64) -> Result<Estimate>;
}

impl<F: FnMut(f64) -> Result<Estimate>> ThetaSource for F {
    fn theta(&mut self, p: f64) -> Result<Estimate> {
        self(p)
    }
}

/// The finite-box proxy P_p(0 ↝ ∂B(n)) with n = max(50, 8·L̂(p)), refusing
/// boxes above `radius_cap`.
#[derive(Debug, Clone)]
pub struct ProxyTheta {
    pub trials: u64,
    pub master_seed: u64,
    pub radius_cap: u32,
    pub evaluations: Vec<(f64, u32, f64)>,
}

impl ProxyTheta {
    pub fn new(trials: u64, master_seed: u64, radius_cap: u32) -> Self {
        ProxyTheta {
            trials,
            master_seed,
            radius_cap,
            evaluations: Vec::new(),
        }
    }
}

impl ThetaSource for ProxyTheta {
    fn theta(&mut self, p: f64) -> Result<Estimate> {
        let l_cap = self.radius_cap / THETA_BOX_FACTOR;
        let seed = derive_seed(self.master_seed, "theta/L");
        let l = search_l(p, MIN_PROBE_TRIALS, seed, l_cap)?.ok_or_else(|| {
            Error::WindowUnreachable(format!(
                "L̂({p}) exceeds {l_cap}, so the proxy box would exceed the cap {}",
                self.radius_cap
            ))
        })?;
        let n = THETA_MIN_BOX.max(THETA_BOX_FACTOR * l.value as u32);
        if n > self.radius_cap {
            return Err(Error::WindowUnreachable(format!(
                "proxy box {n} at p = {p} exceeds the cap {}",
                self.radius_cap
            )));
        }
        let e = theta_unchecked(p, n, self.trials, self.master_seed).with("l_hat", l.value);
        self.evaluations.push((p, n, e.value));
        Ok(e)
    }
}

/// Probabilities at which the largest cluster of B(C2·scale) reaches
/// N(1 - δ) (p2) and that of B(0.9·C1·scale) reaches N(1 + δ) (p1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeWindow {
    pub p1: f64,
    pub p2: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub scale: u32,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub target_p1: f64,
    pub target_p2: f64,
    pub theta_p1: Estimate,
    pub theta_p2: Estimate,
    pub residual_p1: f64,
    pub residual_p2: f64,
}

/// θ targets (for p2, for p1).
pub fn window_targets(n: u64, scale: u32, c1: f64, c2: f64, delta: f64) -> (f64, f64) {
    let n = n as f64;
    let s = scale as f64;
    let t2 = n * (1.0 - delta) / (2.0 * c2 * s).powi(2);
    let t1 = n * (1.0 + delta) / (2.0 * 0.9 * c1 * s).powi(2);
    (t2, t1)
}

/// Bisection on [P_LOW, P_HIGH] for θ̂(p) = target. Returns the evaluated
/// point with the smallest relative residual.
pub fn invert_theta(target: f64, source: &mut dyn ThetaSource) -> Result<(f64, Estimate, f64)> {
    if !(target > 0.0) {
        return Err(Error::WindowUnreachable(format!("theta target {target} is not positive")));
    }
    let top = source.theta(P_HIGH)?;
    if target >= top.value {
        return Err(Error::WindowUnreachable(format!(
            "theta target {target} is at or above θ̂({P_HIGH}) = {}",
            top.value
        )));
    }
    let residual = |e: &Estimate| (e.value / target - 1.0).abs();
    let mut best = (P_HIGH, residual(&top), top);
    let (mut lo, mut hi) = (P_LOW, P_HIGH);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let e = source.theta(mid)?;
        let r = residual(&e);
        let above = e.value >= target;
        if r < best.1 {
            best = (mid, r, e);
        }
        if above {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (p, r, e) = best;
    if r > RESIDUAL_TOLERANCE {
        return Err(Error::WindowUnreachable(format!(
            "best residual {r:.4} at p = {p} exceeds {RESIDUAL_TOLERANCE}"
        )));
    }
    Ok((p, e, r))
}

pub fn solve_freeze_window(
    n: u64,
    scale: u32,
    c1: f64,
    c2: f64,
    delta: f64,
    source: &mut dyn ThetaSource,
) -> Result<FreezeWindow> {
    if scale == 0 || !(c1 > 0.0) || !(c2 > 0.0) || !(delta > 0.0 && delta < 1.0) || n == 0 {
        return Err(Error::param("window needs positive N, scale, C1, C2 and delta in (0, 1)"));
    }
    let (t2, t1) = window_targets(n, scale, c1, c2, delta);
    for t in [t1, t2] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::WindowUnreachable(format!(
                "theta target {t} outside (0, 1) at this scale"
            )));
        }
    }
    let (p2, theta_p2, residual_p2) = invert_theta(t2, source)?;
    let (p1, theta_p1, residual_p1) = invert_theta(t1, source)?;
    Ok(FreezeWindow {
        p1,
        p2,
        n,
        scale,
        c1,
        c2,
        delta,
        target_p1: t1,
        target_p2: t2,
        theta_p1,
        theta_p2,
        residual_p1,
        residual_p2,
    })
}
