//! Volume-frozen percolation on a finite domain.
//!
//! Edges are processed in increasing clock order. An edge opens iff both of
//! its endpoint clusters currently have volume below `N`; this includes an
//! edge whose endpoints already share a cluster of volume below `N`, which
//! opens without changing any volume. A refused edge stays closed up to time 1.
//! A cluster freezes at the clock value of the merge that first brings it to
//! volume `N` or more; with `N = 1` every singleton is frozen from time 0.
//!
//! Since a merge joins two clusters of volume at most `N - 1`, every frozen
//! cluster has volume in `[N, 2N - 2]` (or exactly 1 when `N = 1`).

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::lattice::{Domain, Vertex};
use crate::percolation::ClusterForest;
use crate::scalar::Scalar;

/// The clock τ_e of every edge and the processing order it induces (ties
/// broken by edge id).
#[derive(Debug, Clone, PartialEq)]
pub struct ClockAssignment<T> {
    tau: Vec<T>,
    order: Vec<u32>,
}

impl<T: Scalar> ClockAssignment<T> {
    pub fn from_times(tau: Vec<T>) -> Result<Self> {
        if let Some((e, t)) = tau
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t >= T::zero() && **t <= T::one()))
        {
            return Err(Error::param(format!("clock of edge {e} is {t}, outside [0, 1]")));
        }
        let order = order_by_time(&tau);
        Ok(ClockAssignment { tau, order })
    }

    pub fn tau(&self) -> &[T] {
        &self.tau
    }

    pub fn time(&self, e: usize) -> T {
        self.tau[e]
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// Bucket sort on `floor(τ·m)`; linear time for uniform clocks.
fn order_by_time<T: Scalar>(tau: &[T]) -> Vec<u32> {
    let m = tau.len();
    if m == 0 {
        return Vec::new();
    }
    let bucket = |t: T| ((t.as_f64() * m as f64) as usize).min(m - 1);
    let mut start = vec![0u32; m + 1];
    for &t in tau {
        start[bucket(t) + 1] += 1;
    }
    for i in 0..m {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut order = vec![0u32; m];
    for (e, &t) in tau.iter().enumerate() {
        let b = bucket(t);
        order[fill[b] as usize] = e as u32;
        fill[b] += 1;
    }
    for b in 0..m {
        let slice = &mut order[start[b] as usize..start[b + 1] as usize];
        if slice.len() > 1 {
            slice.sort_unstable_by(|&a, &b| {
                tau[a as usize]
                    .partial_cmp(&tau[b as usize])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
        }
    }
    order
}

/// I.i.d. uniform clocks, drawn in edge-id order.
pub fn sample_clocks<T: Scalar, R: RngCore + ?Sized>(domain: &Domain, rng: &mut R) -> ClockAssignment<T> {
    let tau: Vec<T> = (0..domain.edge_count())
        .map(|_| T::of(rng.random::<f64>()))
        .collect();
    let order = order_by_time(&tau);
    ClockAssignment { tau, order }
}

/// A uniformly random processing order without materialised clock values.
/// Equal in law to `sample_clocks(..).order()`.
pub fn sample_order<R: RngCore + ?Sized>(domain: &Domain, rng: &mut R, order: &mut Vec<u32>) {
    order.clear();
    order.extend(0..domain.edge_count() as u32);
    order.shuffle(rng);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezeEvent<T> {
    pub time: T,
    /// Volume of the cluster right after it froze; frozen clusters never change.
    pub volume: u32,
    /// Root vertex id of the frozen cluster in the final forest.
    pub root: usize,
    pub edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    Opened { volume: u32, froze: bool, root: usize },
    Blocked { volume: u32 },
}

/// Runs the dynamics over `order`, calling `visit` for each edge.
pub(crate) fn drive(
    domain: &Domain,
    order: &[u32],
    threshold: u32,
    forest: &mut ClusterForest,
    mut visit: impl FnMut(usize, Step),
) {
    forest.reset(domain.vertex_count());
    for &e in order {
        let e = e as usize;
        let (a, b) = domain.endpoints(e);
        let ra = forest.find(a);
        let rb = forest.find(b);
        let (va, vb) = (forest.root_volume(ra), forest.root_volume(rb));
        if va >= threshold || vb >= threshold {
            visit(e, Step::Blocked { volume: va.max(vb) });
            continue;
        }
        let (root, volume) = if ra == rb {
            (ra, va)
        } else {
            let r = forest.link(ra, rb);
            (r, va + vb)
        };
        visit(
            e,
            Step::Opened {
                volume,
                froze: volume >= threshold,
                root,
            },
        );
    }
}

/// Final state of one run at time 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenState<'d, T> {
    domain: &'d Domain,
    threshold: u32,
    open: FixedBitSet,
    forest: ClusterForest,
    events: Vec<FreezeEvent<T>>,
    blocked: Vec<u32>,
}

fn check_run_args<T: Scalar>(domain: &Domain, clocks: &ClockAssignment<T>, threshold: u32) -> Result<()> {
    if threshold == 0 {
        return Err(Error::param("volume threshold N must be at least 1"));
    }
    if clocks.len() != domain.edge_count() {
        return Err(Error::param(format!(
            "{} clocks for a domain with {} edges",
            clocks.len(),
            domain.edge_count()
        )));
    }
    Ok(())
}

/// Runs the frozen dynamics with threshold `N = threshold`.
pub fn run_frozen<'d, T: Scalar>(
    domain: &'d Domain,
    clocks: &ClockAssignment<T>,
    threshold: u32,
) -> Result<FrozenState<'d, T>> {
    check_run_args(domain, clocks, threshold)?;
    Ok(run_with(domain, clocks, threshold, |_, _| {}))
}

/// Like [`run_frozen`], also writing one line per processed edge:
/// `time edge_id u v action volume_after`, where `u` and `v` are vertex ids and
/// `volume_after` is the merged volume for an opened edge or the larger
/// endpoint-cluster volume for a blocked one.
pub fn run_frozen_traced<'d, T: Scalar, W: Write>(
    domain: &'d Domain,
    clocks: &ClockAssignment<T>,
    threshold: u32,
    out: &mut W,
) -> Result<FrozenState<'d, T>> {
    check_run_args(domain, clocks, threshold)?;
    let mut failure = None;
    let state = run_with(domain, clocks, threshold, |e, step| {
        if failure.is_some() {
            return;
        }
        let (u, v) = domain.endpoints(e);
        let (action, volume) = match step {
            Step::Opened { volume, .. } => ("open", volume),
            Step::Blocked { volume } => ("blocked", volume),
        };
        if let Err(err) = writeln!(out, "{} {e} {u} {v} {action} {volume}", clocks.time(e)) {
            failure = Some(err);
        }
    });
    match failure {
        Some(err) => Err(Error::io("<trace>", err)),
        None => Ok(state),
    }
}

fn run_with<'d, T: Scalar>(
    domain: &'d Domain,
    clocks: &ClockAssignment<T>,
    threshold: u32,
    mut observe: impl FnMut(usize, Step),
) -> FrozenState<'d, T> {
    let mut open = FixedBitSet::with_capacity(domain.edge_count());
    let mut forest = ClusterForest::new(domain.vertex_count());
    let mut events = Vec::new();
    let mut blocked = Vec::new();
    drive(domain, clocks.order(), threshold, &mut forest, |e, step| {
        match step {
            Step::Opened { volume, froze, root } => {
                open.insert(e);
                if froze {
                    events.push(FreezeEvent {
                        time: clocks.time(e),
                        volume,
                        root,
                        edge: e,
                    });
                }
            }
            Step::Blocked { .. } => blocked.push(e as u32),
        }
        observe(e, step);
    });
    forest.flatten();
    FrozenState {
        domain,
        threshold,
        open,
        forest,
        events,
        blocked,
    }
}

/// Connected set of unfrozen vertices and the domain edges leaving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    pub vertices: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl<'d, T: Scalar> FrozenState<'d, T> {
    pub fn domain(&self) -> &'d Domain {
        self.domain
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn is_open(&self, e: usize) -> bool {
        self.open.contains(e)
    }

    pub fn open_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.ones()
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones(..)
    }

    pub fn forest(&self) -> &ClusterForest {
        &self.forest
    }

    pub fn freeze_events(&self) -> &[FreezeEvent<T>] {
        &self.events
    }

    /// Edges that tried to open and were refused, in processing order.
    pub fn blocked(&self) -> &[u32] {
        &self.blocked
    }

    pub fn volume_of(&self, id: usize) -> u32 {
        self.forest.volume_of(id)
    }

    pub fn is_frozen_id(&self, id: usize) -> bool {
        self.forest.volume_of(id) >= self.threshold
    }

    pub fn is_frozen(&self, v: Vertex) -> Result<bool> {
        Ok(self.is_frozen_id(self.domain.require(v)?))
    }

    /// Freeze time of the cluster containing vertex `id`, if frozen.
    pub fn freeze_time_id(&self, id: usize) -> Option<T> {
        if !self.is_frozen_id(id) {
            return None;
        }
        let root = self.forest.root(id);
        Some(
            self.events
                .iter()
                .find(|ev| ev.root == root)
                .map_or(T::zero(), |ev| ev.time),
        )
    }

    /// The lattice-connected component of unfrozen vertices containing `v`,
    /// with the domain edges that have exactly one endpoint in it.
    pub fn hole_containing(&self, v: Vertex) -> Result<Hole> {
        let start = self.domain.require(v)?;
        if self.is_frozen_id(start) {
            return Err(Error::VertexFrozen(v));
        }
        let d = self.domain;
        let mut inside = vec![false; d.vertex_count()];
        inside[start] = true;
        let mut vertices = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            d.for_each_neighbor(u, |w, _| {
                if !inside[w] && !self.is_frozen_id(w) {
                    inside[w] = true;
                    vertices.push(w);
                    queue.push_back(w);
                }
            });
        }
        vertices.sort_unstable();
        let mut boundary: Vec<usize> = (0..d.edge_count())
            .filter(|&e| {
                let (a, b) = d.endpoints(e);
                inside[a] != inside[b]
            })
            .collect();
        boundary.sort_unstable();
        Ok(Hole { vertices, boundary })
    }

    /// Earliest freeze time among frozen clusters meeting `region` (vertex ids).
    pub fn first_freeze_time_in(&self, region: &[usize]) -> Option<T> {
        let times: HashMap<usize, T> = self.events.iter().map(|ev| (ev.root, ev.time)).collect();
        region
            .iter()
            .filter(|&&v| self.is_frozen_id(v))
            .map(|&v| {
                times
                    .get(&self.forest.root(v))
                    .copied()
                    .unwrap_or_else(T::zero)
            })
            .fold(None, |acc: Option<T>, t| Some(acc.map_or(t, |a| a.min(t))))
    }
}

/// Reusable buffers for order-only runs (no clock values, no event log).
#[derive(Debug, Default)]
pub struct FrozenScratch {
    order: Vec<u32>,
    forest: Option<ClusterForest>,
}

impl FrozenScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Draws a random order, runs the dynamics and returns the final forest.
    pub fn run_random<R: RngCore + ?Sized>(
        &mut self,
        domain: &Domain,
        threshold: u32,
        rng: &mut R,
    ) -> &ClusterForest {
        sample_order(domain, rng, &mut self.order);
        let forest = self
            .forest
            .get_or_insert_with(|| ClusterForest::new(domain.vertex_count()));
        drive(domain, &self.order, threshold, forest, |_, _| {});
        forest
    }
}
