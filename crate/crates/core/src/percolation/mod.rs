//! Ordinary bond percolation at a fixed parameter on a [`Domain`].
//!
//! Edge states come from per-edge 64-bit weights: an edge is open at `p` iff
//! its weight lies below `p·2⁶⁴`. Reading several parameters off one
//! [`EdgeWeights`] sample gives the standard monotone coupling.

mod circuits;
mod forest;

use fixedbitset::FixedBitSet;
use rand::RngCore;

pub use circuits::{has_dual_open_circuit, has_open_circuit, Annulus};
pub use forest::ClusterForest;

use crate::error::{Error, Result};
use crate::lattice::{Domain, Vertex};

/// `None` means every weight passes (p = 1).
fn threshold(p: f64) -> Option<u64> {
    if p >= 1.0 {
        None
    } else if p <= 0.0 {
        Some(0)
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("probability {p} outside [0, 1]")))
    }
}

/// Independent uniform weights, one per edge, drawn in edge-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeWeights {
    weights: Vec<u64>,
}

impl EdgeWeights {
    pub fn sample<R: RngCore + ?Sized>(domain: &Domain, rng: &mut R) -> Self {
        let mut w = EdgeWeights {
            weights: Vec::with_capacity(domain.edge_count()),
        };
        w.resample(domain, rng);
        w
    }

    pub fn resample<R: RngCore + ?Sized>(&mut self, domain: &Domain, rng: &mut R) {
        self.weights.clear();
        self.weights
            .extend((0..domain.edge_count()).map(|_| rng.next_u64()));
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.weights
    }

    /// Weight of edge `e` as a uniform on [0, 1).
    pub fn uniform(&self, e: usize) -> f64 {
        (self.weights[e] >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn config_at<'d>(&self, domain: &'d Domain, p: f64) -> Configuration<'d> {
        let mut c = Configuration::all_closed(domain, p);
        self.fill(&mut c, p);
        c
    }

    /// Overwrites `config` with the states at parameter `p`.
    pub fn fill(&self, config: &mut Configuration<'_>, p: f64) {
        config.p = p;
        config.open.clear();
        match threshold(p) {
            None => config.open.insert_range(..),
            Some(t) => {
                for (e, &w) in self.weights.iter().enumerate() {
                    if w < t {
                        config.open.insert(e);
                    }
                }
            }
        }
    }
}

/// Open/closed state of every edge of a domain.
#[derive(Debug, Clone)]
pub struct Configuration<'d> {
    domain: &'d Domain,
    open: FixedBitSet,
    p: f64,
}

/// Equal edge states on equal domains; the provenance parameter is ignored.
impl PartialEq for Configuration<'_> {
    fn eq(&self, other: &Self) -> bool {
        (std::ptr::eq(self.domain, other.domain) || self.domain == other.domain)
            && self.open == other.open
    }
}

impl Eq for Configuration<'_> {}

impl<'d> Configuration<'d> {
    pub fn all_closed(domain: &'d Domain, p: f64) -> Self {
        Configuration {
            domain,
            open: FixedBitSet::with_capacity(domain.edge_count()),
            p,
        }
    }

    pub fn all_open(domain: &'d Domain) -> Self {
        let mut c = Self::all_closed(domain, 1.0);
        c.open.insert_range(..);
        c
    }

    pub fn from_open_edges(
        domain: &'d Domain,
        open: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut c = Self::all_closed(domain, f64::NAN);
        for e in open {
            c.open.insert(e);
        }
        c
    }

    pub fn domain(&self) -> &'d Domain {
        self.domain
    }

    /// The parameter this configuration was sampled at (provenance only).
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn is_open(&self, e: usize) -> bool {
        self.open.contains(e)
    }

    pub fn set(&mut self, e: usize, open: bool) {
        self.open.set(e, open);
    }

    pub fn open_count(&self) -> usize {
        self.open.count_ones(..)
    }

    pub fn open_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.ones()
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.open
    }

    /// Redraws every edge independently at `p`.
    pub fn resample<R: RngCore + ?Sized>(&mut self, p: f64, rng: &mut R) {
        self.p = p;
        self.open.clear();
        let t = threshold(p);
        for e in 0..self.domain.edge_count() {
            let w = rng.next_u64();
            if t.is_none_or(|t| w < t) {
                self.open.insert(e);
            }
        }
    }

    /// Redraws at p = 1/2 using one random bit per edge.
    pub fn resample_fair<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        self.p = 0.5;
        let len = self.open.len();
        let blocks = self.open.as_mut_slice();
        for b in blocks.iter_mut() {
            *b = rng.next_u64() as usize;
        }
        let tail = len % usize::BITS as usize;
        if tail != 0 {
            if let Some(last) = blocks.last_mut() {
                *last &= (1usize << tail) - 1;
            }
        }
    }
}

/// Each edge open independently with probability `p`; consumes one `u64`
/// per edge, so it agrees with `EdgeWeights::sample(..).config_at(p)` on the
/// same stream.
pub fn sample_config<'d, R: RngCore + ?Sized>(
    domain: &'d Domain,
    p: f64,
    rng: &mut R,
) -> Result<Configuration<'d>> {
    check_probability(p)?;
    let mut c = Configuration::all_closed(domain, p);
    c.resample(p, rng);
    Ok(c)
}

/// A p = 1/2 configuration drawn one bit per edge. Not coupled with
/// [`sample_config`] on the same stream.
pub fn sample_fair_config<'d, R: RngCore + ?Sized>(
    domain: &'d Domain,
    rng: &mut R,
) -> Configuration<'d> {
    let mut c = Configuration::all_closed(domain, 0.5);
    c.resample_fair(rng);
    c
}

/// Open clusters of `config`, flattened.
pub fn clusters(config: &Configuration<'_>) -> ClusterForest {
    let mut forest = ClusterForest::new(config.domain.vertex_count());
    cluster_into(config, &mut forest);
    forest
}

pub(crate) fn cluster_into(config: &Configuration<'_>, forest: &mut ClusterForest) {
    let d = config.domain;
    forest.reset(d.vertex_count());
    for e in config.open.ones() {
        let (a, b) = d.endpoints(e);
        forest.union(a, b);
    }
    forest.flatten();
}

/// Breadth-first search over open edges with reusable scratch space.
#[derive(Debug, Default)]
pub struct Explorer {
    mark: Vec<u32>,
    stamp: u32,
    queue: Vec<u32>,
}

impl Explorer {
    pub fn new() -> Self {
        Self::default()
    }

    fn begin(&mut self, n: usize) {
        if self.mark.len() != n || self.stamp == u32::MAX {
            self.mark.clear();
            self.mark.resize(n, 0);
            self.stamp = 0;
        }
        self.stamp += 1;
        self.queue.clear();
    }

    /// True iff an open path inside `allow` leads from `sources` to a vertex
    /// satisfying `target`. A source that is itself a target counts.
    pub fn reaches(
        &mut self,
        config: &Configuration<'_>,
        sources: impl IntoIterator<Item = usize>,
        allow: impl Fn(usize) -> bool,
        target: impl Fn(usize) -> bool,
    ) -> bool {
        let d = config.domain;
        self.begin(d.vertex_count());
        let stamp = self.stamp;
        for s in sources {
            if !allow(s) || self.mark[s] == stamp {
                continue;
            }
            if target(s) {
                return true;
            }
            self.mark[s] = stamp;
            self.queue.push(s as u32);
        }
        let mut head = 0;
        let mut found = false;
        while head < self.queue.len() && !found {
            let v = self.queue[head] as usize;
            head += 1;
            d.for_each_neighbor(v, |w, e| {
                if found || self.mark[w] == stamp || !config.is_open(e) || !allow(w) {
                    return;
                }
                if target(w) {
                    found = true;
                    return;
                }
                self.mark[w] = stamp;
                self.queue.push(w as u32);
            });
        }
        found
    }

    /// 0 ↝ ∂B(n) on a configuration over `build_box(n)`, using the box's
    /// implicit row-major layout.
    pub(crate) fn origin_reaches_box_boundary(&mut self, config: &Configuration<'_>, n: u32) -> bool {
        let d = config.domain;
        debug_assert_eq!(d.kind(), crate::lattice::DomainKind::Box { n });
        if n == 0 {
            return true;
        }
        let w = 2 * n as usize + 1;
        let horizontal = w * (w - 1);
        let bits = config.bits();
        self.begin(w * w);
        let stamp = self.stamp;
        let origin = n as usize * w + n as usize;
        self.mark[origin] = stamp;
        self.queue.push(origin as u32);
        while let Some(v) = self.queue.pop() {
            let v = v as usize;
            let (row, col) = (v / w, v % w);
            if row == 0 || col == 0 || row == w - 1 || col == w - 1 {
                return true;
            }
            let steps = [
                (v + 1, row * (w - 1) + col),
                (v - 1, row * (w - 1) + col - 1),
                (v + w, horizontal + v),
                (v - w, horizontal + v - w),
            ];
            for (u, e) in steps {
                if self.mark[u] != stamp && bits.contains(e) {
                    self.mark[u] = stamp;
                    self.queue.push(u as u32);
                }
            }
        }
        false
    }

    /// Vertex ids of the open cluster containing `v`.
    pub fn cluster_of(&mut self, config: &Configuration<'_>, v: usize) -> Vec<usize> {
        self.reaches(config, [v], |_| true, |_| false);
        self.queue.iter().map(|&w| w as usize).collect()
    }
}

/// A ↝ B: some open path joins a vertex of `a` to a vertex of `b`.
pub fn connects(config: &Configuration<'_>, a: &[usize], b: &[usize]) -> bool {
    let mut in_b = vec![false; config.domain.vertex_count()];
    for &v in b {
        in_b[v] = true;
    }
    Explorer::new().reaches(config, a.iter().copied(), |_| true, |v| in_b[v])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x1: i32,
    pub x2: i32,
    pub y1: i32,
    pub y2: i32,
}

impl Rect {
    pub fn new(x1: i32, x2: i32, y1: i32, y2: i32) -> Self {
        Rect { x1, x2, y1, y2 }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        (self.x1..=self.x2).contains(&v.x) && (self.y1..=self.y2).contains(&v.y)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.y1..=self.y2).flat_map(move |y| (self.x1..=self.x2).map(move |x| Vertex::new(x, y)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Left column to right column.
    Horizontal,
    /// Bottom row to top row.
    Vertical,
}

/// C_H(R) / C_V(R), using only edges with both endpoints in `rect`.
pub fn has_crossing(
    config: &Configuration<'_>,
    rect: Rect,
    orientation: Orientation,
) -> Result<bool> {
    let d = config.domain;
    if rect.x1 > rect.x2 || rect.y1 > rect.y2 {
        return Err(Error::param("inverted rectangle"));
    }
    for v in rect.vertices() {
        d.require(v)?;
    }
    let mut explorer = Explorer::new();
    Ok(crossing_with(&mut explorer, config, rect, orientation))
}

pub(crate) fn crossing_with(
    explorer: &mut Explorer,
    config: &Configuration<'_>,
    rect: Rect,
    orientation: Orientation,
) -> bool {
    let d = config.domain;
    let inside = |i: usize| rect.contains(d.vertex(i));
    match orientation {
        Orientation::Horizontal => {
            let sources = (rect.y1..=rect.y2).filter_map(|y| d.vertex_id(Vertex::new(rect.x1, y)));
            explorer.reaches(config, sources, inside, |i| d.vertex(i).x == rect.x2)
        }
        Orientation::Vertical => {
            let sources = (rect.x1..=rect.x2).filter_map(|x| d.vertex_id(Vertex::new(x, rect.y1)));
            explorer.reaches(config, sources, inside, |i| d.vertex(i).y == rect.y2)
        }
    }
}

/// Volume of the largest open cluster.
pub fn largest_cluster_volume(config: &Configuration<'_>) -> u32 {
    clusters(config).max_volume()
}

/// Volume of the largest open cluster of the configuration restricted to the
/// vertices satisfying `region` (edges need both endpoints in the region).
pub fn largest_cluster_volume_in(
    config: &Configuration<'_>,
    region: impl Fn(Vertex) -> bool,
) -> u32 {
    let d = config.domain;
    let mut forest = ClusterForest::new(d.vertex_count());
    let inside: Vec<bool> = d.vertices().iter().map(|&v| region(v)).collect();
    for e in config.open.ones() {
        let (a, b) = d.endpoints(e);
        if inside[a] && inside[b] {
            forest.union(a, b);
        }
    }
    forest
        .roots()
        .filter(|&r| inside[r])
        .map(|r| forest.root_volume(r))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::lattice::{build_box, build_rectangle};

    /// Independent BFS labelling over open edges.
    fn bfs_labels(config: &Configuration<'_>) -> Vec<usize> {
        let d = config.domain();
        let mut adj = vec![Vec::new(); d.vertex_count()];
        for e in config.open_edges() {
            let (a, b) = d.endpoints(e);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut label = vec![usize::MAX; d.vertex_count()];
        for s in 0..d.vertex_count() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = s;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = s;
                        q.push_back(w);
                    }
                }
            }
        }
        label
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn extreme_parameters() {
        let d = build_box(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_config(&d, 0.0, &mut rng).unwrap().open_count(), 0);
        assert_eq!(
            sample_config(&d, 1.0, &mut rng).unwrap().open_count(),
            d.edge_count()
        );
        assert!(sample_config(&d, 1.5, &mut rng).is_err());
        assert!(sample_config(&d, -0.1, &mut rng).is_err());
    }

    #[test]
    fn sample_config_matches_weights_on_same_stream() {
        let d = build_box(4);
        let a = sample_config(&d, 0.37, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let w = EdgeWeights::sample(&d, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, w.config_at(&d, 0.37));
    }

    #[test]
    fn half_open_fraction() {
        let d = build_box(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples = 10_000;
        let mut open = 0usize;
        let mut c = Configuration::all_closed(&d, 0.5);
        for _ in 0..samples {
            c.resample(0.5, &mut rng);
            open += c.open_count();
        }
        let n = (samples * d.edge_count()) as f64;
        let frac = open as f64 / n;
        let se = (0.25 / n).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se, "{frac}");
    }

    #[test]
    fn fair_sampler_masks_tail_bits() {
        let d = build_box(2); // 40 edges, one partial block
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = sample_fair_config(&d, &mut rng);
            assert!(c.open_edges().all(|e| e < d.edge_count()));
        }
    }

    #[test]
    fn clusters_trivial_cases() {
        let d = build_box(1);
        let closed = Configuration::all_closed(&d, 0.0);
        let f = clusters(&closed);
        assert_eq!(f.roots().count(), 9);
        assert_eq!(largest_cluster_volume(&closed), 1);
        let open = Configuration::all_open(&d);
        let f = clusters(&open);
        assert_eq!(f.roots().count(), 1);
        assert_eq!(f.volume_of(0), 9);
        assert_eq!(largest_cluster_volume(&Configuration::all_open(&build_box(5))), 121);
    }

    #[test]
    fn clusters_agree_with_bfs_oracle() {
        let d = build_box(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..100 {
            let p = (i % 10) as f64 / 10.0 + 0.05;
            let c = sample_config(&d, p, &mut rng).unwrap();
            let f = clusters(&c);
            assert!(same_partition(&f.labels(), &bfs_labels(&c)));
            let total: u32 = f.roots().map(|r| f.root_volume(r)).sum();
            assert_eq!(total as usize, d.vertex_count());
        }
    }

    #[test]
    fn connects_cases() {
        let d = build_box(1);
        let o = d.vertex_id(Vertex::ORIGIN).unwrap();
        let closed = Configuration::all_closed(&d, 0.0);
        assert!(connects(&closed, &[o], &[o]));
        assert!(!connects(&closed, &[o], &d.sphere(1)));
        assert!(connects(&Configuration::all_open(&d), &[o], &d.sphere(1)));
    }

    /// 0 ↝ ∂B(1) fails only when all four origin edges are closed: 15/16.
    #[test]
    fn one_arm_in_unit_box_by_enumeration() {
        let d = build_box(1);
        let o = d.vertex_id(Vertex::ORIGIN).unwrap();
        let mut hits = 0;
        for mask in 0u32..(1 << d.edge_count()) {
            let c = Configuration::from_open_edges(
                &d,
                (0..d.edge_count()).filter(|e| mask >> e & 1 == 1),
            );
            if connects(&c, &[o], &d.sphere(1)) {
                hits += 1;
            }
        }
        assert_eq!(hits * 16, 15 * (1 << d.edge_count()));
    }

    #[test]
    fn crossing_single_edge_and_full() {
        let d = build_rectangle(0, 1, 0, 0).unwrap();
        let r = Rect::new(0, 1, 0, 0);
        assert!(!has_crossing(&Configuration::all_closed(&d, 0.0), r, Orientation::Horizontal).unwrap());
        assert!(has_crossing(&Configuration::all_open(&d), r, Orientation::Horizontal).unwrap());
        let big = build_box(4);
        let r = Rect::new(-3, 3, -2, 1);
        let open = Configuration::all_open(&big);
        assert!(has_crossing(&open, r, Orientation::Horizontal).unwrap());
        assert!(has_crossing(&open, r, Orientation::Vertical).unwrap());
        assert!(has_crossing(&open, Rect::new(0, 5, 0, 0), Orientation::Horizontal).is_err());
    }

    #[test]
    fn crossing_ignores_paths_leaving_rectangle() {
        // U-shaped open path leaving the strip y = 0 must not count.
        let d = build_rectangle(0, 2, 0, 1).unwrap();
        let e = |a: (i32, i32), b: (i32, i32)| {
            d.edge_between(Vertex::new(a.0, a.1), Vertex::new(b.0, b.1)).unwrap()
        };
        let c = Configuration::from_open_edges(
            &d,
            [e((0, 0), (0, 1)), e((0, 1), (1, 1)), e((1, 1), (2, 1)), e((2, 1), (2, 0))],
        );
        assert!(!has_crossing(&c, Rect::new(0, 2, 0, 0), Orientation::Horizontal).unwrap());
        assert!(has_crossing(&c, Rect::new(0, 2, 0, 1), Orientation::Horizontal).unwrap());
    }

    /// Exhaustive: the 3-wide, 2-tall vertex rectangle crosses with
    /// probability exactly 1/2 at p = 1/2.
    #[test]
    fn self_dual_rectangle_exact_half() {
        let d = build_rectangle(0, 2, 0, 1).unwrap();
        let r = Rect::new(0, 2, 0, 1);
        let m = d.edge_count();
        let mut hits = 0u32;
        for mask in 0u32..(1 << m) {
            let c = Configuration::from_open_edges(&d, (0..m).filter(|e| mask >> e & 1 == 1));
            if has_crossing(&c, r, Orientation::Horizontal).unwrap() {
                hits += 1;
            }
        }
        assert_eq!(2 * hits, 1 << m);
    }

    #[test]
    fn largest_in_region() {
        let d = build_box(3);
        let open = Configuration::all_open(&d);
        assert_eq!(largest_cluster_volume_in(&open, |v| v.max_norm() <= 1), 9);
        assert_eq!(largest_cluster_volume_in(&open, |v| v.max_norm() == 3), 24);
        assert_eq!(largest_cluster_volume_in(&open, |_| false), 0);
    }

    #[test]
    fn explorer_cluster_of() {
        let d = build_box(2);
        let o = d.vertex_id(Vertex::ORIGIN).unwrap();
        let mut ex = Explorer::new();
        assert_eq!(ex.cluster_of(&Configuration::all_closed(&d, 0.0), o), vec![o]);
        assert_eq!(ex.cluster_of(&Configuration::all_open(&d), o).len(), 25);
    }

    #[test]
    fn box_kernel_matches_generic_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut fast = Explorer::new();
        let mut slow = Explorer::new();
        for n in [0u32, 1, 2, 5, 12] {
            let d = build_box(n);
            let o = d.vertex_id(Vertex::ORIGIN).unwrap();
            for p in [0.3, 0.5, 0.6] {
                for _ in 0..200 {
                    let c = sample_config(&d, p, &mut rng).unwrap();
                    let want = slow.reaches(&c, [o], |_| true, |v| d.vertex(v).max_norm() == n);
                    assert_eq!(fast.origin_reaches_box_boundary(&c, n), want);
                }
            }
        }
    }
}
