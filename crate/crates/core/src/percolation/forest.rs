/// Disjoint-set forest over vertex ids with union by size and path halving.
///
/// Volumes are only meaningful at roots. Equal-size unions keep the root with
/// the smaller vertex id, so the forest shape is a deterministic function of
/// the union sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterForest {
    parent: Vec<u32>,
    volume: Vec<u32>,
}

impl ClusterForest {
    pub fn new(len: usize) -> Self {
        ClusterForest {
            parent: (0..len as u32).collect(),
            volume: vec![1; len],
        }
    }

    /// Resets to `len` singletons, reusing the allocation.
    pub fn reset(&mut self, len: usize) {
        self.parent.clear();
        self.parent.extend(0..len as u32);
        self.volume.clear();
        self.volume.resize(len, 1);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            let grand = self.parent[self.parent[v] as usize];
            self.parent[v] = grand;
            v = grand as usize;
        }
        v
    }

    /// Root lookup without compression.
    #[inline]
    pub fn root(&self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            v = self.parent[v] as usize;
        }
        v
    }

    /// Volume of the cluster containing `v`.
    pub fn volume_of(&self, v: usize) -> u32 {
        self.volume[self.root(v)]
    }

    /// Volume stored at `root`; only meaningful when `root` is a root.
    #[inline]
    pub fn root_volume(&self, root: usize) -> u32 {
        self.volume[root]
    }

    /// Merges two distinct roots and returns the surviving root.
    #[inline]
    pub fn link(&mut self, a: usize, b: usize) -> usize {
        debug_assert!(a != b);
        let (va, vb) = (self.volume[a], self.volume[b]);
        let (keep, drop) = if va > vb || (va == vb && a < b) {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[drop] = keep as u32;
        self.volume[keep] = va + vb;
        keep
    }

    /// Merges the clusters of `a` and `b`; returns the resulting root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            ra
        } else {
            self.link(ra, rb)
        }
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Points every vertex straight at its root.
    pub fn flatten(&mut self) {
        for v in 0..self.parent.len() {
            let r = self.find(v);
            self.parent[v] = r as u32;
        }
    }

    pub fn is_root(&self, v: usize) -> bool {
        self.parent[v] as usize == v
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.parent.len()).filter(|&v| self.is_root(v))
    }

    pub fn max_volume(&self) -> u32 {
        self.roots().map(|r| self.volume[r]).max().unwrap_or(0)
    }

    /// Cluster label per vertex: the root id.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.parent.len()).map(|v| self.root(v)).collect()
    }
}
