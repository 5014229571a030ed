//! Circuit events in annuli centred at the origin, decided through planar
//! duality instead of cycle search.
//!
//! An open circuit of the annulus A(n1, n2) surrounding B(n1) exists iff no
//! dual path leads from the faces touching B(n1) to the faces touching the
//! exterior of B(n2) without crossing an open annulus edge. Symmetrically, a
//! dual-open circuit made of dual vertices at norm strictly between n1 and n2
//! exists iff no primal path from B(n1) to ∂B(n2) avoids crossing it.

use std::collections::VecDeque;

use super::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{Domain, Vertex};

/// A(inner, outer) = B(outer) \ B(inner), centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annulus {
    pub inner: u32,
    pub outer: u32,
}

impl Annulus {
    pub fn new(inner: u32, outer: u32) -> Result<Self> {
        if inner >= outer {
            return Err(Error::param(format!(
                "annulus needs inner < outer, got {inner} >= {outer}"
            )));
        }
        Ok(Annulus { inner, outer })
    }

    pub fn contains(&self, v: Vertex) -> bool {
        let r = v.max_norm();
        r > self.inner && r <= self.outer
    }

    fn check_within(&self, d: &Domain) -> Result<()> {
        let r = self.outer as i32;
        for y in -r..=r {
            for x in -r..=r {
                let v = Vertex::new(x, y);
                if self.contains(v) {
                    d.require(v)?;
                }
            }
        }
        Ok(())
    }
}

/// Square grid of flags indexed by coordinates in [-r, r]².
struct Grid {
    r: i32,
    side: usize,
    seen: Vec<bool>,
}

impl Grid {
    fn new(r: i32) -> Self {
        let side = (2 * r + 1) as usize;
        Grid {
            r,
            side,
            seen: vec![false; side * side],
        }
    }

    fn slot(&self, x: i32, y: i32) -> Option<usize> {
        (x.abs() <= self.r && y.abs() <= self.r)
            .then(|| (y + self.r) as usize * self.side + (x + self.r) as usize)
    }
}

fn open_in_annulus(config: &Configuration<'_>, annulus: &Annulus, a: Vertex, b: Vertex) -> bool {
    annulus.contains(a)
        && annulus.contains(b)
        && config
            .domain()
            .edge_between(a, b)
            .is_some_and(|e| config.is_open(e))
}

/// An open circuit inside `annulus` surrounds B(inner).
pub fn has_open_circuit(config: &Configuration<'_>, annulus: Annulus) -> Result<bool> {
    annulus.check_within(config.domain())?;
    // Faces are named by their lower-left corner (x, y); the face centre is
    // (x + 1/2, y + 1/2). Faces with a corner in B(inner) are sources, faces
    // with a corner outside B(outer) are targets.
    let n1 = annulus.inner as i32;
    let n2 = annulus.outer as i32;
    let mut grid = Grid::new(n2 + 1);
    let mut queue = VecDeque::new();
    for y in -n1 - 1..=n1 {
        for x in -n1 - 1..=n1 {
            let s = grid.slot(x, y).unwrap();
            grid.seen[s] = true;
            queue.push_back((x, y));
        }
    }
    let is_target = |x: i32, y: i32| x < -n2 || x >= n2 || y < -n2 || y >= n2;
    while let Some((x, y)) = queue.pop_front() {
        if is_target(x, y) {
            return Ok(false);
        }
        // neighbour face and the primal edge between the two faces
        let steps = [
            ((x + 1, y), Vertex::new(x + 1, y), Vertex::new(x + 1, y + 1)),
            ((x - 1, y), Vertex::new(x, y), Vertex::new(x, y + 1)),
            ((x, y + 1), Vertex::new(x, y + 1), Vertex::new(x + 1, y + 1)),
            ((x, y - 1), Vertex::new(x, y), Vertex::new(x + 1, y)),
        ];
        for ((fx, fy), a, b) in steps {
            let Some(s) = grid.slot(fx, fy) else { continue };
            if grid.seen[s] || open_in_annulus(config, &annulus, a, b) {
                continue;
            }
            grid.seen[s] = true;
            queue.push_back((fx, fy));
        }
    }
    Ok(true)
}

/// A dual-open circuit (dual edges crossing closed primal edges) with every
/// dual vertex at max-norm strictly between `inner` and `outer` surrounds
/// B(inner). Primal edges missing from the domain count as closed.
pub fn has_dual_open_circuit(config: &Configuration<'_>, annulus: Annulus) -> Result<bool> {
    annulus.check_within(config.domain())?;
    let n1 = annulus.inner;
    let n2 = annulus.outer;
    let d = config.domain();
    // dual vertex at doubled norm in [2 n1 + 1, 2 n2 - 1]
    let in_dual_annulus = |doubled: u32| doubled > 2 * n1 && doubled < 2 * n2;
    let crossable = |a: Vertex, b: Vertex| -> bool {
        let dual = if a.y == b.y {
            let x = 2 * a.x.min(b.x) + 1;
            [(x, 2 * a.y - 1), (x, 2 * a.y + 1)]
        } else {
            let y = 2 * a.y.min(b.y) + 1;
            [(2 * a.x - 1, y), (2 * a.x + 1, y)]
        };
        let both_inside = dual
            .iter()
            .all(|&(x, y)| in_dual_annulus(x.unsigned_abs().max(y.unsigned_abs())));
        !both_inside || d.edge_between(a, b).is_some_and(|e| config.is_open(e))
    };
    let mut grid = Grid::new(n2 as i32);
    let mut queue = VecDeque::new();
    let r1 = n1 as i32;
    for y in -r1..=r1 {
        for x in -r1..=r1 {
            let s = grid.slot(x, y).unwrap();
            grid.seen[s] = true;
            queue.push_back(Vertex::new(x, y));
        }
    }
    while let Some(v) = queue.pop_front() {
        if v.max_norm() >= n2 {
            return Ok(false);
        }
        for w in [
            Vertex::new(v.x + 1, v.y),
            Vertex::new(v.x - 1, v.y),
            Vertex::new(v.x, v.y + 1),
            Vertex::new(v.x, v.y - 1),
        ] {
            let Some(s) = grid.slot(w.x, w.y) else { continue };
            if grid.seen[s] || !crossable(v, w) {
                continue;
            }
            grid.seen[s] = true;
            queue.push_back(w);
        }
    }
    Ok(true)
}
