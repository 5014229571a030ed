//! Square-lattice geometry: boxes, annuli, rectangles, the dual lattice and
//! domains cut out by dual circuits.
//!
//! Every [`Domain`] is a vertex-induced subgraph of Z² with dense, deterministic
//! indexing: vertices are numbered row-major by `(y, x)`, horizontal edges come
//! first (row-major by their left endpoint), then vertical edges (row-major by
//! their lower endpoint). The boundary ∂B(n) of a box is the set of vertices of
//! max-norm exactly `n`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Vertex { x, y }
    }

    pub fn max_norm(self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// An edge of a domain. `u` is the left (horizontal) or lower (vertical) endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: usize,
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    pub fn is_horizontal(&self) -> bool {
        self.u.y == self.v.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Box { n: u32 },
    Annulus { inner: u32, outer: u32 },
    Rectangle { x1: i32, x2: i32, y1: i32, y2: i32 },
    DualInterior,
    Induced,
}

/// A finite vertex-induced subgraph of Z². Immutable after construction.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    vertices: Vec<Vertex>,
    // endpoint ids, u < v in row-major order
    edges: Vec<[u32; 2]>,
    horizontal: usize,
    x0: i32,
    y0: i32,
    width: usize,
    height: usize,
    index: Vec<u32>,
    right: Vec<u32>,
    up: Vec<u32>,
    left: Vec<u32>,
    down: Vec<u32>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Eq for Domain {}

/// B(n) = [-n, n]².
pub fn build_box(n: u32) -> Domain {
    let r = n as i32;
    Domain::from_predicate(DomainKind::Box { n }, (-r, r), (-r, r), |_| true, |_, _| true)
}

/// A(n1, n2) = B(n2) \ B(n1), as a vertex-induced subgraph.
pub fn build_annulus(n1: u32, n2: u32) -> Result<Domain> {
    if n1 >= n2 {
        return Err(Error::param(format!(
            "annulus needs inner < outer, got {n1} >= {n2}"
        )));
    }
    let r = n2 as i32;
    Ok(Domain::from_predicate(
        DomainKind::Annulus {
            inner: n1,
            outer: n2,
        },
        (-r, r),
        (-r, r),
        |v| v.max_norm() > n1,
        |_, _| true,
    ))
}

/// The full grid on the integer points of [x1, x2] × [y1, y2].
pub fn build_rectangle(x1: i32, x2: i32, y1: i32, y2: i32) -> Result<Domain> {
    if x1 > x2 || y1 > y2 {
        return Err(Error::param(format!(
            "rectangle bounds inverted: [{x1},{x2}]x[{y1},{y2}]"
        )));
    }
    Ok(Domain::from_predicate(
        DomainKind::Rectangle { x1, x2, y1, y2 },
        (x1, x2),
        (y1, y2),
        |_| true,
        |_, _| true,
    ))
}

/// D(γ): primal vertices strictly inside `gamma` (even–odd rule) and the edges
/// joining two of them without crossing `gamma`.
pub fn domain_from_dual_circuit(gamma: &DualCircuit) -> Domain {
    let (min, max) = gamma.bounds();
    let crossing: HashSet<DualEdge> = gamma.edges().collect();
    Domain::from_predicate(
        DomainKind::DualInterior,
        (min.x + 1, max.x),
        (min.y + 1, max.y),
        |v| gamma.encloses(v),
        |u, v| !crossing.contains(&dual_of(u, v)),
    )
}

impl Domain {
    /// The subgraph of Z² induced by an arbitrary finite vertex set.
    pub fn induced(vertices: impl IntoIterator<Item = Vertex>) -> Domain {
        let set: HashSet<Vertex> = vertices.into_iter().collect();
        let xs = set.iter().map(|v| v.x);
        let ys = set.iter().map(|v| v.y);
        let (xmin, xmax) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(-1));
        let (ymin, ymax) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(-1));
        Domain::from_predicate(
            DomainKind::Induced,
            (xmin, xmax),
            (ymin, ymax),
            |v| set.contains(&v),
            |_, _| true,
        )
    }

    fn from_predicate(
        kind: DomainKind,
        (xmin, xmax): (i32, i32),
        (ymin, ymax): (i32, i32),
        keep_vertex: impl Fn(Vertex) -> bool,
        keep_edge: impl Fn(Vertex, Vertex) -> bool,
    ) -> Domain {
        let width = (xmax - xmin + 1).max(0) as usize;
        let height = (ymax - ymin + 1).max(0) as usize;
        let mut index = vec![NONE; width * height];
        let mut vertices = Vec::new();
        for y in ymin..=ymax {
            for x in xmin..=xmax {
                let v = Vertex::new(x, y);
                if keep_vertex(v) {
                    index[(y - ymin) as usize * width + (x - xmin) as usize] = vertices.len() as u32;
                    vertices.push(v);
                }
            }
        }
        let mut dom = Domain {
            kind,
            right: vec![NONE; vertices.len()],
            up: vec![NONE; vertices.len()],
            left: vec![NONE; vertices.len()],
            down: vec![NONE; vertices.len()],
            vertices,
            edges: Vec::new(),
            horizontal: 0,
            x0: xmin,
            y0: ymin,
            width,
            height,
            index,
        };
        for i in 0..dom.vertices.len() {
            let v = dom.vertices[i];
            let w = Vertex::new(v.x + 1, v.y);
            if let Some(j) = dom.vertex_id(w) {
                if keep_edge(v, w) {
                    dom.right[i] = dom.edges.len() as u32;
                    dom.left[j] = dom.edges.len() as u32;
                    dom.edges.push([i as u32, j as u32]);
                }
            }
        }
        dom.horizontal = dom.edges.len();
        for i in 0..dom.vertices.len() {
            let v = dom.vertices[i];
            let w = Vertex::new(v.x, v.y + 1);
            if let Some(j) = dom.vertex_id(w) {
                if keep_edge(v, w) {
                    dom.up[i] = dom.edges.len() as u32;
                    dom.down[j] = dom.edges.len() as u32;
                    dom.edges.push([i as u32, j as u32]);
                }
            }
        }
        dom
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        self.vertices[id]
    }

    pub fn vertex_id(&self, v: Vertex) -> Option<usize> {
        let dx = v.x.checked_sub(self.x0)?;
        let dy = v.y.checked_sub(self.y0)?;
        if dx < 0 || dy < 0 || dx as usize >= self.width || dy as usize >= self.height {
            return None;
        }
        match self.index[dy as usize * self.width + dx as usize] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// Like [`Domain::vertex_id`] but reports a missing vertex as an error.
    pub fn require(&self, v: Vertex) -> Result<usize> {
        self.vertex_id(v).ok_or(Error::OutsideDomain(v))
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertex_id(v).is_some()
    }

    pub fn edge(&self, id: usize) -> Edge {
        let [a, b] = self.edges[id];
        Edge {
            id,
            u: self.vertices[a as usize],
            v: self.vertices[b as usize],
        }
    }

    /// Endpoint vertex ids of edge `id`.
    #[inline]
    pub fn endpoints(&self, id: usize) -> (usize, usize) {
        let [a, b] = self.edges[id];
        (a as usize, b as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.edges.len()).map(|i| self.edge(i))
    }

    /// Number of horizontal edges; they occupy ids `0..horizontal_count()`.
    pub fn horizontal_count(&self) -> usize {
        self.horizontal
    }

    pub fn edge_between(&self, a: Vertex, b: Vertex) -> Option<usize> {
        let (lo, hi) = if (a.y, a.x) <= (b.y, b.x) { (a, b) } else { (b, a) };
        let i = self.vertex_id(lo)?;
        let e = if hi == Vertex::new(lo.x + 1, lo.y) {
            self.right[i]
        } else if hi == Vertex::new(lo.x, lo.y + 1) {
            self.up[i]
        } else {
            NONE
        };
        (e != NONE).then_some(e as usize)
    }

    /// Calls `f(neighbour_id, edge_id)` for every domain edge at vertex `id`.
    #[inline]
    pub fn for_each_neighbor(&self, id: usize, mut f: impl FnMut(usize, usize)) {
        for (e, side) in [(self.right[id], 1), (self.up[id], 1), (self.left[id], 0), (self.down[id], 0)] {
            if e != NONE {
                f(self.edges[e as usize][side] as usize, e as usize);
            }
        }
    }

    /// Ids of the vertices with max-norm exactly `n`.
    pub fn sphere(&self, n: u32) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].max_norm() == n)
            .collect()
    }

    /// Ids of the vertices with max-norm at most `n`.
    pub fn ball(&self, n: u32) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].max_norm() <= n)
            .collect()
    }
}

/// A dual vertex, located at `(x + 1/2, y + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualVertex {
    pub x: i32,
    pub y: i32,
}

impl DualVertex {
    pub const fn new(x: i32, y: i32) -> Self {
        DualVertex { x, y }
    }

    /// Max-norm of the point `(x + 1/2, y + 1/2)`, doubled so it stays integral.
    pub fn doubled_norm(self) -> u32 {
        (2 * self.x + 1)
            .unsigned_abs()
            .max((2 * self.y + 1).unsigned_abs())
    }
}

impl fmt::Display for DualVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            self.x as f64 + 0.5,
            self.y as f64 + 0.5
        )
    }
}

/// An unordered pair of adjacent dual vertices, stored with the smaller first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualEdge(pub DualVertex, pub DualVertex);

impl DualEdge {
    pub fn new(a: DualVertex, b: DualVertex) -> Self {
        if (a.y, a.x) <= (b.y, b.x) {
            DualEdge(a, b)
        } else {
            DualEdge(b, a)
        }
    }

    /// The primal edge crossed by this dual edge, as `(left|lower, right|upper)`.
    pub fn primal(self) -> (Vertex, Vertex) {
        let DualEdge(a, b) = self;
        if a.x == b.x {
            // vertical dual edge crosses a horizontal primal edge
            (Vertex::new(a.x, b.y), Vertex::new(a.x + 1, b.y))
        } else {
            (Vertex::new(b.x, a.y), Vertex::new(b.x, a.y + 1))
        }
    }
}

fn dual_of(u: Vertex, v: Vertex) -> DualEdge {
    let (a, b) = if (u.y, u.x) <= (v.y, v.x) { (u, v) } else { (v, u) };
    if a.y == b.y {
        DualEdge(DualVertex::new(a.x, a.y - 1), DualVertex::new(a.x, a.y))
    } else {
        DualEdge(DualVertex::new(a.x - 1, a.y), DualVertex::new(a.x, a.y))
    }
}

/// The unique dual edge crossing `e`.
pub fn dual_edge(e: &Edge) -> DualEdge {
    dual_of(e.u, e.v)
}

/// A simple closed path on the dual lattice. Stored without repeating the
/// starting point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualCircuit {
    points: Vec<DualVertex>,
}

impl DualCircuit {
    /// Accepts the cyclic sequence with or without the closing repeat of the
    /// first point.
    pub fn new(mut points: Vec<DualVertex>) -> Result<Self> {
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 4 {
            return Err(Error::InvalidCircuit(format!(
                "a dual circuit needs at least 4 distinct points, got {}",
                points.len()
            )));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (i, &p) in points.iter().enumerate() {
            if !seen.insert(p) {
                return Err(Error::InvalidCircuit(format!(
                    "dual vertex {p} repeated (self-intersection)"
                )));
            }
            let q = points[(i + 1) % points.len()];
            if (p.x - q.x).abs() + (p.y - q.y).abs() != 1 {
                return Err(Error::InvalidCircuit(format!(
                    "consecutive points {p} and {q} are not adjacent"
                )));
            }
        }
        Ok(DualCircuit { points })
    }

    /// The dual circuit running just outside ∂B(n), at max-norm n + 1/2.
    pub fn around_box(n: u32) -> Self {
        let lo = -(n as i32) - 1;
        let hi = n as i32;
        let mut points = Vec::new();
        for x in lo..hi {
            points.push(DualVertex::new(x, lo));
        }
        for y in lo..hi {
            points.push(DualVertex::new(hi, y));
        }
        for x in (lo + 1..=hi).rev() {
            points.push(DualVertex::new(x, hi));
        }
        for y in (lo + 1..=hi).rev() {
            points.push(DualVertex::new(lo, y));
        }
        DualCircuit { points }
    }

    /// Parses one dual vertex per line as two half-integer coordinates
    /// separated by whitespace or a comma. Blank lines and `#` comments are
    /// skipped; the circuit is closed implicitly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 2 {
                return Err(Error::InvalidCircuit(format!(
                    "line {}: expected two coordinates, got {line:?}",
                    lineno + 1
                )));
            }
            let mut c = [0i32; 2];
            for (slot, f) in c.iter_mut().zip(&fields) {
                let v: f64 = f.parse().map_err(|_| {
                    Error::InvalidCircuit(format!("line {}: bad number {f:?}", lineno + 1))
                })?;
                let shifted = v - 0.5;
                if shifted.fract() != 0.0 || !shifted.is_finite() {
                    return Err(Error::InvalidCircuit(format!(
                        "line {}: {v} is not a half-integer",
                        lineno + 1
                    )));
                }
                *slot = shifted as i32;
            }
            points.push(DualVertex::new(c[0], c[1]));
        }
        DualCircuit::new(points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DualCircuit::parse(&text)
    }

    pub fn points(&self) -> &[DualVertex] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = DualEdge> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| DualEdge::new(self.points[i], self.points[(i + 1) % n]))
    }

    fn bounds(&self) -> (DualVertex, DualVertex) {
        let mut min = self.points[0];
        let mut max = self.points[0];
        for p in &self.points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    /// Even–odd rule with a ray towards +x. Only vertical circuit edges can
    /// meet the ray, and none passes through a circuit vertex.
    pub fn encloses(&self, v: Vertex) -> bool {
        let crossings = self
            .edges()
            .filter(|DualEdge(a, b)| a.x == b.x && a.x >= v.x && a.y == v.y - 1)
            .count();
        crossings % 2 == 1
    }
}

/// Textual domain description: `box:N`, `annulus:N1:N2`, `rect:X1:X2:Y1:Y2`
/// or `circuit:PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainSpec {
    Box(u32),
    Annulus(u32, u32),
    Rect(i32, i32, i32, i32),
    Circuit(String),
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainSpec::Box(n) => Ok(build_box(*n)),
            DomainSpec::Annulus(a, b) => build_annulus(*a, *b),
            DomainSpec::Rect(x1, x2, y1, y2) => build_rectangle(*x1, *x2, *y1, *y2),
            DomainSpec::Circuit(path) => {
                Ok(domain_from_dual_circuit(&DualCircuit::load(Path::new(path))?))
            }
        }
    }
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("cannot parse domain {s:?}"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        if kind == "circuit" {
            let path = s.split_once(':').map(|x| x.1).filter(|p| !p.is_empty()).ok_or_else(bad)?;
            return Ok(DomainSpec::Circuit(path.to_string()));
        }
        let nums: Vec<i64> = parts
            .map(|p| p.trim().parse::<i64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let unsigned = |v: i64| u32::try_from(v).map_err(|_| bad());
        let signed = |v: i64| i32::try_from(v).map_err(|_| bad());
        match (kind, nums.as_slice()) {
            ("box", [n]) => Ok(DomainSpec::Box(unsigned(*n)?)),
            ("annulus", [a, b]) => Ok(DomainSpec::Annulus(unsigned(*a)?, unsigned(*b)?)),
            ("rect", [x1, x2, y1, y2]) => Ok(DomainSpec::Rect(
                signed(*x1)?,
                signed(*x2)?,
                signed(*y1)?,
                signed(*y2)?,
            )),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Box(n) => write!(f, "box:{n}"),
            DomainSpec::Annulus(a, b) => write!(f, "annulus:{a}:{b}"),
            DomainSpec::Rect(x1, x2, y1, y2) => write!(f, "rect:{x1}:{x2}:{y1}:{y2}"),
            DomainSpec::Circuit(p) => write!(f, "circuit:{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        let b0 = build_box(0);
        assert_eq!((b0.vertex_count(), b0.edge_count()), (1, 0));
        let b1 = build_box(1);
        assert_eq!((b1.vertex_count(), b1.edge_count()), (9, 12));
        let b2 = build_box(2);
        assert_eq!((b2.vertex_count(), b2.edge_count()), (25, 40));
        for n in 0..12u32 {
            let b = build_box(n);
            let m = (2 * n + 1) as usize;
            assert_eq!(b.vertex_count(), m * m);
            assert_eq!(b.edge_count(), 2 * m * (m - 1));
        }
    }

    #[test]
    fn annulus_counts_and_rejection() {
        let a = build_annulus(0, 1).unwrap();
        assert_eq!((a.vertex_count(), a.edge_count()), (8, 8));
        assert_eq!(build_annulus(1, 2).unwrap().vertex_count(), 16);
        assert!(build_annulus(2, 2).is_err());
        assert!(build_annulus(3, 2).is_err());
    }

    #[test]
    fn rectangle_counts() {
        let r = build_rectangle(0, 2, 0, 1).unwrap();
        assert_eq!((r.vertex_count(), r.edge_count()), (6, 7));
        let r = build_rectangle(0, 0, 0, 0).unwrap();
        assert_eq!((r.vertex_count(), r.edge_count()), (1, 0));
        let r = build_rectangle(0, 4, 0, 2).unwrap();
        assert_eq!((r.vertex_count(), r.edge_count()), (15, 22));
        assert!(build_rectangle(1, 0, 0, 0).is_err());
        assert!(build_rectangle(0, 0, 1, 0).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let b = build_box(1);
        assert_eq!(b.vertex(0), Vertex::new(-1, -1));
        assert_eq!(b.vertex(1), Vertex::new(0, -1));
        assert_eq!(b.vertex(3), Vertex::new(-1, 0));
        assert_eq!(b.horizontal_count(), 6);
        let e0 = b.edge(0);
        assert_eq!((e0.u, e0.v), (Vertex::new(-1, -1), Vertex::new(0, -1)));
        let e6 = b.edge(6);
        assert_eq!((e6.u, e6.v), (Vertex::new(-1, -1), Vertex::new(-1, 0)));
        assert_eq!(b, build_box(1));
    }

    #[test]
    fn neighbours_match_edge_list() {
        let d = build_annulus(1, 3).unwrap();
        let mut count = 0;
        for i in 0..d.vertex_count() {
            d.for_each_neighbor(i, |j, e| {
                let (a, b) = d.endpoints(e);
                assert!((a, b) == (i, j) || (a, b) == (j, i));
                count += 1;
            });
        }
        assert_eq!(count, 2 * d.edge_count());
    }

    #[test]
    fn dual_edge_examples() {
        let h = Edge {
            id: 0,
            u: Vertex::new(0, 0),
            v: Vertex::new(1, 0),
        };
        // (1/2, -1/2) – (1/2, 1/2)
        assert_eq!(
            dual_edge(&h),
            DualEdge(DualVertex::new(0, -1), DualVertex::new(0, 0))
        );
        let v = Edge {
            id: 0,
            u: Vertex::new(0, 0),
            v: Vertex::new(0, 1),
        };
        // (-1/2, 1/2) – (1/2, 1/2)
        assert_eq!(
            dual_edge(&v),
            DualEdge(DualVertex::new(-1, 0), DualVertex::new(0, 0))
        );
    }

    #[test]
    fn dual_edge_is_injective_and_invertible_on_box3() {
        let b = build_box(3);
        let mut seen = HashSet::new();
        for e in b.edges() {
            let d = dual_edge(&e);
            assert!(seen.insert(d));
            assert_eq!(d.primal(), (e.u, e.v));
        }
    }

    #[test]
    fn smallest_circuit_encloses_origin_only() {
        let gamma = DualCircuit::around_box(0);
        assert_eq!(gamma.len(), 4);
        let d = domain_from_dual_circuit(&gamma);
        assert_eq!(d.vertices(), &[Vertex::ORIGIN]);
        assert_eq!(d.edge_count(), 0);
    }

    #[test]
    fn circuit_around_box_reproduces_box() {
        assert_eq!(DualCircuit::around_box(1).len(), 12);
        for n in 0..=5 {
            let d = domain_from_dual_circuit(&DualCircuit::around_box(n));
            let b = build_box(n);
            assert_eq!(d, b, "n = {n}");
        }
    }

    #[test]
    fn circuit_validation() {
        let p = |x, y| DualVertex::new(x, y);
        assert!(DualCircuit::new(vec![p(0, 0), p(1, 0), p(1, 1)]).is_err());
        // gap
        assert!(DualCircuit::new(vec![p(0, 0), p(2, 0), p(2, 1), p(0, 1)]).is_err());
        // figure eight through (1, 1)
        let eight = vec![
            p(0, 0),
            p(1, 0),
            p(1, 1),
            p(2, 1),
            p(2, 2),
            p(1, 2),
            p(1, 1),
            p(0, 1),
        ];
        assert!(DualCircuit::new(eight).is_err());
        // explicit closing point is accepted
        let closed = vec![p(-1, -1), p(0, -1), p(0, 0), p(-1, 0), p(-1, -1)];
        assert_eq!(DualCircuit::new(closed).unwrap(), DualCircuit::around_box(0));
    }

    #[test]
    fn parse_circuit_text() {
        let text = "# unit square around the origin\n-0.5 -0.5\n0.5,-0.5\n0.5 0.5\n\n-0.5 0.5\n";
        let gamma = DualCircuit::parse(text).unwrap();
        assert_eq!(gamma, DualCircuit::around_box(0));
        assert!(DualCircuit::parse("0 0\n1 0\n1 1\n0 1\n").is_err());
        assert!(DualCircuit::parse("0.5\n").is_err());
    }

    #[test]
    fn domain_spec_roundtrip() {
        for s in ["box:200", "annulus:50:100", "rect:0:400:0:200", "rect:-3:3:-1:1"] {
            let spec: DomainSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("box".parse::<DomainSpec>().is_err());
        assert!("box:-1".parse::<DomainSpec>().is_err());
        assert!("disk:3".parse::<DomainSpec>().is_err());
        assert_eq!(
            "box:2".parse::<DomainSpec>().unwrap().build().unwrap().vertex_count(),
            25
        );
    }
}
