//! Graph families and their exact finite truncations.
//!
//! Infinite graphs are never materialized. A [`GraphModel`] answers neighbor,
//! degree and distance queries from vertex coordinates; [`truncate`] builds a
//! dense, BFS-ordered index of a finite ball for the exact kernels.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Highest biased-ladder level whose multiplicities are listed exactly.
pub const MAX_LADDER_LEVEL: u32 = 59;

/// Rough per-vertex footprint of a truncated ball, used for budget checks.
pub const BYTES_PER_TRUNCATED_VERTEX: u64 = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid graph spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("{vertex} is not a vertex of {graph}")]
    NotAVertex { vertex: String, graph: String },
    #[error("{vertex} lies outside truncation radius {radius}")]
    OutsideTruncation { vertex: String, radius: u32 },
    #[error("biased-ladder level {0} exceeds the multiplicity cap {MAX_LADDER_LEVEL}")]
    LevelCap(u32),
    #[error("truncation radius must be at least 1")]
    ZeroRadius,
    #[error(
        "ball of radius {radius} needs more than {counted} vertices; \
         budget of {budget_bytes} bytes allows {limit}"
    )]
    Budget {
        radius: u32,
        counted: usize,
        limit: usize,
        budget_bytes: u64,
    },
}

/// Graphs that can serve as a comb backbone or stand alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseGraph {
    Line,
    Cycle(u32),
    /// Path on vertices `0..m`; `path:2` is the single edge K2.
    Path(u32),
    /// Center `0` joined to leaves `1..=k`.
    Star(u32),
    Grid2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseVertex {
    Site(i32),
    Grid(i32, i32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexId {
    Base(BaseVertex),
    /// Backbone vertex plus a signed tooth coordinate.
    Comb(BaseVertex, i32),
    /// Backbone vertex plus a point of the attached Z² copy.
    Comb2(BaseVertex, [i32; 2]),
    Spine(u32),
    /// Midpoint `index` of the length-2 paths between spine `level` and
    /// `level + 1`. Above [`MAX_LADDER_LEVEL`] the index is a 63-bit
    /// fingerprint of the unmaterialized index.
    Midpoint(u32, u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Plain(BaseGraph),
    Comb(BaseGraph),
    Comb2(BaseGraph),
    BiasedLadder,
}

/// A neighbor class: either a concrete vertex or all midpoints of one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Vertex(VertexId),
    Midpoints { level: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeighborClass {
    pub target: Neighbor,
    pub multiplicity: u64,
}

impl BaseGraph {
    fn parse(spec: &str, parts: &[&str]) -> Result<Self, GraphError> {
        let bad = |reason: &str| GraphError::InvalidSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let param = |parts: &[&str], min: u32| -> Result<u32, GraphError> {
            let [_, p] = parts else {
                return Err(bad("expected exactly one integer parameter"));
            };
            let m: u32 = p.parse().map_err(|_| bad("parameter is not an integer"))?;
            if m < min {
                return Err(bad(&format!("parameter must be at least {min}")));
            }
            Ok(m)
        };
        match parts.first().copied() {
            Some("line") if parts.len() == 1 => Ok(BaseGraph::Line),
            Some("grid2d") if parts.len() == 1 => Ok(BaseGraph::Grid2d),
            Some("cycle") => Ok(BaseGraph::Cycle(param(parts, 3)?)),
            Some("path") => Ok(BaseGraph::Path(param(parts, 2)?)),
            Some("star") => Ok(BaseGraph::Star(param(parts, 1)?)),
            _ => Err(bad("unknown base graph")),
        }
    }

    pub fn root(&self) -> BaseVertex {
        match self {
            BaseGraph::Grid2d => BaseVertex::Grid(0, 0),
            _ => BaseVertex::Site(0),
        }
    }

    pub fn contains(&self, v: BaseVertex) -> bool {
        match (*self, v) {
            (BaseGraph::Line, BaseVertex::Site(_)) => true,
            (BaseGraph::Cycle(m) | BaseGraph::Path(m), BaseVertex::Site(x)) => {
                x >= 0 && (x as u32) < m
            }
            (BaseGraph::Star(k), BaseVertex::Site(x)) => x >= 0 && (x as u32) <= k,
            (BaseGraph::Grid2d, BaseVertex::Grid(..)) => true,
            _ => false,
        }
    }

    /// Degree of every vertex when the graph is regular.
    pub fn constant_degree(&self) -> Option<u32> {
        match *self {
            BaseGraph::Line | BaseGraph::Cycle(_) => Some(2),
            BaseGraph::Grid2d => Some(4),
            BaseGraph::Path(2) | BaseGraph::Star(1) => Some(1),
            BaseGraph::Path(_) | BaseGraph::Star(_) => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, BaseGraph::Line | BaseGraph::Grid2d)
    }

    pub fn degree(&self, v: BaseVertex) -> u32 {
        match (*self, v) {
            (BaseGraph::Line | BaseGraph::Cycle(_), _) => 2,
            (BaseGraph::Grid2d, _) => 4,
            (BaseGraph::Path(m), BaseVertex::Site(x)) => {
                if x == 0 || x as u32 == m - 1 {
                    1
                } else {
                    2
                }
            }
            (BaseGraph::Star(k), BaseVertex::Site(x)) => {
                if x == 0 {
                    k
                } else {
                    1
                }
            }
            (_, BaseVertex::Grid(..)) => unreachable!("grid vertex on a one-dimensional base"),
        }
    }

    /// The `idx`-th neighbor in ascending coordinate order.
    pub fn nth_neighbor(&self, v: BaseVertex, idx: u32) -> BaseVertex {
        match (*self, v) {
            (BaseGraph::Line, BaseVertex::Site(x)) => {
                BaseVertex::Site(if idx == 0 { x - 1 } else { x + 1 })
            }
            (BaseGraph::Cycle(m), BaseVertex::Site(x)) => {
                let m = m as i32;
                let a = (x + m - 1) % m;
                let b = (x + 1) % m;
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                BaseVertex::Site(if idx == 0 { lo } else { hi })
            }
            (BaseGraph::Path(m), BaseVertex::Site(x)) => {
                if x == 0 {
                    BaseVertex::Site(1)
                } else if x as u32 == m - 1 {
                    BaseVertex::Site(x - 1)
                } else {
                    BaseVertex::Site(if idx == 0 { x - 1 } else { x + 1 })
                }
            }
            (BaseGraph::Star(_), BaseVertex::Site(x)) => {
                if x == 0 {
                    BaseVertex::Site(idx as i32 + 1)
                } else {
                    BaseVertex::Site(0)
                }
            }
            (BaseGraph::Grid2d, BaseVertex::Grid(x, y)) => grid_neighbor(x, y, idx),
            _ => unreachable!("vertex kind does not match base graph"),
        }
    }

    pub fn distance(&self, a: BaseVertex, b: BaseVertex) -> u64 {
        match (*self, a, b) {
            (BaseGraph::Line | BaseGraph::Path(_), BaseVertex::Site(x), BaseVertex::Site(y)) => {
                (x as i64 - y as i64).unsigned_abs()
            }
            (BaseGraph::Cycle(m), BaseVertex::Site(x), BaseVertex::Site(y)) => {
                let d = (x as i64 - y as i64).unsigned_abs();
                d.min(m as u64 - d)
            }
            (BaseGraph::Star(_), BaseVertex::Site(x), BaseVertex::Site(y)) => {
                if x == y {
                    0
                } else if x == 0 || y == 0 {
                    1
                } else {
                    2
                }
            }
            (BaseGraph::Grid2d, BaseVertex::Grid(x1, y1), BaseVertex::Grid(x2, y2)) => {
                (x1 as i64 - x2 as i64).unsigned_abs() + (y1 as i64 - y2 as i64).unsigned_abs()
            }
            _ => unreachable!("vertex kind does not match base graph"),
        }
    }

    fn label(&self) -> String {
        match self {
            BaseGraph::Line => "line".into(),
            BaseGraph::Grid2d => "grid2d".into(),
            BaseGraph::Cycle(m) => format!("cycle:{m}"),
            BaseGraph::Path(m) => format!("path:{m}"),
            BaseGraph::Star(k) => format!("star:{k}"),
        }
    }
}

/// Neighbors of a Z² point, ascending: (x-1,y), (x,y-1), (x,y+1), (x+1,y).
#[inline]
fn grid_neighbor(x: i32, y: i32, idx: u32) -> BaseVertex {
    match idx {
        0 => BaseVertex::Grid(x - 1, y),
        1 => BaseVertex::Grid(x, y - 1),
        2 => BaseVertex::Grid(x, y + 1),
        _ => BaseVertex::Grid(x + 1, y),
    }
}

#[inline]
fn grid_step(t: [i32; 2], idx: u32) -> [i32; 2] {
    match grid_neighbor(t[0], t[1], idx) {
        BaseVertex::Grid(a, b) => [a, b],
        BaseVertex::Site(_) => unreachable!(),
    }
}

impl BaseVertex {
    fn push_coords(&self, out: &mut Vec<i64>) {
        match *self {
            BaseVertex::Site(x) => out.push(x as i64),
            BaseVertex::Grid(x, y) => {
                out.push(x as i64);
                out.push(y as i64);
            }
        }
    }
}

impl VertexId {
    /// Coordinate tuple used on the wire.
    pub fn coords(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(4);
        match *self {
            VertexId::Base(b) => b.push_coords(&mut out),
            VertexId::Comb(b, k) => {
                b.push_coords(&mut out);
                out.push(k as i64);
            }
            VertexId::Comb2(b, [p, q]) => {
                b.push_coords(&mut out);
                out.push(p as i64);
                out.push(q as i64);
            }
            VertexId::Spine(n) => out.push(n as i64),
            VertexId::Midpoint(n, i) => {
                out.push(n as i64);
                out.push(i as i64);
            }
        }
        out
    }

    /// Signed tooth coordinate on `Comb`, Chebyshev radius of the tooth
    /// point on `Comb2`, zero elsewhere.
    #[inline]
    pub fn height(&self) -> i64 {
        match *self {
            VertexId::Comb(_, k) => k as i64,
            VertexId::Comb2(_, [p, q]) => (p as i64).abs().max((q as i64).abs()),
            _ => 0,
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coords();
        write!(f, "(")?;
        for (i, x) in c.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// An immutable graph family with a designated root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphModel {
    family: Family,
    root: VertexId,
    truncation: Option<u32>,
    memory_budget: Option<u64>,
}

impl FromStr for GraphModel {
    type Err = GraphError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        build_graph(spec)
    }
}

/// Parses `family(:param)*` into a model rooted at the family's origin.
pub fn build_graph(spec: &str) -> Result<GraphModel, GraphError> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let family = match parts[0] {
        "comb" => Family::Comb(BaseGraph::parse(spec, &parts[1..])?),
        "comb2" => Family::Comb2(BaseGraph::parse(spec, &parts[1..])?),
        "biased-ladder" if parts.len() == 1 => Family::BiasedLadder,
        _ => Family::Plain(BaseGraph::parse(spec, &parts)?),
    };
    Ok(GraphModel::new(family))
}

impl GraphModel {
    pub fn new(family: Family) -> Self {
        let root = match family {
            Family::Plain(b) => VertexId::Base(b.root()),
            Family::Comb(b) => VertexId::Comb(b.root(), 0),
            Family::Comb2(b) => VertexId::Comb2(b.root(), [0, 0]),
            Family::BiasedLadder => VertexId::Spine(0),
        };
        GraphModel {
            family,
            root,
            truncation: None,
            memory_budget: None,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn truncation(&self) -> Option<u32> {
        self.truncation
    }

    pub fn with_root(mut self, root: VertexId) -> Result<Self, GraphError> {
        self.check_vertex(&root)?;
        if let VertexId::Spine(n) = root {
            if n > MAX_LADDER_LEVEL {
                return Err(GraphError::LevelCap(n));
            }
        }
        self.root = root;
        Ok(self)
    }

    /// Restricts the model to the ball of radius `r` around the root.
    pub fn with_truncation(mut self, r: u32) -> Self {
        self.truncation = Some(r);
        self
    }

    /// Byte budget for [`truncate`]; defaults to [`default_memory_budget`].
    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        self.memory_budget = Some(bytes);
        self
    }

    pub fn memory_budget(&self) -> u64 {
        self.memory_budget.unwrap_or_else(default_memory_budget)
    }

    /// Canonical spec string; parses back to the same family.
    pub fn spec(&self) -> String {
        match self.family {
            Family::Plain(b) => b.label(),
            Family::Comb(b) => format!("comb:{}", b.label()),
            Family::Comb2(b) => format!("comb2:{}", b.label()),
            Family::BiasedLadder => "biased-ladder".into(),
        }
    }

    /// Backbone degree `d` when the model is a comb over a regular base.
    pub fn comb_base_degree(&self) -> Option<u32> {
        match self.family {
            Family::Comb(b) => b.constant_degree(),
            _ => None,
        }
    }

    /// Degree shared by all vertices, if the whole graph is regular.
    pub fn constant_degree(&self) -> Option<u32> {
        match self.family {
            Family::Plain(b) => b.constant_degree(),
            _ => None,
        }
    }

    pub fn is_bipartite(&self) -> bool {
        let base_bip = |b: BaseGraph| match b {
            BaseGraph::Cycle(m) => m % 2 == 0,
            _ => true,
        };
        match self.family {
            Family::Plain(b) | Family::Comb(b) | Family::Comb2(b) => base_bip(b),
            Family::BiasedLadder => true,
        }
    }

    fn base_of(&self) -> Option<BaseGraph> {
        match self.family {
            Family::Plain(b) | Family::Comb(b) | Family::Comb2(b) => Some(b),
            Family::BiasedLadder => None,
        }
    }

    fn not_a_vertex(&self, v: &VertexId) -> GraphError {
        GraphError::NotAVertex {
            vertex: v.to_string(),
            graph: self.spec(),
        }
    }

    /// Checks that `v` belongs to the (untruncated) family.
    pub fn check_vertex(&self, v: &VertexId) -> Result<(), GraphError> {
        let ok = match (self.family, *v) {
            (Family::Plain(b), VertexId::Base(bv)) => b.contains(bv),
            (Family::Comb(b), VertexId::Comb(bv, _)) => b.contains(bv),
            (Family::Comb2(b), VertexId::Comb2(bv, _)) => b.contains(bv),
            (Family::BiasedLadder, VertexId::Spine(_)) => true,
            (Family::BiasedLadder, VertexId::Midpoint(n, i)) => {
                if n <= MAX_LADDER_LEVEL {
                    i < (1u64 << n)
                } else {
                    i < (1u64 << 63)
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.not_a_vertex(v))
        }
    }

    /// Checks membership including the truncation ball, if any.
    pub fn check_in_model(&self, v: &VertexId) -> Result<(), GraphError> {
        self.check_vertex(v)?;
        if let Some(r) = self.truncation {
            if self.distance(&self.root, v) > r as u64 {
                return Err(GraphError::OutsideTruncation {
                    vertex: v.to_string(),
                    radius: r,
                });
            }
        }
        Ok(())
    }

    /// Rebuilds a vertex from its wire coordinates.
    pub fn vertex_from_coords(&self, c: &[i64]) -> Result<VertexId, GraphError> {
        let bad = || GraphError::NotAVertex {
            vertex: format!("{c:?}"),
            graph: self.spec(),
        };
        let small = |x: i64| i32::try_from(x).map_err(|_| bad());
        let base = |b: BaseGraph, c: &[i64]| -> Result<(BaseVertex, usize), GraphError> {
            match b {
                BaseGraph::Grid2d if c.len() >= 2 => {
                    Ok((BaseVertex::Grid(small(c[0])?, small(c[1])?), 2))
                }
                BaseGraph::Grid2d => Err(bad()),
                _ if !c.is_empty() => Ok((BaseVertex::Site(small(c[0])?), 1)),
                _ => Err(bad()),
            }
        };
        let v = match self.family {
            Family::Plain(b) => {
                let (bv, used) = base(b, c)?;
                if used != c.len() {
                    return Err(bad());
                }
                VertexId::Base(bv)
            }
            Family::Comb(b) => {
                let (bv, used) = base(b, c)?;
                if c.len() != used + 1 {
                    return Err(bad());
                }
                VertexId::Comb(bv, small(c[used])?)
            }
            Family::Comb2(b) => {
                let (bv, used) = base(b, c)?;
                if c.len() != used + 2 {
                    return Err(bad());
                }
                VertexId::Comb2(bv, [small(c[used])?, small(c[used + 1])?])
            }
            Family::BiasedLadder => match *c {
                [n] if n >= 0 => VertexId::Spine(u32::try_from(n).map_err(|_| bad())?),
                [n, i] if n >= 0 && i >= 0 => {
                    VertexId::Midpoint(u32::try_from(n).map_err(|_| bad())?, i as u64)
                }
                _ => return Err(bad()),
            },
        };
        self.check_vertex(&v)?;
        Ok(v)
    }

    /// Exact neighbor classes in canonical order: backbone (or spine)
    /// neighbors first, ascending, then tooth (or midpoint) neighbors.
    pub fn neighbors(&self, v: &VertexId) -> Result<Vec<NeighborClass>, GraphError> {
        let mut out = Vec::new();
        self.neighbors_into(v, &mut out)?;
        Ok(out)
    }

    pub fn neighbors_into(
        &self,
        v: &VertexId,
        out: &mut Vec<NeighborClass>,
    ) -> Result<(), GraphError> {
        self.check_in_model(v)?;
        out.clear();
        let one = |v: VertexId| NeighborClass {
            target: Neighbor::Vertex(v),
            multiplicity: 1,
        };
        match (self.family, *v) {
            (Family::Plain(b), VertexId::Base(bv)) => {
                for i in 0..b.degree(bv) {
                    out.push(one(VertexId::Base(b.nth_neighbor(bv, i))));
                }
            }
            (Family::Comb(b), VertexId::Comb(bv, k)) => {
                if k == 0 {
                    for i in 0..b.degree(bv) {
                        out.push(one(VertexId::Comb(b.nth_neighbor(bv, i), 0)));
                    }
                }
                out.push(one(VertexId::Comb(bv, k - 1)));
                out.push(one(VertexId::Comb(bv, k + 1)));
            }
            (Family::Comb2(b), VertexId::Comb2(bv, t)) => {
                if t == [0, 0] {
                    for i in 0..b.degree(bv) {
                        out.push(one(VertexId::Comb2(b.nth_neighbor(bv, i), [0, 0])));
                    }
                }
                for i in 0..4 {
                    out.push(one(VertexId::Comb2(bv, grid_step(t, i))));
                }
            }
            (Family::BiasedLadder, VertexId::Spine(n)) => {
                if n > MAX_LADDER_LEVEL {
                    return Err(GraphError::LevelCap(n));
                }
                if n > 0 {
                    out.push(one(VertexId::Spine(n - 1)));
                }
                out.push(one(VertexId::Spine(n + 1)));
                if n > 0 {
                    out.push(NeighborClass {
                        target: Neighbor::Midpoints { level: n - 1 },
                        multiplicity: 1u64 << (n - 1),
                    });
                }
                out.push(NeighborClass {
                    target: Neighbor::Midpoints { level: n },
                    multiplicity: 1u64 << n,
                });
            }
            (Family::BiasedLadder, VertexId::Midpoint(n, _)) => {
                out.push(one(VertexId::Spine(n)));
                out.push(one(VertexId::Spine(n + 1)));
            }
            _ => return Err(self.not_a_vertex(v)),
        }
        Ok(())
    }

    /// Number of neighbors counted with multiplicity.
    pub fn degree(&self, v: &VertexId) -> Result<u64, GraphError> {
        self.check_in_model(v)?;
        Ok(match (self.family, *v) {
            (Family::Plain(b), VertexId::Base(bv)) => b.degree(bv) as u64,
            (Family::Comb(b), VertexId::Comb(bv, k)) => {
                if k == 0 {
                    b.degree(bv) as u64 + 2
                } else {
                    2
                }
            }
            (Family::Comb2(b), VertexId::Comb2(bv, t)) => {
                if t == [0, 0] {
                    b.degree(bv) as u64 + 4
                } else {
                    4
                }
            }
            (Family::BiasedLadder, VertexId::Spine(n)) => {
                if n > MAX_LADDER_LEVEL {
                    return Err(GraphError::LevelCap(n));
                }
                ladder_spine_degree(n)
            }
            (Family::BiasedLadder, VertexId::Midpoint(..)) => 2,
            _ => return Err(self.not_a_vertex(v)),
        })
    }

    /// Graph distance, in closed form for every family.
    pub fn distance(&self, a: &VertexId, b: &VertexId) -> u64 {
        match (*a, *b) {
            (VertexId::Base(x), VertexId::Base(y)) => self.base_of().unwrap().distance(x, y),
            (VertexId::Comb(x, k), VertexId::Comb(y, j)) => {
                if x == y {
                    (k as i64 - j as i64).unsigned_abs()
                } else {
                    (k as i64).unsigned_abs()
                        + self.base_of().unwrap().distance(x, y)
                        + (j as i64).unsigned_abs()
                }
            }
            (VertexId::Comb2(x, s), VertexId::Comb2(y, t)) => {
                let l1 = |p: [i32; 2], q: [i32; 2]| {
                    (p[0] as i64 - q[0] as i64).unsigned_abs()
                        + (p[1] as i64 - q[1] as i64).unsigned_abs()
                };
                if x == y {
                    l1(s, t)
                } else {
                    l1(s, [0, 0]) + self.base_of().unwrap().distance(x, y) + l1(t, [0, 0])
                }
            }
            (VertexId::Spine(m), VertexId::Spine(n)) => (m as i64 - n as i64).unsigned_abs(),
            (VertexId::Midpoint(n, _), VertexId::Spine(m))
            | (VertexId::Spine(m), VertexId::Midpoint(n, _)) => {
                let m = m as i64;
                let n = n as i64;
                1 + (n - m).unsigned_abs().min((n + 1 - m).unsigned_abs())
            }
            (VertexId::Midpoint(n, i), VertexId::Midpoint(m, j)) => {
                if n == m && i == j {
                    0
                } else {
                    let (n, m) = (n as i64, m as i64);
                    let gap = [(n, m), (n, m + 1), (n + 1, m), (n + 1, m + 1)]
                        .iter()
                        .map(|(a, b)| (a - b).unsigned_abs())
                        .min()
                        .unwrap();
                    2 + gap
                }
            }
            _ => u64::MAX,
        }
    }
}

pub(crate) fn ladder_spine_degree(n: u32) -> u64 {
    if n == 0 {
        2
    } else {
        2 + (1u64 << (n - 1)) + (1u64 << n)
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

/// A finite ball with vertices indexed in BFS order, so the vertices within
/// distance `t` of the root are exactly the prefix `0..layer_end(t)`.
#[derive(Debug)]
pub struct TruncatedGraph {
    model: GraphModel,
    radius: u32,
    vertices: Vec<VertexId>,
    layer_end: Vec<usize>,
    offsets: Vec<usize>,
    adjacency: Vec<u32>,
    /// Degree in the untruncated graph.
    degree: Vec<u64>,
    index: HashMap<VertexId, u32>,
}

/// Memory budget in bytes: `COMBWALK_MEMORY_BUDGET` or 2 GiB.
pub fn default_memory_budget() -> u64 {
    std::env::var("COMBWALK_MEMORY_BUDGET")
        .ok()
        .and_then(|s| parse_byte_size(&s))
        .unwrap_or(2 << 30)
}

/// Parses `1234`, `512M`, `2G`, `2GiB` and similar.
pub fn parse_byte_size(s: &str) -> Option<u64> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let n: u64 = num.parse().ok()?;
    let mult = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => 1 << 10,
        "m" | "mb" | "mib" => 1 << 20,
        "g" | "gb" | "gib" => 1 << 30,
        _ => return None,
    };
    n.checked_mul(mult)
}

/// Builds the ball of radius `radius` around the model's root.
pub fn truncate(g: &GraphModel, radius: u32) -> Result<TruncatedGraph, GraphError> {
    truncate_with_budget(g, radius, g.memory_budget())
}

pub fn truncate_with_budget(
    g: &GraphModel,
    radius: u32,
    budget_bytes: u64,
) -> Result<TruncatedGraph, GraphError> {
    if radius == 0 {
        return Err(GraphError::ZeroRadius);
    }
    let limit = (budget_bytes / BYTES_PER_TRUNCATED_VERTEX) as usize;
    let over = |counted: usize| GraphError::Budget {
        radius,
        counted,
        limit,
        budget_bytes,
    };
    let free = GraphModel {
        truncation: None,
        ..g.clone()
    };
    let root = g.root;
    let mut vertices = vec![root];
    let mut index: HashMap<VertexId, u32> = HashMap::new();
    index.insert(root, 0);
    let mut layer_end = Vec::with_capacity(radius as usize + 1);
    let mut offsets = vec![0usize];
    let mut adjacency: Vec<u32> = Vec::new();
    let mut degree = Vec::new();
    let mut classes = Vec::new();
    let mut expanded: Vec<VertexId> = Vec::new();

    let mut head = 0usize;
    let mut current_layer = 0u32;
    let mut current_end = 1usize;
    while head < vertices.len() {
        if head == current_end {
            layer_end.push(current_end);
            current_layer += 1;
            current_end = vertices.len();
        }
        let v = vertices[head];
        free.neighbors_into(&v, &mut classes)?;
        expanded.clear();
        let mut deg = 0u64;
        for class in &classes {
            deg += class.multiplicity;
            match class.target {
                Neighbor::Vertex(w) => expanded.push(w),
                Neighbor::Midpoints { level } => {
                    if vertices.len() as u64 + class.multiplicity > limit as u64 {
                        return Err(over(vertices.len() + class.multiplicity as usize));
                    }
                    expanded.extend((0..class.multiplicity).map(|i| VertexId::Midpoint(level, i)));
                }
            }
        }
        degree.push(deg);
        for w in &expanded {
            let idx = match index.get(w) {
                Some(&i) => Some(i),
                None if current_layer < radius => {
                    let i = vertices.len() as u32;
                    vertices.push(*w);
                    index.insert(*w, i);
                    if vertices.len() > limit {
                        return Err(over(vertices.len()));
                    }
                    Some(i)
                }
                None => None,
            };
            if let Some(i) = idx {
                adjacency.push(i);
            }
        }
        offsets.push(adjacency.len());
        head += 1;
    }
    layer_end.push(vertices.len());
    // A finite graph can saturate before reaching the radius.
    while layer_end.len() <= radius as usize {
        layer_end.push(vertices.len());
    }
    Ok(TruncatedGraph {
        model: g.clone().with_truncation(radius),
        radius,
        vertices,
        layer_end,
        offsets,
        adjacency,
        degree,
        index,
    })
}

impl TruncatedGraph {
    pub fn model(&self) -> &GraphModel {
        &self.model
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn root(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> VertexId {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn index_of(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).map(|&i| i as usize)
    }

    /// Number of vertices within distance `t` of the root.
    pub fn layer_end(&self, t: u32) -> usize {
        self.layer_end[t.min(self.radius) as usize]
    }

    /// In-ball neighbors of vertex `i`, by index.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Degree of vertex `i` in the untruncated graph.
    pub fn degree(&self, i: usize) -> u64 {
        self.degree[i]
    }

    pub fn distance_from_root(&self, i: usize) -> u32 {
        self.layer_end.partition_point(|&end| end <= i) as u32
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.distance_from_root(i) == self.radius
    }

    /// `true` when no vertex of the ball has neighbors outside it, i.e. the
    /// whole (finite) graph fits.
    pub fn is_saturated(&self) -> bool {
        (0..self.len()).all(|i| self.neighbors(i).len() as u64 == self.degree[i])
    }
}
