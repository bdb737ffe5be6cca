//! Pairs of independent simple random walks and their meetings.
//!
//! Three constructions produce the same law on a comb over a regular base:
//! direct neighbor sampling, the tooth walk with a `d/(d+2)` self-loop at
//! the backbone driving a base walk, and the same tooth walk rebuilt from an
//! undelayed walk `S` plus geometric holding times at its origin visits.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    ladder_spine_degree, BaseGraph, BaseVertex, Family, GraphError, GraphModel, VertexId,
    MAX_LADDER_LEVEL,
};
use crate::rng::pick;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("walker left the ball of radius {radius} at time {time}: {vertex}")]
    Escaped {
        time: u64,
        radius: u32,
        vertex: String,
    },
    #[error("{0} is not a comb over a constant-degree base graph")]
    NotRegularComb(String),
    #[error("decomposed walks must start on the backbone, got {0}")]
    OffBackbone(String),
    #[error("checkpoints must be strictly increasing and at most {steps}")]
    Checkpoints { steps: u64 },
    #[error("{0}")]
    Invalid(String),
}

/// How a pair of walks is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    #[default]
    Direct,
    SelfLoop,
    GeometricClock,
}

impl FromStr for Construction {
    type Err = SampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Construction::Direct),
            "self-loop" | "decomposed" => Ok(Construction::SelfLoop),
            "geometric-clock" => Ok(Construction::GeometricClock),
            _ => Err(SampleError::Invalid(format!("unknown construction `{s}`"))),
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::Direct => "direct",
            Construction::SelfLoop => "self-loop",
            Construction::GeometricClock => "geometric-clock",
        })
    }
}

/// What to record besides the collision list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordPolicy {
    /// Times at which the running meeting count is sampled.
    pub checkpoints: Vec<u64>,
    /// Envelope exponents for which tooth excursions are counted.
    pub lil_alphas: Vec<f64>,
    /// Store both walkers' positions at each checkpoint.
    pub track_positions: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub n: u64,
    pub vertex: Vec<i64>,
    /// Signed tooth coordinate, or Chebyshev radius for Z² teeth.
    pub l: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub meetings: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<[Vec<i64>; 2]>,
}

/// Times `n` where some walker's height exceeds `2(2n)^{1/(2 alpha)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilRecord {
    pub alpha: f64,
    pub violations: u64,
    pub last_violation: Option<u64>,
}

/// Two-step spine transitions of one ladder walker.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpineMoves {
    pub right: u64,
    pub stay: u64,
    pub left: u64,
}

/// Decomposition clocks at a checkpoint: `k` counts backbone moves (0→0
/// transitions of the tooth walk); `h` and `r` exist for the
/// geometric-clock construction only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockCheckpoint {
    pub t: u64,
    pub k: [u64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<[u64; 2]>,
}

/// One replica's outcome; serialized as one JSONL line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTrajectorySummary {
    pub replica: u64,
    #[serde(default)]
    pub graph: String,
    #[serde(rename = "T")]
    pub steps: u64,
    pub meetings: u64,
    pub collisions: Vec<CollisionRecord>,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default)]
    pub max_height: [u64; 2],
    #[serde(default)]
    pub final_positions: [Vec<i64>; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lil: Vec<LilRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spine_moves: Option<[SpineMoves; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clock: Vec<ClockCheckpoint>,
}

/// One simple-random-walk step: a uniformly chosen neighbor, with
/// multiplicity classes sampled proportionally. Consumes one word per step,
/// two on the biased ladder.
#[inline]
pub fn srw_step<R: RngCore + ?Sized>(g: &GraphModel, v: VertexId, rng: &mut R) -> VertexId {
    match (g.family(), v) {
        (Family::Plain(b), VertexId::Base(bv)) => VertexId::Base(base_step(b, bv, rng)),
        (Family::Comb(b), VertexId::Comb(bv, k)) => {
            let x = rng.next_u64();
            if k != 0 {
                return VertexId::Comb(bv, if x >> 63 == 0 { k - 1 } else { k + 1 });
            }
            let d = b.degree(bv) as u64;
            let idx = pick(x, d + 2);
            if idx < d {
                VertexId::Comb(b.nth_neighbor(bv, idx as u32), 0)
            } else if idx == d {
                VertexId::Comb(bv, -1)
            } else {
                VertexId::Comb(bv, 1)
            }
        }
        (Family::Comb2(b), VertexId::Comb2(bv, t)) => {
            let x = rng.next_u64();
            if t != [0, 0] {
                return VertexId::Comb2(bv, tooth2_step(t, pick(x, 4) as u32));
            }
            let d = b.degree(bv) as u64;
            let idx = pick(x, d + 4);
            if idx < d {
                VertexId::Comb2(b.nth_neighbor(bv, idx as u32), [0, 0])
            } else {
                VertexId::Comb2(bv, tooth2_step(t, (idx - d) as u32))
            }
        }
        (Family::BiasedLadder, v) => ladder_step(v, rng),
        _ => panic!("{v} is not a vertex of {g}"),
    }
}

#[inline]
fn base_step<R: RngCore + ?Sized>(b: BaseGraph, bv: BaseVertex, rng: &mut R) -> BaseVertex {
    let d = b.degree(bv) as u64;
    b.nth_neighbor(bv, pick(rng.next_u64(), d) as u32)
}

#[inline]
fn tooth2_step(t: [i32; 2], idx: u32) -> [i32; 2] {
    match idx {
        0 => [t[0] - 1, t[1]],
        1 => [t[0], t[1] - 1],
        2 => [t[0], t[1] + 1],
        _ => [t[0] + 1, t[1]],
    }
}

#[inline]
fn midpoint_index(level: u32, word: u64) -> u64 {
    match level {
        0 => 0,
        l if l <= MAX_LADDER_LEVEL => word >> (64 - l),
        _ => word >> 1,
    }
}

fn ladder_step<R: RngCore + ?Sized>(v: VertexId, rng: &mut R) -> VertexId {
    let x = rng.next_u64();
    let y = rng.next_u64();
    match v {
        VertexId::Midpoint(n, _) => VertexId::Spine(if x >> 63 == 0 { n } else { n + 1 }),
        VertexId::Spine(0) => {
            if x >> 63 == 0 {
                VertexId::Spine(1)
            } else {
                VertexId::Midpoint(0, 0)
            }
        }
        VertexId::Spine(n) if n <= MAX_LADDER_LEVEL => {
            let left = 1u64 << (n - 1);
            let idx = pick(x, ladder_spine_degree(n));
            match idx {
                0 => VertexId::Spine(n - 1),
                1 => VertexId::Spine(n + 1),
                i if i < 2 + left => VertexId::Midpoint(n - 1, midpoint_index(n - 1, y)),
                _ => VertexId::Midpoint(n, midpoint_index(n, y)),
            }
        }
        VertexId::Spine(n) => {
            // Degrees beyond 64 bits: class probabilities in floating point.
            let deg = 2.0 + 3.0 * (n as f64 - 1.0).exp2();
            let p_spine = 1.0 / deg;
            let p_left = (n as f64 - 1.0).exp2() / deg;
            let u = (x >> 11) as f64 * f64::EPSILON / 2.0;
            if u < p_spine {
                VertexId::Spine(n - 1)
            } else if u < 2.0 * p_spine {
                VertexId::Spine(n + 1)
            } else if u < 2.0 * p_spine + p_left {
                VertexId::Midpoint(n - 1, midpoint_index(n - 1, y))
            } else {
                VertexId::Midpoint(n, midpoint_index(n, y))
            }
        }
        _ => panic!("{v} is not a biased-ladder vertex"),
    }
}

/// Clock readings of a decomposed walker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockState {
    pub k: u64,
    pub h: Option<u64>,
    pub r: Option<u64>,
}

/// A single walker producing positions one step at a time.
pub trait Walker {
    fn position(&self) -> VertexId;
    fn advance(&mut self) -> VertexId;
    /// Clock readings at time `t` (the current time), if the construction has any.
    fn clock(&mut self, _t: u64) -> Option<ClockState> {
        None
    }
}

pub struct DirectWalker<'g, R> {
    graph: &'g GraphModel,
    pos: VertexId,
    rng: R,
}

impl<'g, R: RngCore> DirectWalker<'g, R> {
    pub fn new(graph: &'g GraphModel, start: VertexId, rng: R) -> Self {
        DirectWalker {
            graph,
            pos: start,
            rng,
        }
    }
}

impl<R: RngCore> Walker for DirectWalker<'_, R> {
    fn position(&self) -> VertexId {
        self.pos
    }

    #[inline]
    fn advance(&mut self) -> VertexId {
        self.pos = srw_step(self.graph, self.pos, &mut self.rng);
        self.pos
    }
}

/// `X_n = (U_{K_n}, V_n)`: `V` idles at 0 with probability `d/(d+2)` and
/// each idle step moves the base walk `U` once.
pub struct SelfLoopWalker<R> {
    base: BaseGraph,
    degree: u64,
    u: BaseVertex,
    v: i32,
    k: u64,
    v_rng: R,
    u_rng: R,
}

impl<R: RngCore> SelfLoopWalker<R> {
    pub fn new(base: BaseGraph, start: BaseVertex, v_rng: R, u_rng: R) -> Self {
        let degree = base
            .constant_degree()
            .expect("self-loop construction needs a regular base") as u64;
        SelfLoopWalker {
            base,
            degree,
            u: start,
            v: 0,
            k: 0,
            v_rng,
            u_rng,
        }
    }

    pub fn tooth(&self) -> i32 {
        self.v
    }

    pub fn backbone_moves(&self) -> u64 {
        self.k
    }
}

impl<R: RngCore> Walker for SelfLoopWalker<R> {
    fn position(&self) -> VertexId {
        VertexId::Comb(self.u, self.v)
    }

    #[inline]
    fn advance(&mut self) -> VertexId {
        let x = self.v_rng.next_u64();
        if self.v != 0 {
            self.v += if x >> 63 == 0 { -1 } else { 1 };
        } else {
            let idx = pick(x, self.degree + 2);
            if idx < self.degree {
                self.k += 1;
                self.u = base_step(self.base, self.u, &mut self.u_rng);
            } else if idx == self.degree {
                self.v = -1;
            } else {
                self.v = 1;
            }
        }
        self.position()
    }

    fn clock(&mut self, _t: u64) -> Option<ClockState> {
        Some(ClockState {
            k: self.k,
            h: None,
            r: None,
        })
    }
}

/// The tooth walk `V` rebuilt from an undelayed walk `S` on Z and i.i.d.
/// holding times `G_i ~ Geometric` with `P[G = k] = (d/(d+2))^k 2/(d+2)`,
/// the `i`-th spent at the `i`-th origin visit of `S` (time 0 included).
pub struct ClockProcess<R> {
    s_rng: R,
    g_rng: R,
    hold_law: Geometric,
    s_path: Vec<i32>,
    /// `zero_prefix[i]` = number of `1 <= j <= i` with `S_j = 0`.
    zero_prefix: Vec<u64>,
    holds: Vec<u64>,
    s_index: usize,
    hold_left: u64,
    k: u64,
    v: i32,
}

impl<R: RngCore> ClockProcess<R> {
    pub fn new(d: u32, s_rng: R, g_rng: R) -> Self {
        assert!(d >= 1, "degree must be positive");
        let hold_law = Geometric::new(2.0 / (d as f64 + 2.0)).expect("valid success probability");
        let mut p = ClockProcess {
            s_rng,
            g_rng,
            hold_law,
            s_path: vec![0],
            zero_prefix: vec![0],
            holds: Vec::new(),
            s_index: 0,
            hold_left: 0,
            k: 0,
            v: 0,
        };
        p.hold_left = p.hold(1);
        p
    }

    fn ensure_s(&mut self, len: usize) {
        while self.s_path.len() <= len {
            let last = *self.s_path.last().unwrap();
            let next = if self.s_rng.next_u64() >> 63 == 0 {
                last - 1
            } else {
                last + 1
            };
            self.s_path.push(next);
            let z = *self.zero_prefix.last().unwrap() + u64::from(next == 0);
            self.zero_prefix.push(z);
        }
    }

    /// Holding time `G_i` (1-based), drawn in order on demand.
    pub fn hold(&mut self, i: usize) -> u64 {
        while self.holds.len() < i {
            let g = self.hold_law.sample(&mut self.g_rng);
            self.holds.push(g);
        }
        self.holds[i - 1]
    }

    /// Advances one step; returns `true` when the step was a hold at 0.
    pub fn advance(&mut self) -> bool {
        if self.v == 0 && self.hold_left > 0 {
            self.hold_left -= 1;
            self.k += 1;
            return true;
        }
        self.s_index += 1;
        self.ensure_s(self.s_index);
        self.v = self.s_path[self.s_index];
        if self.v == 0 {
            let visit = self.zero_prefix[self.s_index] as usize + 1;
            self.hold_left = self.hold(visit);
        }
        false
    }

    pub fn tooth(&self) -> i32 {
        self.v
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `H_n`: returns of `S` to 0 among times `1..=n/2`.
    pub fn h(&mut self, n: u64) -> u64 {
        let half = (n / 2) as usize;
        self.ensure_s(half);
        self.zero_prefix[half]
    }

    /// `R_n = G_1 + ... + G_{H_n}`.
    pub fn r(&mut self, n: u64) -> u64 {
        let h = self.h(n) as usize;
        if h > 0 {
            self.hold(h);
        }
        self.holds[..h].iter().sum()
    }

    pub fn s_path(&self) -> &[i32] {
        &self.s_path
    }

    pub fn holds(&self) -> &[u64] {
        &self.holds
    }
}

/// Full per-time record of one geometric-clock tooth walk.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockTrace {
    pub s_path: Vec<i32>,
    pub holds: Vec<u64>,
    pub v_path: Vec<i32>,
    pub k: Vec<u64>,
    pub h: Vec<u64>,
    pub r: Vec<u64>,
}

impl ClockTrace {
    /// Times `n` violating `K_n >= R_n or K_n >= n/2`.
    pub fn clock_violations(&self) -> Vec<usize> {
        (0..self.k.len())
            .filter(|&n| !(self.k[n] >= self.r[n] || 2 * self.k[n] >= n as u64))
            .collect()
    }
}

pub fn geometric_clock_path<R: RngCore>(d: u32, steps: u64, s_rng: R, g_rng: R) -> ClockTrace {
    let mut p = ClockProcess::new(d, s_rng, g_rng);
    let cap = steps as usize + 1;
    let mut trace = ClockTrace {
        s_path: Vec::new(),
        holds: Vec::new(),
        v_path: Vec::with_capacity(cap),
        k: Vec::with_capacity(cap),
        h: Vec::with_capacity(cap),
        r: Vec::with_capacity(cap),
    };
    for n in 0..=steps {
        if n > 0 {
            p.advance();
        }
        trace.v_path.push(p.tooth());
        trace.k.push(p.k());
        trace.h.push(p.h(n));
        trace.r.push(p.r(n));
    }
    trace.s_path = p.s_path().to_vec();
    trace.holds = p.holds().to_vec();
    trace
}

/// Comb walker driven by a [`ClockProcess`] and an independent base walk.
pub struct ClockWalker<R> {
    base: BaseGraph,
    u: BaseVertex,
    u_rng: R,
    process: ClockProcess<R>,
}

impl<R: RngCore> ClockWalker<R> {
    pub fn new(base: BaseGraph, start: BaseVertex, s_rng: R, g_rng: R, u_rng: R) -> Self {
        let d = base
            .constant_degree()
            .expect("geometric-clock construction needs a regular base");
        ClockWalker {
            base,
            u: start,
            u_rng,
            process: ClockProcess::new(d, s_rng, g_rng),
        }
    }
}

impl<R: RngCore> Walker for ClockWalker<R> {
    fn position(&self) -> VertexId {
        VertexId::Comb(self.u, self.process.tooth())
    }

    fn advance(&mut self) -> VertexId {
        if self.process.advance() {
            self.u = base_step(self.base, self.u, &mut self.u_rng);
        }
        self.position()
    }

    fn clock(&mut self, t: u64) -> Option<ClockState> {
        Some(ClockState {
            k: self.process.k(),
            h: Some(self.process.h(t)),
            r: Some(self.process.r(t)),
        })
    }
}

fn check_checkpoints(policy: &RecordPolicy, steps: u64) -> Result<(), SampleError> {
    let sorted = policy.checkpoints.windows(2).all(|w| w[0] < w[1]);
    let bounded = policy.checkpoints.last().is_none_or(|&t| t <= steps);
    if sorted && bounded {
        Ok(())
    } else {
        Err(SampleError::Checkpoints { steps })
    }
}

/// Runs two walkers side by side for `steps` steps and records every time
/// `n >= 1` with equal positions.
pub fn drive_pair<X: Walker, Y: Walker>(
    g: &GraphModel,
    steps: u64,
    mut x: X,
    mut y: Y,
    policy: &RecordPolicy,
) -> Result<PairTrajectorySummary, SampleError> {
    check_checkpoints(policy, steps)?;
    if policy.lil_alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(SampleError::Invalid(
            "envelope exponent must lie in (0, 1)".into(),
        ));
    }
    let start = [x.position(), y.position()];
    for s in &start {
        g.check_in_model(s)?;
    }
    let ladder = g.family() == Family::BiasedLadder;
    let mut summary = PairTrajectorySummary {
        replica: 0,
        graph: g.spec(),
        steps,
        meetings: 0,
        collisions: Vec::new(),
        checkpoints: Vec::with_capacity(policy.checkpoints.len()),
        max_height: [
            start[0].height().unsigned_abs(),
            start[1].height().unsigned_abs(),
        ],
        final_positions: [start[0].coords(), start[1].coords()],
        lil: policy
            .lil_alphas
            .iter()
            .map(|&alpha| LilRecord {
                alpha,
                violations: 0,
                last_violation: None,
            })
            .collect(),
        spine_moves: ladder.then(Default::default),
        clock: Vec::new(),
    };
    let mut next_cp = 0usize;
    let record_checkpoint = |t: u64, x: &mut X, y: &mut Y, s: &mut PairTrajectorySummary| {
        s.checkpoints.push(Checkpoint {
            t,
            meetings: s.meetings,
            positions: policy
                .track_positions
                .then(|| [x.position().coords(), y.position().coords()]),
        });
        if let (Some(cx), Some(cy)) = (x.clock(t), y.clock(t)) {
            s.clock.push(ClockCheckpoint {
                t,
                k: [cx.k, cy.k],
                h: cx.h.zip(cy.h).map(|(a, b)| [a, b]),
                r: cx.r.zip(cy.r).map(|(a, b)| [a, b]),
            });
        }
    };
    if policy.checkpoints.first() == Some(&0) {
        record_checkpoint(0, &mut x, &mut y, &mut summary);
        next_cp = 1;
    }
    let mut prev_spine = [spine_level(start[0]), spine_level(start[1])];
    let truncation = g.truncation();
    for t in 1..=steps {
        let px = x.advance();
        let py = y.advance();
        debug_assert!(g.distance(&start[0], &px) <= t, "finite speed violated");
        debug_assert!(g.distance(&start[1], &py) <= t, "finite speed violated");
        if let Some(radius) = truncation {
            for p in [px, py] {
                if g.distance(&g.root(), &p) > radius as u64 {
                    return Err(SampleError::Escaped {
                        time: t,
                        radius,
                        vertex: p.to_string(),
                    });
                }
            }
        }
        let hx = px.height().unsigned_abs();
        let hy = py.height().unsigned_abs();
        summary.max_height[0] = summary.max_height[0].max(hx);
        summary.max_height[1] = summary.max_height[1].max(hy);
        if px == py {
            summary.meetings += 1;
            summary.collisions.push(CollisionRecord {
                n: t,
                vertex: px.coords(),
                l: px.height(),
            });
        }
        let h = hx.max(hy);
        // Every envelope with alpha < 1 lies above 2 sqrt(2n).
        if !summary.lil.is_empty() && (h as u128) * (h as u128) > 8 * t as u128 {
            for rec in &mut summary.lil {
                if h as f64 > lil_threshold(t, rec.alpha) {
                    rec.violations += 1;
                    rec.last_violation = Some(t);
                }
            }
        }
        if ladder && t % 2 == 0 {
            let now = [spine_level(px), spine_level(py)];
            if let Some(moves) = summary.spine_moves.as_mut() {
                for w in 0..2 {
                    if let (Some(a), Some(b)) = (prev_spine[w], now[w]) {
                        match b.cmp(&a) {
                            std::cmp::Ordering::Greater => moves[w].right += 1,
                            std::cmp::Ordering::Equal => moves[w].stay += 1,
                            std::cmp::Ordering::Less => moves[w].left += 1,
                        }
                    }
                }
            }
            prev_spine = now;
        }
        if policy.checkpoints.get(next_cp) == Some(&t) {
            record_checkpoint(t, &mut x, &mut y, &mut summary);
            next_cp += 1;
        }
    }
    summary.final_positions = [x.position().coords(), y.position().coords()];
    Ok(summary)
}

fn spine_level(v: VertexId) -> Option<u32> {
    match v {
        VertexId::Spine(n) => Some(n),
        _ => None,
    }
}

/// The envelope `2 (2n)^{1/(2 alpha)}`.
pub fn lil_threshold(n: u64, alpha: f64) -> f64 {
    2.0 * (2.0 * n as f64).powf(1.0 / (2.0 * alpha))
}

/// Two independent direct walks from `start`.
pub fn run_pair<R: RngCore>(
    g: &GraphModel,
    start: VertexId,
    steps: u64,
    rng_x: R,
    rng_y: R,
    policy: &RecordPolicy,
) -> Result<PairTrajectorySummary, SampleError> {
    g.check_in_model(&start)?;
    drive_pair(
        g,
        steps,
        DirectWalker::new(g, start, rng_x),
        DirectWalker::new(g, start, rng_y),
        policy,
    )
}

/// Random sources for one decomposed walker.
pub struct WalkerStreams<R> {
    /// Tooth walk (self-loop construction) or undelayed walk `S` (clock).
    pub tooth: R,
    pub base: R,
    /// Holding times; unused by the self-loop construction.
    pub hold: R,
}

fn regular_comb(g: &GraphModel, start: VertexId) -> Result<(BaseGraph, BaseVertex), SampleError> {
    let base = match g.family() {
        Family::Comb(b) if b.constant_degree().is_some() => b,
        _ => return Err(SampleError::NotRegularComb(g.spec())),
    };
    g.check_in_model(&start)?;
    match start {
        VertexId::Comb(bv, 0) => Ok((base, bv)),
        other => Err(SampleError::OffBackbone(other.to_string())),
    }
}

/// Two walks built as `(U_{K_n}, V_n)` with the self-loop tooth walk.
pub fn run_pair_decomposed<R: RngCore>(
    g: &GraphModel,
    start: VertexId,
    steps: u64,
    x: WalkerStreams<R>,
    y: WalkerStreams<R>,
    policy: &RecordPolicy,
) -> Result<PairTrajectorySummary, SampleError> {
    let (base, o) = regular_comb(g, start)?;
    drive_pair(
        g,
        steps,
        SelfLoopWalker::new(base, o, x.tooth, x.base),
        SelfLoopWalker::new(base, o, y.tooth, y.base),
        policy,
    )
}

/// Two walks whose tooth coordinates come from geometric holding clocks.
pub fn run_pair_geometric<R: RngCore>(
    g: &GraphModel,
    start: VertexId,
    steps: u64,
    x: WalkerStreams<R>,
    y: WalkerStreams<R>,
    policy: &RecordPolicy,
) -> Result<PairTrajectorySummary, SampleError> {
    let (base, o) = regular_comb(g, start)?;
    drive_pair(
        g,
        steps,
        ClockWalker::new(base, o, x.tooth, x.hold, x.base),
        ClockWalker::new(base, o, y.tooth, y.hold, y.base),
        policy,
    )
}
