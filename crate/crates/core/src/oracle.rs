//! Exact n-step transition probabilities on truncated balls.
//!
//! Mass is pushed by iterated one-step averaging over a BFS-ordered ball, so
//! only the prefix of vertices within distance `t` is touched at time `t`.
//! With radius `R > t` no mass ever reaches the boundary and the result is
//! the exact kernel of the infinite graph (up to rounding).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{truncate, Family, GraphError, GraphModel, TruncatedGraph, VertexId};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("truncation radius {radius} cannot hold {steps} exact steps (need at least {needed})")]
    RadiusTooSmall {
        radius: u32,
        steps: u64,
        needed: u64,
    },
    #[error("boundary received mass at time {0}")]
    Leak(u64),
    #[error("{0} does not have constant degree")]
    NotRegular(String),
    #[error("{0} is not a comb family")]
    NotComb(String),
}

/// Exact distribution of the walk at one time, on a truncated ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDistribution {
    pub time: u64,
    pub root: VertexId,
    /// `(vertex index, probability)` for every vertex with positive mass.
    pub entries: Vec<(usize, f64)>,
}

impl SparseDistribution {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    /// `p^(n)(root, root)`.
    ReturnProbability,
    /// Partial sums of `sum_w p^(n)(root, w)^2` over `1..=n`.
    MeetingExpectation,
    /// `max_L sum_v p^(n)(root, (v, L))^2`.
    PerSiteCollision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSeries {
    pub kind: SeriesKind,
    pub points: Vec<(u64, f64)>,
}

impl KernelSeries {
    pub fn value_at(&self, n: u64) -> Option<f64> {
        self.points.iter().find(|(m, _)| *m == n).map(|&(_, v)| v)
    }

    /// Successive differences, `(n, s_n - s_{n-1})`.
    pub fn increments(&self) -> Vec<(u64, f64)> {
        let mut prev = 0.0;
        self.points
            .iter()
            .map(|&(n, v)| {
                let d = v - prev;
                prev = v;
                (n, d)
            })
            .collect()
    }
}

/// Pushes an exact distribution forward one step at a time.
pub struct Propagator<'g> {
    graph: &'g TruncatedGraph,
    time: u64,
    /// Largest distance from the root carrying mass.
    reach: u32,
    mass: Vec<f64>,
    next: Vec<f64>,
    flux: Vec<f64>,
    inv_degree: Vec<f64>,
}

impl<'g> Propagator<'g> {
    /// Point mass at the root.
    pub fn new(graph: &'g TruncatedGraph) -> Self {
        let n = graph.len();
        let mut mass = vec![0.0; n];
        mass[0] = 1.0;
        Propagator {
            graph,
            time: 0,
            reach: 0,
            mass,
            next: vec![0.0; n],
            flux: vec![0.0; n],
            inv_degree: (0..n).map(|i| 1.0 / graph.degree(i) as f64).collect(),
        }
    }

    /// Starts from an arbitrary distribution on the same ball.
    pub fn from_distribution(graph: &'g TruncatedGraph, dist: &SparseDistribution) -> Self {
        let mut p = Propagator::new(graph);
        p.mass[0] = 0.0;
        p.time = dist.time;
        for &(i, m) in &dist.entries {
            p.mass[i] = m;
            p.reach = p.reach.max(graph.distance_from_root(i));
        }
        p
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn graph(&self) -> &TruncatedGraph {
        self.graph
    }

    /// Mass on the prefix that can carry any.
    pub fn mass(&self) -> &[f64] {
        &self.mass[..self.graph.layer_end(self.reach)]
    }

    pub fn at_root(&self) -> f64 {
        self.mass[0]
    }

    pub fn step(&mut self) -> Result<(), OracleError> {
        let radius = self.graph.radius();
        if self.reach + 1 >= radius {
            return Err(OracleError::RadiusTooSmall {
                radius,
                steps: self.time + 1,
                needed: self.time + 2,
            });
        }
        let src = self.graph.layer_end(self.reach);
        let dst = self.graph.layer_end(self.reach + 1);
        for ((f, m), d) in self.flux[..src]
            .iter_mut()
            .zip(&self.mass[..src])
            .zip(&self.inv_degree[..src])
        {
            *f = m * d;
        }
        let graph = self.graph;
        let flux = &self.flux;
        let pull = |offset: usize, out: &mut [f64]| {
            for (j, o) in out.iter_mut().enumerate() {
                *o = graph
                    .neighbors(offset + j)
                    .iter()
                    .map(|&w| flux[w as usize])
                    .sum();
            }
        };
        let out = &mut self.next[..dst];
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            const BLOCK: usize = 1 << 14;
            if dst > BLOCK {
                out.par_chunks_mut(BLOCK)
                    .enumerate()
                    .for_each(|(b, chunk)| pull(b * BLOCK, chunk));
            } else {
                pull(0, out);
            }
        }
        #[cfg(not(feature = "parallel"))]
        pull(0, out);
        std::mem::swap(&mut self.mass, &mut self.next);
        self.reach += 1;
        self.time += 1;
        let boundary = self.graph.layer_end(radius - 1)..self.graph.layer_end(radius);
        if self.mass[boundary.start.min(dst)..boundary.end.min(dst)]
            .iter()
            .any(|&m| m != 0.0)
        {
            return Err(OracleError::Leak(self.time));
        }
        Ok(())
    }

    pub fn snapshot(&self) -> SparseDistribution {
        SparseDistribution {
            time: self.time,
            root: self.graph.root(),
            entries: self
                .mass()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(i, &m)| (i, m))
                .collect(),
        }
    }
}

fn ball_for(g: &GraphModel, steps: u64) -> Result<TruncatedGraph, OracleError> {
    Ok(truncate(g, steps as u32 + 1)?)
}

/// Exact distribution after `n` steps from the root of `gt`.
pub fn transition_vector(gt: &TruncatedGraph, n: u64) -> Result<SparseDistribution, OracleError> {
    if (gt.radius() as u64) < n + 1 {
        return Err(OracleError::RadiusTooSmall {
            radius: gt.radius(),
            steps: n,
            needed: n + 1,
        });
    }
    let mut p = Propagator::new(gt);
    for _ in 0..n {
        p.step()?;
    }
    Ok(p.snapshot())
}

/// `p^(n)(root, root)` for `n = 0..=n_max`.
///
/// Distributions are propagated only to `ceil(n_max / 2)`; the return
/// probabilities follow from reversibility,
/// `p^(a+b)(v,v) = sum_w p^a(v,w) p^b(v,w) pi(v)/pi(w)`.
pub fn return_probability_series(g: &GraphModel, n_max: u64) -> Result<KernelSeries, OracleError> {
    let half = n_max.div_ceil(2);
    let gt = ball_for(g, half)?;
    let weight: Vec<f64> = (0..gt.len())
        .map(|i| gt.degree(0) as f64 / gt.degree(i) as f64)
        .collect();
    let mut p = Propagator::new(&gt);
    let mut prev: Vec<f64> = p.mass().to_vec();
    let mut points = vec![(0u64, 1.0)];
    for m in 1..=half {
        p.step()?;
        let cur = p.mass();
        let odd: f64 = prev
            .iter()
            .zip(cur)
            .zip(&weight)
            .map(|((a, b), w)| a * b * w)
            .sum();
        let even: f64 = cur.iter().zip(&weight).map(|(a, w)| a * a * w).sum();
        points.push((2 * m - 1, odd));
        points.push((2 * m, even));
        prev = cur.to_vec();
    }
    points.truncate(n_max as usize + 1);
    Ok(KernelSeries {
        kind: SeriesKind::ReturnProbability,
        points,
    })
}

/// Return probabilities read directly off the propagated distribution.
pub fn return_probability_series_direct(
    g: &GraphModel,
    n_max: u64,
) -> Result<KernelSeries, OracleError> {
    let gt = ball_for(g, n_max)?;
    let mut p = Propagator::new(&gt);
    let mut points = vec![(0, 1.0)];
    for n in 1..=n_max {
        p.step()?;
        points.push((n, p.at_root()));
    }
    Ok(KernelSeries {
        kind: SeriesKind::ReturnProbability,
        points,
    })
}

/// Partial sums of the expected number of meetings at times `1..=n`.
pub fn meeting_expectation_series(g: &GraphModel, n_max: u64) -> Result<KernelSeries, OracleError> {
    let gt = ball_for(g, n_max)?;
    let mut p = Propagator::new(&gt);
    let mut total = 0.0;
    let mut points = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        p.step()?;
        total += p.mass().iter().map(|m| m * m).sum::<f64>();
        points.push((n, total));
    }
    Ok(KernelSeries {
        kind: SeriesKind::MeetingExpectation,
        points,
    })
}

/// Tooth site of a comb vertex: `[k, 0]` on `Comb`, the Z² point on `Comb2`.
pub type ToothSite = [i32; 2];

fn tooth_site(v: &VertexId) -> Option<ToothSite> {
    match *v {
        VertexId::Comb(_, k) => Some([k, 0]),
        VertexId::Comb2(_, t) => Some(t),
        _ => None,
    }
}

/// Per-site meeting probabilities `sum_v p^(n)(root,(v,L))^2`, grouped by
/// tooth site `L`.
pub struct PerSiteProfile {
    pub series: KernelSeries,
    /// Tooth site attaining the maximum at each time.
    pub argmax: Vec<ToothSite>,
    /// Full profiles at the requested times.
    pub profiles: BTreeMap<u64, BTreeMap<ToothSite, f64>>,
}

pub fn per_site_collision_series(
    g: &GraphModel,
    n_max: u64,
    keep_profiles_at: &[u64],
) -> Result<PerSiteProfile, OracleError> {
    if !matches!(g.family(), Family::Comb(_) | Family::Comb2(_)) {
        return Err(OracleError::NotComb(g.spec()));
    }
    let gt = ball_for(g, n_max)?;
    let mut site_ids: BTreeMap<ToothSite, usize> = BTreeMap::new();
    let site_of: Vec<usize> = gt
        .vertices()
        .iter()
        .map(|v| {
            let s = tooth_site(v).expect("comb vertex");
            let next = site_ids.len();
            *site_ids.entry(s).or_insert(next)
        })
        .collect();
    let mut sites = vec![[0, 0]; site_ids.len()];
    for (s, &i) in &site_ids {
        sites[i] = *s;
    }
    let mut acc = vec![0.0; sites.len()];
    let mut p = Propagator::new(&gt);
    let mut out = PerSiteProfile {
        series: KernelSeries {
            kind: SeriesKind::PerSiteCollision,
            points: Vec::with_capacity(n_max as usize),
        },
        argmax: Vec::with_capacity(n_max as usize),
        profiles: BTreeMap::new(),
    };
    for n in 1..=n_max {
        p.step()?;
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (i, m) in p.mass().iter().enumerate() {
            acc[site_of[i]] += m * m;
        }
        let (best, value) =
            acc.iter()
                .enumerate()
                .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        out.series.points.push((n, value));
        out.argmax.push(sites[best]);
        if keep_profiles_at.contains(&n) {
            let profile = sites
                .iter()
                .zip(&acc)
                .filter(|(_, &v)| v > 0.0)
                .map(|(s, &v)| (*s, v))
                .collect();
            out.profiles.insert(n, profile);
        }
    }
    Ok(out)
}

/// All distributions `p^(0..=t_max)` from the root, for small graphs.
fn distributions(gt: &TruncatedGraph, t_max: u64) -> Result<Vec<Vec<f64>>, OracleError> {
    let mut p = Propagator::new(gt);
    let mut out = Vec::with_capacity(t_max as usize + 1);
    let full = |p: &Propagator| {
        let mut v = p.mass().to_vec();
        v.resize(gt.len(), 0.0);
        v
    };
    out.push(full(&p));
    for _ in 0..t_max {
        p.step()?;
        out.push(full(&p));
    }
    Ok(out)
}

fn loop_around_residual(d: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let meet: f64 = d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum();
    (meet - d[i + j][0]).abs()
}

fn reversibility_residual(gt: &TruncatedGraph, d: &[Vec<f64>], n: usize) -> f64 {
    let dv = gt.degree(0) as f64;
    let identity: f64 = d[n]
        .iter()
        .enumerate()
        .map(|(w, p)| p * p * dv / gt.degree(w) as f64)
        .sum();
    (d[2 * n][0] - identity).abs()
}

/// `|sum_w p^i(v,w) p^j(v,w) - p^(i+j)(v,v)|` on a regular graph.
pub fn verify_loop_around(g: &GraphModel, v: VertexId, i: u64, j: u64) -> Result<f64, OracleError> {
    if g.constant_degree().is_none() {
        return Err(OracleError::NotRegular(g.spec()));
    }
    let g = g.clone().with_root(v)?;
    let gt = ball_for(&g, i + j)?;
    let d = distributions(&gt, i + j)?;
    Ok(loop_around_residual(&d, i as usize, j as usize))
}

/// `|p^(2n)(v,v) - sum_w p^n(v,w)^2 pi(v)/pi(w)|` on any graph.
pub fn verify_reversibility(g: &GraphModel, v: VertexId, n: u64) -> Result<f64, OracleError> {
    let g = g.clone().with_root(v)?;
    let gt = ball_for(&g, 2 * n)?;
    let d = distributions(&gt, 2 * n)?;
    Ok(reversibility_residual(&gt, &d, n as usize))
}

/// One row of the identity report.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub check: String,
    pub residual: f64,
    pub pass: bool,
}

/// Tolerance of the built-in identity grid.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Loop-around on `cycle:5`, `cycle:6`, `line` for all `i + j <= 24`, and
/// reversibility on `star:4`, `comb:cycle:4`, `comb:line` for `n <= 12`.
pub fn identity_checks() -> Result<Vec<IdentityCheck>, OracleError> {
    let mut rows = Vec::new();
    let mut push = |check: String, residual: f64| {
        rows.push(IdentityCheck {
            check,
            residual,
            pass: residual <= IDENTITY_TOLERANCE,
        })
    };
    for spec in ["cycle:5", "cycle:6", "line"] {
        let g = crate::graph::build_graph(spec)?;
        let gt = ball_for(&g, 24)?;
        let d = distributions(&gt, 24)?;
        for i in 0..=24usize {
            for j in 0..=24 - i {
                push(
                    format!("loop-around {spec} i={i} j={j}"),
                    loop_around_residual(&d, i, j),
                );
            }
        }
    }
    for spec in ["star:4", "comb:cycle:4", "comb:line"] {
        let base = crate::graph::build_graph(spec)?;
        let mut roots = vec![base.root()];
        if spec == "star:4" {
            roots.push(base.vertex_from_coords(&[1])?);
        }
        for root in roots {
            let g = base.clone().with_root(root)?;
            let gt = ball_for(&g, 24)?;
            let d = distributions(&gt, 24)?;
            for n in 0..=12 {
                push(
                    format!("reversibility {spec} v={root} n={n}"),
                    reversibility_residual(&gt, &d, n),
                );
            }
        }
    }
    Ok(rows)
}
