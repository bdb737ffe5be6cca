//! Dyadic collision statistics, exponent fits, growth curves and the LIL
//! envelope, computed from ensemble summaries.
//!
//! Every accumulator keeps integer sums (or histograms) only, so feeding the
//! replicas in any order or in shards gives bit-identical estimates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::sampler::{PairTrajectorySummary, SpineMoves};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("no replica satisfies the condition in cell (r={r}, k={k})")]
    EmptyCondition { r: u32, k: u32 },
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("summaries carry no envelope record for alpha = {0}")]
    MissingAlpha(f64),
}

/// Dyadic index ranges: time cells `[2^r, 2^(r+1)]`, height cells
/// `[2^k, 2^(k+1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicGrid {
    pub r_lo: u32,
    pub r_hi: u32,
    pub k_lo: u32,
    pub k_hi: u32,
}

impl DyadicGrid {
    pub fn new(r: (u32, u32), k: (u32, u32)) -> Result<Self, StatsError> {
        if r.0 > r.1 || k.0 > k.1 || r.1 > 62 || k.1 > 30 {
            return Err(StatsError::Degenerate(format!(
                "bad dyadic ranges r={}..={} k={}..={}",
                r.0, r.1, k.0, k.1
            )));
        }
        Ok(DyadicGrid {
            r_lo: r.0,
            r_hi: r.1,
            k_lo: k.0,
            k_hi: k.1,
        })
    }

    /// Widest grid whose time cells fit inside `[1, steps]`, with height
    /// cells up to the finite-speed bound.
    pub fn for_horizon(steps: u64) -> Self {
        let top = 63 - steps.max(2).leading_zeros();
        let r_hi = top.saturating_sub(1);
        DyadicGrid {
            r_lo: 0,
            r_hi,
            k_lo: 0,
            k_hi: r_hi.min(30),
        }
    }

    // Z is tracked one cell beyond the reported range on every side that W
    // reaches into.
    fn z_r_lo(&self) -> u32 {
        self.r_lo
    }
    fn z_r_hi(&self) -> u32 {
        self.r_hi + 1
    }
    fn z_k_lo(&self) -> u32 {
        self.k_lo.saturating_sub(1)
    }
    fn z_k_hi(&self) -> u32 {
        self.k_hi + 1
    }
    fn z_rows(&self) -> usize {
        (self.z_r_hi() - self.z_r_lo() + 1) as usize
    }
    fn z_cols(&self) -> usize {
        (self.z_k_hi() - self.z_k_lo() + 1) as usize
    }

    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.r_lo..=self.r_hi).flat_map(move |r| (self.k_lo..=self.k_hi).map(move |k| (r, k)))
    }

    fn cell_index(&self, r: u32, k: u32) -> usize {
        ((r - self.r_lo) * (self.k_hi - self.k_lo + 1) + (k - self.k_lo)) as usize
    }
}

/// Dyadic indices `j` with `2^j <= x <= 2^(j+1)`; two of them when `x` is a
/// power of two above 1 (closed cells share endpoints).
fn dyadic_indices(x: u64) -> impl Iterator<Item = u32> {
    debug_assert!(x >= 1);
    let j = 63 - x.leading_zeros();
    let shared = (x.is_power_of_two() && j >= 1).then(|| j - 1);
    std::iter::once(j).chain(shared)
}

/// Z counts of one replica on the extended grid, plus backbone (`L = 0`)
/// meeting counts per time cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaCells {
    grid: DyadicGrid,
    z: Vec<u64>,
    backbone: Vec<u64>,
}

impl ReplicaCells {
    pub fn from_summary(s: &PairTrajectorySummary, grid: DyadicGrid) -> Self {
        let mut out = ReplicaCells {
            grid,
            z: vec![0; grid.z_rows() * grid.z_cols()],
            backbone: vec![0; grid.z_rows()],
        };
        for c in &s.collisions {
            let height = c.l.unsigned_abs();
            for r in dyadic_indices(c.n.max(1)) {
                if r < grid.z_r_lo() || r > grid.z_r_hi() {
                    continue;
                }
                let row = (r - grid.z_r_lo()) as usize;
                if height == 0 {
                    out.backbone[row] += 1;
                    continue;
                }
                for k in dyadic_indices(height) {
                    if k >= grid.z_k_lo() && k <= grid.z_k_hi() {
                        out.z[row * grid.z_cols() + (k - grid.z_k_lo()) as usize] += 1;
                    }
                }
            }
        }
        out
    }

    /// `Z` for time cell `r` and height cell `k`, within the extended grid.
    pub fn z(&self, r: u32, k: u32) -> u64 {
        let g = &self.grid;
        assert!(r >= g.z_r_lo() && r <= g.z_r_hi() && k >= g.z_k_lo() && k <= g.z_k_hi());
        self.z[(r - g.z_r_lo()) as usize * g.z_cols() + (k - g.z_k_lo()) as usize]
    }

    pub fn backbone(&self, r: u32) -> u64 {
        self.backbone[(r - self.grid.z_r_lo()) as usize]
    }

    /// Six-cell sum over heights `{l/2, l, 2l}` and times `{n, 2n}`; not
    /// defined for `k = 0`.
    pub fn w(&self, r: u32, k: u32) -> Option<u64> {
        (k >= 1).then(|| {
            (k - 1..=k + 1)
                .map(|kk| self.z(r, kk) + self.z(r + 1, kk))
                .sum()
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct CellAcc {
    z_sum: u64,
    a_count: u64,
    w_sum: u64,
    /// Histogram of W over replicas with A = 1.
    w_given_a: BTreeMap<u64, u64>,
}

/// Shard-mergeable sums for the dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicAccumulator {
    grid: DyadicGrid,
    replicas: u64,
    cells: Vec<CellAcc>,
    backbone_sum: Vec<u64>,
    backbone_hit: Vec<u64>,
}

/// Estimates for one `(r, k)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicCellStats {
    pub r: u32,
    pub k: u32,
    pub replicas: u64,
    pub z_mean: f64,
    pub a_prob: f64,
    /// `None` for `k = 0`.
    pub w_mean: Option<f64>,
    /// `None` for `k = 0` or when no replica has `A`.
    pub w_given_a: Option<f64>,
    pub cond_count: u64,
}

/// Meetings on the backbone itself, per time cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BackboneStats {
    pub r: u32,
    pub replicas: u64,
    pub mean_meetings: f64,
    pub hit_prob: f64,
}

impl DyadicAccumulator {
    pub fn new(grid: DyadicGrid) -> Self {
        let n_cells = grid.cells().count();
        let rows = (grid.r_hi - grid.r_lo + 1) as usize;
        DyadicAccumulator {
            grid,
            replicas: 0,
            cells: vec![CellAcc::default(); n_cells],
            backbone_sum: vec![0; rows],
            backbone_hit: vec![0; rows],
        }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn add(&mut self, s: &PairTrajectorySummary) {
        let rc = ReplicaCells::from_summary(s, self.grid);
        self.replicas += 1;
        let grid = self.grid;
        for (r, k) in grid.cells() {
            let acc = &mut self.cells[grid.cell_index(r, k)];
            let z = rc.z(r, k);
            acc.z_sum += z;
            let w = rc.w(r, k);
            if let Some(w) = w {
                acc.w_sum += w;
            }
            if z > 0 {
                acc.a_count += 1;
                if let Some(w) = w {
                    *acc.w_given_a.entry(w).or_default() += 1;
                }
            }
        }
        for r in grid.r_lo..=grid.r_hi {
            let b = rc.backbone(r);
            let row = (r - grid.r_lo) as usize;
            self.backbone_sum[row] += b;
            self.backbone_hit[row] += u64::from(b > 0);
        }
    }

    pub fn merge(&mut self, other: &DyadicAccumulator) -> Result<(), StatsError> {
        if self.grid != other.grid {
            return Err(StatsError::Schema(
                "merging accumulators with different grids".into(),
            ));
        }
        self.replicas += other.replicas;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.z_sum += b.z_sum;
            a.a_count += b.a_count;
            a.w_sum += b.w_sum;
            for (w, c) in &b.w_given_a {
                *a.w_given_a.entry(*w).or_default() += c;
            }
        }
        for (a, b) in self.backbone_sum.iter_mut().zip(&other.backbone_sum) {
            *a += b;
        }
        for (a, b) in self.backbone_hit.iter_mut().zip(&other.backbone_hit) {
            *a += b;
        }
        Ok(())
    }

    pub fn cell(&self, r: u32, k: u32) -> DyadicCellStats {
        let acc = &self.cells[self.grid.cell_index(r, k)];
        let n = self.replicas as f64;
        let mean = |sum: u64| {
            if self.replicas == 0 {
                0.0
            } else {
                sum as f64 / n
            }
        };
        let w_cond_sum: u64 = acc.w_given_a.iter().map(|(w, c)| w * c).sum();
        DyadicCellStats {
            r,
            k,
            replicas: self.replicas,
            z_mean: mean(acc.z_sum),
            a_prob: mean(acc.a_count),
            w_mean: (k >= 1).then(|| mean(acc.w_sum)),
            w_given_a: (k >= 1 && acc.a_count > 0).then(|| w_cond_sum as f64 / acc.a_count as f64),
            cond_count: acc.a_count,
        }
    }

    pub fn stats(&self) -> Vec<DyadicCellStats> {
        self.grid.cells().map(|(r, k)| self.cell(r, k)).collect()
    }

    pub fn backbone(&self) -> Vec<BackboneStats> {
        (self.grid.r_lo..=self.grid.r_hi)
            .map(|r| {
                let row = (r - self.grid.r_lo) as usize;
                let n = self.replicas.max(1) as f64;
                BackboneStats {
                    r,
                    replicas: self.replicas,
                    mean_meetings: self.backbone_sum[row] as f64 / n,
                    hit_prob: self.backbone_hit[row] as f64 / n,
                }
            })
            .collect()
    }

    /// Conditioned W values, sorted, expanded from the histogram.
    fn conditioned_w(&self, r: u32, k: u32) -> Vec<u64> {
        self.cells[self.grid.cell_index(r, k)]
            .w_given_a
            .iter()
            .flat_map(|(&w, &c)| std::iter::repeat_n(w, c as usize))
            .collect()
    }
}

/// Dyadic statistics for a batch of summaries.
pub fn dyadic_collision_stats(
    summaries: &[PairTrajectorySummary],
    grid: DyadicGrid,
) -> DyadicAccumulator {
    let mut acc = DyadicAccumulator::new(grid);
    for s in summaries {
        acc.add(s);
    }
    acc
}

/// Minimum conditioning count for a conditional mean to be trusted.
pub const MIN_CONDITION_COUNT: u64 = 30;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalMean {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    /// `count >= MIN_CONDITION_COUNT`.
    pub reliable: bool,
}

/// Mean of W over replicas with A = 1, with a bootstrap standard error.
pub fn conditional_w(
    acc: &DyadicAccumulator,
    r: u32,
    k: u32,
) -> Result<ConditionalMean, StatsError> {
    if k == 0 {
        return Err(StatsError::Degenerate("W is not defined for k = 0".into()));
    }
    let values = acc.conditioned_w(r, k);
    if values.is_empty() {
        return Err(StatsError::EmptyCondition { r, k });
    }
    let m = values.len();
    let mean = values.iter().sum::<u64>() as f64 / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(((r as u64) << 32) | k as u64);
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..m).map(|_| values[rng.random_range(0..m)]).sum::<u64>() as f64 / m as f64)
        .collect();
    let bmean = boot.iter().sum::<f64>() / boot.len() as f64;
    let var = boot.iter().map(|b| (b - bmean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64;
    Ok(ConditionalMean {
        mean,
        stderr: var.sqrt(),
        count: m as u64,
        reliable: m as u64 >= MIN_CONDITION_COUNT,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Ordinary least squares; `stderr` is the slope's standard error (0 with
/// only two points).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StatsError> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(StatsError::Degenerate(format!("{n} points")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::Degenerate("all abscissae equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ssr / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        stderr,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub points: usize,
}

/// Log-log least squares over the dyadic `n` (powers of two) in
/// `[lo, hi]`.
pub fn estimate_exponent(
    series: &[(u64, f64)],
    lo: u64,
    hi: u64,
) -> Result<ExponentFit, StatsError> {
    let pts: Vec<(u64, f64)> = series
        .iter()
        .copied()
        .filter(|&(n, _)| n >= lo && n <= hi && n.is_power_of_two())
        .collect();
    if pts.len() < 3 {
        return Err(StatsError::Degenerate(format!(
            "{} dyadic points in [{lo}, {hi}], need 3",
            pts.len()
        )));
    }
    if let Some(&(n, v)) = pts.iter().find(|(_, v)| !v.is_finite() || *v <= 0.0) {
        return Err(StatsError::Degenerate(format!("value {v} at n={n}")));
    }
    let xs: Vec<f64> = pts
        .iter()
        .map(|&(n, _)| n.trailing_zeros() as f64)
        .collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, v)| v.log2()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(ExponentFit {
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: fit.stderr,
        n_lo: pts[0].0,
        n_hi: pts[pts.len() - 1].0,
        points: pts.len(),
    })
}

/// Kendall's tau-b of `ys` against its index order; `None` when either
/// side is constant.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    let (mut concordant, mut discordant, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = (xs[j] - xs[i]).partial_cmp(&0.0)? as i64;
            let dy = (ys[j] - ys[i]).partial_cmp(&0.0)? as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => tx += 1,
                (_, 0) => ty += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + tx) as f64;
    let n2 = (concordant + discordant + ty) as f64;
    (n1 > 0.0 && n2 > 0.0).then(|| (concordant - discordant) as f64 / (n1 * n2).sqrt())
}

/// Envelope violations aggregated over replicas.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LilReport {
    pub alpha: f64,
    pub replicas: u64,
    pub total_violations: u64,
    pub replicas_with_violation: u64,
    /// Replicas whose last violation is later than `after`.
    pub replicas_violating_after: u64,
    pub after: u64,
    pub last_violation: Option<u64>,
}

impl LilReport {
    pub fn fraction_after(&self) -> f64 {
        self.replicas_violating_after as f64 / self.replicas.max(1) as f64
    }

    pub fn merge(&mut self, other: &LilReport) {
        self.replicas += other.replicas;
        self.total_violations += other.total_violations;
        self.replicas_with_violation += other.replicas_with_violation;
        self.replicas_violating_after += other.replicas_violating_after;
        self.last_violation = self.last_violation.max(other.last_violation);
    }
}

/// Counts `|V_n| > 2(2n)^{1/(2 alpha)}` from the envelope records the
/// sampler kept for `alpha`.
pub fn lil_envelope_check(
    summaries: &[PairTrajectorySummary],
    alpha: f64,
    after: u64,
) -> Result<LilReport, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Alpha(alpha));
    }
    let mut out = LilReport {
        alpha,
        after,
        ..Default::default()
    };
    for s in summaries {
        let rec = s
            .lil
            .iter()
            .find(|l| l.alpha == alpha)
            .ok_or(StatsError::MissingAlpha(alpha))?;
        out.replicas += 1;
        out.total_violations += rec.violations;
        out.replicas_with_violation += u64::from(rec.violations > 0);
        out.replicas_violating_after += u64::from(rec.last_violation.is_some_and(|t| t > after));
        out.last_violation = out.last_violation.max(rec.last_violation);
    }
    Ok(out)
}

/// Mean meetings and survival per checkpoint for one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurve {
    pub graph: String,
    pub replicas: u64,
    pub times: Vec<u64>,
    pub mean_meetings: Vec<f64>,
    /// Fraction of replicas meeting at least once after `t`.
    pub survival_frac: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct GrowthAcc {
    times: Vec<u64>,
    replicas: u64,
    meetings: Vec<u64>,
    survivors: Vec<u64>,
}

/// Growth-curve sums keyed by graph spec.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrowthAccumulator {
    by_graph: BTreeMap<String, GrowthAcc>,
}

impl GrowthAccumulator {
    pub fn add(&mut self, s: &PairTrajectorySummary) -> Result<(), StatsError> {
        let times: Vec<u64> = s.checkpoints.iter().map(|c| c.t).collect();
        let acc = self.by_graph.entry(s.graph.clone()).or_default();
        if acc.replicas == 0 {
            acc.times = times;
            acc.meetings = vec![0; acc.times.len()];
            acc.survivors = vec![0; acc.times.len()];
        } else if acc.times != times {
            return Err(StatsError::Schema(format!(
                "replica {} of {} has a different checkpoint grid",
                s.replica, s.graph
            )));
        }
        acc.replicas += 1;
        for (i, c) in s.checkpoints.iter().enumerate() {
            acc.meetings[i] += c.meetings;
            acc.survivors[i] += u64::from(s.meetings > c.meetings);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &GrowthAccumulator) -> Result<(), StatsError> {
        for (g, b) in &other.by_graph {
            let a = self.by_graph.entry(g.clone()).or_default();
            if a.replicas == 0 {
                *a = b.clone();
                continue;
            }
            if b.replicas == 0 {
                continue;
            }
            if a.times != b.times {
                return Err(StatsError::Schema(format!(
                    "checkpoint grids differ for {g}"
                )));
            }
            a.replicas += b.replicas;
            for i in 0..a.times.len() {
                a.meetings[i] += b.meetings[i];
                a.survivors[i] += b.survivors[i];
            }
        }
        Ok(())
    }

    pub fn curves(&self) -> Vec<GrowthCurve> {
        self.by_graph
            .iter()
            .map(|(g, a)| {
                let n = a.replicas.max(1) as f64;
                GrowthCurve {
                    graph: g.clone(),
                    replicas: a.replicas,
                    times: a.times.clone(),
                    mean_meetings: a.meetings.iter().map(|&m| m as f64 / n).collect(),
                    survival_frac: a.survivors.iter().map(|&m| m as f64 / n).collect(),
                }
            })
            .collect()
    }
}

pub fn meeting_growth_curves(
    summaries: &[PairTrajectorySummary],
) -> Result<Vec<GrowthCurve>, StatsError> {
    let mut acc = GrowthAccumulator::default();
    for s in summaries {
        acc.add(s)?;
    }
    Ok(acc.curves())
}

/// Spine motion of ladder walkers.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftEstimate {
    /// Least-squares slope of the mean spine level against `t/2`.
    pub per_two_steps: f64,
    pub per_two_steps_stderr: f64,
    /// `(right - left) / (right + left)` over two-step spine moves that
    /// change level.
    pub bias: f64,
    pub bias_stderr: f64,
    pub moves: SpineMoves,
    pub walkers: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriftAccumulator {
    /// `t -> (sum of spine levels, walker count)` at even checkpoints.
    levels: BTreeMap<u64, (i128, u64)>,
    moves: SpineMoves,
    walkers: u64,
}

impl DriftAccumulator {
    pub fn add(&mut self, s: &PairTrajectorySummary) -> Result<(), StatsError> {
        let moves = s.spine_moves.ok_or_else(|| {
            StatsError::Schema(format!("replica {} has no spine moves", s.replica))
        })?;
        for m in moves {
            self.moves.right += m.right;
            self.moves.stay += m.stay;
            self.moves.left += m.left;
        }
        self.walkers += 2;
        for c in &s.checkpoints {
            let Some(pos) = &c.positions else { continue };
            if c.t % 2 != 0 {
                continue;
            }
            let e = self.levels.entry(c.t).or_default();
            for p in pos {
                if let [level] = p[..] {
                    e.0 += level as i128;
                    e.1 += 1;
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &DriftAccumulator) {
        for (t, (sum, n)) in &other.levels {
            let e = self.levels.entry(*t).or_default();
            e.0 += sum;
            e.1 += n;
        }
        self.moves.right += other.moves.right;
        self.moves.stay += other.moves.stay;
        self.moves.left += other.moves.left;
        self.walkers += other.walkers;
    }

    pub fn estimate(&self) -> Result<DriftEstimate, StatsError> {
        let pts: Vec<(f64, f64)> = self
            .levels
            .iter()
            .filter(|(_, (_, n))| *n > 0)
            .map(|(&t, &(sum, n))| (t as f64 / 2.0, sum as f64 / n as f64))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let fit = least_squares(&xs, &ys)?;
        let moving = (self.moves.right + self.moves.left) as f64;
        if moving == 0.0 {
            return Err(StatsError::Degenerate("no spine moves recorded".into()));
        }
        let q = self.moves.right as f64 / moving;
        Ok(DriftEstimate {
            per_two_steps: fit.slope,
            per_two_steps_stderr: fit.stderr,
            bias: 2.0 * q - 1.0,
            bias_stderr: 2.0 * (q * (1.0 - q) / moving).sqrt(),
            moves: self.moves,
            walkers: self.walkers,
        })
    }
}

pub fn drift_estimate(summaries: &[PairTrajectorySummary]) -> Result<DriftEstimate, StatsError> {
    let mut acc = DriftAccumulator::default();
    for s in summaries {
        acc.add(s)?;
    }
    acc.estimate()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins after pooling those with expected count below 5.
    pub bins: usize,
}

/// Pearson goodness of fit; bins with expected count below 5 are pooled
/// into one.
pub fn chi_square_gof(
    observed: &[u64],
    expected_probs: &[f64],
) -> Result<ChiSquareTest, StatsError> {
    if observed.len() != expected_probs.len() {
        return Err(StatsError::Schema(
            "observed/expected length mismatch".into(),
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(StatsError::Degenerate("no observations".into()));
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * total as f64;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        bins.push(pooled);
    }
    if bins.len() < 2 {
        return Err(StatsError::Degenerate("fewer than two bins".into()));
    }
    let mut statistic = 0.0;
    for &(o, e) in &bins {
        if e == 0.0 {
            if o > 0.0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        statistic += (o - e).powi(2) / e;
    }
    let dof = bins.len() - 1;
    let p_value = if statistic.is_finite() {
        ChiSquared::new(dof as f64)
            .map_err(|e| StatsError::Degenerate(e.to_string()))?
            .sf(statistic)
    } else {
        0.0
    };
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
        bins: bins.len(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `r,k,Z_mean,A_prob,W_mean,W_given_A,count,cond_count`; undefined W
/// fields are left empty. Backbone rows use `k = -1`.
pub fn dyadic_csv(acc: &DyadicAccumulator) -> String {
    let mut out = String::from("r,k,Z_mean,A_prob,W_mean,W_given_A,count,cond_count\n");
    for b in acc.backbone() {
        let hits = (b.hit_prob * b.replicas as f64).round() as u64;
        let _ = writeln!(
            out,
            "{},-1,{},{},,,{},{}",
            b.r, b.mean_meetings, b.hit_prob, b.replicas, hits
        );
    }
    for c in acc.stats() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.r,
            c.k,
            c.z_mean,
            c.a_prob,
            opt(c.w_mean),
            opt(c.w_given_a),
            c.replicas,
            c.cond_count
        );
    }
    out
}

/// `t,mean_meetings,survival_frac`, with a leading `graph` column when
/// more than one graph is present.
pub fn growth_csv(curves: &[GrowthCurve]) -> String {
    let multi = curves.len() > 1;
    let mut out = String::from(if multi {
        "graph,t,mean_meetings,survival_frac\n"
    } else {
        "t,mean_meetings,survival_frac\n"
    });
    for c in curves {
        for i in 0..c.times.len() {
            if multi {
                let _ = write!(out, "{},", c.graph);
            }
            let _ = writeln!(
                out,
                "{},{},{}",
                c.times[i], c.mean_meetings[i], c.survival_frac[i]
            );
        }
    }
    out
}

pub fn lil_csv(reports: &[LilReport]) -> String {
    let mut out = String::from(
        "alpha,replicas,total_violations,replicas_with_violation,after,replicas_violating_after,fraction_after,last_violation\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.alpha,
            r.replicas,
            r.total_violations,
            r.replicas_with_violation,
            r.after,
            r.replicas_violating_after,
            r.fraction_after(),
            r.last_violation.map(|t| t.to_string()).unwrap_or_default()
        );
    }
    out
}

pub fn drift_csv(d: &DriftEstimate) -> String {
    format!(
        "per_two_steps,per_two_steps_stderr,bias,bias_stderr,right,stay,left,walkers\n{},{},{},{},{},{},{},{}\n",
        d.per_two_steps,
        d.per_two_steps_stderr,
        d.bias,
        d.bias_stderr,
        d.moves.right,
        d.moves.stay,
        d.moves.left,
        d.walkers
    )
}

pub fn fit_csv(f: &ExponentFit) -> String {
    format!(
        "slope,intercept,stderr,n_lo,n_hi,points\n{},{},{},{},{},{}\n",
        f.slope, f.intercept, f.stderr, f.n_lo, f.n_hi, f.points
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{Checkpoint, CollisionRecord, LilRecord};

    pub(crate) fn summary(records: &[(u64, i64)]) -> PairTrajectorySummary {
        PairTrajectorySummary {
            replica: 0,
            graph: "comb:line".into(),
            steps: 64,
            meetings: records.len() as u64,
            collisions: records
                .iter()
                .map(|&(n, l)| CollisionRecord {
                    n,
                    vertex: vec![0, l],
                    l,
                })
                .collect(),
            checkpoints: vec![],
            max_height: [0, 0],
            final_positions: [vec![], vec![]],
            lil: vec![],
            spine_moves: None,
            clock: vec![],
        }
    }

    fn grid() -> DyadicGrid {
        DyadicGrid::new((0, 4), (0, 3)).unwrap()
    }

    #[test]
    fn single_record_lands_in_its_cell() {
        let acc = dyadic_collision_stats(&[summary(&[(5, 3)])], grid());
        let c = acc.cell(2, 1);
        assert_eq!((c.z_mean, c.a_prob), (1.0, 1.0));
        for s in acc.stats() {
            if (s.r, s.k) != (2, 1) {
                assert_eq!(s.z_mean, 0.0, "({}, {})", s.r, s.k);
            }
        }
    }

    #[test]
    fn negative_heights_fold() {
        let a = dyadic_collision_stats(&[summary(&[(5, -3)])], grid());
        let b = dyadic_collision_stats(&[summary(&[(5, 3)])], grid());
        assert_eq!(a, b);
    }

    #[test]
    fn boundary_records_count_twice() {
        let acc = dyadic_collision_stats(&[summary(&[(8, 4)])], grid());
        for (r, k) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
            assert_eq!(acc.cell(r, k).z_mean, 1.0);
        }
        assert_eq!(acc.cell(1, 1).z_mean, 0.0);
    }

    #[test]
    fn empty_ensemble_is_zero() {
        let acc = dyadic_collision_stats(&[summary(&[])], grid());
        for c in acc.stats() {
            assert_eq!((c.z_mean, c.a_prob), (0.0, 0.0));
            assert_eq!(c.w_mean, (c.k >= 1).then_some(0.0));
            assert_eq!(c.w_given_a, None);
        }
        let none = dyadic_collision_stats(&[], grid());
        assert!(none.stats().iter().all(|c| c.z_mean == 0.0));
    }

    #[test]
    fn backbone_meetings_are_separate() {
        let acc = dyadic_collision_stats(&[summary(&[(5, 0), (6, 0)])], grid());
        assert!(acc.stats().iter().all(|c| c.z_mean == 0.0));
        assert_eq!(acc.backbone()[2].mean_meetings, 2.0);
        assert_eq!(acc.backbone()[2].hit_prob, 1.0);
    }

    #[test]
    fn w_sums_six_cells() {
        let s = summary(&[(5, 3), (9, 5), (3, 1), (17, 7), (12, 2)]);
        let rc = ReplicaCells::from_summary(&s, grid());
        assert_eq!(rc.w(2, 0), None);
        let w = rc.w(2, 2).unwrap();
        let direct: u64 = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]
            .iter()
            .map(|&(r, k)| rc.z(r, k))
            .sum();
        assert_eq!(w, direct);
    }

    #[test]
    fn conditional_w_equals_mean_when_always_conditioned() {
        let ss: Vec<_> = (1..=40)
            .map(|i| summary(&[(5, 3); 1].repeat(i % 3 + 1)))
            .collect();
        let acc = dyadic_collision_stats(&ss, grid());
        let c = conditional_w(&acc, 2, 1).unwrap();
        assert_eq!(Some(c.mean), acc.cell(2, 1).w_mean);
        assert!(c.reliable && c.stderr > 0.0);
        assert!(matches!(
            conditional_w(&acc, 4, 3),
            Err(StatsError::EmptyCondition { .. })
        ));
    }

    #[test]
    fn exact_power_laws() {
        let s: Vec<(u64, f64)> = (0..12).map(|j| (1u64 << j, (1u64 << j) as f64)).collect();
        let f = estimate_exponent(&s, 1, 1 << 11).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        let s: Vec<(u64, f64)> = (1..1000u64).map(|n| (n, (n as f64).powf(-0.5))).collect();
        let f = estimate_exponent(&s, 2, 512).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert_eq!((f.n_lo, f.n_hi, f.points), (2, 512, 9));
        let s: Vec<(u64, f64)> = (1..100u64).map(|n| (n, 7.0)).collect();
        assert_eq!(estimate_exponent(&s, 1, 64).unwrap().slope, 0.0);
    }

    #[test]
    fn exponent_errors() {
        let s = vec![(1, 1.0), (2, 1.0)];
        assert!(estimate_exponent(&s, 1, 2).is_err());
        let s = vec![(1, 1.0), (2, 0.0), (4, 1.0)];
        assert!(estimate_exponent(&s, 1, 4).is_err());
    }

    #[test]
    fn tau_signs() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &[1.0, 2.0, 3.0, 4.0]), Some(1.0));
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(kendall_tau(&x, &[1.0, 1.0, 1.0, 1.0]), None);
    }

    fn lil_summary(v: u64, last: Option<u64>) -> PairTrajectorySummary {
        let mut s = summary(&[]);
        s.lil = vec![LilRecord {
            alpha: 0.75,
            violations: v,
            last_violation: last,
        }];
        s
    }

    #[test]
    fn lil_aggregation() {
        let ss = vec![
            lil_summary(0, None),
            lil_summary(3, Some(50)),
            lil_summary(1, Some(5000)),
        ];
        let r = lil_envelope_check(&ss, 0.75, 1024).unwrap();
        assert_eq!(r.total_violations, 4);
        assert_eq!(r.replicas_with_violation, 2);
        assert_eq!(r.replicas_violating_after, 1);
        assert_eq!(r.last_violation, Some(5000));
        assert!(matches!(
            lil_envelope_check(&ss, 1.2, 0),
            Err(StatsError::Alpha(_))
        ));
        assert!(matches!(
            lil_envelope_check(&ss, 0.8, 0),
            Err(StatsError::MissingAlpha(_))
        ));
    }

    fn growth_summary(cps: &[(u64, u64)], total: u64) -> PairTrajectorySummary {
        let mut s = summary(&[]);
        s.meetings = total;
        s.checkpoints = cps
            .iter()
            .map(|&(t, m)| Checkpoint {
                t,
                meetings: m,
                positions: None,
            })
            .collect();
        s
    }

    #[test]
    fn growth_curve_means_and_survival() {
        let ss = vec![
            growth_summary(&[(1, 0), (2, 1), (4, 1)], 3),
            growth_summary(&[(1, 1), (2, 1), (4, 2)], 2),
        ];
        let c = &meeting_growth_curves(&ss).unwrap()[0];
        assert_eq!(c.mean_meetings, vec![0.5, 1.0, 1.5]);
        assert_eq!(c.survival_frac, vec![1.0, 1.0, 0.5]);
        let bad = vec![ss[0].clone(), growth_summary(&[(1, 0)], 0)];
        assert!(matches!(
            meeting_growth_curves(&bad),
            Err(StatsError::Schema(_))
        ));
    }

    #[test]
    fn chi_square_perfect_and_bad() {
        let ok = chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(ok.statistic, 0.0);
        assert!((ok.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square_gof(&[500, 0, 500], &[0.25, 0.25, 0.5]).unwrap();
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn csv_shapes() {
        let acc = dyadic_collision_stats(&[summary(&[(5, 3)])], grid());
        let csv = dyadic_csv(&acc);
        assert!(csv.starts_with("r,k,Z_mean,A_prob,W_mean,W_given_A,count,cond_count\n"));
        assert_eq!(csv.lines().count(), 1 + 5 + 5 * 4);
        assert!(!csv.contains('\r'));
    }
}
