//! Independent replicas of a pair run, parallel over replicas.
//!
//! Each replica draws from its own `(seed, replica, slot)` streams, so the
//! output is the same for any worker count. Results are handed to the sink
//! in replica order.

use crate::graph::{GraphModel, VertexId};
use crate::rng::{slot, RngStream};
use crate::sampler::{
    run_pair, run_pair_decomposed, run_pair_geometric, Construction, PairTrajectorySummary,
    RecordPolicy, SampleError, WalkerStreams,
};

/// Replicas handed to the worker pool at a time.
const CHUNK: u64 = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub start: VertexId,
    pub steps: u64,
    /// Index of the first replica; shards of one ensemble use disjoint
    /// ranges `first_replica..first_replica + replicas`.
    pub first_replica: u64,
    pub replicas: u64,
    pub seed: u64,
    pub construction: Construction,
    pub policy: RecordPolicy,
}

/// How replicas are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given worker count; falls back to sequential
    /// when built without the `parallel` feature.
    Parallel {
        workers: usize,
    },
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError<E> {
    #[error("replica {replica}: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: SampleError,
    },
    #[error("sink failed: {0}")]
    Sink(E),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn walker_streams(seed: u64, replica: u64, second: bool) -> WalkerStreams<rand_chacha::ChaCha8Rng> {
    let (tooth, base, hold) = if second {
        (slot::WALKER_Y, slot::BASE_Y, slot::HOLD_Y)
    } else {
        (slot::WALKER_X, slot::BASE_X, slot::HOLD_X)
    };
    WalkerStreams {
        tooth: RngStream::new(seed, replica, tooth).rng(),
        base: RngStream::new(seed, replica, base).rng(),
        hold: RngStream::new(seed, replica, hold).rng(),
    }
}

/// Runs replica `replica` of the ensemble.
pub fn run_replica(
    g: &GraphModel,
    spec: &EnsembleSpec,
    replica: u64,
) -> Result<PairTrajectorySummary, SampleError> {
    let mut summary = match spec.construction {
        Construction::Direct => run_pair(
            g,
            spec.start,
            spec.steps,
            RngStream::new(spec.seed, replica, slot::WALKER_X).rng(),
            RngStream::new(spec.seed, replica, slot::WALKER_Y).rng(),
            &spec.policy,
        )?,
        Construction::SelfLoop => run_pair_decomposed(
            g,
            spec.start,
            spec.steps,
            walker_streams(spec.seed, replica, false),
            walker_streams(spec.seed, replica, true),
            &spec.policy,
        )?,
        Construction::GeometricClock => run_pair_geometric(
            g,
            spec.start,
            spec.steps,
            walker_streams(spec.seed, replica, false),
            walker_streams(spec.seed, replica, true),
            &spec.policy,
        )?,
    };
    summary.replica = replica;
    Ok(summary)
}

/// Runs all replicas and feeds each summary to `sink` in replica order.
pub fn run_ensemble<E, F>(
    g: &GraphModel,
    spec: &EnsembleSpec,
    exec: Execution,
    mut sink: F,
) -> Result<(), EnsembleError<E>>
where
    F: FnMut(PairTrajectorySummary) -> Result<(), E>,
{
    let end = spec
        .first_replica
        .checked_add(spec.replicas)
        .ok_or_else(|| EnsembleError::Pool("replica index overflow".into()))?;
    let mut lo = spec.first_replica;
    #[cfg(feature = "parallel")]
    let pool = match exec {
        Execution::Parallel { workers } => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| EnsembleError::Pool(e.to_string()))?,
        ),
        Execution::Sequential => None,
    };
    #[cfg(not(feature = "parallel"))]
    let _ = exec;
    while lo < end {
        let hi = (lo + CHUNK).min(end);
        #[cfg(feature = "parallel")]
        let chunk: Vec<_> = match &pool {
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| {
                    (lo..hi)
                        .into_par_iter()
                        .map(|r| (r, run_replica(g, spec, r)))
                        .collect()
                })
            }
            None => (lo..hi).map(|r| (r, run_replica(g, spec, r))).collect(),
        };
        #[cfg(not(feature = "parallel"))]
        let chunk: Vec<_> = (lo..hi).map(|r| (r, run_replica(g, spec, r))).collect();
        for (replica, result) in chunk {
            let summary = result.map_err(|source| EnsembleError::Replica { replica, source })?;
            sink(summary).map_err(EnsembleError::Sink)?;
        }
        lo = hi;
    }
    Ok(())
}

/// Collects the whole ensemble in memory.
pub fn collect_ensemble(
    g: &GraphModel,
    spec: &EnsembleSpec,
    exec: Execution,
) -> Result<Vec<PairTrajectorySummary>, EnsembleError<std::convert::Infallible>> {
    let mut out = Vec::with_capacity(spec.replicas as usize);
    run_ensemble(g, spec, exec, |s| {
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

/// `1, 2, 4, ...` up to `steps`, with `steps` itself appended if missing.
pub fn dyadic_checkpoints(steps: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&t| t.checked_mul(2))
        .take_while(|&t| t <= steps)
        .collect();
    if steps > 0 && out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn spec(g: &GraphModel, replicas: u64, construction: Construction) -> EnsembleSpec {
        EnsembleSpec {
            start: g.root(),
            steps: 200,
            first_replica: 0,
            replicas,
            seed: 42,
            construction,
            policy: RecordPolicy {
                checkpoints: dyadic_checkpoints(200),
                ..Default::default()
            },
        }
    }

    #[test]
    fn single_replica_reproduces_run_pair() {
        let g = build_graph("comb:line").unwrap();
        let s = spec(&g, 1, Construction::Direct);
        let out = collect_ensemble(&g, &s, Execution::Sequential).unwrap();
        let direct = run_pair(
            &g,
            g.root(),
            200,
            RngStream::new(42, 0, slot::WALKER_X).rng(),
            RngStream::new(42, 0, slot::WALKER_Y).rng(),
            &s.policy,
        )
        .unwrap();
        assert_eq!(out, vec![direct]);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let g = build_graph("comb:cycle:4").unwrap();
        for c in [
            Construction::Direct,
            Construction::SelfLoop,
            Construction::GeometricClock,
        ] {
            let s = spec(&g, 1100, c);
            let a = collect_ensemble(&g, &s, Execution::Sequential).unwrap();
            let b = collect_ensemble(&g, &s, Execution::Parallel { workers: 8 }).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().enumerate().all(|(i, s)| s.replica == i as u64));
        }
    }

    #[test]
    fn shards_concatenate_to_the_full_run() {
        let g = build_graph("comb:line").unwrap();
        let full = collect_ensemble(
            &g,
            &spec(&g, 30, Construction::Direct),
            Execution::Sequential,
        )
        .unwrap();
        let mut a = spec(&g, 12, Construction::Direct);
        let mut b = spec(&g, 18, Construction::Direct);
        b.first_replica = 12;
        a.replicas = 12;
        let mut joined = collect_ensemble(&g, &a, Execution::Sequential).unwrap();
        joined.extend(collect_ensemble(&g, &b, Execution::Parallel { workers: 3 }).unwrap());
        assert_eq!(full, joined);
    }

    #[test]
    fn replica_failure_is_reported() {
        let g = build_graph("line").unwrap().with_truncation(3);
        let s = spec(&g, 4, Construction::Direct);
        let err = collect_ensemble(&g, &s, Execution::Sequential).unwrap_err();
        assert!(matches!(err, EnsembleError::Replica { replica: 0, .. }));
    }

    #[test]
    fn dyadic_grid() {
        assert_eq!(dyadic_checkpoints(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(dyadic_checkpoints(16), vec![1, 2, 4, 8, 16]);
        assert!(dyadic_checkpoints(0).is_empty());
    }
}
