use proptest::prelude::*;

use combwalk::ensemble::{run_replica, EnsembleSpec};
use combwalk::graph::{build_graph, truncate, GraphModel};
use combwalk::oracle::{transition_vector, Propagator};
use combwalk::rng::RngStream;
use combwalk::sampler::{
    srw_step, CollisionRecord, Construction, PairTrajectorySummary, RecordPolicy,
};
use combwalk::statistics::{
    dyadic_collision_stats, estimate_exponent, meeting_growth_curves, DyadicAccumulator,
    DyadicGrid, GrowthAccumulator, ReplicaCells,
};

const SPECS: &[&str] = &[
    "line",
    "cycle:5",
    "star:3",
    "grid2d",
    "comb:line",
    "comb:cycle:4",
    "comb2:line",
    "biased-ladder",
];

fn summary(replica: u64, records: &[(u64, i64)], graph: &str) -> PairTrajectorySummary {
    PairTrajectorySummary {
        replica,
        graph: graph.into(),
        steps: 256,
        meetings: records.len() as u64,
        collisions: records
            .iter()
            .map(|&(n, l)| CollisionRecord {
                n,
                vertex: vec![0, l],
                l,
            })
            .collect(),
        checkpoints: Vec::new(),
        max_height: [0, 0],
        final_positions: [vec![], vec![]],
        lil: Vec::new(),
        spine_moves: None,
        clock: Vec::new(),
    }
}

fn records() -> impl Strategy<Value = Vec<(u64, i64)>> {
    prop::collection::vec((1u64..=256, -40i64..=40), 0..30).prop_map(|mut v| {
        v.sort();
        v.dedup_by_key(|r| r.0);
        v
    })
}

fn grid() -> DyadicGrid {
    DyadicGrid::new((0, 6), (0, 4)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distributions_are_normalized_and_local(spec in prop::sample::select(SPECS), n in 0u64..14) {
        let g = build_graph(spec).unwrap();
        let gt = truncate(&g, n as u32 + 1).unwrap();
        let d = transition_vector(&gt, n).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() <= 1e-12);
        for &(i, p) in &d.entries {
            prop_assert!(p > 0.0);
            prop_assert!(gt.distance_from_root(i) as u64 <= n);
        }
    }

    #[test]
    fn chapman_kolmogorov(spec in prop::sample::select(SPECS), n in 0u64..8, m in 0u64..8) {
        let g = build_graph(spec).unwrap();
        let gt = truncate(&g, (n + m) as u32 + 1).unwrap();
        let direct = transition_vector(&gt, n + m).unwrap();
        let mut p = Propagator::from_distribution(&gt, &transition_vector(&gt, n).unwrap());
        for _ in 0..m {
            p.step().unwrap();
        }
        let composed = p.snapshot();
        for i in 0..gt.len() {
            prop_assert!((composed.get(i) - direct.get(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn steps_move_to_neighbors(spec in prop::sample::select(SPECS), seed in any::<u64>()) {
        let g = build_graph(spec).unwrap();
        let mut rng = RngStream::new(seed, 0, 0).rng();
        let mut v = g.root();
        for _ in 0..200 {
            let w = srw_step(&g, v, &mut rng);
            prop_assert_eq!(g.distance(&v, &w), 1);
            v = w;
        }
    }

    #[test]
    fn w_is_six_z_cells(recs in records()) {
        let rc = ReplicaCells::from_summary(&summary(0, &recs, "comb:line"), grid());
        for r in 0..=6 {
            prop_assert_eq!(rc.w(r, 0), None);
            for k in 1..=4 {
                let six: u64 = (k - 1..=k + 1).map(|kk| rc.z(r, kk) + rc.z(r + 1, kk)).sum();
                prop_assert_eq!(rc.w(r, k), Some(six));
            }
        }
    }

    #[test]
    fn z_counts_match_closed_cells(recs in records()) {
        let rc = ReplicaCells::from_summary(&summary(0, &recs, "comb:line"), grid());
        for r in 0..=7u32 {
            for k in 0..=5u32 {
                let direct = recs
                    .iter()
                    .filter(|(n, l)| {
                        (1u64 << r) <= *n && *n <= (2u64 << r)
                            && (1u64 << k) <= l.unsigned_abs() && l.unsigned_abs() <= (2u64 << k)
                    })
                    .count() as u64;
                prop_assert_eq!(rc.z(r, k), direct);
            }
        }
    }

    #[test]
    fn a_iff_z_positive(recs in records()) {
        let acc = dyadic_collision_stats(&[summary(0, &recs, "comb:line")], grid());
        for c in acc.stats() {
            prop_assert_eq!(c.a_prob > 0.0, c.z_mean > 0.0);
            prop_assert_eq!(c.cond_count > 0, c.z_mean > 0.0);
        }
    }

    #[test]
    fn sharded_and_reordered_estimates_agree(
        batch in prop::collection::vec(records(), 1..12),
        split in 0usize..12,
    ) {
        let ss: Vec<_> = batch.iter().enumerate().map(|(i, r)| summary(i as u64, r, "comb:line")).collect();
        let whole = dyadic_collision_stats(&ss, grid());
        let split = split.min(ss.len());
        let mut left = dyadic_collision_stats(&ss[..split], grid());
        left.merge(&dyadic_collision_stats(&ss[split..], grid())).unwrap();
        prop_assert_eq!(&whole, &left);
        let mut rev = ss.clone();
        rev.reverse();
        prop_assert_eq!(&whole, &dyadic_collision_stats(&rev, grid()));

        let mut g1 = GrowthAccumulator::default();
        let mut g2 = GrowthAccumulator::default();
        for s in &ss[..split] { g1.add(s).unwrap(); }
        for s in &ss[split..] { g2.add(s).unwrap(); }
        g1.merge(&g2).unwrap();
        prop_assert_eq!(g1.curves(), meeting_growth_curves(&ss).unwrap());
    }

    #[test]
    fn annulus_bucketing(x in -70i32..70, y in -70i32..70, n in 1u64..256) {
        let g = build_graph("comb2:line").unwrap();
        let v = g.vertex_from_coords(&[0, x as i64, y as i64]).unwrap();
        let mut s = summary(0, &[], "comb2:line");
        s.collisions.push(CollisionRecord { n, vertex: v.coords(), l: v.height() });
        let acc: DyadicAccumulator = dyadic_collision_stats(&[s], DyadicGrid::new((0, 7), (0, 6)).unwrap());
        let radius = x.unsigned_abs().max(y.unsigned_abs()) as u64;
        for c in acc.stats() {
            let in_time = (1u64 << c.r) <= n && n <= (2u64 << c.r);
            let in_annulus = (1u64 << c.k) <= radius && radius <= (2u64 << c.k);
            prop_assert_eq!(c.z_mean > 0.0, in_time && in_annulus);
        }
    }

    #[test]
    fn power_laws_are_recovered(a in -3.0f64..3.0, c in 0.01f64..100.0) {
        let series: Vec<(u64, f64)> = (0..16).map(|j| (1u64 << j, c * 2f64.powf(a * j as f64))).collect();
        let f = estimate_exponent(&series, 1, 1 << 15).unwrap();
        prop_assert!((f.slope - a).abs() <= 1e-12);
    }

    #[test]
    fn larger_alpha_counts_more_violations(seed in any::<u64>()) {
        let g = build_graph("comb:line").unwrap();
        let spec = EnsembleSpec {
            start: g.root(),
            steps: 3000,
            first_replica: 0,
            replicas: 1,
            seed,
            construction: Construction::Direct,
            policy: RecordPolicy { lil_alphas: vec![0.7, 0.75, 0.9, 0.99], ..Default::default() },
        };
        let s = run_replica(&g, &spec, 0).unwrap();
        for w in s.lil.windows(2) {
            prop_assert!(w[0].violations <= w[1].violations);
        }
    }

    #[test]
    fn replicas_replay(seed in any::<u64>(), replica in 0u64..1000, c in 0usize..3) {
        let g: GraphModel = build_graph("comb:cycle:4").unwrap();
        let construction = [Construction::Direct, Construction::SelfLoop, Construction::GeometricClock][c];
        let spec = EnsembleSpec {
            start: g.root(),
            steps: 500,
            first_replica: 0,
            replicas: 1,
            seed,
            construction,
            policy: RecordPolicy { checkpoints: vec![10, 100, 500], ..Default::default() },
        };
        prop_assert_eq!(run_replica(&g, &spec, replica).unwrap(), run_replica(&g, &spec, replica).unwrap());
    }
}
