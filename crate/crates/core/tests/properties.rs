use proptest::prelude::*;

use spr_core::engine::preprocess_subdivide;
use spr_core::minor::terminal_distance_matrix;
use spr_core::verify::replay_trace;
use spr_core::{run_and_contract, validate_partition, Edge, RunTrace, SprParams, WeightedGraph};

/// Connected graph: a random spanning tree plus extra edges, weights in [0.5, 4].
fn arb_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (3..=max_n)
        .prop_flat_map(|n| {
            let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n), 0..n);
            let weights = proptest::collection::vec(0.5f64..4.0, 2 * n);
            let k = 2..=n.min(6);
            (Just(n), parents, extra, weights, k, any::<prop::sample::Index>())
        })
        .prop_map(|(n, parents, extra, weights, k, shift)| {
            let mut edges = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for v in 1..n {
                let u = parents[v - 1].index(v);
                seen.insert((u, v));
                edges.push(Edge { u, v, weight: weights[v] });
            }
            for (i, &(a, b)) in extra.iter().enumerate() {
                let (u, v) = (a.min(b), a.max(b));
                if u != v && seen.insert((u, v)) {
                    edges.push(Edge { u, v, weight: weights[n + i % n] });
                }
            }
            let s = shift.index(n);
            let terminals = (0..k).map(|i| (s + i * n / k) % n).collect();
            WeightedGraph::new(n, edges, terminals).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_a_valid_minor(g in arb_graph(30), seed in any::<u64>()) {
        let out = run_and_contract(&g, &SprParams::new(g.terminal_count(), seed)).unwrap();
        prop_assert!(validate_partition(&g, &out.partition).is_empty());
        for p in &out.report.pairs {
            prop_assert!(p.ratio >= 1.0 - 1e-9, "ratio {}", p.ratio);
        }
        prop_assert!(out.report.max_ratio() >= out.report.mean_ratio() - 1e-12);
        let replay = replay_trace(&g, &out.trace).unwrap();
        prop_assert!(replay.is_clean(), "{:?}", replay.violations);
    }

    #[test]
    fn traces_roundtrip_and_repeat(g in arb_graph(20), seed in any::<u64>()) {
        let p = SprParams::new(g.terminal_count(), seed);
        let a = run_and_contract(&g, &p).unwrap().trace.to_json().unwrap();
        let b = run_and_contract(&g, &p).unwrap().trace.to_json().unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(RunTrace::from_json(&a).unwrap().to_json().unwrap(), a);
    }

    #[test]
    fn subdivision_keeps_vertex_distances(g in arb_graph(15)) {
        let p = SprParams::new(g.terminal_count(), 0);
        let sub = preprocess_subdivide(&g, &p).unwrap();
        prop_assert_eq!(sub.original_vertices, g.vertex_count());
        prop_assert_eq!(sub.graph.terminals(), g.terminals());
        let before = terminal_distance_matrix(&g).unwrap();
        let after = terminal_distance_matrix(&sub.graph).unwrap();
        for (r0, r1) in before.iter().zip(&after) {
            for (a, b) in r0.iter().zip(r1) {
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }
    }

    #[test]
    fn uniform_scaling_keeps_distortion(g in arb_graph(20), seed in any::<u64>(), c in 0.1f64..10.0) {
        let scaled = WeightedGraph::new(
            g.vertex_count(),
            g.edges().iter().map(|e| Edge { weight: c * e.weight, ..*e }).collect(),
            g.terminals().to_vec(),
        ).unwrap();
        let p = SprParams::new(g.terminal_count(), seed);
        let a = run_and_contract(&g, &p).unwrap();
        let b = run_and_contract(&scaled, &p).unwrap();
        prop_assert_eq!(a.partition, b.partition);
        prop_assert!((a.report.max_ratio() - b.report.max_ratio()).abs() < 1e-9);
    }
}
