//! Randomized ball growing around terminals.
//!
//! Rounds `l = 0, 1, ...`; in each round every terminal `t_j` in order draws
//! `q ~ Exp(D r^l)`, grows its radius `R_j += q`, and absorbs every
//! unclustered vertex within `R_j` of `t_j` in the graph induced by the
//! unclustered vertices plus its own cluster. The run stops after the round in
//! which the last vertex is clustered.
//!
//! Distances are normalized so that the closest Steiner vertex is at distance 1
//! from the terminal set: increments are drawn in normalized units and scaled
//! by `scale` before use.
//!
//! Each cluster keeps its Dijkstra frontier between steps. Vertices already in
//! a cluster keep their distances (their shortest paths run inside the
//! cluster), so resuming the search is equivalent to rerunning a bounded
//! search on `G[V_free ∪ V_j]` from scratch; [`crate::verify`] replays traces
//! that way.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{Subdivision, WeightedGraph};
use crate::minor::{contract_with_distances, terminal_distance_matrix, DistortionReport, InducedMinor, TerminalPartition};
use crate::params::SprParams;
use crate::paths::{nearest_terminal_distances, HeapEntry};
use crate::rng::{sample_exponential, seeded, Stream};
use crate::trace::{RunTrace, TraceEvent, TraceParams};

const FREE: u32 = u32::MAX;

/// Smallest distance between two distinct terminals.
pub fn min_terminal_distance(graph: &WeightedGraph) -> Option<f64> {
    let n = graph.vertex_count();
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut origin = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for (j, &t) in graph.terminals().iter().enumerate() {
        dist[t] = Some(0.0);
        origin[t] = j;
        heap.push(HeapEntry { dist: 0.0, vertex: t });
    }
    while let Some(HeapEntry { dist: d, vertex: x }) = heap.pop() {
        if dist[x].is_some_and(|dx| d > dx) {
            continue;
        }
        for &(u, w) in graph.neighbors(x) {
            let cand = d + w;
            if dist[u].is_none_or(|du| cand < du) {
                dist[u] = Some(cand);
                origin[u] = origin[x];
                heap.push(HeapEntry { dist: cand, vertex: u });
            }
        }
    }
    // Every shortest terminal pair crosses an edge between two Voronoi cells.
    graph
        .edges()
        .iter()
        .filter(|e| origin[e.u] != usize::MAX && origin[e.v] != usize::MAX && origin[e.u] != origin[e.v])
        .map(|e| dist[e.u].unwrap() + e.weight + dist[e.v].unwrap())
        .min_by(f64::total_cmp)
}

/// Graph-unit length of one normalized unit: the smallest distance from a
/// Steiner vertex to the terminal set, or 1 without Steiner vertices.
/// Also returns the largest such distance in normalized units.
pub fn normalization(graph: &WeightedGraph) -> (f64, f64) {
    let d = nearest_terminal_distances(graph);
    let steiner = (0..graph.vertex_count())
        .filter(|&v| !graph.is_terminal(v))
        .filter_map(|v| d[v]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in steiner {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo.is_finite() {
        (lo, hi / lo)
    } else {
        (1.0, 1.0)
    }
}

/// Subdivides every edge heavier than `(c_w / ln k) * d_min`, with `d_min`
/// the closest terminal pair distance. One threshold for all edges gives the
/// per-pair edge bound for every terminal pair at once.
pub fn preprocess_subdivide(graph: &WeightedGraph, params: &SprParams) -> Result<Subdivision> {
    graph.require_connected()?;
    if graph.terminal_count() < 2 {
        return graph.subdivide_edges(f64::MAX);
    }
    let params = SprParams { k: graph.terminal_count(), ..*params };
    params.validate()?;
    let d_min = min_terminal_distance(graph).expect("connected graph with two terminals");
    graph.subdivide_edges(subdivision_threshold(&params, d_min))
}

pub fn subdivision_threshold(params: &SprParams, d_min: f64) -> f64 {
    params.subdivision_factor() * d_min
}

/// Runs the ball-growing clustering. Deterministic in `params.seed`.
///
/// `params.k` is overwritten by the graph's terminal count.
pub fn run_spr(graph: &WeightedGraph, params: &SprParams) -> Result<(TerminalPartition, RunTrace)> {
    let k = graph.terminal_count();
    let params = SprParams { k, ..*params };
    params.validate()?;
    graph.require_connected()?;
    let n = graph.vertex_count();
    let terminals = graph.terminals();

    let (scale, max_normalized) = normalization(graph);
    let guard = params
        .max_rounds_guard
        .unwrap_or_else(|| if k >= 2 { params.default_round_guard(max_normalized) } else { 0 });
    let mut trace = RunTrace {
        params: TraceParams {
            delta: params.delta,
            seed: params.seed,
            k,
            r: (k >= 2).then(|| params.growth_ratio()),
            base_mean: (k >= 2).then(|| params.base_mean()),
            scale,
            max_rounds: guard,
            subdivided: false,
        },
        events: Vec::new(),
        rounds: 0,
    };

    if k == 1 {
        // ln k = 0: the schedule is undefined and the only partition is trivial.
        let from_terminal = crate::paths::shortest_paths(graph, terminals[0])?;
        for v in 0..n {
            if v != terminals[0] {
                trace.events.push(TraceEvent::Cover {
                    vertex: v,
                    terminal: 0,
                    round: 0,
                    step: 0,
                    dist: from_terminal.distance(v).unwrap_or(0.0),
                });
            }
        }
        if n > 1 {
            trace.events.insert(0, TraceEvent::Radius { round: 0, step: 0, q: 0.0, radius: 0.0 });
            trace.rounds = 1;
        }
        return Ok((TerminalPartition::single(n), trace));
    }

    let mut owner = vec![FREE; n];
    let mut frontier: Vec<BinaryHeap<HeapEntry>> = vec![BinaryHeap::new(); k];
    for (j, &t) in terminals.iter().enumerate() {
        owner[t] = j as u32;
    }
    for (j, &t) in terminals.iter().enumerate() {
        for &(u, w) in graph.neighbors(t) {
            if owner[u] == FREE {
                frontier[j].push(HeapEntry { dist: w, vertex: u });
            }
        }
    }
    let mut uncovered = n - k;
    let mut radius = vec![0.0f64; k];
    let mut rng = seeded(params.seed, Stream::Engine);
    let check_rounds = cfg!(debug_assertions) && n <= 2000;

    let mut round: u64 = 0;
    while uncovered > 0 {
        if round >= guard {
            trace.rounds = round;
            return Err(Error::RoundGuardExceeded {
                rounds: round,
                uncovered,
                partial: Box::new(trace),
            });
        }
        let mean = params.round_mean(round) * scale;
        for j in 0..k {
            let q = sample_exponential(mean, &mut rng)?;
            radius[j] += q;
            let r_j = radius[j];
            trace.events.push(TraceEvent::Radius { round, step: j, q, radius: r_j });
            let heap = &mut frontier[j];
            while let Some(&HeapEntry { dist, vertex }) = heap.peek() {
                if dist > r_j {
                    break;
                }
                heap.pop();
                if owner[vertex] != FREE {
                    continue;
                }
                owner[vertex] = j as u32;
                uncovered -= 1;
                trace.events.push(TraceEvent::Cover { vertex, terminal: j, round, step: j, dist });
                for &(u, w) in graph.neighbors(vertex) {
                    if owner[u] == FREE {
                        heap.push(HeapEntry { dist: dist + w, vertex: u });
                    }
                }
            }
        }
        if check_rounds {
            debug_assert!(clusters_connected(graph, &owner));
        }
        round += 1;
    }
    trace.rounds = round;
    let partition = TerminalPartition::new(owner.iter().map(|&o| (o != FREE).then_some(o as usize)).collect());
    debug_assert!(crate::minor::validate_partition(graph, &partition).is_empty());
    Ok((partition, trace))
}

fn clusters_connected(graph: &WeightedGraph, owner: &[u32]) -> bool {
    let partial = TerminalPartition::new(owner.iter().map(|&o| (o != FREE).then_some(o as usize)).collect());
    crate::minor::validate_partition(graph, &partial)
        .iter()
        .all(|v| matches!(v, crate::minor::Violation::Unassigned { .. }))
}

#[derive(Debug, Clone)]
pub struct SprOutcome {
    pub partition: TerminalPartition,
    pub minor: InducedMinor,
    pub report: DistortionReport,
    pub trace: RunTrace,
}

/// `run_spr`, then contraction and distortion.
pub fn run_and_contract(graph: &WeightedGraph, params: &SprParams) -> Result<SprOutcome> {
    let dg = terminal_distance_matrix(graph)?;
    run_and_contract_with(graph, params, dg)
}

/// As [`run_and_contract`] with a precomputed terminal distance matrix, for
/// repeated runs on one graph.
pub fn run_and_contract_with(graph: &WeightedGraph, params: &SprParams, terminal_distances: Vec<Vec<f64>>) -> Result<SprOutcome> {
    let (partition, trace) = run_spr(graph, params)?;
    let minor = contract_with_distances(graph, &partition, terminal_distances)?;
    let report = minor.report()?;
    Ok(SprOutcome {
        partition,
        minor,
        report,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn path(weights: &[f64], terminals: Vec<usize>) -> WeightedGraph {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Edge { u: i, v: i + 1, weight: w })
            .collect();
        WeightedGraph::new(weights.len() + 1, edges, terminals).unwrap()
    }

    #[test]
    fn terminals_only_finishes_immediately() {
        let g = path(&[1.0, 2.0], vec![0, 1, 2]);
        let (p, t) = run_spr(&g, &SprParams::new(3, 5)).unwrap();
        assert_eq!(t.rounds, 0);
        assert!(t.events.is_empty());
        assert_eq!(p.assignment(), &[Some(0), Some(1), Some(2)]);
        assert_eq!(t.params.scale, 1.0);
    }

    #[test]
    fn single_terminal() {
        let g = path(&[1.0, 1.0], vec![1]);
        let (p, t) = run_spr(&g, &SprParams::new(1, 0)).unwrap();
        assert_eq!(p, TerminalPartition::single(3));
        assert_eq!(t.cover_count(), 2);
        assert_eq!(t.params.r, None);
        let out = run_and_contract(&g, &SprParams::new(1, 0)).unwrap();
        assert!(out.minor.edges().is_empty());
        assert_eq!(out.report.max_ratio(), 1.0);
    }

    #[test]
    fn path_is_never_distorted() {
        let g = path(&[1.0, 1.0], vec![0, 2]);
        for seed in 0..50 {
            let out = run_and_contract(&g, &SprParams::new(2, seed)).unwrap();
            assert_eq!(out.report.max_ratio(), 1.0);
            assert_eq!(out.minor.edges().len(), 1);
            assert_eq!(out.minor.edges()[0].weight, 2.0);
        }
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = WeightedGraph::new(3, vec![Edge { u: 0, v: 1, weight: 1.0 }], vec![0, 1]).unwrap();
        assert!(matches!(run_spr(&g, &SprParams::new(2, 0)), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn guard_reports_partial_trace() {
        let g = path(&[1.0; 30], vec![0, 30]);
        let err = run_spr(&g, &SprParams::new(2, 1).with_max_rounds(2)).unwrap_err();
        match err {
            Error::RoundGuardExceeded { rounds, uncovered, partial } => {
                assert_eq!(rounds, 2);
                assert!(uncovered > 0);
                assert_eq!(partial.rounds, 2);
                assert!(partial.events.len() >= 4);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn min_terminal_distance_matches_matrix() {
        let g = path(&[3.0, 1.0, 2.0, 0.5], vec![0, 2, 4]);
        assert_eq!(min_terminal_distance(&g), Some(2.5));
        let single = path(&[1.0], vec![0]);
        assert_eq!(min_terminal_distance(&single), None);
    }

    #[test]
    fn subdivision_threshold_two_terminals() {
        // d_min = 1, k = 2: tau = (1/2400) / ln 2
        let g = path(&[1.0], vec![0, 1]);
        let s = preprocess_subdivide(&g, &SprParams::new(2, 0)).unwrap();
        let tau = (1.0 / 2400.0) / 2f64.ln();
        let expected = (1.0 / tau).ceil() as usize;
        assert_eq!(expected, 1664);
        assert_eq!(s.graph.edge_count(), expected);
        assert!(s.graph.edges().iter().all(|e| e.weight <= tau));
    }

    #[test]
    fn short_edges_unchanged() {
        // d_min = 2000 puts tau at about 1.2.
        let g = path(&[1.0; 2000], vec![0, 2000]);
        let s = preprocess_subdivide(&g, &SprParams::new(2, 0)).unwrap();
        assert_eq!(s.added_vertices(), 0);
        let single = path(&[5.0], vec![0]);
        assert_eq!(preprocess_subdivide(&single, &SprParams::new(1, 0)).unwrap().added_vertices(), 0);
    }
}
