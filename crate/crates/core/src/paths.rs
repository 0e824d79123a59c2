//! Single-source shortest paths, balls and bounded searches on restricted
//! vertex sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{eq_rel, WeightedGraph};

/// Min-heap entry ordered by distance, then by vertex id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapEntry {
    pub dist: f64,
    pub vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances from one source. Unreachable vertices have `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    source: usize,
    dist: Vec<Option<f64>>,
    pred: Vec<Option<usize>>,
}

impl DistanceMap {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distance(&self, v: usize) -> Option<f64> {
        self.dist.get(v).copied().flatten()
    }

    pub fn is_reachable(&self, v: usize) -> bool {
        self.distance(v).is_some()
    }

    pub fn distances(&self) -> &[Option<f64>] {
        &self.dist
    }

    pub fn predecessor(&self, v: usize) -> Option<usize> {
        self.pred[v]
    }

    /// Canonical shortest path `source, ..., target`. Among predecessors of
    /// equal length the lowest vertex id wins.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        self.distance(target)?;
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Exact single-source shortest paths (Dijkstra).
pub fn shortest_paths(graph: &WeightedGraph, source: usize) -> Result<DistanceMap> {
    graph.check_vertex(source)?;
    let n = graph.vertex_count();
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0.0);
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: x }) = heap.pop() {
        if settled[x] {
            continue;
        }
        settled[x] = true;
        for &(u, w) in graph.neighbors(x) {
            if settled[u] {
                continue;
            }
            let cand = d + w;
            match dist[u] {
                None => {
                    dist[u] = Some(cand);
                    pred[u] = Some(x);
                    heap.push(HeapEntry { dist: cand, vertex: u });
                }
                Some(du) if eq_rel(cand, du) => {
                    if pred[u].is_none_or(|p| x < p) {
                        pred[u] = Some(x);
                    }
                    if cand < du {
                        dist[u] = Some(cand);
                        heap.push(HeapEntry { dist: cand, vertex: u });
                    }
                }
                Some(du) if cand < du => {
                    dist[u] = Some(cand);
                    pred[u] = Some(x);
                    heap.push(HeapEntry { dist: cand, vertex: u });
                }
                Some(_) => {}
            }
        }
    }
    Ok(DistanceMap { source, dist, pred })
}

/// `B(center, radius) = { u : d(center, u) <= radius }`, sorted by id.
pub fn ball(graph: &WeightedGraph, center: usize, radius: f64) -> Result<Vec<usize>> {
    graph.check_vertex(center)?;
    if !(radius >= 0.0) {
        return Err(Error::arg(format!("ball radius must be nonnegative, got {radius}")));
    }
    let mut search = BoundedSearch::new(graph.vertex_count());
    let mut out: Vec<usize> = search
        .run(graph, center, radius, |_| true)
        .iter()
        .map(|&(v, _)| v)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Distance from every vertex to its nearest terminal, `D(v)`. `None` if no
/// terminal is reachable.
pub fn nearest_terminal_distances(graph: &WeightedGraph) -> Vec<Option<f64>> {
    distances_from_set(graph, graph.terminals())
}

/// Distance from every vertex to the nearest of `sources`, without
/// predecessors.
pub fn distances_from_set(graph: &WeightedGraph, sources: &[usize]) -> Vec<Option<f64>> {
    let n = graph.vertex_count();
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &t in sources {
        dist[t] = Some(0.0);
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
                heap.push(HeapEntry { dist: cand, vertex: u });
            }
        }
    }
    dist
}

/// Reusable Dijkstra workspace for radius-bounded searches confined to an
/// allowed vertex set. Reset cost is proportional to the vertices touched,
/// not to the graph size.
#[derive(Debug, Clone)]
pub struct BoundedSearch {
    dist: Vec<f64>,
    stamp: Vec<u32>,
    done: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<HeapEntry>,
    settled: Vec<(usize, f64)>,
}

impl BoundedSearch {
    pub fn new(n: usize) -> Self {
        BoundedSearch {
            dist: vec![0.0; n],
            stamp: vec![0; n],
            done: vec![0; n],
            epoch: 0,
            heap: BinaryHeap::new(),
            settled: Vec::new(),
        }
    }

    fn next_epoch(&mut self) {
        if self.epoch == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.done.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }

    /// Settles every allowed vertex within `bound` of `source` (inclusive)
    /// using only allowed vertices as intermediates. Returns `(vertex, dist)`
    /// in settling order. `source` is always settled at distance 0.
    pub fn run<F>(&mut self, graph: &WeightedGraph, source: usize, bound: f64, allowed: F) -> &[(usize, f64)]
    where
        F: Fn(usize) -> bool,
    {
        self.next_epoch();
        let epoch = self.epoch;
        self.heap.clear();
        self.settled.clear();
        self.dist[source] = 0.0;
        self.stamp[source] = epoch;
        self.heap.push(HeapEntry {
            dist: 0.0,
            vertex: source,
        });
        while let Some(HeapEntry { dist: d, vertex: x }) = self.heap.pop() {
            if self.done[x] == epoch {
                continue;
            }
            if d > bound {
                break;
            }
            self.done[x] = epoch;
            self.settled.push((x, d));
            for &(u, w) in graph.neighbors(x) {
                if self.done[u] == epoch || !allowed(u) {
                    continue;
                }
                let cand = d + w;
                if cand > bound {
                    continue;
                }
                if self.stamp[u] != epoch || cand < self.dist[u] {
                    self.stamp[u] = epoch;
                    self.dist[u] = cand;
                    self.heap.push(HeapEntry { dist: cand, vertex: u });
                }
            }
        }
        &self.settled
    }
}
