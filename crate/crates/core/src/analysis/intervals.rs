//! Greedy interval partition of a shortest terminal-to-terminal path.
//!
//! Path `P = (v_0 = t, v_1, ..., v_L = t')`. Starting at `h = 1`, the next
//! interval is `{v_h, ..., v_{h+s}}` for the least `s` with
//! `L+({v_h..v_{h+s}}) >= beta D(v_h)`, or the rest of the interior if no
//! such `s` exists, where `beta = c_int delta / ln k`, `L(Q)` is the distance
//! between the ends of `Q` and `L+(Q)` the distance between the path
//! neighbours just outside `Q`. Each interval is anchored at its first vertex.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{le_rel, WeightedGraph};
use crate::params::SprParams;
use crate::paths::{distances_from_set, nearest_terminal_distances, shortest_paths, DistanceMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// First path index (inclusive).
    pub start: usize,
    /// Last path index (inclusive).
    pub end: usize,
    /// `L(Q)`.
    pub internal: f64,
    /// `L+(Q)`.
    pub external: f64,
    /// `D(u_Q)` of the anchor `u_Q = v_start`, graph units.
    pub anchor_nearest: f64,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.start <= idx && idx <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    /// Terminal indices of the endpoints.
    pub from: usize,
    pub to: usize,
    /// Vertex ids along the path, `path[0]` = `t`, `path[L]` = `t'`.
    pub path: Vec<usize>,
    /// `prefix[i] = d_G(t, v_i)`.
    pub prefix: Vec<f64>,
    /// `D(v_i)` in graph units.
    pub nearest: Vec<f64>,
    pub factor: f64,
    pub intervals: Vec<Interval>,
    /// Interval id per path index; `usize::MAX` at the endpoints.
    pub interval_of: Vec<usize>,
    pub k: usize,
    #[serde(skip)]
    cache: TerminalDistances,
}

/// `d_G(v_i, t_m)` along the path, computed per terminal on first use.
#[derive(Debug, Default)]
struct TerminalDistances(Mutex<BTreeMap<usize, Arc<Vec<f64>>>>);

impl Clone for TerminalDistances {
    fn clone(&self) -> Self {
        TerminalDistances(Mutex::new(self.0.lock().unwrap().clone()))
    }
}

impl PartialEq for TerminalDistances {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl IntervalPartition {
    /// Runs the greedy sweep over a path given its prefix distances and `D`
    /// values (graph units).
    pub fn from_path(
        (from, to): (usize, usize),
        path: Vec<usize>,
        prefix: Vec<f64>,
        nearest: Vec<f64>,
        factor: f64,
        k: usize,
    ) -> Self {
        let (intervals, interval_of) = sweep(&prefix, &nearest, factor);
        IntervalPartition {
            from,
            to,
            path,
            prefix,
            nearest,
            factor,
            intervals,
            interval_of,
            k,
            cache: TerminalDistances::default(),
        }
    }

    /// `Delta = d_G(t, t')`.
    pub fn length(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// `L`, the number of edges on the path.
    pub fn edge_count(&self) -> usize {
        self.path.len() - 1
    }

    pub fn external_sum(&self) -> f64 {
        self.intervals.iter().map(|q| q.external).sum()
    }

    /// `d_G(v_idx, t_terminal)`; the first call per terminal runs Dijkstra
    /// on `graph`, which must be the graph the partition was built on.
    pub fn dist_to_terminal(&self, graph: &WeightedGraph, idx: usize, terminal: usize) -> Result<f64> {
        if terminal >= self.k || terminal >= graph.terminal_count() {
            return Err(Error::arg(format!("terminal index {terminal} out of range")));
        }
        let hit = self.cache.0.lock().unwrap().get(&terminal).cloned();
        let row = match hit {
            Some(r) => r,
            None => {
                let t = graph.terminals()[terminal];
                let dist = distances_from_set(graph, &[t]);
                let row: Vec<f64> = self
                    .path
                    .iter()
                    .map(|&v| dist.get(v).copied().flatten().ok_or(Error::Disconnected {
                        from: graph.terminals()[terminal],
                        unreachable: v,
                    }))
                    .collect::<Result<_>>()?;
                let row = Arc::new(row);
                self.cache.0.lock().unwrap().entry(terminal).or_insert(row).clone()
            }
        };
        Ok(row[idx])
    }

    /// Structural invariants: tiling of the interior, the double inequality
    /// `L(Q) <= beta D(u_Q) <= L+(Q)` for every interval, and
    /// `Delta <= sum L+ <= 2 Delta`. A forced last interval meets the right
    /// half too when `beta <= 1`, since `D(u) <= d(u, t')`.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let last = self.edge_count();
        let mut next = 1;
        for (id, q) in self.intervals.iter().enumerate() {
            if q.start != next || q.end < q.start || q.end >= last {
                out.push(format!("interval {id} = [{}, {}] does not continue the tiling at {next}", q.start, q.end));
            }
            next = q.end + 1;
            let target = self.factor * q.anchor_nearest;
            if !le_rel(q.internal, target) {
                out.push(format!("interval {id}: L = {} exceeds beta D(u) = {target}", q.internal));
            }
            if !le_rel(target, q.external) {
                out.push(format!("interval {id}: L+ = {} below beta D(u) = {target}", q.external));
            }
        }
        if last >= 2 && next != last {
            out.push(format!("intervals end at {}, interior ends at {}", next - 1, last - 1));
        }
        let (sum, delta) = (self.external_sum(), self.length());
        if !self.intervals.is_empty() && !(le_rel(delta, sum) && le_rel(sum, 2.0 * delta)) {
            out.push(format!("sum of L+ = {sum} outside [{delta}, {}]", 2.0 * delta));
        }
        out
    }
}

/// Greedy sweep over a path given its prefix distances and `D` values.
pub fn sweep(prefix: &[f64], nearest: &[f64], factor: f64) -> (Vec<Interval>, Vec<usize>) {
    let last = prefix.len() - 1;
    let mut intervals = Vec::new();
    let mut interval_of = vec![usize::MAX; prefix.len()];
    let mut h = 1;
    while h < last {
        let target = factor * nearest[h];
        let mut e = h;
        while e + 1 < last && prefix[e + 1] - prefix[h - 1] < target {
            e += 1;
        }
        for slot in &mut interval_of[h..=e] {
            *slot = intervals.len();
        }
        intervals.push(Interval {
            start: h,
            end: e,
            internal: prefix[e] - prefix[h],
            external: prefix[e + 1] - prefix[h - 1],
            anchor_nearest: nearest[h],
        });
        h = e + 1;
    }
    (intervals, interval_of)
}

/// Interval partitions for a set of terminal pairs on one graph, sharing the
/// per-terminal distance computations.
#[derive(Debug, Clone)]
pub struct AnalysisContext {
    pub params: SprParams,
    pub partitions: Vec<IntervalPartition>,
}

impl AnalysisContext {
    /// `pairs` are terminal indices. Fails with [`Error::InteriorTerminal`] if
    /// a canonical path passes through a third terminal.
    pub fn new(graph: &WeightedGraph, params: &SprParams, pairs: &[(usize, usize)]) -> Result<Self> {
        let k = graph.terminal_count();
        let params = SprParams { k, ..*params };
        params.validate()?;
        if k < 2 {
            return Err(Error::arg("interval analysis needs at least two terminals"));
        }
        graph.require_connected()?;
        let terminals = graph.terminals();
        let nearest = nearest_terminal_distances(graph);
        let factor = params.interval_factor();

        for &(i, j) in pairs {
            if i >= k || j >= k || i == j {
                return Err(Error::arg(format!("invalid terminal pair ({i}, {j}) with k = {k}")));
            }
        }
        // One Dijkstra per distinct source, pairs kept in input order.
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&p| pairs[p].0);
        let mut parts: Vec<Option<IntervalPartition>> = vec![None; pairs.len()];
        let mut cached: Option<(usize, DistanceMap)> = None;
        for p in order {
            let (i, j) = pairs[p];
            if cached.as_ref().is_none_or(|c| c.0 != i) {
                cached = Some((i, shortest_paths(graph, terminals[i])?));
            }
            let map = &cached.as_ref().unwrap().1;
            let path = map.path_to(terminals[j]).ok_or(Error::Disconnected {
                from: terminals[i],
                unreachable: terminals[j],
            })?;
            if let Some(&t) = path[1..path.len() - 1].iter().find(|&&v| graph.is_terminal(v)) {
                return Err(Error::InteriorTerminal {
                    from: i,
                    to: j,
                    interior: graph.terminal_index(t).unwrap(),
                });
            }
            let prefix: Vec<f64> = path.iter().map(|&v| map.distance(v).unwrap()).collect();
            let near: Vec<f64> = path.iter().map(|&v| nearest[v].unwrap()).collect();
            parts[p] = Some(IntervalPartition::from_path((i, j), path, prefix, near, factor, k));
        }
        let parts = parts.into_iter().map(Option::unwrap).collect();
        Ok(AnalysisContext { params, partitions: parts })
    }
}

/// Splits the canonical path between terminals `from` and `to` at every
/// terminal on it, giving consecutive pairs whose paths are terminal-free.
pub fn terminal_free_pairs(graph: &WeightedGraph, from: usize, to: usize) -> Result<Vec<(usize, usize)>> {
    let k = graph.terminal_count();
    if from >= k || to >= k || from == to {
        return Err(Error::arg(format!("invalid terminal pair ({from}, {to}) with k = {k}")));
    }
    let map = shortest_paths(graph, graph.terminals()[from])?;
    let path = map.path_to(graph.terminals()[to]).ok_or(Error::Disconnected {
        from: graph.terminals()[from],
        unreachable: graph.terminals()[to],
    })?;
    let stops: Vec<usize> = path.iter().filter_map(|&v| graph.terminal_index(v)).collect();
    Ok(stops.windows(2).map(|w| (w[0], w[1])).collect())
}

/// Interval partition of the canonical shortest path between terminals
/// `from` and `to` (terminal indices).
pub fn build_interval_partition(
    graph: &WeightedGraph,
    from: usize,
    to: usize,
    params: &SprParams,
) -> Result<IntervalPartition> {
    Ok(AnalysisContext::new(graph, params, &[(from, to)])?
        .partitions
        .pop()
        .unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn path_graph(n: usize, w: f64) -> WeightedGraph {
        let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, weight: w }).collect();
        WeightedGraph::new(n, edges, vec![0, n - 1]).unwrap()
    }

    #[test]
    fn sweep_by_hand() {
        // Unit edges, D(v_i) = min(i, 6 - i), factor 1.
        let prefix: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let nearest: Vec<f64> = (0..7).map(|i: i32| i.min(6 - i) as f64).collect();
        let (iv, of) = sweep(&prefix, &nearest, 1.0);
        // v1, v2: L+ = 2 reaches targets 1 and 2. v3: target 3 needs {v3, v4}.
        let spans: Vec<(usize, usize)> = iv.iter().map(|q| (q.start, q.end)).collect();
        assert_eq!(spans, vec![(1, 1), (2, 2), (3, 4), (5, 5)]);
        assert_eq!((iv[2].internal, iv[2].external), (1.0, 3.0));
        assert_eq!(of[0], usize::MAX);
        assert_eq!(of[4], 2);

        let (iv, _) = sweep(&prefix, &nearest, 3.0);
        // v1: target 3, L+({v1}) = 2, L+({v1,v2}) = 3.
        assert_eq!((iv[0].start, iv[0].end), (1, 2));
        // v3: target 9, forced to the end.
        assert_eq!((iv[1].start, iv[1].end), (3, 5));
        assert_eq!(iv.len(), 2);
    }

    #[test]
    fn invariants_on_long_path() {
        let g = path_graph(4001, 1.0);
        let p = SprParams::new(2, 0);
        let part = build_interval_partition(&g, 0, 1, &p).unwrap();
        assert!(part.violations().is_empty(), "{:?}", part.violations());
        assert_eq!(part.length(), 4000.0);
        assert!(part.intervals.len() > 10);
        assert_eq!(part.dist_to_terminal(&g, 10, 1).unwrap(), 3990.0);
        assert_eq!(part.dist_to_terminal(&g, 10, 0).unwrap(), 10.0);
        assert!(part.dist_to_terminal(&g, 10, 2).is_err());
    }

    #[test]
    fn adjacent_terminals_have_no_intervals() {
        let g = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, weight: 1.0 }], vec![0, 1]).unwrap();
        let part = build_interval_partition(&g, 0, 1, &SprParams::new(2, 0)).unwrap();
        assert!(part.intervals.is_empty());
        assert!(part.violations().is_empty());
    }

    #[test]
    fn interior_terminal_rejected() {
        let edges = (0..4).map(|i| Edge { u: i, v: i + 1, weight: 1.0 }).collect();
        let g = WeightedGraph::new(5, edges, vec![0, 2, 4]).unwrap();
        let err = build_interval_partition(&g, 0, 2, &SprParams::new(3, 0)).unwrap_err();
        assert!(matches!(err, Error::InteriorTerminal { from: 0, to: 2, interior: 1 }));
        assert!(build_interval_partition(&g, 0, 1, &SprParams::new(3, 0)).is_ok());
        assert_eq!(terminal_free_pairs(&g, 0, 2).unwrap(), vec![(0, 1), (1, 2)]);
        assert_eq!(terminal_free_pairs(&g, 2, 1).unwrap(), vec![(2, 1)]);
    }
}
