//! Terminal partitions, the minors they induce, and distortion reports.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::paths::shortest_paths;

/// Assignment of vertices to terminal indices. A valid partition assigns
/// every vertex, puts terminal `j` in cluster `j`, and has connected clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalPartition {
    assignment: Vec<Option<usize>>,
}

impl TerminalPartition {
    pub fn new(assignment: Vec<Option<usize>>) -> Self {
        TerminalPartition { assignment }
    }

    pub fn from_total(assignment: Vec<usize>) -> Self {
        TerminalPartition {
            assignment: assignment.into_iter().map(Some).collect(),
        }
    }

    /// Every vertex in the single cluster of terminal 0.
    pub fn single(n: usize) -> Self {
        Self::from_total(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_of(&self, v: usize) -> Option<usize> {
        self.assignment.get(v).copied().flatten()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Members of each cluster `0..k`, in increasing vertex order.
    pub fn clusters(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); k];
        for (v, a) in self.assignment.iter().enumerate() {
            if let Some(j) = *a {
                if j < k {
                    out[j].push(v);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    LengthMismatch { expected: usize, found: usize },
    Unassigned { vertex: usize },
    OutOfRange { vertex: usize, cluster: usize },
    TerminalMisassigned { terminal: usize, vertex: usize, assigned: Option<usize> },
    /// `first` and `second` lie in different components of the cluster.
    DisconnectedCluster { cluster: usize, components: usize, first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { expected, found } => {
                write!(f, "assignment covers {found} vertices, graph has {expected}")
            }
            Violation::Unassigned { vertex } => write!(f, "vertex {vertex} is unassigned"),
            Violation::OutOfRange { vertex, cluster } => {
                write!(f, "vertex {vertex} assigned to nonexistent cluster {cluster}")
            }
            Violation::TerminalMisassigned { terminal, vertex, assigned } => write!(
                f,
                "terminal {terminal} (vertex {vertex}) assigned to {}",
                assigned.map_or("nothing".to_string(), |a| format!("cluster {a}"))
            ),
            Violation::DisconnectedCluster { cluster, components, first, second } => write!(
                f,
                "cluster {cluster} has {components} components; {first} and {second} are not connected inside it"
            ),
        }
    }
}

/// Checks the terminal-partition conditions. An empty result means valid.
pub fn validate_partition(graph: &WeightedGraph, partition: &TerminalPartition) -> Vec<Violation> {
    let n = graph.vertex_count();
    let k = graph.terminal_count();
    let mut out = Vec::new();
    if partition.len() != n {
        out.push(Violation::LengthMismatch {
            expected: n,
            found: partition.len(),
        });
        return out;
    }
    for v in 0..n {
        match partition.cluster_of(v) {
            None => out.push(Violation::Unassigned { vertex: v }),
            Some(c) if c >= k => out.push(Violation::OutOfRange { vertex: v, cluster: c }),
            Some(_) => {}
        }
    }
    for (j, &t) in graph.terminals().iter().enumerate() {
        let a = partition.cluster_of(t);
        if a != Some(j) {
            out.push(Violation::TerminalMisassigned {
                terminal: j,
                vertex: t,
                assigned: a,
            });
        }
    }

    // Component labelling restricted to same-cluster edges.
    let mut comp = vec![usize::MAX; n];
    let mut reps: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut stack = Vec::new();
    for v in 0..n {
        let Some(c) = partition.cluster_of(v).filter(|&c| c < k) else {
            continue;
        };
        if comp[v] != usize::MAX {
            continue;
        }
        comp[v] = v;
        reps[c].push(v);
        stack.push(v);
        while let Some(x) = stack.pop() {
            for &(u, _) in graph.neighbors(x) {
                if comp[u] == usize::MAX && partition.cluster_of(u) == Some(c) {
                    comp[u] = v;
                    stack.push(u);
                }
            }
        }
    }
    for (c, r) in reps.iter().enumerate() {
        if r.len() > 1 {
            out.push(Violation::DisconnectedCluster {
                cluster: c,
                components: r.len(),
                first: r[0],
                second: r[1],
            });
        }
    }
    out
}

/// `d_G(t_i, t_j)` for all terminal pairs. Errors if some pair is unreachable.
pub fn terminal_distance_matrix(graph: &WeightedGraph) -> Result<Vec<Vec<f64>>> {
    let terminals = graph.terminals();
    let mut out = Vec::with_capacity(terminals.len());
    for &s in terminals {
        let dm = shortest_paths(graph, s)?;
        let row = terminals
            .iter()
            .map(|&t| {
                dm.distance(t).ok_or(Error::Disconnected {
                    from: s,
                    unreachable: t,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Minor on terminal indices `0..k`. Every edge `{i, j}` carries
/// `d_G(t_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedMinor {
    k: usize,
    edges: Vec<Edge>,
    graph_distances: Vec<Vec<f64>>,
}

impl InducedMinor {
    pub fn terminal_count(&self) -> usize {
        self.k
    }

    /// Minor edges with `u < v`, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&(a, b))).is_ok()
    }

    pub fn graph_distances(&self) -> &[Vec<f64>] {
        &self.graph_distances
    }

    /// All-pairs distances inside the minor; `None` when disconnected.
    /// `d_M(t, t) = 0` is implicit.
    pub fn minor_distances(&self) -> Vec<Vec<Option<f64>>> {
        let k = self.k;
        let mut d = vec![vec![None; k]; k];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0.0);
        }
        for e in &self.edges {
            d[e.u][e.v] = Some(e.weight);
            d[e.v][e.u] = Some(e.weight);
        }
        for m in 0..k {
            for i in 0..k {
                let Some(im) = d[i][m] else { continue };
                for j in 0..k {
                    let Some(mj) = d[m][j] else { continue };
                    let cand = im + mj;
                    if d[i][j].is_none_or(|ij| cand < ij) {
                        d[i][j] = Some(cand);
                    }
                }
            }
        }
        d
    }

    /// Distortion using the stored graph distances.
    pub fn report(&self) -> Result<DistortionReport> {
        report_from(&self.minor_distances(), &self.graph_distances)
    }

    /// Reads back a minor written by [`InducedMinor::to_graph`]: vertices are
    /// matched to `parent`'s terminals by label and edge weights are kept.
    pub fn from_graph(parent: &WeightedGraph, minor: &WeightedGraph) -> Result<Self> {
        let k = parent.terminal_count();
        if minor.vertex_count() != k {
            return Err(Error::arg(format!(
                "minor has {} vertices, graph has {k} terminals",
                minor.vertex_count()
            )));
        }
        let mut index = vec![usize::MAX; k];
        for v in 0..k {
            let label = minor.label(v);
            let j = parent
                .vertex_by_label(&label)
                .and_then(|u| parent.terminal_index(u))
                .ok_or_else(|| Error::arg(format!("minor vertex {label} is not a terminal of the graph")))?;
            if index.contains(&j) {
                return Err(Error::arg(format!("terminal {label} appears twice in the minor")));
            }
            index[v] = j;
        }
        let mut edges: Vec<Edge> = minor
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (index[e.u], index[e.v]);
                Edge { u: a.min(b), v: a.max(b), weight: e.weight }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        Ok(InducedMinor {
            k,
            edges,
            graph_distances: terminal_distance_matrix(parent)?,
        })
    }

    /// The minor as a graph on `k` vertices, all terminals, labelled with the
    /// parent graph's terminal labels.
    pub fn to_graph(&self, parent: &WeightedGraph) -> Result<WeightedGraph> {
        let g = WeightedGraph::new(self.k, self.edges.clone(), (0..self.k).collect())?;
        g.with_labels(parent.terminals().iter().map(|&t| parent.label(t)).collect())
    }
}

/// Contracts each cluster onto its terminal.
pub fn contract(graph: &WeightedGraph, partition: &TerminalPartition) -> Result<InducedMinor> {
    let dg = terminal_distance_matrix(graph)?;
    contract_with_distances(graph, partition, dg)
}

/// As [`contract`], reusing a precomputed terminal distance matrix.
pub fn contract_with_distances(
    graph: &WeightedGraph,
    partition: &TerminalPartition,
    graph_distances: Vec<Vec<f64>>,
) -> Result<InducedMinor> {
    let violations = validate_partition(graph, partition);
    if !violations.is_empty() {
        return Err(Error::InvalidPartition(violations));
    }
    let k = graph.terminal_count();
    if graph_distances.len() != k {
        return Err(Error::arg("terminal distance matrix has wrong size"));
    }
    let mut present = vec![false; k * k];
    for e in graph.edges() {
        let (a, b) = (
            partition.cluster_of(e.u).unwrap(),
            partition.cluster_of(e.v).unwrap(),
        );
        if a != b {
            present[a.min(b) * k + a.max(b)] = true;
        }
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if present[i * k + j] {
                edges.push(Edge {
                    u: i,
                    v: j,
                    weight: graph_distances[i][j],
                });
            }
        }
    }
    Ok(InducedMinor {
        k,
        edges,
        graph_distances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "dG")]
    pub d_graph: f64,
    #[serde(rename = "dM")]
    pub d_minor: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRatio {
    pub i: usize,
    pub j: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pairs: Vec<PairRatio>,
    /// `None` when there is no terminal pair (k = 1).
    pub max: Option<MaxRatio>,
}

impl DistortionReport {
    /// Maximum ratio; 1 when there are no pairs.
    pub fn max_ratio(&self) -> f64 {
        self.max.map_or(1.0, |m| m.ratio)
    }

    pub fn mean_ratio(&self) -> f64 {
        if self.pairs.is_empty() {
            1.0
        } else {
            self.pairs.iter().map(|p| p.ratio).sum::<f64>() / self.pairs.len() as f64
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn report_from(dm: &[Vec<Option<f64>>], dg: &[Vec<f64>]) -> Result<DistortionReport> {
    let k = dg.len();
    let mut pairs = Vec::new();
    let mut max: Option<MaxRatio> = None;
    for i in 0..k {
        for j in i + 1..k {
            let d_minor = dm[i][j].ok_or_else(|| {
                Error::arg(format!("terminals {i} and {j} are disconnected in the minor"))
            })?;
            let d_graph = dg[i][j];
            let ratio = d_minor / d_graph;
            if max.is_none_or(|m| ratio > m.ratio) {
                max = Some(MaxRatio { i, j, ratio });
            }
            pairs.push(PairRatio { i, j, d_graph, d_minor, ratio });
        }
    }
    Ok(DistortionReport { pairs, max })
}

/// Distortion of `minor` against fresh shortest-path distances in `graph`.
pub fn distortion(graph: &WeightedGraph, minor: &InducedMinor) -> Result<DistortionReport> {
    if minor.terminal_count() != graph.terminal_count() {
        return Err(Error::arg(format!(
            "minor has {} terminals, graph has {}",
            minor.terminal_count(),
            graph.terminal_count()
        )));
    }
    let dg = terminal_distance_matrix(graph)?;
    report_from(&minor.minor_distances(), &dg)
}
