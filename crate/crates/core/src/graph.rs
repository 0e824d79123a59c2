//! Undirected, positively weighted graphs with a distinguished terminal list.
//!
//! Vertices are dense ids `0..n`. Terminals are kept in a fixed order; the
//! position of a terminal in that order is its *terminal index*, which is what
//! clusters, minors and traces refer to.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Relative tolerance for comparing path lengths.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to [`REL_TOL`] relative slack.
pub fn le_rel(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `a == b` up to [`REL_TOL`] relative slack.
pub fn eq_rel(a: f64, b: f64) -> bool {
    le_rel(a, b) && le_rel(b, a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    terminals: Vec<usize>,
    terminal_index: Vec<Option<usize>>,
    labels: Option<Vec<String>>,
}

impl WeightedGraph {
    /// Builds a graph, checking weights, self-loops, duplicate edges and the
    /// terminal list.
    pub fn new(n: usize, edges: Vec<Edge>, terminals: Vec<usize>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n {
                return Err(Error::UnknownVertex(e.u));
            }
            if e.v >= n {
                return Err(Error::UnknownVertex(e.v));
            }
            if e.u == e.v {
                return Err(Error::arg(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::arg(format!(
                    "edge ({}, {}) has weight {}; weights must be positive and finite",
                    e.u, e.v, e.weight
                )));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(prev) = seen.insert(key, i) {
                return Err(Error::arg(format!(
                    "edges {prev} and {i} both join {} and {}",
                    key.0, key.1
                )));
            }
        }
        let mut terminal_index = vec![None; n];
        for (j, &t) in terminals.iter().enumerate() {
            if t >= n {
                return Err(Error::UnknownVertex(t));
            }
            if terminal_index[t].is_some() {
                return Err(Error::arg(format!("vertex {t} listed as terminal twice")));
            }
            terminal_index[t] = Some(j);
        }

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![(0, 0.0); offsets[n]];
        for e in &edges {
            adjacency[fill[e.u]] = (e.v, e.weight);
            fill[e.u] += 1;
            adjacency[fill[e.v]] = (e.u, e.weight);
            fill[e.v] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_by_key(|&(u, _)| u);
        }

        Ok(WeightedGraph {
            n,
            edges,
            offsets,
            adjacency,
            terminals,
            terminal_index,
            labels: None,
        })
    }

    /// Attaches labels (one per vertex) used by the text format.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::arg(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `v` with edge weights, sorted by neighbour id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let nbrs = self.neighbors(u);
        nbrs.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| nbrs[i].1)
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    /// Terminal index of `v`, or `None` for Steiner vertices.
    pub fn terminal_index(&self, v: usize) -> Option<usize> {
        self.terminal_index[v]
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.terminal_index[v].is_some()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    /// Resolves a label (or a bare numeric id when unlabeled) to a vertex id.
    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == label),
            None => label.parse().ok().filter(|&v| v < self.n),
        }
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Returns an error naming an unreachable vertex if the graph is not connected.
    pub fn require_connected(&self) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(u, _) in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(unreachable) => Err(Error::Disconnected {
                from: 0,
                unreachable,
            }),
            None => Ok(()),
        }
    }

    /// Graph induced by `keep`. Vertices are renumbered in increasing original
    /// id order; the terminal list keeps its relative order.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<InducedSubgraph> {
        let mut original: Vec<usize> = keep.to_vec();
        original.sort_unstable();
        original.dedup();
        let mut new_id = vec![usize::MAX; self.n];
        for (i, &v) in original.iter().enumerate() {
            self.check_vertex(v)?;
            new_id[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| new_id[e.u] != usize::MAX && new_id[e.v] != usize::MAX)
            .map(|e| Edge {
                u: new_id[e.u],
                v: new_id[e.v],
                weight: e.weight,
            })
            .collect();
        let terminals = self
            .terminals
            .iter()
            .filter(|&&t| new_id[t] != usize::MAX)
            .map(|&t| new_id[t])
            .collect();
        let mut graph = WeightedGraph::new(original.len(), edges, terminals)?;
        if let Some(labels) = &self.labels {
            graph = graph.with_labels(original.iter().map(|&v| labels[v].clone()).collect())?;
        }
        Ok(InducedSubgraph { graph, original })
    }

    /// Replaces every edge heavier than `threshold` by a path of equal-weight
    /// segments through fresh degree-two Steiner vertices.
    ///
    /// The number of segments is the least `s` with `weight / s <= threshold`,
    /// i.e. `ceil(weight / threshold)`. Fresh vertices are numbered from `n`
    /// upward in edge order.
    pub fn subdivide_edges(&self, threshold: f64) -> Result<Subdivision> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::arg(format!(
                "subdivision threshold must be positive, got {threshold}"
            )));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut host_edge = Vec::new();
        let mut next = self.n;
        for (i, e) in self.edges.iter().enumerate() {
            let segments = segment_count(e.weight, threshold);
            if segments <= 1 {
                edges.push(*e);
                continue;
            }
            let piece = e.weight / segments as f64;
            let mut prev = e.u;
            for _ in 1..segments {
                edges.push(Edge {
                    u: prev,
                    v: next,
                    weight: piece,
                });
                host_edge.push(i);
                prev = next;
                next += 1;
            }
            edges.push(Edge {
                u: prev,
                v: e.v,
                weight: piece,
            });
        }
        let mut graph = WeightedGraph::new(next, edges, self.terminals.clone())?;
        if let Some(labels) = &self.labels {
            let mut all = labels.clone();
            let mut counter: HashMap<usize, usize> = HashMap::new();
            for &h in &host_edge {
                let c = counter.entry(h).or_insert(0);
                *c += 1;
                all.push(format!("~e{h}.{c}"));
            }
            graph = graph.with_labels(all)?;
        }
        Ok(Subdivision {
            graph,
            original_vertices: self.n,
            host_edge,
        })
    }

    /// Serializes in the line format read by [`WeightedGraph::read_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} vertices, {} edges, {} terminals",
            self.n,
            self.edges.len(),
            self.terminals.len()
        );
        for v in 0..self.n {
            let _ = writeln!(out, "v {}", self.label(v));
        }
        for &t in &self.terminals {
            let _ = writeln!(out, "t {}", self.label(t));
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", self.label(e.u), self.label(e.v), e.weight);
        }
        out
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Parses the line format:
    ///
    /// ```text
    /// # comment
    /// v <id>
    /// t <id>
    /// e <u> <v> <weight>
    /// ```
    ///
    /// Ids are arbitrary whitespace-free tokens, numbered densely in order of
    /// first appearance. An id first seen on a `t` or `e` line is declared
    /// implicitly.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let mut terminals = Vec::new();
        let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
            if let Some(&id) = ids.get(tok) {
                return id;
            }
            let id = labels.len();
            ids.insert(tok.to_string(), id);
            labels.push(tok.to_string());
            id
        };
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "v" => {
                    if fields.len() != 2 {
                        return Err(parse_err("expected `v <id>`".into()));
                    }
                    intern(fields[1], &mut labels);
                }
                "t" => {
                    if fields.len() != 2 {
                        return Err(parse_err("expected `t <id>`".into()));
                    }
                    let id = intern(fields[1], &mut labels);
                    if terminals.contains(&id) {
                        return Err(parse_err(format!("terminal {} declared twice", fields[1])));
                    }
                    terminals.push(id);
                }
                "e" => {
                    if fields.len() != 4 {
                        return Err(parse_err("expected `e <u> <v> <weight>`".into()));
                    }
                    let weight: f64 = fields[3]
                        .parse()
                        .map_err(|_| parse_err(format!("bad weight `{}`", fields[3])))?;
                    if !(weight.is_finite() && weight > 0.0) {
                        return Err(parse_err(format!(
                            "weight {weight} is not positive and finite"
                        )));
                    }
                    if fields[1] == fields[2] {
                        return Err(parse_err(format!("self-loop at {}", fields[1])));
                    }
                    let u = intern(fields[1], &mut labels);
                    let v = intern(fields[2], &mut labels);
                    edges.push((lineno, Edge { u, v, weight }));
                }
                other => return Err(parse_err(format!("unknown record type `{other}`"))),
            }
        }
        let mut seen = HashMap::new();
        for (lineno, e) in &edges {
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(first) = seen.insert(key, *lineno) {
                return Err(Error::Parse {
                    line: *lineno,
                    message: format!(
                        "duplicate edge {} {} (first on line {first})",
                        labels[key.0], labels[key.1]
                    ),
                });
            }
        }
        let n = labels.len();
        WeightedGraph::new(n, edges.into_iter().map(|(_, e)| e).collect(), terminals)?
            .with_labels(labels)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }
}

fn segment_count(weight: f64, threshold: f64) -> usize {
    if weight <= threshold {
        return 1;
    }
    let mut s = (weight / threshold).ceil() as usize;
    while s > 1 && weight / (s - 1) as f64 <= threshold {
        s -= 1;
    }
    while weight / s as f64 > threshold {
        s += 1;
    }
    s
}

#[derive(Debug, Clone)]
pub struct InducedSubgraph {
    pub graph: WeightedGraph,
    /// `original[i]` is the id in the parent graph of vertex `i`.
    pub original: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Subdivision {
    pub graph: WeightedGraph,
    /// Vertices `0..original_vertices` are the input vertices, unchanged.
    pub original_vertices: usize,
    /// `host_edge[i]` is the input edge index that fresh vertex
    /// `original_vertices + i` subdivides.
    pub host_edge: Vec<usize>,
}

impl Subdivision {
    pub fn added_vertices(&self) -> usize {
        self.host_edge.len()
    }

    pub fn host_of(&self, v: usize) -> Option<usize> {
        v.checked_sub(self.original_vertices)
            .and_then(|i| self.host_edge.get(i).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(
            3,
            vec![
                Edge { u: 0, v: 1, weight: 1.0 },
                Edge { u: 1, v: 2, weight: 2.0 },
                Edge { u: 0, v: 2, weight: 2.5 },
            ],
            vec![0, 2],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        let bad_weight = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, weight: 0.0 }], vec![0]);
        assert!(matches!(bad_weight, Err(Error::InvalidArgument(_))));
        let inf = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, weight: f64::INFINITY }], vec![0]);
        assert!(inf.is_err());
        let loop_ = WeightedGraph::new(2, vec![Edge { u: 1, v: 1, weight: 1.0 }], vec![0]);
        assert!(loop_.is_err());
        let dup = WeightedGraph::new(
            2,
            vec![Edge { u: 0, v: 1, weight: 1.0 }, Edge { u: 1, v: 0, weight: 2.0 }],
            vec![0],
        );
        assert!(dup.is_err());
        let dup_terminal = WeightedGraph::new(2, vec![], vec![1, 1]);
        assert!(dup_terminal.is_err());
        assert!(matches!(
            WeightedGraph::new(2, vec![], vec![5]),
            Err(Error::UnknownVertex(5))
        ));
    }

    #[test]
    fn adjacency_is_sorted() {
        let g = triangle();
        assert_eq!(g.neighbors(0), &[(1, 1.0), (2, 2.5)]);
        assert_eq!(g.edge_weight(2, 1), Some(2.0));
        assert_eq!(g.edge_weight(0, 0), None);
        assert_eq!(g.terminal_index(2), Some(1));
        assert!(!g.is_terminal(1));
    }

    #[test]
    fn induced_identity_and_triangle() {
        let g = triangle();
        let all = g.induced_subgraph(&[2, 0, 1]).unwrap();
        assert_eq!(all.graph.edges(), g.edges());
        assert_eq!(all.graph.terminals(), g.terminals());

        let pair = g.induced_subgraph(&[0, 1]).unwrap();
        assert_eq!(pair.graph.edge_count(), 1);
        assert_eq!(pair.graph.edges()[0], Edge { u: 0, v: 1, weight: 1.0 });
        assert_eq!(pair.graph.terminals(), &[0]);
        assert!(g.induced_subgraph(&[7]).is_err());
    }

    #[test]
    fn subdivision_counts() {
        let g = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, weight: 1.0 }], vec![0, 1]).unwrap();
        let same = g.subdivide_edges(1.0).unwrap();
        assert_eq!(same.graph.vertex_count(), 2);
        assert_eq!(same.added_vertices(), 0);

        let split = g.subdivide_edges(0.3).unwrap();
        assert_eq!(split.graph.edge_count(), 4);
        assert_eq!(split.added_vertices(), 3);
        for e in split.graph.edges() {
            assert_eq!(e.weight, 0.25);
        }
        for v in 2..5 {
            assert_eq!(split.graph.degree(v), 2);
            assert_eq!(split.host_of(v), Some(0));
        }
        assert_eq!(split.host_of(1), None);
        assert!(g.subdivide_edges(0.0).is_err());
        assert!(g.subdivide_edges(-1.0).is_err());
    }

    #[test]
    fn segment_count_is_minimal() {
        // 0.9 / 0.3 rounds to slightly above 3 in binary.
        assert_eq!(segment_count(0.9, 0.3), 3);
        assert_eq!(segment_count(1.0, 0.3), 4);
        assert_eq!(segment_count(1.0, 0.5), 2);
        assert_eq!(segment_count(0.2, 0.5), 1);
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let text = "# demo\nv a\nv b\nt a\nt c\ne a b 1.5\ne b c 2\n";
        let g = WeightedGraph::from_text(text).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.terminals(), &[0, 2]);
        assert_eq!(g.vertex_by_label("c"), Some(2));
        let again = WeightedGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(again.edges(), g.edges());
        assert_eq!(again.terminals(), g.terminals());
        assert_eq!(again.labels(), g.labels());

        let err = WeightedGraph::from_text("v a\ne a b x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = WeightedGraph::from_text("e a b 1\n\ne b a 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = WeightedGraph::from_text("q 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = WeightedGraph::from_text("e a b -1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn connectivity() {
        let g = WeightedGraph::new(3, vec![Edge { u: 0, v: 1, weight: 1.0 }], vec![0]).unwrap();
        assert!(matches!(
            g.require_connected(),
            Err(Error::Disconnected { unreachable: 2, .. })
        ));
        triangle().require_connected().unwrap();
    }
}
