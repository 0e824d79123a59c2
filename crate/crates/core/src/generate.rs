//! Seeded graph generators.
//!
//! Every generator is a pure function of its parameters and seed. Random
//! choices draw from [`Stream::Generator`].

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::rng::{seeded, Stream};

/// Attempts before random-weighted generation gives up on connectivity.
pub const CONNECTIVITY_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridTerminals {
    Corners,
    Random,
}

/// A generator family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    /// `n` vertices in a line; `k` terminals spread evenly, ends included.
    Path {
        n: usize,
        #[serde(default = "two")]
        k: usize,
    },
    /// `n` vertices in a ring with `k` evenly spaced terminals.
    Cycle { n: usize, k: usize },
    /// A Steiner centre joined to `leaves` terminals.
    Star { leaves: usize },
    /// Complete binary tree of the given depth; the leaves are the terminals.
    CompleteBinaryTree { depth: u32 },
    /// `width x height` grid; corner terminals or `k` random ones.
    Grid {
        width: usize,
        height: usize,
        terminals: GridTerminals,
        #[serde(default)]
        k: Option<usize>,
    },
    /// Erdős–Rényi graph with uniform weights in `[min_weight, max_weight]`
    /// and `k` random terminals, redrawn until connected.
    RandomWeighted {
        n: usize,
        edge_prob: f64,
        k: usize,
        #[serde(default = "one")]
        min_weight: f64,
        #[serde(default = "two_f")]
        max_weight: f64,
    },
}

fn two() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

fn two_f() -> f64 {
    2.0
}

impl GraphSpec {
    pub fn family(&self) -> &'static str {
        match self {
            GraphSpec::Path { .. } => "path",
            GraphSpec::Cycle { .. } => "cycle",
            GraphSpec::Star { .. } => "star",
            GraphSpec::CompleteBinaryTree { .. } => "complete-binary-tree",
            GraphSpec::Grid { .. } => "grid",
            GraphSpec::RandomWeighted { .. } => "random-weighted",
        }
    }

    /// Same family with the terminal count replaced, where the family has one.
    pub fn with_k(&self, k: usize) -> Result<GraphSpec> {
        let mut s = self.clone();
        match &mut s {
            GraphSpec::Path { k: x, .. } | GraphSpec::Cycle { k: x, .. } | GraphSpec::RandomWeighted { k: x, .. } => *x = k,
            GraphSpec::Star { leaves } => *leaves = k,
            GraphSpec::Grid { k: x, terminals, .. } => {
                *terminals = GridTerminals::Random;
                *x = Some(k);
            }
            GraphSpec::CompleteBinaryTree { depth } => {
                if !k.is_power_of_two() || k < 2 {
                    return Err(Error::arg(format!("a complete binary tree cannot have {k} leaves")));
                }
                *depth = k.trailing_zeros();
            }
        }
        Ok(s)
    }

    pub fn generate(&self, seed: u64) -> Result<WeightedGraph> {
        match *self {
            GraphSpec::Path { n, k } => path(n, k),
            GraphSpec::Cycle { n, k } => cycle(n, k),
            GraphSpec::Star { leaves } => star(leaves),
            GraphSpec::CompleteBinaryTree { depth } => complete_binary_tree(depth),
            GraphSpec::Grid { width, height, terminals, k } => grid(width, height, terminals, k, seed),
            GraphSpec::RandomWeighted { n, edge_prob, k, min_weight, max_weight } => {
                random_weighted(n, edge_prob, k, min_weight, max_weight, seed)
            }
        }
    }
}

fn unit_edges(pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<Edge> {
    pairs.into_iter().map(|(u, v)| Edge { u, v, weight: 1.0 }).collect()
}

/// `k` indices spread evenly over `0..n`, `0` and `n - 1` included.
fn spread(n: usize, k: usize) -> Vec<usize> {
    if k == 1 {
        return vec![0];
    }
    (0..k).map(|i| i * (n - 1) / (k - 1)).collect()
}

pub fn path(n: usize, k: usize) -> Result<WeightedGraph> {
    if k == 0 || n < k || (k > 1 && n < 2) {
        return Err(Error::arg(format!("path needs 1 <= k <= n, got n = {n}, k = {k}")));
    }
    WeightedGraph::new(n, unit_edges((1..n).map(|i| (i - 1, i))), spread(n, k))
}

pub fn cycle(n: usize, k: usize) -> Result<WeightedGraph> {
    if n < 3 || k == 0 || k > n {
        return Err(Error::arg(format!("cycle needs n >= 3 and 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let terminals = (0..k).map(|i| i * n / k).collect();
    WeightedGraph::new(n, unit_edges((0..n).map(|i| (i, (i + 1) % n))), terminals)
}

pub fn star(leaves: usize) -> Result<WeightedGraph> {
    if leaves == 0 {
        return Err(Error::arg("star needs at least one leaf"));
    }
    WeightedGraph::new(leaves + 1, unit_edges((1..=leaves).map(|i| (0, i))), (1..=leaves).collect())
}

/// Heap-numbered: children of `i` are `2i + 1` and `2i + 2`.
pub fn complete_binary_tree(depth: u32) -> Result<WeightedGraph> {
    if depth == 0 || depth > 20 {
        return Err(Error::arg(format!("binary tree depth must be in 1..=20, got {depth}")));
    }
    let n = (1usize << (depth + 1)) - 1;
    let leaves = (1usize << depth) - 1..n;
    WeightedGraph::new(n, unit_edges((1..n).map(|i| ((i - 1) / 2, i))), leaves.collect())
}

/// Vertex `(x, y)` is `y * width + x`.
pub fn grid(width: usize, height: usize, terminals: GridTerminals, k: Option<usize>, seed: u64) -> Result<WeightedGraph> {
    if width < 2 || height < 2 {
        return Err(Error::arg(format!("grid needs both sides >= 2, got {width} x {height}")));
    }
    let n = width * height;
    let mut pairs = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let v = y * width + x;
            if x + 1 < width {
                pairs.push((v, v + 1));
            }
            if y + 1 < height {
                pairs.push((v, v + width));
            }
        }
    }
    let terms = match terminals {
        GridTerminals::Corners => {
            if k.is_some_and(|k| k != 4) {
                return Err(Error::arg("corner terminals fix k = 4"));
            }
            vec![0, width - 1, n - width, n - 1]
        }
        GridTerminals::Random => {
            let k = k.ok_or_else(|| Error::arg("random grid terminals need k"))?;
            random_subset(n, k, seed)?
        }
    };
    WeightedGraph::new(n, unit_edges(pairs), terms)
}

fn random_subset(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::arg(format!("cannot pick {k} terminals out of {n} vertices")));
    }
    let mut rng = seeded(seed, Stream::Generator);
    let mut t = sample(&mut rng, n, k).into_vec();
    t.sort_unstable();
    Ok(t)
}

/// `G(n, p)` with i.i.d. uniform weights. Disconnected draws are discarded
/// and redrawn from the same generator stream, up to
/// [`CONNECTIVITY_ATTEMPTS`] times. Terminals are drawn last.
pub fn random_weighted(n: usize, p: f64, k: usize, min_weight: f64, max_weight: f64, seed: u64) -> Result<WeightedGraph> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::arg(format!("random-weighted needs 1 <= k <= n, got n = {n}, k = {k}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("edge probability must be in (0, 1], got {p}")));
    }
    if !(min_weight > 0.0 && min_weight <= max_weight && max_weight.is_finite()) {
        return Err(Error::arg(format!("weights must satisfy 0 < min <= max, got [{min_weight}, {max_weight}]")));
    }
    let mut rng = seeded(seed, Stream::Generator);
    let ln_q = (1.0 - p).ln();
    for _ in 0..CONNECTIVITY_ATTEMPTS {
        // Geometric skipping over the pairs (u, v), u < v.
        let mut edges = Vec::new();
        let (mut v, mut u): (i64, i64) = (1, -1);
        while (v as usize) < n {
            let skip = if p >= 1.0 {
                0
            } else {
                ((1.0 - rng.gen::<f64>()).ln() / ln_q).floor() as i64
            };
            u += 1 + skip;
            while u >= v && (v as usize) < n {
                u -= v;
                v += 1;
            }
            if (v as usize) < n {
                let weight = if min_weight == max_weight {
                    min_weight
                } else {
                    rng.gen_range(min_weight..=max_weight)
                };
                edges.push(Edge { u: u as usize, v: v as usize, weight });
            }
        }
        let g = WeightedGraph::new(n, edges, vec![0])?;
        if g.require_connected().is_ok() {
            let mut t = sample(&mut rng, n, k).into_vec();
            t.sort_unstable();
            return WeightedGraph::new(n, g.edges().to_vec(), t);
        }
    }
    Err(Error::arg(format!(
        "no connected G({n}, {p}) draw in {CONNECTIVITY_ATTEMPTS} attempts; raise the edge probability"
    )))
}
