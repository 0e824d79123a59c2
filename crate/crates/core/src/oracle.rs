//! Exhaustive search for the minimum-distortion terminal partition of a
//! small graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::run_and_contract_with;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::minor::{contract_with_distances, terminal_distance_matrix, validate_partition, TerminalPartition};
use crate::params::SprParams;

pub const DEFAULT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_distortion: f64,
    /// Cluster index per vertex of the lexicographically smallest optimum.
    pub assignment: Vec<usize>,
    /// Assignments that were valid terminal partitions.
    pub valid_partitions: u64,
    pub candidates: u64,
}

impl OracleResult {
    pub fn partition(&self) -> TerminalPartition {
        TerminalPartition::from_total(self.assignment.clone())
    }
}

pub fn best_partition(graph: &WeightedGraph) -> Result<OracleResult> {
    best_partition_with_cap(graph, DEFAULT_CAP)
}

/// Enumerates all `k^(n - k)` assignments of Steiner vertices to terminals.
pub fn best_partition_with_cap(graph: &WeightedGraph, cap: usize) -> Result<OracleResult> {
    let n = graph.vertex_count();
    let k = graph.terminal_count();
    if n > cap {
        return Err(Error::CapExceeded { vertices: n, cap });
    }
    if k < 2 {
        return Err(Error::arg("the oracle needs at least two terminals"));
    }
    graph.require_connected()?;
    let dg = terminal_distance_matrix(graph)?;
    let steiner: Vec<usize> = (0..n).filter(|&v| !graph.is_terminal(v)).collect();
    let mut base = vec![0usize; n];
    for (j, &t) in graph.terminals().iter().enumerate() {
        base[t] = j;
    }
    let candidates = (k as u64).pow(steiner.len() as u32);

    // One worker per choice for the first Steiner vertex.
    let first_choices: Vec<usize> = if steiner.is_empty() { vec![0] } else { (0..k).collect() };
    let best = first_choices
        .into_par_iter()
        .map(|first| -> Result<(Option<(f64, Vec<usize>)>, u64)> {
            let mut a = base.clone();
            let mut digits = vec![0usize; steiner.len()];
            if let Some(d) = digits.first_mut() {
                *d = first;
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut valid = 0u64;
            loop {
                for (&v, &d) in steiner.iter().zip(&digits) {
                    a[v] = d;
                }
                let p = TerminalPartition::from_total(a.clone());
                if validate_partition(graph, &p).is_empty() {
                    valid += 1;
                    let ratio = contract_with_distances(graph, &p, dg.clone())?.report()?.max_ratio();
                    // Increasing enumeration order: strict improvement keeps the
                    // lexicographically smallest optimum.
                    if best.as_ref().is_none_or(|b| ratio < b.0) {
                        best = Some((ratio, a.clone()));
                    }
                }
                // Odometer over all digits but the first, last digit fastest.
                let mut i = digits.len();
                loop {
                    if i <= 1 {
                        return Ok((best, valid));
                    }
                    i -= 1;
                    digits[i] += 1;
                    if digits[i] < k {
                        break;
                    }
                    digits[i] = 0;
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut valid_partitions = 0;
    let mut winner: Option<(f64, Vec<usize>)> = None;
    for (b, v) in best {
        valid_partitions += v;
        if let Some(b) = b {
            if winner.as_ref().is_none_or(|w| b.0 < w.0) {
                winner = Some(b);
            }
        }
    }
    let (best_distortion, assignment) = winner.ok_or_else(|| Error::arg("no valid terminal partition"))?;
    Ok(OracleResult {
        best_distortion,
        assignment,
        valid_partitions,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprComparison {
    pub seed: u64,
    pub spr_distortion: f64,
    pub oracle_distortion: f64,
    pub ratio: f64,
}

/// SPR distortion per seed against the exhaustive optimum.
pub fn compare_to_spr(graph: &WeightedGraph, params: &SprParams, seeds: &[u64]) -> Result<Vec<SprComparison>> {
    let oracle = best_partition(graph)?;
    let dg = terminal_distance_matrix(graph)?;
    seeds
        .iter()
        .map(|&seed| {
            let out = run_and_contract_with(graph, &params.with_seed(seed), dg.clone())?;
            let spr = out.report.max_ratio();
            Ok(SprComparison {
                seed,
                spr_distortion: spr,
                oracle_distortion: oracle.best_distortion,
                ratio: spr / oracle.best_distortion,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn unit(n: usize, pairs: &[(usize, usize)], terminals: Vec<usize>) -> WeightedGraph {
        let edges = pairs.iter().map(|&(u, v)| Edge { u, v, weight: 1.0 }).collect();
        WeightedGraph::new(n, edges, terminals).unwrap()
    }

    #[test]
    fn path_is_exact() {
        let g = unit(3, &[(0, 1), (1, 2)], vec![0, 2]);
        let r = best_partition(&g).unwrap();
        assert_eq!(r.best_distortion, 1.0);
        assert_eq!(r.assignment, vec![0, 0, 1]);
        assert_eq!(r.candidates, 2);
        assert_eq!(r.valid_partitions, 2);
    }

    #[test]
    fn star_is_two() {
        let g = unit(4, &[(0, 1), (0, 2), (0, 3)], vec![1, 2, 3]);
        let r = best_partition(&g).unwrap();
        assert_eq!(r.best_distortion, 2.0);
        assert_eq!(r.valid_partitions, 3);
        assert_eq!(r.assignment, vec![0, 0, 1, 2]);
        for c in compare_to_spr(&g, &SprParams::new(3, 0), &[1, 2, 3]).unwrap() {
            assert_eq!((c.spr_distortion, c.oracle_distortion, c.ratio), (2.0, 2.0, 1.0));
        }
    }

    #[test]
    fn six_cycle_is_exact() {
        // t1 s1 t2 s2 t3 s3
        let g = unit(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], vec![0, 2, 4]);
        let r = best_partition(&g).unwrap();
        assert_eq!(r.best_distortion, 1.0);
        assert_eq!(r.candidates, 27);
    }

    #[test]
    fn cap_and_scaling() {
        let edges: Vec<(usize, usize)> = (0..12).map(|i| (i, i + 1)).collect();
        let g = unit(13, &edges, vec![0, 12]);
        assert!(matches!(best_partition(&g), Err(Error::CapExceeded { vertices: 13, cap: 12 })));
        assert!(best_partition_with_cap(&g, 13).is_ok());

        let g = unit(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (1, 4)], vec![0, 2, 4]);
        let scaled = WeightedGraph::new(
            5,
            g.edges().iter().map(|e| Edge { weight: 3.5 * e.weight, ..*e }).collect(),
            g.terminals().to_vec(),
        )
        .unwrap();
        let (a, b) = (best_partition(&g).unwrap(), best_partition(&scaled).unwrap());
        assert!((a.best_distortion - b.best_distortion).abs() < 1e-12);
    }
}
