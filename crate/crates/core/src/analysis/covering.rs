//! Covering rounds against the late and early deadlines.
//!
//! For a vertex `v` at normalized distance `D(v)` from the terminal set,
//! covered at round `l` by `t` at normalized graph distance `d = d_G(v, t)`:
//!
//! * late: `l > floor(log_r(4 D(v)))`
//! * early: `l <= floor(log_r(c_CE d))`
//!
//! Within one (terminal, round) group, with neither event, every member is
//! within `12 min D` of the terminal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::params::SprParams;
use crate::paths::{nearest_terminal_distances, BoundedSearch};
use crate::trace::RunTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCover {
    pub vertex: usize,
    pub terminal: usize,
    pub round: u64,
    /// Normalized distance to the nearest terminal.
    pub nearest: f64,
    /// Normalized graph distance to the covering terminal.
    pub dist: f64,
    pub deadline: i64,
    pub early_threshold: i64,
    pub late: bool,
    pub early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpread {
    pub terminal: usize,
    pub round: u64,
    pub size: usize,
    /// `min D(v)` over the group, normalized.
    pub min_nearest: f64,
    /// `max d_G(t, v')` over the group, normalized.
    pub max_dist: f64,
}

impl GroupSpread {
    pub fn ratio(&self) -> f64 {
        self.max_dist / self.min_nearest
    }

    pub fn within(&self) -> bool {
        self.max_dist <= 12.0 * self.min_nearest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringCheck {
    pub covers: Vec<VertexCover>,
    pub groups: Vec<GroupSpread>,
    pub late: usize,
    pub early: usize,
    /// Groups with `max_dist >= 12 min_nearest`.
    pub spread_violations: usize,
}

impl CoveringCheck {
    /// Some vertex was covered after its deadline.
    pub fn any_late(&self) -> bool {
        self.late > 0
    }

    /// Some vertex was covered early.
    pub fn any_early(&self) -> bool {
        self.early > 0
    }

    pub fn max_spread(&self) -> f64 {
        self.groups.iter().map(GroupSpread::ratio).fold(0.0, f64::max)
    }

    /// Drops the per-vertex records, keeping counts and groups. Enough for
    /// [`summarize_covering`] and much smaller on large graphs.
    pub fn without_covers(mut self) -> Self {
        self.covers = Vec::new();
        self
    }
}

/// Checks every cover event of `trace` against both deadlines and groups
/// covers by (terminal, round).
pub fn check_covering(trace: &RunTrace, graph: &WeightedGraph, params: &SprParams) -> Result<CoveringCheck> {
    let k = graph.terminal_count();
    let n = graph.vertex_count();
    if trace.params.k != k {
        return Err(Error::InconsistentTrace(format!(
            "trace has k = {}, graph has {k} terminals",
            trace.params.k
        )));
    }
    if trace.params.delta != params.delta {
        return Err(Error::InconsistentTrace(format!(
            "trace delta {} differs from requested delta {}",
            trace.params.delta, params.delta
        )));
    }
    let params = SprParams { k, ..*params };
    params.validate()?;
    let scale = trace.params.scale;
    if !(scale > 0.0) {
        return Err(Error::InconsistentTrace(format!("scale {scale} is not positive")));
    }
    let steps = trace.steps()?;

    // (vertex, round) per terminal, then one bounded search per terminal.
    let mut by_terminal: Vec<Vec<(usize, u64, f64)>> = vec![Vec::new(); k];
    for s in &steps {
        if s.step >= k {
            return Err(Error::InconsistentTrace(format!("step index {} with k = {k}", s.step)));
        }
        for &(v, d) in &s.covered {
            if v >= n {
                return Err(Error::InconsistentTrace(format!("vertex {v} out of range")));
            }
            by_terminal[s.step].push((v, s.round, d));
        }
    }

    let nearest = nearest_terminal_distances(graph);
    let mut search = BoundedSearch::new(n);
    let mut dg = vec![f64::NAN; n];
    let mut covers = Vec::with_capacity(trace.cover_count());
    let mut groups: BTreeMap<(usize, u64), GroupSpread> = BTreeMap::new();
    for (j, list) in by_terminal.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let bound = list.iter().map(|x| x.2).fold(0.0, f64::max);
        for &(v, d) in search.run(graph, graph.terminals()[j], bound * (1.0 + 1e-9), |_| true) {
            dg[v] = d;
        }
        for &(v, round, cluster_dist) in list {
            // d_G never exceeds the in-cluster distance; fall back to it if
            // rounding pushed the vertex past the search bound.
            let d_graph = if dg[v].is_nan() { cluster_dist } else { dg[v] };
            let near = nearest[v].ok_or(Error::Disconnected {
                from: graph.terminals()[j],
                unreachable: v,
            })? / scale;
            let dist = d_graph / scale;
            let deadline = params.cover_deadline(near);
            let early_threshold = params.early_threshold(dist);
            let late = round as i64 > deadline;
            let early = round as i64 <= early_threshold;
            covers.push(VertexCover {
                vertex: v,
                terminal: j,
                round,
                nearest: near,
                dist,
                deadline,
                early_threshold,
                late,
                early,
            });
            let g = groups.entry((j, round)).or_insert(GroupSpread {
                terminal: j,
                round,
                size: 0,
                min_nearest: f64::INFINITY,
                max_dist: 0.0,
            });
            g.size += 1;
            g.min_nearest = g.min_nearest.min(near);
            g.max_dist = g.max_dist.max(dist);
        }
        for &(v, _, _) in list {
            dg[v] = f64::NAN;
        }
    }
    covers.sort_unstable_by_key(|c| c.vertex);
    let groups: Vec<GroupSpread> = groups.into_values().collect();
    Ok(CoveringCheck {
        late: covers.iter().filter(|c| c.late).count(),
        early: covers.iter().filter(|c| c.early).count(),
        spread_violations: groups.iter().filter(|g| !g.within()).count(),
        covers,
        groups,
    })
}

/// Run-level event frequencies over a batch of covering checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringBatch {
    pub runs: usize,
    pub late_runs: usize,
    pub early_runs: usize,
    /// Runs in which some group spreads beyond `12 min D`.
    pub spread_runs: usize,
    /// Runs with neither event but a spread violation.
    pub spread_runs_without_events: usize,
    pub max_spread: f64,
}

impl CoveringBatch {
    pub fn late_rate(&self) -> f64 {
        self.late_runs as f64 / self.runs.max(1) as f64
    }

    pub fn early_rate(&self) -> f64 {
        self.early_runs as f64 / self.runs.max(1) as f64
    }
}

pub fn summarize_covering(checks: &[CoveringCheck]) -> CoveringBatch {
    CoveringBatch {
        runs: checks.len(),
        late_runs: checks.iter().filter(|c| c.any_late()).count(),
        early_runs: checks.iter().filter(|c| c.any_early()).count(),
        spread_runs: checks.iter().filter(|c| c.spread_violations > 0).count(),
        spread_runs_without_events: checks
            .iter()
            .filter(|c| c.spread_violations > 0 && !c.any_late() && !c.any_early())
            .count(),
        max_spread: checks.iter().map(CoveringCheck::max_spread).fold(0.0, f64::max),
    }
}
