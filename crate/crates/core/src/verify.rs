//! Independent replay of a trace against its graph.
//!
//! Every growth step is recomputed from scratch with a radius-bounded search
//! on `G[V_free ∪ V_j]`, and the newly covered set must match the trace
//! exactly. Radii must equal the running sum of their increments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{eq_rel, WeightedGraph};
use crate::minor::validate_partition;
use crate::paths::BoundedSearch;
use crate::trace::RunTrace;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReplayReport {
    pub steps_checked: usize,
    pub covers_checked: usize,
    pub violations: Vec<String>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const FREE: usize = usize::MAX;

pub fn replay_trace(graph: &WeightedGraph, trace: &RunTrace) -> Result<ReplayReport> {
    let k = graph.terminal_count();
    let n = graph.vertex_count();
    if trace.params.k != k {
        return Err(Error::InconsistentTrace(format!(
            "trace has k = {}, graph has {k} terminals",
            trace.params.k
        )));
    }
    let mut report = ReplayReport::default();
    let steps = trace.steps()?;
    let terminals = graph.terminals();
    let mut owner = vec![FREE; n];
    for (j, &t) in terminals.iter().enumerate() {
        owner[t] = j;
    }
    let mut uncovered = n - k;

    if k == 1 {
        let p = trace.partition(n, terminals)?;
        for v in validate_partition(graph, &p) {
            report.violations.push(format!("final partition: {v}"));
        }
        report.covers_checked = trace.cover_count();
        return Ok(report);
    }

    let mut radius = vec![0.0f64; k];
    let mut search = BoundedSearch::new(n);
    let mut fresh: Vec<(usize, f64)> = Vec::new();
    for (idx, s) in steps.iter().enumerate() {
        let expect_round = (idx / k) as u64;
        let expect_step = idx % k;
        if s.round != expect_round || s.step != expect_step {
            report.violations.push(format!(
                "step {idx} is ({}, {}), expected ({expect_round}, {expect_step})",
                s.round, s.step
            ));
            return Ok(report);
        }
        if expect_step == 0 && uncovered == 0 {
            report
                .violations
                .push(format!("round {expect_round} executed after every vertex was covered"));
        }
        if !(s.q >= 0.0) {
            report.violations.push(format!("negative increment at ({}, {})", s.round, s.step));
        }
        let prev = radius[s.step];
        radius[s.step] += s.q;
        if radius[s.step] != s.radius {
            report.violations.push(format!(
                "radius of terminal {} at round {} is {}, replayed sum is {}",
                s.step, s.round, s.radius, radius[s.step]
            ));
            radius[s.step] = s.radius;
        }
        if s.radius < prev {
            report.violations.push(format!("radius of terminal {} decreased at round {}", s.step, s.round));
        }

        let j = s.step;
        fresh.clear();
        fresh.extend(
            search
                .run(graph, terminals[j], s.radius, |u| owner[u] == FREE || owner[u] == j)
                .iter()
                .filter(|&&(v, _)| owner[v] == FREE),
        );
        fresh.sort_unstable_by_key(|&(v, _)| v);
        let mut claimed = s.covered.clone();
        claimed.sort_unstable_by_key(|&(v, _)| v);
        if fresh.len() != claimed.len() || fresh.iter().zip(&claimed).any(|(a, b)| a.0 != b.0) {
            report.violations.push(format!(
                "step ({}, {}): ball adds {} vertices, trace covers {}",
                s.round,
                s.step,
                fresh.len(),
                claimed.len()
            ));
        } else {
            for (a, b) in fresh.iter().zip(&claimed) {
                if !eq_rel(a.1, b.1) {
                    report.violations.push(format!(
                        "step ({}, {}): vertex {} at distance {} recorded as {}",
                        s.round, s.step, a.0, a.1, b.1
                    ));
                }
            }
        }
        for &(v, _) in &claimed {
            if v >= n {
                return Err(Error::InconsistentTrace(format!("vertex {v} out of range")));
            }
            if owner[v] != FREE {
                report.violations.push(format!("vertex {v} covered again at ({}, {})", s.round, s.step));
                continue;
            }
            owner[v] = j;
            uncovered -= 1;
        }
        report.steps_checked += 1;
        report.covers_checked += claimed.len();
    }
    if steps.len() % k != 0 {
        report.violations.push(format!("{} steps is not a whole number of rounds", steps.len()));
    }
    if (steps.len() / k) as u64 != trace.rounds {
        report
            .violations
            .push(format!("trace claims {} rounds, events span {}", trace.rounds, steps.len() / k));
    }
    if uncovered > 0 {
        report.violations.push(format!("{uncovered} vertices never covered"));
    }
    let p = trace.partition(n, terminals)?;
    for v in validate_partition(graph, &p) {
        report.violations.push(format!("final partition: {v}"));
    }
    Ok(report)
}
