//! Execution traces of the ball-growing engine and their JSON form.
//!
//! ```json
//! {"params": {"delta": 0.05, "seed": 1, ...},
//!  "events": [{"type": "radius", "round": 0, "step": 0, "q": 0.01, "R": 0.01},
//!             {"type": "cover", "vertex": 5, "terminal": 0, "round": 0, "step": 0, "dist": 0.008}],
//!  "rounds": 3}
//! ```
//!
//! Terminal indices and steps are 0-based. Terminals themselves are covered at
//! initialisation and have no cover event. `q`, `R` and `dist` are in graph
//! units; divide by `params.scale` for the normalized units the schedule uses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minor::TerminalPartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub delta: f64,
    pub seed: u64,
    pub k: usize,
    /// Growth ratio `r`; absent for a single terminal.
    pub r: Option<f64>,
    /// Normalized round-0 mean `D`; absent for a single terminal.
    pub base_mean: Option<f64>,
    /// Graph-unit length of one normalized unit (smallest Steiner-to-terminal distance).
    pub scale: f64,
    pub max_rounds: u64,
    /// The graph was passed through subdivision preprocessing first.
    #[serde(default)]
    pub subdivided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TraceEvent {
    Radius {
        round: u64,
        step: usize,
        q: f64,
        #[serde(rename = "R")]
        radius: f64,
    },
    Cover {
        vertex: usize,
        terminal: usize,
        round: u64,
        step: usize,
        /// Distance from the terminal inside `G[V_free ∪ V_j]` at the moment of covering.
        dist: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub params: TraceParams,
    pub events: Vec<TraceEvent>,
    pub rounds: u64,
}

/// One growth step: a radius event and the cover events that follow it.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub round: u64,
    pub step: usize,
    pub q: f64,
    pub radius: f64,
    /// `(vertex, dist)` in covering order.
    pub covered: Vec<(usize, f64)>,
}

impl RunTrace {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Groups events into steps. Errors if a cover event is not preceded by
    /// the radius event of the same step.
    pub fn steps(&self) -> Result<Vec<StepRecord>> {
        let mut out: Vec<StepRecord> = Vec::new();
        for ev in &self.events {
            match *ev {
                TraceEvent::Radius { round, step, q, radius } => out.push(StepRecord {
                    round,
                    step,
                    q,
                    radius,
                    covered: Vec::new(),
                }),
                TraceEvent::Cover { vertex, terminal, round, step, dist } => {
                    let cur = out.last_mut().ok_or_else(|| {
                        Error::InconsistentTrace(format!("vertex {vertex} covered before any growth step"))
                    })?;
                    if cur.round != round || cur.step != step || terminal != step {
                        return Err(Error::InconsistentTrace(format!(
                            "cover of vertex {vertex} at ({round}, {step}) by terminal {terminal} \
                             follows radius event ({}, {})",
                            cur.round, cur.step
                        )));
                    }
                    cur.covered.push((vertex, dist));
                }
            }
        }
        Ok(out)
    }

    /// Final clusters: terminals in their own cluster, every covered vertex
    /// in the cluster of its covering terminal.
    pub fn partition(&self, n: usize, terminals: &[usize]) -> Result<TerminalPartition> {
        let mut a: Vec<Option<usize>> = vec![None; n];
        for (j, &t) in terminals.iter().enumerate() {
            a[t] = Some(j);
        }
        for ev in &self.events {
            if let TraceEvent::Cover { vertex, terminal, .. } = *ev {
                if vertex >= n {
                    return Err(Error::InconsistentTrace(format!("vertex {vertex} out of range")));
                }
                if a[vertex].is_some() {
                    return Err(Error::InconsistentTrace(format!("vertex {vertex} covered twice")));
                }
                a[vertex] = Some(terminal);
            }
        }
        Ok(TerminalPartition::new(a))
    }

    pub fn cover_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Cover { .. }))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        RunTrace {
            params: TraceParams {
                delta: 0.05,
                seed: 3,
                k: 2,
                r: Some(1.07),
                base_mean: Some(0.07),
                scale: 1.0,
                max_rounds: 50,
                subdivided: false,
            },
            events: vec![
                TraceEvent::Radius { round: 0, step: 0, q: 0.1, radius: 0.1 },
                TraceEvent::Radius { round: 0, step: 1, q: 1.5, radius: 1.5 },
                TraceEvent::Cover { vertex: 1, terminal: 1, round: 0, step: 1, dist: 1.0 },
            ],
            rounds: 1,
        }
    }

    #[test]
    fn json_layout() {
        let json = serde_json::to_string(&sample()).unwrap();
        assert!(json.starts_with(r#"{"params":{"delta":0.05,"seed":3,"k":2,"#), "{json}");
        assert!(json.contains(r#"{"type":"radius","round":0,"step":0,"q":0.1,"R":0.1}"#));
        assert!(json.contains(r#"{"type":"cover","vertex":1,"terminal":1,"round":0,"step":1,"dist":1.0}"#));
        assert!(json.ends_with(r#""rounds":1}"#));
        assert_eq!(RunTrace::from_json(&json).unwrap(), sample());
    }

    #[test]
    fn steps_and_partition() {
        let t = sample();
        let steps = t.steps().unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].covered, vec![(1, 1.0)]);
        let p = t.partition(3, &[0, 2]).unwrap();
        assert_eq!(p.assignment(), &[Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn detects_double_cover() {
        let mut t = sample();
        t.events.push(TraceEvent::Cover { vertex: 1, terminal: 1, round: 0, step: 1, dist: 1.0 });
        assert!(matches!(t.partition(3, &[0, 2]), Err(Error::InconsistentTrace(_))));
        let mut orphan = sample();
        orphan.events.insert(0, TraceEvent::Cover { vertex: 1, terminal: 0, round: 0, step: 0, dist: 0.0 });
        assert!(orphan.steps().is_err());
    }
}
