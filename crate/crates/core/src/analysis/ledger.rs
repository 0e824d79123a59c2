//! Detours and charges along a terminal-to-terminal path.
//!
//! Interior path vertices start active. When a growth step covers active
//! path vertices, the span `[a, b]` between the first and last of them becomes
//! a detour and every vertex in it turns inactive. The step's trigger is the
//! newly covered active vertex closest to the growing terminal (lowest path
//! index on ties); the detour is charged to the trigger's interval. Older
//! detours strictly inside the new span are erased.
//!
//! A slice is a maximal run of active vertices inside one interval. A charge
//! succeeds when the detour swallows the trigger's whole slice. A step
//! qualifies when its round `l` satisfies `l >= log_r(c_CE d_G(v, t) / scale)`
//! for its trigger `v`.

use serde::{Deserialize, Serialize};

use super::intervals::IntervalPartition;
use super::{frequency_sigma, CheckReport, Frequency};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::params::{SprParams, COST_MULTIPLE, FAILURE_BOUND};
use crate::paths::BoundedSearch;
use crate::trace::RunTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub start: usize,
    pub end: usize,
    pub terminal: usize,
    pub round: u64,
    /// Path index of the trigger.
    pub trigger: usize,
    pub interval: usize,
    pub erased_by: Option<usize>,
}

impl Detour {
    pub fn alive(&self) -> bool {
        self.erased_by.is_none()
    }
}

/// A charging step as fed to [`DetourBook::charge`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeInput {
    pub terminal: usize,
    pub round: u64,
    /// Path indices of the newly covered active vertices.
    pub covered: Vec<usize>,
    pub trigger: usize,
    /// The step's radius increment.
    pub q: f64,
    /// `q_S` when known (it is known whenever the charge succeeds).
    pub q_slice: Option<f64>,
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingStep {
    pub terminal: usize,
    pub round: u64,
    pub detour: usize,
    pub trigger: usize,
    pub interval: usize,
    pub slice_start: usize,
    pub slice_end: usize,
    pub q: f64,
    pub q_slice: Option<f64>,
    pub success: bool,
    pub qualifies: bool,
    /// Slice count of the trigger's interval before and after the step.
    pub slices_before: usize,
    pub slices_after: usize,
    pub erased: Vec<usize>,
}

/// Combinatorial bookkeeping of detours over one interval partition.
#[derive(Debug, Clone)]
pub struct DetourBook<'p> {
    part: &'p IntervalPartition,
    active: Vec<bool>,
    detours: Vec<Detour>,
    steps: Vec<ChargingStep>,
    charges: Vec<usize>,
    violations: Vec<String>,
}

impl<'p> DetourBook<'p> {
    pub fn new(part: &'p IntervalPartition) -> Self {
        let len = part.path.len();
        let mut active = vec![true; len];
        active[0] = false;
        active[len - 1] = false;
        DetourBook {
            part,
            active,
            detours: Vec::new(),
            steps: Vec::new(),
            charges: vec![0; part.intervals.len()],
            violations: Vec::new(),
        }
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn slice_count(&self, interval: usize) -> usize {
        let q = &self.part.intervals[interval];
        (q.start..=q.end)
            .filter(|&i| self.active[i] && (i == q.start || !self.active[i - 1]))
            .count()
    }

    /// The slice containing the active vertex `idx`.
    pub fn slice_of(&self, idx: usize) -> (usize, usize) {
        let q = &self.part.intervals[self.part.interval_of[idx]];
        let (mut s, mut e) = (idx, idx);
        while s > q.start && self.active[s - 1] {
            s -= 1;
        }
        while e < q.end && self.active[e + 1] {
            e += 1;
        }
        (s, e)
    }

    pub fn charge(&mut self, input: ChargeInput) -> Result<&ChargingStep> {
        let part = self.part;
        let last = part.edge_count();
        if input.covered.is_empty() {
            return Err(Error::arg("a charging step covers at least one active vertex"));
        }
        for &i in &input.covered {
            if i == 0 || i >= last || !self.active[i] {
                return Err(Error::InconsistentTrace(format!("path index {i} is not an active interior vertex")));
            }
        }
        if !input.covered.contains(&input.trigger) {
            return Err(Error::InconsistentTrace(format!(
                "trigger {} is not among the covered vertices",
                input.trigger
            )));
        }
        let a = *input.covered.iter().min().unwrap();
        let b = *input.covered.iter().max().unwrap();
        let interval = part.interval_of[input.trigger];
        let (ss, se) = self.slice_of(input.trigger);

        let mut touched: Vec<usize> = (a.saturating_sub(1).max(1)..=(b + 1).min(last - 1))
            .map(|i| part.interval_of[i])
            .collect();
        touched.dedup();
        let before: Vec<usize> = touched.iter().map(|&q| self.slice_count(q)).collect();
        for slot in &mut self.active[a..=b] {
            *slot = false;
        }
        let after: Vec<usize> = touched.iter().map(|&q| self.slice_count(q)).collect();

        let success = a <= ss && se <= b;
        let id = self.detours.len();
        let mut erased = Vec::new();
        for (old_id, d) in self.detours.iter_mut().enumerate() {
            if !d.alive() || d.end < a || d.start > b {
                continue;
            }
            if a < d.start && d.end < b {
                d.erased_by = Some(id);
                self.charges[d.interval] -= 1;
                erased.push(old_id);
            } else {
                self.violations.push(format!(
                    "detour {id} [{a}, {b}] overlaps detour {old_id} [{}, {}] without containing it",
                    d.start, d.end
                ));
            }
        }
        self.detours.push(Detour {
            start: a,
            end: b,
            terminal: input.terminal,
            round: input.round,
            trigger: input.trigger,
            interval,
            erased_by: None,
        });
        self.charges[interval] += 1;

        let mut slices = (0, 0);
        for ((&q, &bf), &af) in touched.iter().zip(&before).zip(&after) {
            if q == interval {
                slices = (bf, af);
                if af > bf + 1 {
                    self.violations.push(format!("detour {id}: slices of charged interval {q} went {bf} -> {af}"));
                }
                if success && af >= bf {
                    self.violations.push(format!("detour {id}: successful charge left interval {q} at {af} slices"));
                }
            } else if af > bf {
                self.violations.push(format!("detour {id}: slices of uncharged interval {q} went {bf} -> {af}"));
            }
        }
        if let Some(qs) = input.q_slice {
            if (input.q >= qs) != success {
                self.violations.push(format!(
                    "detour {id}: q = {} vs q_S = {qs} disagrees with slice coverage",
                    input.q
                ));
            }
        }
        self.steps.push(ChargingStep {
            terminal: input.terminal,
            round: input.round,
            detour: id,
            trigger: input.trigger,
            interval,
            slice_start: ss,
            slice_end: se,
            q: input.q,
            q_slice: input.q_slice,
            success,
            qualifies: input.qualifies,
            slices_before: slices.0,
            slices_after: slices.1,
            erased,
        });
        Ok(self.steps.last().unwrap())
    }

    /// Final checks: no active vertex left, surviving detours tile the
    /// interior, and the charge counts match the survivors.
    pub fn finish(mut self) -> DetourLedger {
        let part = self.part;
        let last = part.edge_count();
        if let Some(i) = (1..last).find(|&i| self.active[i]) {
            self.violations.push(format!("path index {i} is still active"));
        }
        let mut alive: Vec<&Detour> = self.detours.iter().filter(|d| d.alive()).collect();
        alive.sort_by_key(|d| d.start);
        let mut next = 1;
        for d in &alive {
            if d.start != next {
                self.violations.push(format!("surviving detours leave a gap or overlap at {next}"));
                break;
            }
            next = d.end + 1;
        }
        if last >= 2 && next != last && self.violations.iter().all(|v| !v.contains("gap")) {
            self.violations.push(format!("surviving detours end at {}, interior ends at {}", next - 1, last - 1));
        }
        let mut recount = vec![0usize; part.intervals.len()];
        for d in &alive {
            recount[d.interval] += 1;
        }
        if recount != self.charges {
            self.violations.push("charge counts disagree with surviving detours".into());
        }
        let cost = self
            .charges
            .iter()
            .zip(&part.intervals)
            .map(|(&x, q)| x as f64 * q.external)
            .sum();
        DetourLedger {
            from: part.from,
            to: part.to,
            length: part.length(),
            external_sum: part.external_sum(),
            interval_count: part.intervals.len(),
            detours: self.detours,
            steps: self.steps,
            charges: self.charges,
            cost,
            violations: self.violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetourLedger {
    pub from: usize,
    pub to: usize,
    /// `Delta = d_G(t, t')`.
    pub length: f64,
    pub external_sum: f64,
    pub interval_count: usize,
    pub detours: Vec<Detour>,
    pub steps: Vec<ChargingStep>,
    /// Surviving detours per interval.
    pub charges: Vec<usize>,
    /// `f = sum_Q charges_Q L+(Q)`.
    pub cost: f64,
    pub violations: Vec<String>,
}

impl DetourLedger {
    pub fn cost_ratio(&self) -> f64 {
        self.cost / self.length
    }

    pub fn exceeds(&self) -> bool {
        self.cost >= COST_MULTIPLE * self.length
    }
}

const FREE: usize = usize::MAX;

/// Replays `trace` on `graph` and runs the detour bookkeeping for the path of
/// `part`. The trigger of each charging step is found by a from-scratch
/// bounded search from the growing terminal.
pub fn reconstruct_ledger(
    trace: &RunTrace,
    graph: &WeightedGraph,
    part: &IntervalPartition,
    params: &SprParams,
) -> Result<DetourLedger> {
    Ok(reconstruct_ledgers(trace, graph, std::slice::from_ref(part), params)?
        .pop()
        .unwrap())
}

/// [`reconstruct_ledger`] for several paths in one replay of the trace.
pub fn reconstruct_ledgers(
    trace: &RunTrace,
    graph: &WeightedGraph,
    parts: &[IntervalPartition],
    params: &SprParams,
) -> Result<Vec<DetourLedger>> {
    let n = graph.vertex_count();
    let k = graph.terminal_count();
    if trace.params.k != k || parts.iter().any(|p| p.k != k) {
        return Err(Error::InconsistentTrace(format!(
            "trace has k = {}, graph {k}, partitions disagree",
            trace.params.k
        )));
    }
    if parts.iter().any(|p| p.path.iter().any(|&v| v >= n)) {
        return Err(Error::InconsistentTrace("path leaves the graph".into()));
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
    let terminals = graph.terminals();

    // Interior path positions of every vertex, CSR by vertex.
    let mut offsets = vec![0u32; n + 1];
    for p in parts {
        for &v in &p.path[1..p.path.len() - 1] {
            offsets[v + 1] += 1;
        }
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut slots = vec![(0u32, 0u32); offsets[n] as usize];
    let mut fill = offsets.clone();
    for (pi, p) in parts.iter().enumerate() {
        for (i, &v) in p.path.iter().enumerate().take(p.path.len() - 1).skip(1) {
            slots[fill[v] as usize] = (pi as u32, i as u32);
            fill[v] += 1;
        }
    }
    let on_paths = |v: usize| &slots[offsets[v] as usize..offsets[v + 1] as usize];

    let mut owner = vec![FREE; n];
    for (j, &t) in terminals.iter().enumerate() {
        owner[t] = j;
    }
    let mut books: Vec<DetourBook> = parts.iter().map(DetourBook::new).collect();
    let mut search = BoundedSearch::new(n);
    let mut covered: Vec<Vec<usize>> = vec![Vec::new(); parts.len()];
    let mut qv: Vec<Vec<(usize, f64)>> = vec![Vec::new(); parts.len()];

    for s in trace.steps()? {
        let j = s.step;
        if j >= k {
            return Err(Error::InconsistentTrace(format!("step index {j} with k = {k}")));
        }
        let mut touched = Vec::new();
        for &(v, _) in &s.covered {
            if v >= n {
                return Err(Error::InconsistentTrace(format!("vertex {v} out of range")));
            }
            for &(pi, i) in on_paths(v) {
                let (pi, i) = (pi as usize, i as usize);
                if books[pi].is_active(i) {
                    if covered[pi].is_empty() {
                        touched.push(pi);
                    }
                    covered[pi].push(i);
                }
            }
        }
        if !touched.is_empty() {
            let prev = s.radius - s.q;
            // q_v for the active path vertices inside the new ball.
            for &(v, d) in search.run(graph, terminals[j], s.radius, |u| owner[u] == FREE || owner[u] == j) {
                for &(pi, i) in on_paths(v) {
                    let (pi, i) = (pi as usize, i as usize);
                    if books[pi].is_active(i) {
                        qv[pi].push((i, d - prev));
                    }
                }
            }
            touched.sort_unstable();
            for &pi in &touched {
                let (cov, q) = (&mut covered[pi], &mut qv[pi]);
                cov.sort_unstable();
                q.sort_unstable_by_key(|x| x.0);
                if q.len() != cov.len() || q.iter().zip(cov.iter()).any(|(x, &c)| x.0 != c) {
                    return Err(Error::InconsistentTrace(format!(
                        "step ({}, {j}): replayed ball covers {} active vertices of path {pi}, trace {}",
                        s.round,
                        q.len(),
                        cov.len()
                    )));
                }
                let &(trigger, _) = q
                    .iter()
                    .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
                    .unwrap();
                let book = &mut books[pi];
                let (ss, se) = book.slice_of(trigger);
                let left = q.iter().filter(|x| x.0 <= ss).map(|x| x.1).min_by(f64::total_cmp);
                let right = q.iter().filter(|x| x.0 >= se).map(|x| x.1).min_by(f64::total_cmp);
                let q_slice = match (left, right) {
                    (Some(l), Some(r)) => Some(l.max(r)),
                    _ => None,
                };
                let d_trigger = parts[pi].dist_to_terminal(graph, trigger, j)? / scale;
                let qualifies = s.round as f64 >= params.log_r(params.c_ce() * d_trigger);
                book.charge(ChargeInput {
                    terminal: j,
                    round: s.round,
                    covered: std::mem::take(cov),
                    trigger,
                    q: s.q,
                    q_slice,
                    qualifies,
                })?;
                q.clear();
            }
        }
        for &(v, _) in &s.covered {
            owner[v] = j;
        }
    }
    Ok(books.into_iter().map(DetourBook::finish).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRate {
    pub steps: u64,
    pub qualifying: Frequency,
    /// Failures among all charging steps, qualifying or not.
    pub all_steps: Frequency,
    pub bound: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Frequency of failed charges among qualifying steps, against `p = 0.2`
/// with `3 sigma` slack.
pub fn failure_rate(ledgers: &[DetourLedger]) -> FailureRate {
    let steps = ledgers.iter().flat_map(|l| &l.steps);
    let (mut q, mut qf, mut all, mut af) = (0u64, 0u64, 0u64, 0u64);
    for s in steps {
        all += 1;
        af += (!s.success) as u64;
        if s.qualifies {
            q += 1;
            qf += (!s.success) as u64;
        }
    }
    let qualifying = Frequency { hits: qf, trials: q };
    let sigma = frequency_sigma(FAILURE_BOUND, q);
    FailureRate {
        steps: all,
        qualifying,
        all_steps: Frequency { hits: af, trials: all },
        bound: FAILURE_BOUND,
        sigma,
        pass: q > 0 && qualifying.rate() <= FAILURE_BOUND + 3.0 * sigma,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FBoundReport {
    pub runs: u64,
    /// Runs with `f >= 43 Delta`.
    pub exceed: u64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Ledgers with any structural violation.
    pub invalid: u64,
}

impl FBoundReport {
    pub fn rate(&self) -> f64 {
        self.exceed as f64 / self.runs.max(1) as f64
    }

    pub fn check(&self, max_rate: f64, seed: u64) -> CheckReport {
        CheckReport::at_most("cost f >= 43 Delta", self.rate(), max_rate, 0.0, self.runs, seed)
    }
}

pub fn fbound_check(ledgers: &[DetourLedger]) -> FBoundReport {
    let ratios: Vec<f64> = ledgers.iter().map(DetourLedger::cost_ratio).collect();
    FBoundReport {
        runs: ledgers.len() as u64,
        exceed: ledgers.iter().filter(|l| l.exceeds()).count() as u64,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        invalid: ledgers.iter().filter(|l| !l.violations.is_empty()).count() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::intervals::build_interval_partition;
    use crate::engine::run_spr;
    use crate::graph::Edge;

    fn toy_partition(len: usize, factor: f64) -> IntervalPartition {
        // Path of `len` unit edges with D(v_i) = min(i, len - i).
        let prefix: Vec<f64> = (0..=len).map(|i| i as f64).collect();
        let nearest: Vec<f64> = (0..=len).map(|i| i.min(len - i) as f64).collect();
        IntervalPartition::from_path((0, 1), (0..=len).collect(), prefix, nearest, factor, 2)
    }

    fn input(covered: Vec<usize>, trigger: usize) -> ChargeInput {
        ChargeInput {
            terminal: 0,
            round: 0,
            covered,
            trigger,
            q: 1.0,
            q_slice: None,
            qualifies: true,
        }
    }

    #[test]
    fn erasure_and_tiling() {
        let part = toy_partition(10, 100.0);
        // One interval [1, 9].
        assert_eq!(part.intervals.len(), 1);
        let mut book = DetourBook::new(&part);
        assert_eq!(book.slice_count(0), 1);
        let s = book.charge(input(vec![4, 5], 4)).unwrap().clone();
        assert!(!s.success);
        assert_eq!((s.slices_before, s.slices_after), (1, 2));
        book.charge(input(vec![7], 7)).unwrap();
        assert_eq!(book.slice_count(0), 3);
        // [2, 8] swallows [4, 5] and [7, 7].
        let s = book.charge(input(vec![2, 6, 8], 6)).unwrap().clone();
        assert_eq!(s.erased, vec![0, 1]);
        assert_eq!((s.slice_start, s.slice_end), (6, 6));
        assert!(s.success);
        book.charge(input(vec![1], 1)).unwrap();
        book.charge(input(vec![9], 9)).unwrap();
        let l = book.finish();
        assert!(l.violations.is_empty(), "{:?}", l.violations);
        assert_eq!(l.charges, vec![3]);
        assert_eq!(l.cost, 3.0 * 10.0);
        assert_eq!(l.detours.iter().filter(|d| d.alive()).count(), 3);
    }

    #[test]
    fn unfinished_book_is_flagged() {
        let part = toy_partition(6, 100.0);
        let mut book = DetourBook::new(&part);
        book.charge(input(vec![2], 2)).unwrap();
        let l = book.finish();
        assert!(l.violations.iter().any(|v| v.contains("still active")));
    }

    #[test]
    fn rejects_inactive_cover() {
        let part = toy_partition(6, 100.0);
        let mut book = DetourBook::new(&part);
        book.charge(input(vec![2, 4], 2)).unwrap();
        assert!(book.charge(input(vec![3], 3)).is_err());
        assert!(book.charge(input(vec![5], 1)).is_err());
    }

    #[test]
    fn replayed_runs_are_consistent() {
        let n = 301;
        let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, weight: 1.0 }).collect();
        let g = WeightedGraph::new(n, edges, vec![0, n - 1]).unwrap();
        let p = SprParams::new(2, 0);
        let part = build_interval_partition(&g, 0, 1, &p).unwrap();
        let mut ledgers = Vec::new();
        for seed in 0..10 {
            let (_, trace) = run_spr(&g, &p.with_seed(seed)).unwrap();
            let l = reconstruct_ledger(&trace, &g, &part, &p).unwrap();
            assert!(l.violations.is_empty(), "seed {seed}: {:?}", l.violations);
            assert!(l.cost >= l.length * 0.0);
            ledgers.push(l);
        }
        let f = fbound_check(&ledgers);
        assert_eq!(f.runs, 10);
        assert_eq!(f.invalid, 0);
        let fr = failure_rate(&ledgers);
        assert!(fr.steps > 0);
    }
}
