//! Empirical counterparts of the distortion analysis.
//!
//! * [`covering`]: per-vertex covering rounds against their deadlines.
//! * [`intervals`]: greedy partition of a terminal-to-terminal shortest path.
//! * [`ledger`]: detours, charges and slices replayed from a trace.
//! * [`coins`]: the coin-box process that dominates the charges.
//! * [`tail`]: exponential-sum and Chernoff tail bounds with Monte Carlo checks.

pub mod coins;
pub mod covering;
pub mod intervals;
pub mod ledger;
pub mod tail;

use serde::{Deserialize, Serialize};

pub use coins::{coin_box_process, coin_box_tail, CoinTail};
pub use covering::{check_covering, summarize_covering, CoveringBatch, CoveringCheck};
pub use intervals::{build_interval_partition, AnalysisContext, IntervalPartition};
pub use ledger::{failure_rate, fbound_check, reconstruct_ledger, reconstruct_ledgers, DetourLedger, FailureRate, FBoundReport};
pub use tail::{chernoff_bound, exp_tail_bounds, validate_chernoff, validate_tail_bounds, TailBound};

/// One pass/fail line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub statistic: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub n_trials: u64,
    pub seed: u64,
}

impl CheckReport {
    /// Passes when `statistic <= bound + slack`.
    pub fn at_most(name: impl Into<String>, statistic: f64, bound: f64, slack: f64, n_trials: u64, seed: u64) -> Self {
        CheckReport {
            name: name.into(),
            statistic,
            bound,
            slack,
            pass: statistic <= bound + slack,
            n_trials,
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: statistic {:.6e} vs bound {:.6e} (+ slack {:.3e}), n = {}, seed = {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.bound,
            self.slack,
            self.n_trials,
            self.seed
        )
    }
}

/// Standard deviation of an empirical frequency over `n` trials when the
/// true probability is `p` (clamped to `[0, 1]`).
pub fn frequency_sigma(p: f64, n: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Count-based frequency with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: u64,
    pub trials: u64,
}

impl Frequency {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    pub fn wilson_interval(&self) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let z = 1.96f64;
        let n = self.trials as f64;
        let p = self.rate();
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    }
}
