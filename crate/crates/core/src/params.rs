use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 1.0 / 20.0;

/// Constant of the covered-early event.
pub const C_CE: f64 = 1.0 / 3.0;

/// Failure-probability bound for a qualifying charging step.
pub const FAILURE_BOUND: f64 = 0.2;

/// Multiple of `d_G(t, t')` that the cost function exceeds only rarely.
pub const COST_MULTIPLE: f64 = 43.0;

/// Ball-growing parameters for `k` terminals.
///
/// The growth ratio is `r = 1 + delta / ln k` and the round-0 mean is
/// `delta / ln k`; round `l` draws increments from `Exp(base_mean * r^l)`.
/// The remaining constants are derived from `delta`:
/// `c_int = c_CE / 10`, `c_w = c_int * delta / 4`, `c_con = 3 * delta * c_int`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprParams {
    pub delta: f64,
    pub k: usize,
    pub seed: u64,
    /// Overrides the default round guard.
    pub max_rounds_guard: Option<u64>,
}

impl SprParams {
    pub fn new(k: usize, seed: u64) -> Self {
        SprParams {
            delta: DEFAULT_DELTA,
            k,
            seed,
            max_rounds_guard: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_rounds(mut self, rounds: u64) -> Self {
        self.max_rounds_guard = Some(rounds);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::arg(format!("delta must be positive, got {}", self.delta)));
        }
        if self.k == 0 {
            return Err(Error::arg("at least one terminal is required"));
        }
        if self.k >= 2 {
            let (r, d) = (self.growth_ratio(), self.base_mean());
            if !(r > 1.0 && d > 0.0 && r.is_finite()) {
                return Err(Error::arg(format!("degenerate schedule r = {r}, D = {d}")));
            }
        }
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if !(rel(self.c_int(), C_CE / 10.0)
            && rel(self.c_w(), self.c_int() * self.delta / 4.0)
            && rel(self.c_con(), 3.0 * self.delta * self.c_int()))
        {
            return Err(Error::arg("derived constants are inconsistent"));
        }
        Ok(())
    }

    pub fn ln_k(&self) -> f64 {
        (self.k as f64).ln()
    }

    /// `r`; infinite for `k = 1`.
    pub fn growth_ratio(&self) -> f64 {
        1.0 + self.delta / self.ln_k()
    }

    /// Mean of the round-0 increment, `D`; infinite for `k = 1`.
    pub fn base_mean(&self) -> f64 {
        self.delta / self.ln_k()
    }

    /// Mean of the round-`round` increment in normalized units.
    pub fn round_mean(&self, round: u64) -> f64 {
        self.base_mean() * self.growth_ratio().powf(round as f64)
    }

    pub fn log_r(&self, x: f64) -> f64 {
        x.ln() / self.growth_ratio().ln()
    }

    pub fn c_ce(&self) -> f64 {
        C_CE
    }

    pub fn c_int(&self) -> f64 {
        C_CE / 10.0
    }

    pub fn c_w(&self) -> f64 {
        self.c_int() * self.delta / 4.0
    }

    pub fn c_con(&self) -> f64 {
        3.0 * self.delta * self.c_int()
    }

    /// Interval size factor `c_int * delta / ln k`.
    pub fn interval_factor(&self) -> f64 {
        self.c_int() * self.delta / self.ln_k()
    }

    /// Relative edge-weight cap `c_w / ln k` used by subdivision.
    pub fn subdivision_factor(&self) -> f64 {
        self.c_w() / self.ln_k()
    }

    /// `floor(log_r(4 x))`: the round by which a vertex at normalized distance
    /// `x` from the terminals is covered with high probability.
    pub fn cover_deadline(&self, x: f64) -> i64 {
        self.log_r(4.0 * x).floor() as i64
    }

    /// `floor(log_r(c_CE x))`: covering a vertex at normalized distance `x`
    /// from its terminal before this round is "early".
    pub fn early_threshold(&self, x: f64) -> i64 {
        self.log_r(C_CE * x).floor() as i64
    }

    /// Default guard: `ceil(log_r(4 max_d)) + 10 ceil(ln k)` rounds, with
    /// `max_d` the largest normalized terminal distance.
    pub fn default_round_guard(&self, max_normalized_distance: f64) -> u64 {
        let base = self.log_r(4.0 * max_normalized_distance.max(1.0)).ceil().max(0.0) as u64;
        base + 10 * self.ln_k().ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_constants() {
        let p = SprParams::new(64, 0);
        p.validate().unwrap();
        assert!((p.c_w() - 1.0 / 2400.0).abs() < 1e-15);
        assert!((p.c_int() - 1.0 / 30.0).abs() < 1e-15);
        assert!((p.c_con() - 1.0 / 200.0).abs() < 1e-15);
        assert!((p.c_ce() - 1.0 / 3.0).abs() < 1e-15);
        let ln64 = 64f64.ln();
        assert_eq!(p.growth_ratio(), 1.0 + 0.05 / ln64);
        assert_eq!(p.base_mean(), 0.05 / ln64);
        assert!(p.growth_ratio() > 1.0);
    }

    #[test]
    fn rejects_bad_delta_and_empty_terminals() {
        assert!(SprParams::new(4, 0).with_delta(0.0).is_err());
        assert!(SprParams::new(4, 0).with_delta(-0.1).is_err());
        assert!(SprParams::new(0, 0).validate().is_err());
        SprParams::new(1, 0).validate().unwrap();
    }

    #[test]
    fn thresholds() {
        let p = SprParams::new(32, 0);
        let r = p.growth_ratio();
        // r^m = 4x exactly at x = r^10 / 4 => deadline 10 (up to rounding)
        let x = r.powi(10) / 4.0 * (1.0 + 1e-12);
        assert_eq!(p.cover_deadline(x), 10);
        assert!(p.cover_deadline(0.01) < 0);
        assert_eq!(p.early_threshold(3.0 * r.powi(5) * (1.0 + 1e-12)), 5);
    }
}
