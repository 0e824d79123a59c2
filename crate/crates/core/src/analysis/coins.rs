//! The coin-box process.
//!
//! Each box starts with one active coin. Tossing an active coin deactivates
//! it; with probability `p` the toss fails and two fresh active coins join the
//! box. The box is done when no active coin is left. The total number of
//! tosses `Y` is odd and `(Y - 1) / 2` is the number of failures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{frequency_sigma, CheckReport};
use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};

/// Hard cap on tosses per call.
pub const TOSS_GUARD: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxOutcome {
    pub tosses: u64,
    pub failures: u64,
}

/// Runs `boxes` independent boxes with failure probability `p`.
pub fn coin_box_process<R: Rng + ?Sized>(p: f64, boxes: usize, rng: &mut R) -> Result<Vec<BoxOutcome>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!("failure probability must be in (0, 1), got {p}")));
    }
    let mut total = 0u64;
    let mut out = Vec::with_capacity(boxes);
    for _ in 0..boxes {
        let (mut active, mut tosses, mut failures) = (1u64, 0u64, 0u64);
        while active > 0 {
            total += 1;
            if total > TOSS_GUARD {
                return Err(Error::CoinGuardExceeded(TOSS_GUARD));
            }
            active -= 1;
            tosses += 1;
            if rng.gen::<f64>() < p {
                failures += 1;
                active += 2;
            }
        }
        out.push(BoxOutcome { tosses, failures });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinTail {
    pub p: f64,
    pub trials: u64,
    /// `Pr[Y >= 2m + 1]` for `m = 1..=m_max`.
    pub frequency: Vec<f64>,
    /// `exp(-9m/40)`.
    pub bound: Vec<f64>,
    /// `exp(-m/5)`.
    pub loose_bound: Vec<f64>,
    pub parity_violations: u64,
    pub mean_tosses: f64,
}

impl CoinTail {
    pub fn checks(&self, seed: u64) -> Vec<CheckReport> {
        self.frequency
            .iter()
            .zip(&self.bound)
            .enumerate()
            .map(|(i, (&f, &b))| {
                CheckReport::at_most(
                    format!("coin box Pr[Y >= {}]", 2 * (i + 1) + 1),
                    f,
                    b,
                    3.0 * frequency_sigma(b, self.trials),
                    self.trials,
                    seed,
                )
            })
            .collect()
    }
}

/// Single-box tail frequencies over `trials` independent boxes.
pub fn coin_box_tail(p: f64, trials: u64, m_max: u64, seed: u64) -> Result<CoinTail> {
    let mut rng = seeded(seed, Stream::MonteCarlo);
    let mut hist = vec![0u64; m_max as usize + 1];
    let (mut parity_violations, mut sum) = (0u64, 0u64);
    let mut done = 0u64;
    while done < trials {
        let batch = (trials - done).min(100_000) as usize;
        for b in coin_box_process(p, batch, &mut rng)? {
            if b.tosses % 2 == 0 || (b.tosses - 1) / 2 != b.failures {
                parity_violations += 1;
            }
            sum += b.tosses;
            let m = ((b.tosses - 1) / 2).min(m_max);
            hist[m as usize] += 1;
        }
        done += batch as u64;
    }
    // Pr[Y >= 2m + 1] = Pr[(Y - 1) / 2 >= m]
    let mut frequency = Vec::with_capacity(m_max as usize);
    let mut tail: u64 = hist.iter().sum();
    for m in 1..=m_max as usize {
        tail -= hist[m - 1];
        frequency.push(tail as f64 / trials as f64);
    }
    Ok(CoinTail {
        p,
        trials,
        frequency,
        bound: (1..=m_max).map(|m| (-9.0 * m as f64 / 40.0).exp()).collect(),
        loose_bound: (1..=m_max).map(|m| (-(m as f64) / 5.0).exp()).collect(),
        parity_violations,
        mean_tosses: sum as f64 / trials.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_extremes() {
        let mut rng = seeded(0, Stream::MonteCarlo);
        let out = coin_box_process(1e-12, 5, &mut rng).unwrap();
        assert!(out.iter().all(|b| b.tosses == 1 && b.failures == 0));
        assert!(coin_box_process(1.0, 1, &mut rng).is_err());
        assert!(coin_box_process(0.0, 1, &mut rng).is_err());
    }

    #[test]
    fn guard_trips_near_critical() {
        let mut rng = seeded(3, Stream::MonteCarlo);
        // A critical branching process eventually makes a huge box.
        let r = coin_box_process(0.5, 1_000_000, &mut rng);
        assert!(matches!(r, Err(Error::CoinGuardExceeded(_))));
    }

    #[test]
    fn mean_matches_branching_formula() {
        // E[Y] = 1 / (1 - 2p)
        let t = coin_box_tail(0.2, 200_000, 10, 11).unwrap();
        assert_eq!(t.parity_violations, 0);
        assert!((t.mean_tosses - 1.0 / 0.6).abs() < 0.02, "{}", t.mean_tosses);
        assert!(t.bound.iter().zip(&t.loose_bound).all(|(a, b)| a <= b));
        // Pr[Y >= 3] = p exactly.
        assert!((t.frequency[0] - 0.2).abs() < 0.005);
    }
}
