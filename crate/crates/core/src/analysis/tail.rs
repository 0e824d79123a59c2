//! Tail bounds for sums of independent exponentials and for binomial counts.
//!
//! For `X = sum X_i`, `X_i ~ Exp(lambda_i)`, `mu = sum lambda_i` and
//! `lambda_M = max lambda_i`:
//!
//! * `a >= 2 mu`:  `Pr[X >= a] <= exp(-(a - 2 mu) / (2 lambda_M))`
//! * `a <= mu / 2`: `Pr[X <= a] <= exp(-(mu / 2 - a) / lambda_M)`
//!
//! and for `n` i.i.d. indicators with mean `p`, `mu = n p`,
//! `Pr[X >= (1 + d) mu] <= exp(-mu d^2 / 4)` for `0 < d <= 2e - 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{frequency_sigma, CheckReport};
use crate::error::{Error, Result};
use crate::rng::{exponential_from_uniform, seeded, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub lambdas: Vec<f64>,
    pub lambda_max: f64,
    pub mu: f64,
    pub a: f64,
    pub upper_tail_bound: f64,
    pub lower_tail_bound: f64,
    /// `a >= 2 mu`
    pub upper_applicable: bool,
    /// `a <= mu / 2`
    pub lower_applicable: bool,
}

pub fn exp_tail_bounds(lambdas: &[f64], a: f64) -> Result<TailBound> {
    if lambdas.is_empty() {
        return Err(Error::arg("at least one rate parameter is required"));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::arg(format!("exponential means must be positive, got {bad}")));
    }
    let mu: f64 = lambdas.iter().sum();
    let lambda_max = lambdas.iter().copied().fold(f64::MIN, f64::max);
    Ok(TailBound {
        lambdas: lambdas.to_vec(),
        lambda_max,
        mu,
        a,
        upper_tail_bound: (-(a - 2.0 * mu) / (2.0 * lambda_max)).exp(),
        lower_tail_bound: (-(mu / 2.0 - a) / lambda_max).exp(),
        upper_applicable: a >= 2.0 * mu,
        lower_applicable: a <= mu / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailValidation {
    pub bound: TailBound,
    pub upper: Option<CheckReport>,
    pub lower: Option<CheckReport>,
}

impl TailValidation {
    pub fn pass(&self) -> bool {
        self.upper.iter().chain(&self.lower).all(|c| c.pass)
    }
}

/// Monte Carlo frequency of each applicable tail event against its bound,
/// with `3 sigma` slack (`sigma` evaluated at the bound).
pub fn validate_tail_bounds(lambdas: &[f64], a: f64, trials: u64, seed: u64) -> Result<TailValidation> {
    let bound = exp_tail_bounds(lambdas, a)?;
    let mut rng = seeded(seed, Stream::MonteCarlo);
    let (mut above, mut below) = (0u64, 0u64);
    for _ in 0..trials {
        let x: f64 = lambdas
            .iter()
            .map(|&l| exponential_from_uniform(l, rng.gen::<f64>()))
            .sum();
        if x >= a {
            above += 1;
        }
        if x <= a {
            below += 1;
        }
    }
    let make = |name: &str, hits: u64, b: f64| {
        CheckReport::at_most(
            name,
            hits as f64 / trials as f64,
            b,
            3.0 * frequency_sigma(b, trials),
            trials,
            seed,
        )
    };
    Ok(TailValidation {
        upper: bound
            .upper_applicable
            .then(|| make("exp-sum upper tail", above, bound.upper_tail_bound)),
        lower: bound
            .lower_applicable
            .then(|| make("exp-sum lower tail", below, bound.lower_tail_bound)),
        bound,
    })
}

/// `exp(-n p d^2 / 4)`.
pub fn chernoff_bound(n: u64, p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!("probability must be in (0, 1), got {p}")));
    }
    let max = 2.0 * std::f64::consts::E - 1.0;
    if !(delta > 0.0 && delta <= max) {
        return Err(Error::arg(format!("deviation must be in (0, 2e - 1], got {delta}")));
    }
    Ok((-(n as f64) * p * delta * delta / 4.0).exp())
}

/// Frequency of `X >= (1 + d) n p` among `trials` batches of `n` Bernoulli(p) tosses.
pub fn validate_chernoff(n: u64, p: f64, delta: f64, trials: u64, seed: u64) -> Result<CheckReport> {
    let bound = chernoff_bound(n, p, delta)?;
    let threshold = (1.0 + delta) * n as f64 * p;
    let mut rng = seeded(seed, Stream::MonteCarlo);
    let mut hits = 0u64;
    for _ in 0..trials {
        let x = (0..n).filter(|_| rng.gen::<f64>() < p).count();
        if x as f64 >= threshold - 1e-9 {
            hits += 1;
        }
    }
    Ok(CheckReport::at_most(
        format!("chernoff n={n} p={p} delta={delta}"),
        hits as f64 / trials as f64,
        bound,
        3.0 * frequency_sigma(bound, trials),
        trials,
        seed,
    ))
}

/// Empirical mean of `samples` draws from `Exp(mean)` against `mean +- 3 sigma`.
pub fn validate_exponential_mean(mean: f64, samples: u64, seed: u64) -> Result<CheckReport> {
    let mut rng = seeded(seed, Stream::MonteCarlo);
    let mut sum = 0.0;
    for _ in 0..samples {
        sum += crate::rng::sample_exponential(mean, &mut rng)?;
    }
    let est = sum / samples as f64;
    let sigma = mean / (samples as f64).sqrt();
    Ok(CheckReport::at_most(
        format!("exponential mean {mean}: |estimate - mean|"),
        (est - mean).abs(),
        0.0,
        3.0 * sigma,
        samples,
        seed,
    ))
}

/// `|Pr[X >= a + b | X >= a] - Pr[X >= b]|` from one batch of samples.
pub fn memorylessness_gap(mean: f64, a: f64, b: f64, samples: u64, seed: u64) -> Result<f64> {
    let mut rng = seeded(seed, Stream::MonteCarlo);
    let (mut ge_a, mut ge_ab, mut ge_b) = (0u64, 0u64, 0u64);
    for _ in 0..samples {
        let x = crate::rng::sample_exponential(mean, &mut rng)?;
        ge_a += (x >= a) as u64;
        ge_ab += (x >= a + b) as u64;
        ge_b += (x >= b) as u64;
    }
    if ge_a == 0 {
        return Err(Error::arg(format!("no sample reached {a}")));
    }
    Ok((ge_ab as f64 / ge_a as f64 - ge_b as f64 / samples as f64).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_unit_exponentials() {
        let l = [1.0; 10];
        let b = exp_tail_bounds(&l, 20.0).unwrap();
        assert!(b.upper_applicable);
        assert_eq!(b.upper_tail_bound, 1.0);
        let b = exp_tail_bounds(&l, 30.0).unwrap();
        assert!((b.upper_tail_bound - (-5.0f64).exp()).abs() < 1e-15);
        assert!((b.upper_tail_bound - 6.7379e-3).abs() < 1e-6);
        let b = exp_tail_bounds(&l, 2.0).unwrap();
        assert!(b.lower_applicable && !b.upper_applicable);
        assert!((b.lower_tail_bound - (-3.0f64).exp()).abs() < 1e-15);
        assert!((b.lower_tail_bound - 4.9787e-2).abs() < 1e-6);
    }

    #[test]
    fn bound_errors() {
        assert!(exp_tail_bounds(&[], 1.0).is_err());
        assert!(exp_tail_bounds(&[1.0, 0.0], 1.0).is_err());
        assert!(chernoff_bound(10, 0.0, 1.0).is_err());
        assert!(chernoff_bound(10, 0.5, 0.0).is_err());
        assert!(chernoff_bound(10, 0.5, 2.0 * std::f64::consts::E).is_err());
    }

    #[test]
    fn chernoff_instantiation() {
        let b = chernoff_bound(20, 0.2, 1.0 / (2.0 * 0.2) - 1.0).unwrap();
        assert!((b - (-2.25f64).exp()).abs() < 1e-15);
        // 9m/40 at m = 10
        assert!((b - (-9.0 * 10.0 / 40.0f64).exp()).abs() < 1e-15);
        assert!(chernoff_bound(20, 0.2, 1e-9).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn single_exponential_tail() {
        // Pr[X >= 2 lambda] = e^-2 <= 1
        let v = validate_tail_bounds(&[1.5], 3.0, 100_000, 7).unwrap();
        let up = v.upper.as_ref().unwrap();
        assert!((up.statistic - (-2.0f64).exp()).abs() < 0.01);
        assert_eq!(up.bound, 1.0);
        assert!(v.pass());
    }
}
