//! Closed-form quantities the Monte Carlo runs are checked against.

use crate::error::{Error, Result};
use crate::states::Beta;

/// Largest set size [`analytic_accuracy`] accepts.
pub const MAX_ORACLE_SET_SIZE: usize = 10_000;

/// `P(ψ′ | e = 1)`, which does not depend on β.
pub fn prime_posterior_given_one(_beta: Beta) -> f64 {
    0.75
}

/// `P(ψ′ | e = 0) = (1 - 3β/4) / (2 - β)`.
pub fn prime_posterior_given_zero(beta: Beta) -> f64 {
    let b = beta.value();
    (1.0 - 0.75 * b) / (2.0 - b)
}

/// Binomial pmf evaluated in log space, so large `m` does not underflow
/// the terms near the mode.
fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    if p == 0.0 || p == 1.0 {
        let mut pmf = vec![0.0; m + 1];
        pmf[if p == 0.0 { 0 } else { m }] = 1.0;
        return pmf;
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let mut ln_choose = 0.0;
    (0..=m)
        .map(|k| {
            if k > 0 {
                ln_choose += ((m - k + 1) as f64).ln() - (k as f64).ln();
            }
            (ln_choose + k as f64 * ln_p + (m - k) as f64 * ln_q).exp()
        })
        .collect()
}

/// `P(X > Y) + P(X = Y) / 2` for independent `X ~ Bin(m, p1)`,
/// `Y ~ Bin(m, p0)`.
pub fn accuracy_for_probabilities(p1: f64, p0: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParams("set size must be positive".into()));
    }
    if m > MAX_ORACLE_SET_SIZE {
        return Err(Error::SetSizeTooLarge {
            m,
            bound: MAX_ORACLE_SET_SIZE,
        });
    }
    if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParams(format!(
            "probabilities must lie in [0, 1], got {p1}, {p0}"
        )));
    }
    let px = binomial_pmf(m, p1);
    let py = binomial_pmf(m, p0);
    // upper[y] = P(X > y)
    let mut upper = vec![0.0; m + 1];
    let mut tail = 0.0;
    for y in (0..=m).rev() {
        upper[y] = tail;
        tail += px[y];
    }
    let total = py
        .iter()
        .enumerate()
        .map(|(y, &q)| q * (upper[y] + 0.5 * px[y]))
        .sum::<f64>();
    Ok(total.clamp(0.0, 1.0))
}

/// Probability that the family-count rule identifies Bob's choice when each
/// announced set holds `m` indices.
pub fn analytic_accuracy(beta: Beta, m: usize) -> Result<f64> {
    accuracy_for_probabilities(
        prime_posterior_given_one(beta),
        prime_posterior_given_zero(beta),
        m,
    )
}

/// Wilson score interval for `successes` out of `n`, clamped to `[0, 1]`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    debug_assert!(successes <= n);
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
