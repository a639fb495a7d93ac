//! Statistical test helpers shared by the experiments.
//!
//! Conventions:
//! - mean checks use a 3-sigma band unless a check states otherwise;
//! - chi-square families use a 4-sigma-equivalent threshold, i.e. the
//!   chi-square quantile at the two-sided normal confidence 2*Phi(n)-1;
//! - exact integer sampling is used wherever feasible; the symmetric
//!   binomial falls back to a rounded Gaussian with continuity correction
//!   only above `EXACT_BINOMIAL_MAX` draws, and reports that it did.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest trial count for which the symmetric binomial is sampled exactly.
pub const EXACT_BINOMIAL_MAX: u64 = 1_000_000;

/// Two-sided normal confidence level of an n-sigma band.
pub fn sigma_confidence(nsigma: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * normal.cdf(nsigma) - 1.0
}

/// Chi-square acceptance threshold with `dof` degrees of freedom at an
/// n-sigma-equivalent confidence level.
pub fn chi2_threshold(dof: usize, nsigma: f64) -> f64 {
    assert!(dof > 0, "chi-square needs at least one degree of freedom");
    let chi = ChiSquared::new(dof as f64).expect("valid dof");
    chi.inverse_cdf(sigma_confidence(nsigma))
}

/// Goodness-of-fit statistic of observed counts against cell probabilities.
/// Returns `(statistic, dof)` with `dof = cells - 1`.
pub fn chi2_goodness_of_fit(observed: &[u64], probs: &[f64]) -> Result<(f64, usize)> {
    if observed.len() != probs.len() || observed.len() < 2 {
        return Err(Error::InvalidDistribution(format!(
            "chi-square needs matching cell counts, got {} observed vs {} probs",
            observed.len(),
            probs.len()
        )));
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = probs.iter().sum();
    if (psum - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "cell probabilities must be positive and sum to 1, got sum {psum}"
        )));
    }
    let stat = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = total as f64 * p;
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    Ok((stat, observed.len() - 1))
}

/// Merge trailing cells until every expected count is at least
/// `min_expected`, returning the merged `(counts, probs)`.
pub fn merge_tail_bins(
    counts: &[u64],
    probs: &[f64],
    total: u64,
    min_expected: f64,
) -> (Vec<u64>, Vec<f64>) {
    let mut out_c: Vec<u64> = Vec::new();
    let mut out_p: Vec<f64> = Vec::new();
    for (&c, &p) in counts.iter().zip(probs) {
        out_c.push(c);
        out_p.push(p);
    }
    while out_c.len() > 2 && total as f64 * out_p[out_c.len() - 1] < min_expected {
        let c = out_c.pop().unwrap();
        let p = out_p.pop().unwrap();
        *out_c.last_mut().unwrap() += c;
        *out_p.last_mut().unwrap() += p;
    }
    (out_c, out_p)
}

/// Independence statistic for an r x c contingency table.
/// Returns `(statistic, dof)` with `dof = (r-1)(c-1)`.
pub fn chi2_independence(table: &[Vec<u64>]) -> Result<(f64, usize)> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidDistribution(
            "contingency table must be rectangular, at least 2x2".into(),
        ));
    }
    let total: u64 = table.iter().flatten().sum();
    if total == 0 {
        return Err(Error::InvalidDistribution("empty contingency table".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_sums[i] * col_sums[j] / total as f64;
            if e > 0.0 {
                let d = table[i][j] as f64 - e;
                stat += d * d / e;
            }
        }
    }
    Ok((stat, (rows - 1) * (cols - 1)))
}

/// Standard deviation of an empirical frequency of a Bernoulli(p) event
/// over `n` trials.
pub fn bernoulli_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Combined standard deviation of the difference of two independent
/// empirical frequencies.
pub fn two_sample_sigma(p1: f64, n1: u64, p2: f64, n2: u64) -> f64 {
    (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt()
}

/// Geometric sample on {1, 2, ...} with success probability `p`, by
/// inversion of the CDF. Exact to f64 resolution, which is ample for the
/// p >= 2^-40 range used here.
pub fn sample_geometric(rng: &mut impl Rng, p: f64) -> u64 {
    assert!(p > 0.0 && p <= 1.0, "geometric needs p in (0, 1]");
    if p == 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    let g = ((1.0 - u).ln() / (1.0 - p).ln()).ceil();
    (g as u64).max(1)
}

/// Symmetric binomial draw: number of heads in `n` fair coin flips.
/// Exact for `n <= EXACT_BINOMIAL_MAX`; otherwise a Gaussian with
/// continuity correction. Returns `(heads, was_exact)`.
pub fn sample_binomial_half(rng: &mut impl Rng, n: u64) -> (u64, bool) {
    if n == 0 {
        return (0, true);
    }
    if n <= EXACT_BINOMIAL_MAX {
        let bin = Binomial::new(n, 0.5).expect("valid binomial");
        (bin.sample(rng), true)
    } else {
        let mean = n as f64 / 2.0;
        let sd = (n as f64).sqrt() / 2.0;
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        let k = (mean + sd * z + 0.5).floor();
        (k.clamp(0.0, n as f64) as u64, false)
    }
}

/// Net displacement of a simple symmetric random walk after `t` steps:
/// `2 * Binomial(t, 1/2) - t`. Returns `(position, was_exact)`.
pub fn sample_walk_displacement(rng: &mut impl Rng, t: u64) -> (i64, bool) {
    let (heads, exact) = sample_binomial_half(rng, t);
    (2 * heads as i64 - t as i64, exact)
}
