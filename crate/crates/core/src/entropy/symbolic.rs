//! Shift systems on a finite alphabet with exactly computable cylinder
//! probabilities: i.i.d. products and stationary Markov chains.
//!
//! H_n(T, alpha) is the entropy of the partition by length-n words
//! observed through alpha (a partition of the alphabet). Words are
//! enumerated depth-first carrying the forward distribution over the
//! hidden symbol, so coarse observations of a Markov chain are exact,
//! not approximated. Everything refuses rather than approximates once
//! the word count passes `CYLINDER_STATE_CAP`.

use crate::error::{Error, Result};

use super::measures::phi;
use super::space::FinitePartition;

/// Hard cap on enumerated cylinder words.
pub const CYLINDER_STATE_CAP: u64 = 1 << 22;

const MARKOV_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum MeasureSpec {
    /// i.i.d. coordinates with the given symbol weights.
    Product { weights: Vec<f64> },
    /// Stationary Markov chain started from its stationary vector.
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct SymbolicSystem {
    spec: MeasureSpec,
    alphabet: usize,
}

impl SymbolicSystem {
    pub fn product(weights: Vec<f64>) -> Result<Self> {
        validate_distribution(&weights, "product weights")?;
        Ok(SymbolicSystem {
            alphabet: weights.len(),
            spec: MeasureSpec::Product { weights },
        })
    }

    pub fn markov(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let n = transition.len();
        if n == 0 || stationary.len() != n {
            return Err(Error::InvalidDistribution(format!(
                "{} states with a stationary vector of length {}",
                n,
                stationary.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "transition row {i} has length {}",
                    row.len()
                )));
            }
            validate_distribution(row, "transition row")?;
        }
        validate_distribution(&stationary, "stationary vector")?;
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| stationary[i] * transition[i][j]).sum();
            if (flow - stationary[j]).abs() > MARKOV_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "stationary vector is not invariant at state {j}: {flow} vs {}",
                    stationary[j]
                )));
            }
        }
        Ok(SymbolicSystem {
            alphabet: n,
            spec: MeasureSpec::Markov {
                transition,
                stationary,
            },
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    /// Distribution of one coordinate.
    pub fn marginal(&self) -> &[f64] {
        match &self.spec {
            MeasureSpec::Product { weights } => weights,
            MeasureSpec::Markov { stationary, .. } => stationary,
        }
    }

    /// H(X_0), the entropy of one coordinate under the full partition.
    pub fn marginal_entropy(&self) -> f64 {
        self.marginal().iter().map(|&w| phi(w)).sum()
    }

    /// The per-step conditional entropy H(X_1 | X_0); for products this is
    /// just the marginal entropy.
    pub fn step_entropy(&self) -> f64 {
        match &self.spec {
            MeasureSpec::Product { weights } => weights.iter().map(|&w| phi(w)).sum(),
            MeasureSpec::Markov {
                transition,
                stationary,
            } => stationary
                .iter()
                .zip(transition)
                .map(|(&pi, row)| pi * row.iter().map(|&p| phi(p)).sum::<f64>())
                .sum(),
        }
    }

    /// Exact probability of a symbol word at consecutive coordinates.
    pub fn word_prob(&self, word: &[usize]) -> f64 {
        match &self.spec {
            MeasureSpec::Product { weights } => word.iter().map(|&s| weights[s]).product(),
            MeasureSpec::Markov {
                transition,
                stationary,
            } => {
                let mut p = match word.first() {
                    None => return 1.0,
                    Some(&s) => stationary[s],
                };
                for w in word.windows(2) {
                    p *= transition[w[0]][w[1]];
                }
                p
            }
        }
    }
}

fn validate_distribution(w: &[f64], what: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("{what}: weight {x}")));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > MARKOV_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: sums to {total}"
        )));
    }
    Ok(())
}

fn check_cap(alphabet: usize, positions: u32) -> Result<()> {
    let mut states = 1u64;
    for _ in 0..positions {
        states = states.saturating_mul(alphabet as u64);
        if states > CYLINDER_STATE_CAP {
            return Err(Error::StateSpaceTooLarge {
                states,
                cap: CYLINDER_STATE_CAP,
            });
        }
    }
    Ok(())
}

/// Entropy of the partition by the alpha-labels of n consecutive
/// coordinates: depth-first enumeration of label words, each carrying the
/// forward (sub-probability) distribution over the current hidden symbol.
pub fn word_entropy(sys: &SymbolicSystem, alpha: &FinitePartition, n: u32) -> Result<f64> {
    if alpha.len() != sys.alphabet_size() {
        return Err(Error::InvalidDistribution(format!(
            "observation partition covers {} symbols, alphabet has {}",
            alpha.len(),
            sys.alphabet_size()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    check_cap(alpha.n_blocks() as usize, n)?;
    // Group symbols by label once.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); alpha.n_blocks() as usize];
    for s in 0..alpha.len() {
        groups[alpha.block(s) as usize].push(s);
    }
    let start: Vec<f64> = sys.marginal().to_vec();
    let mut h = 0.0;
    let mut stack: Vec<(u32, Vec<f64>)> = vec![(0, start)];
    while let Some((depth, forward)) = stack.pop() {
        if depth == n {
            h += phi(forward.iter().sum());
            continue;
        }
        for group in &groups {
            let mut next = vec![0.0; sys.alphabet_size()];
            if depth == 0 {
                for &s in group {
                    next[s] = forward[s];
                }
            } else {
                match sys.spec() {
                    MeasureSpec::Product { weights } => {
                        let mass: f64 = forward.iter().sum();
                        for &s in group {
                            next[s] = mass * weights[s];
                        }
                    }
                    MeasureSpec::Markov { transition, .. } => {
                        for &s in group {
                            next[s] = (0..sys.alphabet_size())
                                .map(|t| forward[t] * transition[t][s])
                                .sum();
                        }
                    }
                }
            }
            // Zero-probability words contribute phi(0) = 0; prune them.
            if next.iter().sum::<f64>() > 0.0 {
                stack.push((depth + 1, next));
            }
        }
    }
    Ok(h)
}

/// The sequence H_n(T, alpha) / n for n = 1..=n_max.
pub fn entropy_rate_sequence(
    sys: &SymbolicSystem,
    alpha: &FinitePartition,
    n_max: u32,
) -> Result<Vec<f64>> {
    (1..=n_max)
        .map(|n| Ok(word_entropy(sys, alpha, n)? / n as f64))
        .collect()
}

/// Residuals of the conditional-entropy identity
///   h((T,A)|B) = h(T, A v B) - h(T, B)
/// at horizon n: the left side is approximated by
/// H(alpha | alpha_1^n v beta_{-n}^n) and the right by the n-th entropy
/// rates. Exact (all residuals zero) for product systems, which is the
/// supported case.
pub fn pinsker_residuals(
    sys: &SymbolicSystem,
    alpha: &FinitePartition,
    beta: &FinitePartition,
    n_max: u32,
) -> Result<Vec<f64>> {
    let weights = match sys.spec() {
        MeasureSpec::Product { weights } => weights.clone(),
        MeasureSpec::Markov { .. } => {
            return Err(Error::InvalidHypotheses(
                "pinsker residuals are computed for product systems only".into(),
            ))
        }
    };
    if alpha.len() != sys.alphabet_size() || beta.len() != sys.alphabet_size() {
        return Err(Error::InvalidDistribution(
            "observation partitions must cover the alphabet".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        // Window -n..=n of symbols.
        let window = 2 * n + 1;
        check_cap(sys.alphabet_size(), window)?;
        // Conditional entropy of alpha at coordinate 0 given alpha on
        // 1..=n and beta on -n..=n, by exact enumeration.
        let mut table: std::collections::HashMap<Vec<u32>, Vec<f64>> =
            std::collections::HashMap::new();
        enumerate_conditional(&weights, alpha, beta, n, &mut table)?;
        let a: f64 = table
            .values()
            .map(|probs| {
                let total: f64 = probs.iter().sum();
                if total <= 0.0 {
                    0.0
                } else {
                    total * probs.iter().map(|&p| phi(p / total)).sum::<f64>()
                }
            })
            .sum();
        let hn_join = word_entropy(sys, &alpha.join(beta)?, n)? / n as f64;
        let hn_beta = word_entropy(sys, beta, n)? / n as f64;
        out.push(a - (hn_join - hn_beta));
    }
    Ok(out)
}

/// Fills `table`: conditioning labels -> accumulated probability per
/// alpha-label of coordinate 0.
fn enumerate_conditional(
    weights: &[f64],
    alpha: &FinitePartition,
    beta: &FinitePartition,
    n: u32,
    table: &mut std::collections::HashMap<Vec<u32>, Vec<f64>>,
) -> Result<()> {
    let window = (2 * n + 1) as usize;
    let l = weights.len();
    let mut word = vec![0usize; window];
    loop {
        let prob: f64 = word.iter().map(|&s| weights[s]).product();
        if prob > 0.0 {
            // Coordinate layout: positions 0..window map to times -n..=n.
            let zero = n as usize;
            let mut key = Vec::with_capacity(window + n as usize);
            for (t, &s) in word.iter().enumerate() {
                if t > zero {
                    key.push(alpha.block(s));
                }
            }
            for &s in word.iter() {
                key.push(beta.block(s));
            }
            let slot = table
                .entry(key)
                .or_insert_with(|| vec![0.0; alpha.n_blocks() as usize]);
            slot[alpha.block(word[zero]) as usize] += prob;
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == window {
                return Ok(());
            }
            word[pos] += 1;
            if word[pos] < l {
                break;
            }
            word[pos] = 0;
            pos += 1;
        }
    }
}
