//! Exact finite-space verification of three sigma-field identities:
//!
//! * exchange: if A is independent of D_0 then
//!   A = intersection over n of (A v D_n) for a decreasing chain (D_n);
//! * independent exchange: the two-sided version with chains (C_n), (D_n)
//!   attached to A and B, assuming A v C_0 independent of B v D_0;
//! * simplification: A containing B, A independent of C and
//!   A v C = B v C force A = B mod pi.
//!
//! Each check recomputes every hypothesis, reports which one fails, and on
//! a failed conclusion returns a witness pair of atoms separating the two
//! sigma-fields.

use crate::error::{Error, Result};

use super::space::{FinitePartition, FiniteSpace, EXACT_TOL};

/// Two positive-weight atoms in one block of `coarse` but split by `fine`,
/// exhibiting sigma(fine) strictly above sigma(coarse).
#[derive(Debug, Clone)]
pub struct WitnessAtoms {
    pub atom_a: usize,
    pub atom_b: usize,
    pub label_a: String,
    pub label_b: String,
}

impl std::fmt::Display for WitnessAtoms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "atoms '{}' and '{}' are separated by the finer field only",
            self.label_a, self.label_b
        )
    }
}

/// First positive-weight atom pair glued by `coarse` but split by `fine`.
fn find_witness(
    space: &FiniteSpace,
    coarse: &FinitePartition,
    fine: &FinitePartition,
) -> Option<WitnessAtoms> {
    for a in 0..space.len() {
        if space.is_null(a) {
            continue;
        }
        for b in (a + 1)..space.len() {
            if space.is_null(b) {
                continue;
            }
            if coarse.block(a) == coarse.block(b) && fine.block(a) != fine.block(b) {
                return Some(WitnessAtoms {
                    atom_a: a,
                    atom_b: b,
                    label_a: space.label(a).to_string(),
                    label_b: space.label(b).to_string(),
                });
            }
        }
    }
    None
}

fn check_decreasing(
    space: &FiniteSpace,
    chain: &[FinitePartition],
    name: &str,
) -> Result<()> {
    for (k, pair) in chain.windows(2).enumerate() {
        if !pair[0].refines_mod_null(&pair[1], space) {
            return Err(Error::NotDecreasingChain {
                index: k + 1,
                detail: format!("{name}[{}] is not coarser than {name}[{k}]", k + 1),
            });
        }
    }
    Ok(())
}

/// Intersection over k of (base v chain[k]), computed exactly.
fn intersect_joins(
    space: &FiniteSpace,
    base: &FinitePartition,
    chain: &[FinitePartition],
) -> Result<FinitePartition> {
    let mut acc: Option<FinitePartition> = None;
    for d in chain {
        let joined = base.join(d)?;
        acc = Some(match acc {
            None => joined,
            Some(prev) => prev.meet(&joined, space)?,
        });
    }
    Ok(acc.unwrap_or_else(|| base.clone()))
}

#[derive(Debug, Clone)]
pub struct ExchangeReport {
    /// Hypothesis: A independent of D_0.
    pub independent: bool,
    /// Whether the chain's own intersection is trivial mod null atoms,
    /// the finite stand-in for the trivial-tail behaviour the infinite
    /// statement relies on.
    pub tail_trivial: bool,
    /// Conclusion: A = intersection of (A v D_n) mod null atoms.
    pub identity_holds: bool,
    /// Present iff the identity fails.
    pub witness: Option<WitnessAtoms>,
}

/// Checks A = intersection over n of (A v D_n) for a decreasing chain,
/// recording whether the independence hypothesis that guarantees it holds.
pub fn exchange_identity_check(
    space: &FiniteSpace,
    a: &FinitePartition,
    d_chain: &[FinitePartition],
) -> Result<ExchangeReport> {
    a.validate_for(space)?;
    for d in d_chain {
        d.validate_for(space)?;
    }
    check_decreasing(space, d_chain, "D")?;
    let independent = match d_chain.first() {
        Some(d0) => a.is_independent_of(d0, space, EXACT_TOL),
        None => true,
    };
    let tail_trivial = match d_chain.last() {
        Some(last) => {
            let mut tail = last.clone();
            for d in d_chain {
                tail = tail.meet(d, space)?;
            }
            tail.equal_mod_null(&FinitePartition::trivial(space.len()), space)
        }
        None => true,
    };
    let intersection = intersect_joins(space, a, d_chain)?;
    let identity_holds = intersection.equal_mod_null(a, space);
    // The intersection always contains sigma(A), so a failure is always a
    // strict refinement and has a witness pair.
    let witness = if identity_holds {
        None
    } else {
        find_witness(space, a, &intersection)
    };
    Ok(ExchangeReport {
        independent,
        tail_trivial,
        identity_holds,
        witness,
    })
}

#[derive(Debug, Clone)]
pub struct IndependentExchangeReport {
    /// Hypothesis: A = intersection of (A v C_n).
    pub a_absorbs_chain: bool,
    /// Hypothesis: B = intersection of (B v D_n).
    pub b_absorbs_chain: bool,
    /// Hypothesis: A v C_0 independent of B v D_0.
    pub joins_independent: bool,
    /// Conclusion: A v B = intersection of (A v B v C_n v D_n).
    pub identity_holds: bool,
    pub witness: Option<WitnessAtoms>,
}

impl IndependentExchangeReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.a_absorbs_chain && self.b_absorbs_chain && self.joins_independent
    }
}

/// The two-sided exchange: under the three hypotheses, the join A v B
/// absorbs the tails of both chains at once.
pub fn independent_exchange_check(
    space: &FiniteSpace,
    a: &FinitePartition,
    b: &FinitePartition,
    c_chain: &[FinitePartition],
    d_chain: &[FinitePartition],
) -> Result<IndependentExchangeReport> {
    if c_chain.len() != d_chain.len() {
        return Err(Error::InvalidHypotheses(format!(
            "chain lengths differ: {} vs {}",
            c_chain.len(),
            d_chain.len()
        )));
    }
    a.validate_for(space)?;
    b.validate_for(space)?;
    check_decreasing(space, c_chain, "C")?;
    check_decreasing(space, d_chain, "D")?;
    let a_absorbs_chain = intersect_joins(space, a, c_chain)?.equal_mod_null(a, space);
    let b_absorbs_chain = intersect_joins(space, b, d_chain)?.equal_mod_null(b, space);
    let joins_independent = match (c_chain.first(), d_chain.first()) {
        (Some(c0), Some(d0)) => a
            .join(c0)?
            .is_independent_of(&b.join(d0)?, space, EXACT_TOL),
        _ => a.is_independent_of(b, space, EXACT_TOL),
    };
    let ab = a.join(b)?;
    let mut both: Vec<FinitePartition> = Vec::with_capacity(c_chain.len());
    for (c, d) in c_chain.iter().zip(d_chain) {
        both.push(c.join(d)?);
    }
    let intersection = intersect_joins(space, &ab, &both)?;
    let identity_holds = intersection.equal_mod_null(&ab, space);
    let witness = if identity_holds {
        None
    } else {
        find_witness(space, &ab, &intersection)
    };
    Ok(IndependentExchangeReport {
        a_absorbs_chain,
        b_absorbs_chain,
        joins_independent,
        identity_holds,
        witness,
    })
}

#[derive(Debug, Clone)]
pub struct SimplifyReport {
    /// Conclusion: A = B mod null atoms (guaranteed by the hypotheses).
    pub equal: bool,
    pub witness: Option<WitnessAtoms>,
}

/// Hypotheses (all verified, with the failing one named):
/// sigma(A) contains sigma(B); A independent of C; A v C = B v C.
/// Conclusion: A = B mod pi.
pub fn simplify_by_c_check(
    space: &FiniteSpace,
    a: &FinitePartition,
    b: &FinitePartition,
    c: &FinitePartition,
) -> Result<SimplifyReport> {
    a.validate_for(space)?;
    b.validate_for(space)?;
    c.validate_for(space)?;
    if !a.refines_mod_null(b, space) {
        return Err(Error::InvalidHypotheses(
            "containment fails: sigma(A) does not contain sigma(B)".into(),
        ));
    }
    if !a.is_independent_of(c, space, EXACT_TOL) {
        return Err(Error::InvalidHypotheses(
            "independence fails: A is not independent of C".into(),
        ));
    }
    if !a.join(c)?.equal_mod_null(&b.join(c)?, space) {
        return Err(Error::InvalidHypotheses(
            "join condition fails: A v C differs from B v C".into(),
        ));
    }
    let equal = a.equal_mod_null(b, space);
    let witness = if equal {
        None
    } else {
        // sigma(A) contains sigma(B), so inequality means A strictly finer.
        find_witness(space, b, a)
    };
    Ok(SimplifyReport { equal, witness })
}

#[derive(Debug, Clone)]
pub struct MonotoneLimitReport {
    /// |H(alpha|F_k) - H(alpha|F_limit)| per chain element.
    pub residuals: Vec<f64>,
    pub limit_entropy: f64,
    /// True for a refining chain, false for a coarsening one.
    pub increasing: bool,
}

/// Convergence of H(alpha|F_n) along a monotone chain: the limit field is
/// the join (increasing) or the intersection (decreasing) of the chain.
pub fn monotone_limit_check(
    space: &FiniteSpace,
    alpha: &FinitePartition,
    chain: &[FinitePartition],
) -> Result<MonotoneLimitReport> {
    alpha.validate_for(space)?;
    if chain.is_empty() {
        return Err(Error::InvalidHypotheses("empty chain".into()));
    }
    for f in chain {
        f.validate_for(space)?;
    }
    let increasing = chain
        .windows(2)
        .all(|w| w[1].refines_mod_null(&w[0], space));
    let decreasing = chain
        .windows(2)
        .all(|w| w[0].refines_mod_null(&w[1], space));
    if !increasing && !decreasing {
        return Err(Error::NotDecreasingChain {
            index: chain
                .windows(2)
                .position(|w| !w[0].refines_mod_null(&w[1], space))
                .unwrap_or(0)
                + 1,
            detail: "chain is neither refining nor coarsening".into(),
        });
    }
    let mut limit = chain[0].clone();
    for f in &chain[1..] {
        limit = if increasing {
            limit.join(f)?
        } else {
            limit.meet(f, space)?
        };
    }
    let h_limit = super::measures::conditional_entropy(space, alpha, &limit);
    let residuals = chain
        .iter()
        .map(|f| (super::measures::conditional_entropy(space, alpha, f) - h_limit).abs())
        .collect();
    Ok(MonotoneLimitReport {
        residuals,
        limit_entropy: h_limit,
        increasing,
    })
}
