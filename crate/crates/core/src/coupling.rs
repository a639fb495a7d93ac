//! Canonical coupling and cascaded permutations.
//!
//! Every word x over {a,b} factors through the canonical word C = abab...
//! via x = C . phi_x, where phi_x sends position i to slot 2q-1 (resp. 2q)
//! when x(i) is the q-th a (resp. q-th b). Decimating X_0 along I_1, I_2,
//! ... induces new innovations J_n = Phi_{n-1}(I_n) and cascaded
//! permutations Phi_n defined by the recursion
//!
//! ```text
//! Phi_{n-1} . psi_{I_n} = psi_{J_n} . Phi_n,
//! ```
//!
//! so that X_n = C . psi_{J_1} . ... . psi_{J_n} . Phi_n.
//!
//! The convergence statement (P[Phi_n = id on [1,L]] -> 1) is verified by
//! two simulators: a materialized one that runs the cascade on an explicit
//! word (ground truth, cost ~ L * 2^n), and a collapsed one that samples
//! only the L+1 surviving positions tau_k (geometric gaps with parameter
//! p_n = 2^-n) together with the b-count random walk S at those positions,
//! and evaluates the sufficient event
//!
//! ```text
//! max(S_{tau_k}, tau_k - S_{tau_k}) < min(S_{tau_{k+1}}, tau_{k+1} - S_{tau_{k+1}})
//! ```
//!
//! for all k <= L, which implies Phi_n = id on [1,L]. The collapsed
//! simulator therefore reports a lower bound for the identity event.

use rand::Rng;

use crate::error::{Error, Result};
use crate::random_sets::{compose_subsets, Letter, SubsetPrefix, WordPrefix};
use crate::rng::{derive_seed, LabRng};
use crate::stats::{sample_binomial_half, sample_geometric};
use rand_chacha::rand_core::SeedableRng;

/// An injection known on an initial segment {1..L}, extendable to a
/// permutation of the positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialPermutation {
    values: Vec<u64>,
}

impl PartialPermutation {
    pub fn from_values(values: Vec<u64>) -> Result<Self> {
        let mut seen = vec![false; values.len() + 1];
        for &v in &values {
            if v == 0 {
                return Err(Error::InconsistentRanks("value 0 is not a position".into()));
            }
            // Values can exceed the domain length; only small ones can collide
            // with the dense check, large ones are checked by sorting below.
            if (v as usize) < seen.len() {
                if seen[v as usize] {
                    return Err(Error::InconsistentRanks(format!("duplicate value {v}")));
                }
                seen[v as usize] = true;
            }
        }
        let mut big: Vec<u64> = values
            .iter()
            .copied()
            .filter(|&v| v as usize >= seen.len())
            .collect();
        big.sort_unstable();
        if big.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InconsistentRanks("duplicate value".into()));
        }
        Ok(PartialPermutation { values })
    }

    pub fn identity(l: u64) -> Self {
        PartialPermutation {
            values: (1..=l).collect(),
        }
    }

    pub fn domain_len(&self) -> u64 {
        self.values.len() as u64
    }

    /// Image of 1-based position k.
    pub fn get(&self, k: u64) -> Result<u64> {
        if k == 0 || k > self.domain_len() {
            return Err(Error::InsufficientPrefix {
                context: "permutation domain",
                demanded: k,
                available: self.domain_len(),
            });
        }
        Ok(self.values[(k - 1) as usize])
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_identity_on(&self, l: u64) -> Result<bool> {
        for k in 1..=l {
            if self.get(k)? != k {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest m with {1..m} contained in the image of the known domain.
    /// Ranks inside the image are exact only below this bound.
    pub fn contiguous_range(&self) -> u64 {
        let l = self.values.len();
        let mut hit = vec![false; l + 2];
        for &v in &self.values {
            if (v as usize) <= l + 1 {
                hit[v as usize] = true;
            }
        }
        let mut m = 0u64;
        while hit[(m + 1) as usize] {
            m += 1;
            if m as usize > l {
                break;
            }
        }
        m
    }
}

/// The canonical word C = abab... (odd positions a, even positions b).
pub fn canonical_word(k: u64) -> WordPrefix {
    WordPrefix::from_letters(
        (1..=k)
            .map(|pos| if pos % 2 == 1 { Letter::A } else { Letter::B })
            .collect(),
    )
}

/// Letter of the infinite canonical word at a position.
pub fn canonical_letter(pos: u64) -> Letter {
    if pos % 2 == 1 {
        Letter::A
    } else {
        Letter::B
    }
}

/// The canonical coupling phi_x, satisfying x = C . phi_x on the domain.
pub fn phi_coupling(x: &WordPrefix) -> PartialPermutation {
    let mut count_a = 0u64;
    let mut count_b = 0u64;
    let values = x
        .letters()
        .iter()
        .map(|&l| match l {
            Letter::A => {
                count_a += 1;
                2 * count_a - 1
            }
            Letter::B => {
                count_b += 1;
                2 * count_b
            }
        })
        .collect();
    PartialPermutation { values }
}

/// Cascade state after n extraction steps.
#[derive(Debug, Clone)]
pub struct CascadeState {
    /// Number of extraction steps applied so far.
    pub level: u32,
    /// Phi_n on its verified domain.
    pub phi: PartialPermutation,
    /// J_1..J_n, each truncated to the prefix its step determined.
    pub j_list: Vec<SubsetPrefix>,
    /// Domain length at each level 0..=n (demand log).
    pub domains: Vec<u64>,
}

impl CascadeState {
    /// Level-0 state: Phi_0 = phi_{X_0} on the full word prefix.
    pub fn initial(x0: &WordPrefix) -> Self {
        let phi = phi_coupling(x0);
        let domains = vec![phi.domain_len()];
        CascadeState {
            level: 0,
            phi,
            j_list: Vec::new(),
            domains,
        }
    }
}

/// One cascade step: from Phi_{n-1} and I_n, computes J_n = Phi_{n-1}(I_n)
/// on the prefix it determines, and Phi_n(k) = rank of Phi_{n-1}(psi_{I_n}(k))
/// in J_n on the largest initial segment where that rank is exact.
pub fn cascade_step(state: &CascadeState, innovation: &SubsetPrefix) -> Result<CascadeState> {
    let l_prev = state.phi.domain_len();
    if innovation.len() < l_prev {
        return Err(Error::InsufficientPrefix {
            context: "cascade_step innovation",
            demanded: l_prev,
            available: innovation.len(),
        });
    }
    let m_prev = state.phi.contiguous_range();

    // Invert Phi_{n-1} on {1..m_prev}; totality there is what contiguous
    // range means.
    let mut inv = vec![0u64; (m_prev + 1) as usize];
    for k in 1..=l_prev {
        let v = state.phi.get(k)?;
        if v <= m_prev {
            inv[v as usize] = k;
        }
    }

    // J_n's bit at position m is I_n's bit at the preimage of m.
    let mut j_bools = vec![false; m_prev as usize];
    for m in 1..=m_prev {
        j_bools[(m - 1) as usize] = innovation.contains(inv[m as usize])?;
    }
    let j = SubsetPrefix::from_bools(&j_bools);

    // Prefix ranks within J_n.
    let mut j_rank = vec![0u64; (m_prev + 1) as usize];
    for m in 1..=m_prev as usize {
        j_rank[m] = j_rank[m - 1] + u64::from(j_bools[m - 1]);
    }

    // New domain: selected positions whose images stay inside the exact-rank
    // zone, cut at the first escape so the domain is an initial segment.
    let mut values = Vec::new();
    for s in innovation.element_list() {
        if s > l_prev {
            break;
        }
        let w = state.phi.get(s)?;
        if w > m_prev {
            break;
        }
        values.push(j_rank[w as usize]);
    }
    let phi = PartialPermutation::from_values(values)?;

    let mut j_list = state.j_list.clone();
    j_list.push(j);
    let mut domains = state.domains.clone();
    domains.push(phi.domain_len());
    Ok(CascadeState {
        level: state.level + 1,
        phi,
        j_list,
        domains,
    })
}

/// Re-checks Phi_{n-1}(psi_{I_n}(k)) = psi_{J_n}(Phi_n(k)) on the whole new
/// domain, via select rather than the ranks used during construction.
pub fn verify_recursion(
    prev: &CascadeState,
    innovation: &SubsetPrefix,
    next: &CascadeState,
) -> Result<()> {
    let j = next.j_list.last().ok_or_else(|| {
        Error::InvalidConfig("verify_recursion needs a state with at least one step".into())
    })?;
    for k in 1..=next.phi.domain_len() {
        let lhs = prev.phi.get(innovation.select(k)?)?;
        let rhs = j.select(next.phi.get(k)?)?;
        if lhs != rhs {
            return Err(Error::InconsistentRanks(format!(
                "recursion identity fails at k={k}: {lhs} vs {rhs}"
            )));
        }
    }
    Ok(())
}

/// First k letters of C . psi_{J_1} . ... . psi_{J_n}.
pub fn psi_chain_word(j_list: &[SubsetPrefix], k: u64) -> Result<WordPrefix> {
    let mut letters = Vec::with_capacity(k as usize);
    for idx in 1..=k {
        let mut pos = idx;
        for j in j_list.iter().rev() {
            pos = j.select(pos)?;
        }
        letters.push(canonical_letter(pos));
    }
    Ok(WordPrefix::from_letters(letters))
}

/// First k letters of C . psi_{J_1} . ... . psi_{J_n} . Phi_n; equals the
/// forward word X_n wherever defined.
pub fn cascade_reconstruct(state: &CascadeState, k: u64) -> Result<WordPrefix> {
    let mut letters = Vec::with_capacity(k as usize);
    for idx in 1..=k {
        let mut pos = state.phi.get(idx)?;
        for j in state.j_list.iter().rev() {
            pos = j.select(pos)?;
        }
        letters.push(canonical_letter(pos));
    }
    Ok(WordPrefix::from_letters(letters))
}

/// Recovers I_n from Phi_{n-1} and J_n, on the prefix the inputs determine:
/// position k belongs to I_n iff Phi_{n-1}(k) belongs to J_n.
pub fn recover_innovation(phi_prev: &PartialPermutation, j: &SubsetPrefix) -> Result<SubsetPrefix> {
    let mut bits = Vec::new();
    for k in 1..=phi_prev.domain_len() {
        let v = phi_prev.get(k)?;
        if v > j.len() {
            break;
        }
        bits.push(j.contains(v)?);
    }
    Ok(SubsetPrefix::from_bools(&bits))
}

/// Law of the b-count S at the first element of a nu_p subset:
/// P[S = 0] = p/(1+p), P[S = s] = 2p(1-p)^{s-1}/(1+p)^{s+1} for s >= 1.
pub fn hitting_law_pmf(p: f64, s: u64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "hitting law needs p in (0,1)");
    if s == 0 {
        p / (1.0 + p)
    } else {
        2.0 * p * (1.0 - p).powi(s as i32 - 1) / (1.0 + p).powi(s as i32 + 1)
    }
}

/// Draws S at the first nu_p element: a Binomial(tau, 1/2) at an
/// independent geometric(p) time tau.
pub fn sample_hitting(rng: &mut impl Rng, p: f64) -> u64 {
    let tau = sample_geometric(rng, p);
    sample_binomial_half(rng, tau).0
}

/// Cube root, exact for p_n = 2^-n with n divisible by 3.
fn cbrt_pow2(n: u32) -> f64 {
    if n % 3 == 0 {
        0.5f64.powi((n / 3) as i32)
    } else {
        0.5f64.powi(n as i32).cbrt()
    }
}

/// The proof's tail bound for one index k:
/// p_{n,k} <= 4(p^{1/3} + p) + k p^{1/3} with p = 2^-n, obtained from
/// p_{n,k} <= 4 p x + (k/p) x^-2 at x = ceil(p^{-2/3}).
pub fn pnk_bound(n: u32, k: u64) -> f64 {
    assert!(n >= 1 && k >= 1, "bound needs n >= 1, k >= 1");
    let p = 0.5f64.powi(n as i32);
    let c = cbrt_pow2(n);
    4.0 * (c + p) + k as f64 * c
}

/// Sum of the tail bounds over k = 1..=l: an upper bound for the
/// probability that the sufficient event fails anywhere in the window.
pub fn pnk_bound_sum(n: u32, l: u64) -> f64 {
    (1..=l).map(|k| pnk_bound(n, k)).sum()
}

/// The collapsed picture of one trial: positions tau_{1..L+1} of the first
/// surviving letters (cumulative geometric(p_n) gaps) and the b-counts S at
/// those positions.
#[derive(Debug, Clone)]
pub struct CollapsedWalkState {
    pub p: f64,
    pub tau: Vec<u64>,
    pub s_at_tau: Vec<u64>,
    /// False if any binomial increment used the Gaussian fallback.
    pub all_exact: bool,
}

impl CollapsedWalkState {
    pub fn sample(n: u32, l: u64, rng: &mut impl Rng) -> Self {
        let p = 0.5f64.powi(n as i32);
        let mut tau = Vec::with_capacity((l + 1) as usize);
        let mut s_at_tau = Vec::with_capacity((l + 1) as usize);
        let mut t = 0u64;
        let mut s = 0u64;
        let mut all_exact = true;
        for _ in 0..=l {
            let gap = sample_geometric(rng, p);
            let (heads, exact) = sample_binomial_half(rng, gap);
            all_exact &= exact;
            t += gap;
            s += heads;
            tau.push(t);
            s_at_tau.push(s);
        }
        CollapsedWalkState {
            p,
            tau,
            s_at_tau,
            all_exact,
        }
    }

    /// The sufficient event: consecutive max/min separation at every k <= L.
    pub fn sufficient_event(&self) -> bool {
        walk_separation(&self.tau, &self.s_at_tau)
    }
}

/// Strict separation of the count brackets at consecutive surviving
/// positions: max(S_k, tau_k - S_k) < min(S_{k+1}, tau_{k+1} - S_{k+1})
/// for every consecutive pair. Both simulators evaluate this predicate.
pub fn walk_separation(tau: &[u64], s_at_tau: &[u64]) -> bool {
    for k in 0..tau.len().saturating_sub(1) {
        let hi = s_at_tau[k].max(tau[k] - s_at_tau[k]);
        let lo = s_at_tau[k + 1].min(tau[k + 1] - s_at_tau[k + 1]);
        if hi >= lo {
            return false;
        }
    }
    true
}

/// One collapsed trial. Returns (event bit, whether all sampling was exact).
pub fn collapsed_event_trial(n: u32, l: u64, rng: &mut impl Rng) -> (bool, bool) {
    let state = CollapsedWalkState::sample(n, l, rng);
    (state.sufficient_event(), state.all_exact)
}

/// Joint outcome of one materialized trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaterializedOutcome {
    /// The walk-separation event, evaluated on the explicit word at the
    /// actual surviving positions. Same law as the collapsed simulator's
    /// event, so the two frequencies must agree.
    pub sufficient: bool,
    /// Phi_n = id on [1,L]; implied by `sufficient`.
    pub phi_identity: bool,
}

/// One materialized trial: runs the full cascade on an explicit word,
/// locates the surviving positions tau_1..tau_{L+1} (the elements of the
/// composed subset), and evaluates both the walk-separation event and the
/// identity event. The initial prefix adapts by doubling; exceeding `cap`
/// letters is an error.
pub fn materialized_event_trial(n: u32, l: u64, seed: u64, cap: u64) -> Result<MaterializedOutcome> {
    let mut prefix_len = (l + 1).saturating_mul(2u64.saturating_pow(n + 2));
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        if prefix_len > cap {
            return Err(Error::DemandCapExceeded { cap, attempts });
        }
        let mut rng = LabRng::seed_from_u64(derive_seed(seed, attempts as u64));
        let x0 = WordPrefix::sample_uniform(&mut rng, prefix_len);
        let mut state = CascadeState::initial(&x0);
        let mut composed: Option<SubsetPrefix> = None;
        for _ in 0..n {
            let innovation = SubsetPrefix::sample(&mut rng, 0.5, state.phi.domain_len())?;
            state = cascade_step(&state, &innovation)?;
            composed = Some(match composed {
                None => innovation,
                Some(prev) => compose_subsets(&prev, &innovation)?,
            });
        }
        let survivors = composed.as_ref().map_or(prefix_len, |r| r.count_ones());
        if survivors < l + 1 || state.phi.domain_len() < l {
            prefix_len = prefix_len.saturating_mul(2);
            continue;
        }
        let mut tau = Vec::with_capacity((l + 1) as usize);
        for k in 1..=(l + 1) {
            tau.push(composed.as_ref().map_or(Ok(k), |r| r.select(k))?);
        }
        let mut s_at_tau = Vec::with_capacity(tau.len());
        let mut s = 0u64;
        let mut next = 0usize;
        for t in 1..=*tau.last().expect("nonempty") {
            if x0.get(t)? == Letter::B {
                s += 1;
            }
            if t == tau[next] {
                s_at_tau.push(s);
                next += 1;
            }
        }
        let sufficient = walk_separation(&tau, &s_at_tau);
        let phi_identity = state.phi.is_identity_on(l)?;
        return Ok(MaterializedOutcome {
            sufficient,
            phi_identity,
        });
    }
}

/// Outcome of the first-level comparison at a restart level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstLevelAgreement {
    /// X_m agrees with C . psi_{J^{n_0}_{n_0+1}} . ... . psi_{J^{n_0}_m} on [1,L].
    pub letters_agree: bool,
    /// The restarted cascade's Phi is the identity on [1,L]; implies
    /// `letters_agree`.
    pub phi_identity: bool,
}

/// Restarts the cascade at level n_0 of a decimation trace and compares
/// X_m against the innovation-only reconstruction on [1,L].
pub fn first_level_agreement(
    trace: &crate::decimation::DecimationTrace,
    n0: i64,
    m: i64,
    l: u64,
) -> Result<FirstLevelAgreement> {
    if n0 > m || m > 0 || n0 < trace.n_min {
        return Err(Error::InvalidConfig(format!(
            "levels must satisfy {} <= n0 <= m <= 0, got n0={n0}, m={m}",
            trace.n_min
        )));
    }
    let mut state = CascadeState::initial(trace.x_at(n0)?);
    for level in (n0 + 1)..=m {
        let step = trace.step_at(level)?;
        state = cascade_step(&state, &step.innovation)?;
    }
    if state.phi.domain_len() < l {
        return Err(Error::InsufficientPrefix {
            context: "first_level_agreement domain",
            demanded: l,
            available: state.phi.domain_len(),
        });
    }
    let phi_identity = state.phi.is_identity_on(l)?;
    let x_m = trace.x_at(m)?;
    let target = psi_chain_word(&state.j_list, l)?;
    let mut letters_agree = true;
    for idx in 1..=l {
        if x_m.get(idx)? != target.get(idx)? {
            letters_agree = false;
            break;
        }
    }
    debug_assert!(!phi_identity || letters_agree);
    Ok(FirstLevelAgreement {
        letters_agree,
        phi_identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn fixture_x0() -> WordPrefix {
        WordPrefix::parse("bbabaaaaabbb").unwrap()
    }

    #[test]
    fn canonical_word_alternates() {
        assert_eq!(canonical_word(4).to_string(), "abab");
        assert_eq!(canonical_word(1).to_string(), "a");
        assert_eq!(canonical_word(12).to_string(), "abababababab");
    }

    #[test]
    fn phi_matches_diagram_and_factors_word() {
        assert_eq!(
            phi_coupling(&fixture_x0()).values(),
            &[2, 4, 1, 6, 3, 5, 7, 9, 11, 8, 10, 12]
        );
        assert_eq!(phi_coupling(&canonical_word(8)).values(), &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(
            phi_coupling(&WordPrefix::parse("bababa").unwrap()).values(),
            &[2, 1, 4, 3, 6, 5]
        );
        // x = C . phi_x letter by letter.
        let mut rng = stream_rng(21, 0);
        for _ in 0..50 {
            let x = WordPrefix::sample_uniform(&mut rng, 64);
            let phi = phi_coupling(&x);
            for k in 1..=64u64 {
                assert_eq!(x.get(k).unwrap(), canonical_letter(phi.get(k).unwrap()));
            }
        }
    }

    #[test]
    fn cascade_reproduces_diagram() {
        let mut state = CascadeState::initial(&fixture_x0());
        let i1 = SubsetPrefix::from_elements(&[2, 5, 7, 9, 10, 11], 12).unwrap();
        let next = cascade_step(&state, &i1).unwrap();
        verify_recursion(&state, &i1, &next).unwrap();
        state = next;
        assert_eq!(state.j_list[0].element_list(), vec![3, 4, 7, 8, 10, 11]);
        assert_eq!(state.phi.values(), &[2, 1, 3, 6, 4, 5]);
        assert_eq!(cascade_reconstruct(&state, 6).unwrap().to_string(), "baaabb");
        assert_eq!(psi_chain_word(&state.j_list, 6).unwrap().to_string(), "ababba");

        let i2 = SubsetPrefix::from_elements(&[1, 2, 4, 6], 6).unwrap();
        let next = cascade_step(&state, &i2).unwrap();
        verify_recursion(&state, &i2, &next).unwrap();
        state = next;
        assert_eq!(state.j_list[1].element_list(), vec![1, 2, 5, 6]);
        assert_eq!(state.phi.values(), &[2, 1, 4, 3]);
        assert_eq!(cascade_reconstruct(&state, 4).unwrap().to_string(), "baab");
        assert_eq!(psi_chain_word(&state.j_list, 4).unwrap().to_string(), "abba");

        let i3 = SubsetPrefix::from_elements(&[1, 4], 4).unwrap();
        let next = cascade_step(&state, &i3).unwrap();
        verify_recursion(&state, &i3, &next).unwrap();
        state = next;
        assert_eq!(state.j_list[2].element_list(), vec![2, 3]);
        assert_eq!(state.phi.values(), &[1, 2]);
    }

    #[test]
    fn cascade_with_full_innovation_reindexes() {
        let x = WordPrefix::parse("abab").unwrap();
        let state = CascadeState::initial(&x);
        let ones = SubsetPrefix::parse("1111").unwrap();
        let next = cascade_step(&state, &ones).unwrap();
        // Phi_0 = id here, and a full innovation keeps Phi = id.
        assert!(next.phi.is_identity_on(4).unwrap());
        assert_eq!(next.j_list[0].element_list(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn cascade_identity_holds_pointwise() {
        // phi_{X_0} . psi_{I_1} . ... . psi_{I_n} = psi_{J_1} . ... . psi_{J_n} . Phi_n
        let mut rng = stream_rng(22, 0);
        for trial in 0..30u64 {
            let _ = trial;
            let x0 = WordPrefix::sample_uniform(&mut rng, 512);
            let phi0 = phi_coupling(&x0);
            let mut state = CascadeState::initial(&x0);
            let mut innovations = Vec::new();
            for _ in 0..4 {
                let i = SubsetPrefix::sample(&mut rng, 0.5, state.phi.domain_len()).unwrap();
                let next = cascade_step(&state, &i).unwrap();
                verify_recursion(&state, &i, &next).unwrap();
                innovations.push(i);
                state = next;
            }
            for k in 1..=state.phi.domain_len() {
                let mut pos = k;
                for i in innovations.iter().rev() {
                    pos = i.select(pos).unwrap();
                }
                let lhs = phi0.get(pos).unwrap();
                let mut rhs = state.phi.get(k).unwrap();
                for j in state.j_list.iter().rev() {
                    rhs = j.select(rhs).unwrap();
                }
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn reconstruction_matches_forward_words() {
        let mut rng = stream_rng(23, 0);
        for _ in 0..40 {
            let x0 = WordPrefix::sample_uniform(&mut rng, 600);
            let mut state = CascadeState::initial(&x0);
            let mut word = x0.clone();
            for _ in 0..5 {
                let i = SubsetPrefix::sample(&mut rng, 0.5, state.phi.domain_len()).unwrap();
                state = cascade_step(&state, &i).unwrap();
                word = crate::random_sets::extract_word_avail(&word, &i);
            }
            let k = state.phi.domain_len().min(word.len());
            if k > 0 {
                assert_eq!(
                    cascade_reconstruct(&state, k).unwrap(),
                    word.truncated(k).unwrap()
                );
            }
        }
    }

    #[test]
    fn innovations_recoverable_from_phi_and_j() {
        let mut rng = stream_rng(24, 0);
        for _ in 0..30 {
            let x0 = WordPrefix::sample_uniform(&mut rng, 400);
            let mut state = CascadeState::initial(&x0);
            for _ in 0..4 {
                let i = SubsetPrefix::sample(&mut rng, 0.5, state.phi.domain_len()).unwrap();
                let next = cascade_step(&state, &i).unwrap();
                let recovered = recover_innovation(&state.phi, next.j_list.last().unwrap()).unwrap();
                for pos in 1..=recovered.len() {
                    assert_eq!(recovered.contains(pos).unwrap(), i.contains(pos).unwrap());
                }
                state = next;
            }
        }
    }

    #[test]
    fn hitting_pmf_values_and_normalization() {
        assert!((hitting_law_pmf(0.5, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((hitting_law_pmf(0.5, 1) - 4.0 / 9.0).abs() < 1e-15);
        for &p in &[0.1, 0.25, 0.5, 0.9] {
            let mut total = 0.0;
            for s in 0..4000 {
                total += hitting_law_pmf(p, s);
            }
            assert!((total - 1.0).abs() < 1e-12, "p={p}: sum {total}");
        }
    }

    #[test]
    fn pnk_bound_values() {
        assert!((pnk_bound(3, 1) - 3.0).abs() < 1e-12);
        let total = pnk_bound_sum(30, 5);
        assert!((total - 0.0341797061264515).abs() < 1e-12, "got {total}");
        // Decreasing in n for fixed k.
        for k in 1..=5 {
            for n in 1..29 {
                assert!(pnk_bound(n + 1, k) < pnk_bound(n, k));
            }
        }
    }

    #[test]
    fn collapsed_state_invariants() {
        let mut rng = stream_rng(25, 0);
        for _ in 0..200 {
            let st = CollapsedWalkState::sample(4, 3, &mut rng);
            assert_eq!(st.tau.len(), 4);
            assert!(st.all_exact);
            for k in 0..st.tau.len() {
                assert!(st.s_at_tau[k] <= st.tau[k]);
                if k > 0 {
                    assert!(st.tau[k] > st.tau[k - 1]);
                }
            }
        }
    }

    #[test]
    fn materialized_trivial_case_and_small_n() {
        // n=0: Phi_0 = phi_{X_0}; on x = C the event always holds. The
        // simulator samples its own word, so instead check n=0 frequency
        // equals P[phi = id on [1,1]] = P[first letter a] ~ 1/2.
        let mut hits = 0;
        for t in 0..2000u64 {
            let out = materialized_event_trial(0, 1, derive_seed(900, t), 1 << 22).unwrap();
            assert!(!out.sufficient || out.phi_identity);
            if out.phi_identity {
                hits += 1;
            }
        }
        let freq = hits as f64 / 2000.0;
        assert!((freq - 0.5).abs() < 0.04, "freq {freq}");
    }

    #[test]
    fn materialized_separation_implies_identity_and_matches_collapsed() {
        // The walk-separation event computed on the explicit word must imply
        // Phi_n = id on the window, and its frequency must match the
        // collapsed simulator's estimate of the same event.
        let (n, l, trials) = (2u32, 2u64, 1500u64);
        let mut mat_hits = 0u64;
        for t in 0..trials {
            let out = materialized_event_trial(n, l, derive_seed(901, t), 1 << 22).unwrap();
            assert!(!out.sufficient || out.phi_identity, "separation without identity");
            if out.sufficient {
                mat_hits += 1;
            }
        }
        let mut rng = stream_rng(902, 0);
        let mut col_hits = 0u64;
        for _ in 0..trials {
            if collapsed_event_trial(n, l, &mut rng).0 {
                col_hits += 1;
            }
        }
        let mat = mat_hits as f64 / trials as f64;
        let col = col_hits as f64 / trials as f64;
        // ~4 sigma band for the difference of two proportions at 1500 trials.
        assert!((mat - col).abs() < 0.07, "materialized {mat} vs collapsed {col}");
    }

    #[test]
    fn first_level_trivial_restart() {
        // m = n0: agreement iff phi_{X_{n0}} = id on [1,L], i.e. the word
        // starts with the canonical letters.
        let (trace, _, _) = crate::decimation::simulate_trace_adaptive(2, 4, 31, 1 << 20).unwrap();
        let res = first_level_agreement(&trace, 0, 0, 2).unwrap();
        let x0 = trace.x_at(0).unwrap();
        let starts_canonical =
            x0.get(1).unwrap() == Letter::A && x0.get(2).unwrap() == Letter::B;
        assert_eq!(res.letters_agree, starts_canonical);
        assert_eq!(res.phi_identity, starts_canonical);
    }
}
