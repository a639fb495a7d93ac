//! The uniform randomized decimation process.
//!
//! A stationary Markov chain (X_n, I_n) indexed by n <= 0: X_{n-1} is a
//! uniform infinite word, I_n ~ nu_{1/2} is independent of the past, and
//!   X_n = X_{n-1} . psi_{I_n}   (kept subword),
//!   Y_n = X_{n-1} . psi_{I_n^c} (rejected subword).
//! Both extracted words are again uniform and independent. The module also
//! provides the inverse reconstruction, the recovery of X_n(i) from future
//! rejects alone (position i dies at a geometric time N_i with
//! P[N_i > t] = 2^-t), the innovation split U_n = {I_n, I_n^c},
//! V_n = 1_{[1 in I_n]}, and the conditional split-words view W^u_n.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::random_sets::{extract_word_avail, Letter, SubsetPrefix, WordPrefix};
use crate::rng::{derive_seed, LabRng};
use rand_chacha::rand_core::SeedableRng;

/// Identifies the adaptive prefix-sizing policy in trace exports, so a
/// (seed, depth, policy) triple pins the trace bytes.
pub const PREFIX_POLICY_VERSION: &str = "prefix-doubling-v1";

/// One transition of the chain: level n, its innovation and both subwords.
#[derive(Debug, Clone)]
pub struct DecimationStepRecord {
    pub level: i64,
    pub innovation: SubsetPrefix,
    pub x: WordPrefix,
    pub y: WordPrefix,
}

/// A simulated window {n_min..0} of the chain.
#[derive(Debug, Clone)]
pub struct DecimationTrace {
    pub seed: u64,
    pub n_min: i64,
    /// X_{n_min}, the deepest (longest) word of the window.
    pub initial: WordPrefix,
    /// Records for levels n_min+1 ..= 0, in that order.
    pub steps: Vec<DecimationStepRecord>,
}

/// Serialized form of one trace level (level n_min carries no innovation).
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub n: i64,
    #[serde(rename = "I_bits")]
    pub i_bits: Option<String>,
    #[serde(rename = "X_letters")]
    pub x_letters: String,
    #[serde(rename = "Y_letters")]
    pub y_letters: Option<String>,
}

impl DecimationTrace {
    /// X at a level of the window.
    pub fn x_at(&self, level: i64) -> Result<&WordPrefix> {
        if level < self.n_min || level > 0 {
            return Err(Error::InvalidConfig(format!(
                "level {level} outside trace window [{}..0]",
                self.n_min
            )));
        }
        if level == self.n_min {
            Ok(&self.initial)
        } else {
            Ok(&self.steps[(level - self.n_min - 1) as usize].x)
        }
    }

    pub fn step_at(&self, level: i64) -> Result<&DecimationStepRecord> {
        if level <= self.n_min || level > 0 {
            return Err(Error::InvalidConfig(format!(
                "no step record at level {level} in window [{}..0]",
                self.n_min
            )));
        }
        Ok(&self.steps[(level - self.n_min - 1) as usize])
    }

    /// Re-checks the defining identities on every recorded level.
    pub fn verify(&self) -> Result<()> {
        let mut prev = &self.initial;
        for step in &self.steps {
            let kept = extract_word_avail(prev, &step.innovation);
            let rejected = extract_word_avail(prev, &step.innovation.complement());
            if kept != step.x || rejected != step.y {
                return Err(Error::InconsistentRanks(format!(
                    "trace record at level {} does not match its parent word",
                    step.level
                )));
            }
            prev = &step.x;
        }
        Ok(())
    }

    /// Flat export records, one per level, deepest first.
    pub fn to_records(&self) -> Vec<TraceRecord> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(TraceRecord {
            n: self.n_min,
            i_bits: None,
            x_letters: self.initial.to_string(),
            y_letters: None,
        });
        for step in &self.steps {
            out.push(TraceRecord {
                n: step.level,
                i_bits: Some(step.innovation.to_string()),
                x_letters: step.x.to_string(),
                y_letters: Some(step.y.to_string()),
            });
        }
        out
    }
}

/// One decimation transition. Splits the covered prefix of `x_prev` along
/// `innovation`; demands at least `k` letters of the kept word.
pub fn decimation_step(
    x_prev: &WordPrefix,
    innovation: &SubsetPrefix,
    k: u64,
) -> Result<(WordPrefix, WordPrefix)> {
    let kept = extract_word_avail(x_prev, innovation);
    if kept.len() < k {
        return Err(Error::InsufficientPrefix {
            context: "decimation_step kept word",
            demanded: k,
            available: kept.len(),
        });
    }
    let rejected = extract_word_avail(x_prev, &innovation.complement());
    Ok((kept, rejected))
}

/// Simulates one window {-depth..0} with a fixed initial prefix length.
/// Fails if the surviving word empties before level 0.
pub fn simulate_trace(depth: u32, prefix_len: u64, seed: u64) -> Result<DecimationTrace> {
    let mut rng = LabRng::seed_from_u64(seed);
    simulate_trace_with(depth, prefix_len, seed, &mut rng)
}

fn simulate_trace_with(
    depth: u32,
    prefix_len: u64,
    seed: u64,
    rng: &mut LabRng,
) -> Result<DecimationTrace> {
    let n_min = -(depth as i64);
    let initial = WordPrefix::sample_uniform(rng, prefix_len);
    let mut steps = Vec::with_capacity(depth as usize);
    let mut prev = initial.clone();
    for level in (n_min + 1)..=0 {
        let innovation = SubsetPrefix::sample(rng, 0.5, prev.len())?;
        let (x, y) = decimation_step(&prev, &innovation, 1)?;
        steps.push(DecimationStepRecord {
            level,
            innovation,
            x: x.clone(),
            y,
        });
        prev = x;
    }
    Ok(DecimationTrace {
        seed,
        n_min,
        initial,
        steps,
    })
}

/// Adaptive wrapper: doubles the initial prefix until X_0 retains at least
/// `min_final_len` letters, starting from 2 * min_final_len * 2^depth.
/// Returns the trace plus the demand actually made (final initial length
/// and attempt count).
pub fn simulate_trace_adaptive(
    depth: u32,
    min_final_len: u64,
    seed: u64,
    cap: u64,
) -> Result<(DecimationTrace, u64, u32)> {
    let mut prefix_len = min_final_len
        .max(1)
        .saturating_mul(2u64.saturating_pow(depth + 1));
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        if prefix_len > cap {
            return Err(Error::DemandCapExceeded { cap, attempts });
        }
        let mut rng = LabRng::seed_from_u64(derive_seed(seed, attempts as u64));
        match simulate_trace_with(depth, prefix_len, seed, &mut rng) {
            Ok(trace) if trace.x_at(0)?.len() >= min_final_len => {
                return Ok((trace, prefix_len, attempts));
            }
            Ok(_) | Err(Error::InsufficientPrefix { .. }) => {
                prefix_len = prefix_len.saturating_mul(2);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Inverts one decimation step: interleaves the kept and rejected words
/// along the innovation's ranks.
pub fn reconstruct_previous(
    innovation: &SubsetPrefix,
    x_next: &WordPrefix,
    y: &WordPrefix,
) -> Result<WordPrefix> {
    let n = innovation.len();
    let ones = innovation.count_ones();
    let zeros = n - ones;
    if x_next.len() < ones || y.len() < zeros {
        return Err(Error::InconsistentRanks(format!(
            "innovation prefix of length {n} needs {ones} kept and {zeros} rejected letters, \
             got {} and {}",
            x_next.len(),
            y.len()
        )));
    }
    let mut letters = Vec::with_capacity(n as usize);
    let mut rank_one = 0u64;
    let mut rank_zero = 0u64;
    for pos in 1..=n {
        if innovation.contains(pos)? {
            rank_one += 1;
            letters.push(x_next.get(rank_one)?);
        } else {
            rank_zero += 1;
            letters.push(y.get(rank_zero)?);
        }
    }
    Ok(WordPrefix::from_letters(letters))
}

/// Outcome of reading a letter off future rejects only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FutureLetter {
    /// The position was rejected at step `steps` (= N_i) of the horizon.
    Decided { letter: Letter, steps: u32 },
    /// The position survived the whole horizon.
    Undecided,
}

/// Recovers X_n(i) from the next T innovations and rejected words alone.
/// `i_list[t]` and `y_list[t]` hold I_{n+1+t} and Y_{n+1+t}.
pub fn reconstruct_from_future(
    i_list: &[SubsetPrefix],
    y_list: &[WordPrefix],
    i: u64,
) -> Result<FutureLetter> {
    if i_list.len() != y_list.len() {
        return Err(Error::InconsistentRanks(format!(
            "{} innovations vs {} rejected words",
            i_list.len(),
            y_list.len()
        )));
    }
    let mut cur = i;
    for (t, (innovation, y)) in i_list.iter().zip(y_list).enumerate() {
        if !innovation.contains(cur)? {
            let r = innovation.rank_zeros(cur)?;
            return Ok(FutureLetter::Decided {
                letter: y.get(r)?,
                steps: t as u32 + 1,
            });
        }
        cur = innovation.rank(cur)?;
    }
    Ok(FutureLetter::Undecided)
}

/// The innovation I_n split into its exchangeable part U_n = {I_n, I_n^c}
/// (stored with the block containing position 1 first) and the residual
/// bit V_n telling which block is I_n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnovationSplit {
    pub with_one: SubsetPrefix,
    pub without_one: SubsetPrefix,
    /// true iff position 1 is in I_n, i.e. iff I_n is the `with_one` block.
    pub v: bool,
}

impl InnovationSplit {
    /// The block u(sel) of the unordered pair, with u(1) = block containing 1.
    pub fn block(&self, sel: bool) -> &SubsetPrefix {
        if sel {
            &self.with_one
        } else {
            &self.without_one
        }
    }

    /// Recovers I_n = U_n(V_n).
    pub fn innovation(&self) -> &SubsetPrefix {
        self.block(self.v)
    }
}

pub fn split_innovation(innovation: &SubsetPrefix) -> Result<InnovationSplit> {
    let v = innovation.contains(1)?;
    let (with_one, without_one) = if v {
        (innovation.clone(), innovation.complement())
    } else {
        (innovation.complement(), innovation.clone())
    };
    Ok(InnovationSplit {
        with_one,
        without_one,
        v,
    })
}

/// The conditional view of the chain given the unordered innovations:
/// at level n the observer sees the table
///   W^u_n(v_{n+1},...,v_0) = X_n . psi_{u_{n+1}(v_{n+1})} . ... . psi_{u_0(v_0)} (1),
/// a word of length 2^{|n|} indexed lexicographically (v_{n+1} most
/// significant). One backward step halves the table: W^u_n is the left or
/// right half of W^u_{n-1} according as V_n = 0 or 1.
#[derive(Debug, Clone)]
pub struct SplitWordsState {
    pub level: i64,
    pub table: WordPrefix,
}

#[derive(Debug, Clone)]
pub struct SplitWordsView {
    /// States for levels n_min ..= 0, in that order.
    pub states: Vec<SplitWordsState>,
    /// V bits for levels n_min+1 ..= 0, aligned with trace steps.
    pub v_bits: Vec<bool>,
}

pub fn split_words_view(trace: &DecimationTrace) -> Result<SplitWordsView> {
    let splits: Vec<InnovationSplit> = trace
        .steps
        .iter()
        .map(|s| split_innovation(&s.innovation))
        .collect::<Result<_>>()?;
    let v_bits: Vec<bool> = splits.iter().map(|s| s.v).collect();
    let mut states = Vec::with_capacity(trace.steps.len() + 1);
    for level in trace.n_min..=0 {
        let width = (-level) as u32;
        let x = trace.x_at(level)?;
        let mut letters = Vec::with_capacity(1usize << width);
        for idx in 0..(1u64 << width) {
            // Bits of idx, most significant first, are (v_{level+1},...,v_0).
            let mut pos = 1u64;
            // Apply the extractions innermost first: u_0, u_{-1}, ..., u_{level+1}.
            for depth_from_top in 0..width {
                let m_level = -(depth_from_top as i64); // level of u being applied
                let v = idx >> depth_from_top & 1 == 1;
                let split = &splits[(m_level - trace.n_min - 1) as usize];
                pos = split.block(v).select(pos).map_err(|_| {
                    Error::InsufficientPrefix {
                        context: "split_words_view extraction",
                        demanded: pos,
                        available: split.block(v).count_ones(),
                    }
                })?;
            }
            letters.push(x.get(pos)?);
        }
        states.push(SplitWordsState {
            level,
            table: WordPrefix::from_letters(letters),
        });
    }
    Ok(SplitWordsView { states, v_bits })
}

/// Simulates a fresh window and builds its split-words view, doubling the
/// initial prefix until every table entry is covered. The deepest table has
/// 2^depth entries whose extraction chains demand roughly twice that many
/// letters, so sizing starts at 2^(depth+3).
pub fn split_words_view_adaptive(
    depth: u32,
    seed: u64,
    cap: u64,
) -> Result<(DecimationTrace, SplitWordsView, u64, u32)> {
    let mut prefix_len = 1u64 << (depth + 3).min(62);
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        if prefix_len > cap {
            return Err(Error::DemandCapExceeded { cap, attempts });
        }
        let trace = match simulate_trace(depth, prefix_len, derive_seed(seed, attempts as u64)) {
            Ok(t) => t,
            Err(Error::InsufficientPrefix { .. }) => {
                prefix_len = prefix_len.saturating_mul(2);
                continue;
            }
            Err(e) => return Err(e),
        };
        match split_words_view(&trace) {
            Ok(view) => return Ok((trace, view, prefix_len, attempts)),
            Err(Error::InsufficientPrefix { .. }) => {
                prefix_len = prefix_len.saturating_mul(2);
            }
            Err(e) => return Err(e),
        }
    }
}

impl SplitWordsView {
    /// Checks W^u_n = (V_n = 0 ? left : right) half of W^u_{n-1} at every level.
    pub fn check_halving(&self) -> Result<()> {
        for w in self.states.windows(2) {
            let (deeper, shallower) = (&w[0], &w[1]);
            let half = shallower.table.len();
            debug_assert_eq!(deeper.table.len(), 2 * half);
            let v = self.v_bits[(shallower.level - self.states[0].level - 1) as usize];
            let offset = if v { half } else { 0 };
            for j in 1..=half {
                if shallower.table.get(j)? != deeper.table.get(offset + j)? {
                    return Err(Error::InconsistentRanks(format!(
                        "halving violated at level {}: entry {j}",
                        shallower.level
                    )));
                }
            }
        }
        Ok(())
    }
}
