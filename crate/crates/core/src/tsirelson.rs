//! A dyadic chain of affine maps over a tower of binary fields.
//!
//! Level n <= 0 works over K_n = GF(2^(2^|n|)), so the field degree doubles
//! with every step away from time zero: ..., GF(65536), GF(256), GF(16),
//! GF(4), GF(2) at n = 0. The state at even time 2n is a pair
//! Z_2n = (X_n, Y_n) of 4-vectors over K_n, at odd time 2n-1 a 4-vector B_n.
//! The coefficient matrix A_n is not extra randomness: it is the previous
//! even state repacked, entry-wise, by splitting each K_(n-1) value into a
//! high and a low K_n half. The drive is
//!
//! ```text
//! Y_n = A_n X_n + B_n + U_2n      (characteristic 2, so + is xor)
//! ```
//!
//! where U_2n is the innovation at time 2n and the odd-time innovation is
//! B_n itself. Two copies of the chain that share their innovations U but
//! keep X, B (and the boundary A) independent stay mismatched with
//! probability at least prod (1 - 1/q_k): an affine map pins down at most
//! q^3 of the q^4 inputs once the coefficient matrices differ.

use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gf2m::{FieldMatrix, FieldVector, GfContext};
use crate::rng::{trial_rng, LabRng};

/// Contexts for levels n = -depth..=0; degree at level n is 2^|n|.
#[derive(Debug)]
pub struct FieldTower {
    depth: u32,
    contexts: Vec<GfContext>,
}

impl FieldTower {
    pub fn new(depth: u32, moduli: &BTreeMap<u32, u64>) -> Result<Self> {
        if depth > 4 {
            return Err(Error::InvalidConfig(format!(
                "chain depth {depth} exceeds 4 (field degree would pass 16)"
            )));
        }
        let mut contexts = Vec::with_capacity(depth as usize + 1);
        for k in 0..=depth {
            let m = 1u32 << k;
            let modulus = *moduli.get(&m).ok_or_else(|| {
                Error::InvalidConfig(format!("no modulus configured for degree {m}"))
            })?;
            contexts.push(GfContext::new(m, modulus)?);
        }
        Ok(FieldTower { depth, contexts })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Context for level n (n <= 0, |n| <= depth).
    pub fn context(&self, level: i64) -> Result<&GfContext> {
        let k = level.unsigned_abs() as u32;
        if level > 0 || k > self.depth {
            return Err(Error::InvalidConfig(format!(
                "level {level} outside -{}..=0",
                self.depth
            )));
        }
        Ok(&self.contexts[k as usize])
    }
}

/// Repack an even state over the finer field as a 4x4 matrix over the
/// coarser one: each of the eight fine values splits into (hi, lo) halves
/// laid out row-major, X first. Bijective by construction.
pub fn pack_bijection(
    coarse: &GfContext,
    fine: &GfContext,
    x: &FieldVector,
    y: &FieldVector,
) -> Result<FieldMatrix> {
    if fine.degree() != 2 * coarse.degree() {
        return Err(Error::DegreeMismatch {
            left: fine.degree(),
            right: 2 * coarse.degree(),
        });
    }
    let m = coarse.degree();
    let mask = coarse.order() - 1;
    let mut flat = [0u64; 16];
    for (i, &v) in x.iter().chain(y.iter()).enumerate() {
        flat[2 * i] = v >> m;
        flat[2 * i + 1] = v & mask;
    }
    let mut entries = [[0u64; 4]; 4];
    for (i, &v) in flat.iter().enumerate() {
        entries[i / 4][i % 4] = v;
    }
    Ok(FieldMatrix { m, entries })
}

/// Inverse of `pack_bijection`.
pub fn unpack_bijection(
    coarse: &GfContext,
    fine: &GfContext,
    a: &FieldMatrix,
) -> Result<(FieldVector, FieldVector)> {
    if fine.degree() != 2 * coarse.degree() {
        return Err(Error::DegreeMismatch {
            left: fine.degree(),
            right: 2 * coarse.degree(),
        });
    }
    if a.m != coarse.degree() {
        return Err(Error::DegreeMismatch {
            left: a.m,
            right: coarse.degree(),
        });
    }
    let m = coarse.degree();
    let mut flat = [0u64; 16];
    for (i, slot) in flat.iter_mut().enumerate() {
        *slot = a.entries[i / 4][i % 4];
    }
    let mut xy = [0u64; 8];
    for (i, slot) in xy.iter_mut().enumerate() {
        *slot = (flat[2 * i] << m) | flat[2 * i + 1];
    }
    Ok((
        [xy[0], xy[1], xy[2], xy[3]],
        [xy[4], xy[5], xy[6], xy[7]],
    ))
}

/// One level of a simulated chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub level: i64,
    pub x: FieldVector,
    pub y: FieldVector,
    pub b: FieldVector,
    pub a: FieldMatrix,
    /// Innovation at the even time 2*level.
    pub u: FieldVector,
}

/// The drive equation Y = AX + B + U over the level's field.
pub fn drive(
    ctx: &GfContext,
    a: &FieldMatrix,
    x: &FieldVector,
    b: &FieldVector,
    u: &FieldVector,
) -> Result<FieldVector> {
    let ax = ctx.matvec(a, x)?;
    Ok(ctx.vec_add(&ctx.vec_add(&ax, b), u))
}

/// Simulate levels -depth..=0. The boundary matrix is sampled uniformly;
/// everywhere else A is the repacked previous state. X, B, U are sampled
/// uniformly per level and Y is derived from the drive equation.
pub fn simulate_chain(tower: &FieldTower, seed: u64, trial: u64) -> Result<Vec<ChainState>> {
    let mut rng: LabRng = trial_rng(seed, STREAM_CHAIN, trial);
    sample_chain(tower, &mut rng)
}

fn sample_chain(tower: &FieldTower, rng: &mut LabRng) -> Result<Vec<ChainState>> {
    let depth = tower.depth();
    let mut states: Vec<ChainState> = Vec::with_capacity(depth as usize + 1);
    for k in 0..=depth {
        let level = k as i64 - depth as i64;
        let ctx = tower.context(level)?;
        let a = if k == 0 {
            ctx.sample_matrix(rng)
        } else {
            let prev = &states[k as usize - 1];
            pack_bijection(ctx, tower.context(prev.level)?, &prev.x, &prev.y)?
        };
        let x = ctx.sample_vector(rng);
        let b = ctx.sample_vector(rng);
        let u = ctx.sample_vector(rng);
        let y = drive(ctx, &a, &x, &b, &u)?;
        states.push(ChainState { level, x, y, b, a, u });
    }
    Ok(states)
}

/// Rebuild the trajectory from the boundary matrix plus the innovation data
/// (X_n, U_2n at even times, B_n at odd times) and confirm it reproduces the
/// recorded states. This is the sense in which (X, U, B) are innovations.
pub fn verify_innovation_recovery(tower: &FieldTower, states: &[ChainState]) -> Result<()> {
    if states.len() != tower.depth() as usize + 1 {
        return Err(Error::InvalidHypotheses(format!(
            "expected {} states, got {}",
            tower.depth() + 1,
            states.len()
        )));
    }
    let mut prev: Option<(&ChainState, &GfContext)> = None;
    for state in states {
        let ctx = tower.context(state.level)?;
        let a = match prev {
            None => state.a,
            Some((p, fine)) => pack_bijection(ctx, fine, &p.x, &p.y)?,
        };
        if a != state.a {
            return Err(Error::InvalidHypotheses(format!(
                "coefficient matrix at level {} is not the repacked previous state",
                state.level
            )));
        }
        let y = drive(ctx, &a, &state.x, &state.b, &state.u)?;
        if y != state.y {
            return Err(Error::InvalidHypotheses(format!(
                "drive equation fails to reproduce Y at level {}",
                state.level
            )));
        }
        prev = Some((state, ctx));
    }
    Ok(())
}

/// prod_{k=0..=depth} (1 - 1/q_k) with q_k = 2^(2^k).
pub fn product_bound(depth: u32) -> f64 {
    (0..=depth)
        .map(|k| 1.0 - 1.0 / (1u64 << (1u32 << k)) as f64)
        .product()
}

const STREAM_CHAIN: u64 = 0x7431;
const STREAM_COUPLED: u64 = 0x7432;

/// Mismatch counts from coupled copies sharing innovations U only.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub trials: u64,
    /// Index k counts trials with Z'_2n != Z''_2n at level n = k - depth.
    pub mismatch_counts: Vec<u64>,
}

impl CoupledRun {
    pub fn freq(&self, k: usize) -> f64 {
        self.mismatch_counts[k] as f64 / self.trials as f64
    }
}

/// Run two chains that share every U_2n but draw X, B, and the boundary A
/// independently, and count per-level state mismatches.
pub fn coupled_experiment(tower: &FieldTower, trials: u64, seed: u64) -> Result<CoupledRun> {
    let depth = tower.depth() as usize;
    let counts = (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; depth + 1],
            |mut acc, trial| -> Result<Vec<u64>> {
                let mut rng = trial_rng(seed, STREAM_COUPLED, trial);
                let mut prev: Option<((FieldVector, FieldVector), (FieldVector, FieldVector))> =
                    None;
                for k in 0..=depth {
                    let level = k as i64 - depth as i64;
                    let ctx = tower.context(level)?;
                    let (a1, a2) = match &prev {
                        None => (ctx.sample_matrix(&mut rng), ctx.sample_matrix(&mut rng)),
                        Some((p1, p2)) => {
                            let fine = tower.context(level - 1)?;
                            (
                                pack_bijection(ctx, fine, &p1.0, &p1.1)?,
                                pack_bijection(ctx, fine, &p2.0, &p2.1)?,
                            )
                        }
                    };
                    let u = ctx.sample_vector(&mut rng);
                    let x1 = ctx.sample_vector(&mut rng);
                    let b1 = ctx.sample_vector(&mut rng);
                    let x2 = ctx.sample_vector(&mut rng);
                    let b2 = ctx.sample_vector(&mut rng);
                    let y1 = drive(ctx, &a1, &x1, &b1, &u)?;
                    let y2 = drive(ctx, &a2, &x2, &b2, &u)?;
                    if (x1, y1) != (x2, y2) {
                        acc[k] += 1;
                    }
                    prev = Some(((x1, y1), (x2, y2)));
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; depth + 1],
            |mut a, b| {
                for (s, v) in a.iter_mut().zip(b) {
                    *s += v;
                }
                Ok(a)
            },
        )?;
    Ok(CoupledRun {
        trials,
        mismatch_counts: counts,
    })
}

/// For random pairs of distinct coefficient matrices, count inputs x with
/// A1 x + B1 = A2 x + B2 by exhausting K^4, and report the worst case.
/// Distinct matrices leave at most q^3 of the q^4 inputs unresolved.
pub fn max_shared_output_states(
    ctx: &GfContext,
    probes: u32,
    rng: &mut LabRng,
) -> Result<(u64, u64)> {
    let q = ctx.order();
    let states = q.checked_pow(4).ok_or(Error::StateSpaceTooLarge {
        states: u64::MAX,
        cap: 1 << 16,
    })?;
    if states > 1 << 16 {
        return Err(Error::StateSpaceTooLarge {
            states,
            cap: 1 << 16,
        });
    }
    let cap = q.pow(3);
    let mut worst = 0u64;
    for _ in 0..probes {
        let a1 = ctx.sample_matrix(rng);
        let mut a2 = ctx.sample_matrix(rng);
        while a2 == a1 {
            a2 = ctx.sample_matrix(rng);
        }
        let b1 = ctx.sample_vector(rng);
        let b2 = ctx.sample_vector(rng);
        let mut count = 0u64;
        for idx in 0..states {
            let x = [
                idx % q,
                (idx / q) % q,
                (idx / (q * q)) % q,
                idx / (q * q * q),
            ];
            if drive(ctx, &a1, &x, &b1, &[0; 4])? == drive(ctx, &a2, &x, &b2, &[0; 4])? {
                count += 1;
            }
        }
        if count > cap {
            return Err(Error::InvalidHypotheses(format!(
                "{count} coinciding inputs exceeds q^3 = {cap} for distinct matrices"
            )));
        }
        worst = worst.max(count);
    }
    Ok((worst, cap))
}

/// Exhaustively confirm (x, y) -> (x, y + Ax + B) permutes K^4 x K^4.
/// Feasible only over GF(2).
pub fn drive_is_bijective(ctx: &GfContext, a: &FieldMatrix, b: &FieldVector) -> Result<bool> {
    let q = ctx.order();
    let states = q.pow(4);
    if states > 16 {
        return Err(Error::StateSpaceTooLarge { states, cap: 16 });
    }
    let decode = |idx: u64| -> FieldVector {
        [
            idx % q,
            (idx / q) % q,
            (idx / (q * q)) % q,
            idx / (q * q * q),
        ]
    };
    let mut seen = vec![false; (states * states) as usize];
    for xi in 0..states {
        let x = decode(xi);
        for yi in 0..states {
            let y = decode(yi);
            let ax = ctx.matvec(a, &x)?;
            let out = ctx.vec_add(&ctx.vec_add(&y, &ax), b);
            let mut oi = 0u64;
            for (pos, &v) in out.iter().enumerate() {
                oi += v * q.pow(pos as u32);
            }
            let slot = (xi * states + oi) as usize;
            if seen[slot] {
                return Ok(false);
            }
            seen[slot] = true;
        }
    }
    Ok(seen.iter().all(|&s| s))
}
