//! Entropy of finite partitions, base-2 logarithms throughout.

use crate::error::{Error, Result};

use super::space::{FinitePartition, FiniteSpace, NULL_ATOM_EPS};

/// phi(x) = -x log2 x, extended by phi(0) = 0.
pub fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// H(alpha) = sum over blocks of phi(pi(block)).
pub fn entropy(space: &FiniteSpace, alpha: &FinitePartition) -> f64 {
    alpha.block_weights(space).iter().map(|&w| phi(w)).sum()
}

/// H(alpha | beta) = sum_B pi(B) sum_A phi(pi(A|B)).
pub fn conditional_entropy(
    space: &FiniteSpace,
    alpha: &FinitePartition,
    beta: &FinitePartition,
) -> f64 {
    let na = alpha.n_blocks() as usize;
    let nb = beta.n_blocks() as usize;
    let mut joint = vec![0.0; na * nb];
    let mut wb = vec![0.0; nb];
    for atom in 0..space.len() {
        let w = space.weight(atom);
        joint[alpha.block(atom) as usize * nb + beta.block(atom) as usize] += w;
        wb[beta.block(atom) as usize] += w;
    }
    let mut h = 0.0;
    for (b, &w) in wb.iter().enumerate() {
        if w < NULL_ATOM_EPS {
            continue;
        }
        for a in 0..na {
            h += w * phi(joint[a * nb + b] / w);
        }
    }
    h
}

/// d(alpha, beta) = H(alpha|beta) + H(beta|alpha).
pub fn partition_distance(
    space: &FiniteSpace,
    alpha: &FinitePartition,
    beta: &FinitePartition,
) -> f64 {
    conditional_entropy(space, alpha, beta) + conditional_entropy(space, beta, alpha)
}

/// The same pseudo-metric by the join route: 2 H(alpha v beta) - H(alpha) - H(beta).
pub fn partition_distance_join_form(
    space: &FiniteSpace,
    alpha: &FinitePartition,
    beta: &FinitePartition,
) -> Result<f64> {
    let join = alpha.join(beta)?;
    Ok(2.0 * entropy(space, &join) - entropy(space, alpha) - entropy(space, beta))
}

/// Continuity in the blocks: for partitions with the same block count,
/// paired by block id with delta_i = pi(A_i symmdiff B_i),
///   d(alpha, beta) <= sum_i 2 phi(delta_i / 2) + sum_i delta_i / ln 2.
pub fn block_continuity_bound(
    space: &FiniteSpace,
    alpha: &FinitePartition,
    beta: &FinitePartition,
) -> Result<f64> {
    if alpha.n_blocks() != beta.n_blocks() {
        return Err(Error::InvalidHypotheses(format!(
            "block pairing needs equal block counts, got {} and {}",
            alpha.n_blocks(),
            beta.n_blocks()
        )));
    }
    alpha.validate_for(space)?;
    beta.validate_for(space)?;
    let k = alpha.n_blocks() as usize;
    let mut delta = vec![0.0; k];
    for atom in 0..space.len() {
        let (a, b) = (alpha.block(atom) as usize, beta.block(atom) as usize);
        if a != b {
            delta[a] += space.weight(atom);
            delta[b] += space.weight(atom);
        }
    }
    Ok(delta
        .iter()
        .map(|&d| 2.0 * phi(d / 2.0) + d / std::f64::consts::LN_2)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phi_shape() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(1.0), 0.0);
        let peak = 1.0 / (std::f64::consts::E * std::f64::consts::LN_2);
        assert!(close(phi(1.0 / std::f64::consts::E), peak, 1e-12));
        for i in 1..100 {
            assert!(phi(i as f64 / 100.0) <= peak + 1e-12);
        }
    }

    #[test]
    fn entropy_fixtures() {
        let space = FiniteSpace::uniform(2);
        assert!(close(entropy(&space, &FinitePartition::discrete(2)), 1.0, 1e-15));
        assert!(close(entropy(&space, &FinitePartition::trivial(2)), 0.0, 1e-15));
        let space = FiniteSpace::from_weights(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(close(entropy(&space, &FinitePartition::discrete(3)), 1.5, 1e-15));
    }

    #[test]
    fn conditional_entropy_basics() {
        let mut rng = stream_rng(52, 0);
        for _ in 0..500 {
            let n = 6;
            let space = FiniteSpace::sample_random(&mut rng, n);
            let a = FinitePartition::sample_random(&mut rng, n, 3);
            let b = FinitePartition::sample_random(&mut rng, n, 3);
            assert!(close(conditional_entropy(&space, &a, &a), 0.0, 1e-12));
            // Chain rule against the join route.
            let j = a.join(&b).unwrap();
            assert!(close(
                conditional_entropy(&space, &a, &b),
                entropy(&space, &j) - entropy(&space, &b),
                1e-12
            ));
        }
    }

    #[test]
    fn independent_partitions_condition_away_nothing() {
        let space = FiniteSpace::uniform_bits(2);
        let a = FinitePartition::from_classifier(4, |i| (i >> 1) as u32);
        let b = FinitePartition::from_classifier(4, |i| (i & 1) as u32);
        assert!(close(
            conditional_entropy(&space, &a, &b),
            entropy(&space, &a),
            1e-15
        ));
    }

    #[test]
    fn distance_formulas_agree_and_triangle_holds() {
        let mut rng = stream_rng(53, 0);
        for _ in 0..2_000 {
            let n = 7;
            let space = FiniteSpace::sample_random(&mut rng, n);
            let a = FinitePartition::sample_random(&mut rng, n, 3);
            let b = FinitePartition::sample_random(&mut rng, n, 3);
            let c = FinitePartition::sample_random(&mut rng, n, 3);
            let d = partition_distance(&space, &a, &b);
            assert!(close(d, partition_distance_join_form(&space, &a, &b).unwrap(), 1e-12));
            assert!(close(partition_distance(&space, &a, &a), 0.0, 1e-12));
            let (dac, dcb) = (
                partition_distance(&space, &a, &c),
                partition_distance(&space, &c, &b),
            );
            assert!(d <= dac + dcb + 1e-10, "{d} > {dac} + {dcb}");
        }
    }

    #[test]
    fn block_continuity_bound_holds_on_paired_partitions() {
        let mut rng = stream_rng(54, 0);
        use rand::Rng;
        for _ in 0..2_000 {
            let n = 8;
            let space = FiniteSpace::sample_random(&mut rng, n);
            let k = 3u32;
            let a = FinitePartition::sample_random(&mut rng, n, k);
            // Perturb a few atom assignments, keeping the raw label range
            // so blocks stay paired by id.
            let mut raw = a.block_of().to_vec();
            let kk = a.n_blocks();
            for slot in raw.iter_mut() {
                if rng.random::<f64>() < 0.25 {
                    *slot = rng.random_range(0..kk);
                }
            }
            let b = FinitePartition::new(raw);
            if b.n_blocks() != a.n_blocks() {
                continue;
            }
            let d = partition_distance(&space, &a, &b);
            let bound = block_continuity_bound(&space, &a, &b).unwrap();
            assert!(d <= bound + 1e-10, "{d} > {bound}");
        }
    }
}
