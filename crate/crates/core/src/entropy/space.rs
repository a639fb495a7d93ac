//! Finite weighted sample spaces and their partitions.
//!
//! A sigma-field on a finite space is fully described by the partition
//! into its atoms, so sigma-field algebra becomes partition algebra:
//! join = common refinement, intersection = coarsest common coarsening
//! (connected components of the shared-block graph). Atoms of weight
//! below `NULL_ATOM_EPS` are treated as null sets: they neither connect
//! components nor count toward equality "mod pi".

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::LabRng;

/// Atoms lighter than this are null sets for all "mod pi" comparisons.
pub const NULL_ATOM_EPS: f64 = 1e-15;

/// Tolerance on the total mass of a weight vector.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default tolerance for exact-arithmetic identity checks.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    weights: Vec<f64>,
    labels: Vec<String>,
}

impl FiniteSpace {
    pub fn new(weights: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty sample space".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} labels for {} atoms",
                labels.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(FiniteSpace { weights, labels })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        FiniteSpace::new(weights, labels)
    }

    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / n as f64;
        FiniteSpace::from_weights(vec![w; n]).expect("uniform weights are valid")
    }

    /// Uniform space over k-bit strings, labeled "010..." style.
    pub fn uniform_bits(k: u32) -> Self {
        let n = 1usize << k;
        let labels = (0..n)
            .map(|i| {
                (0..k)
                    .rev()
                    .map(|b| if i >> b & 1 == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect();
        FiniteSpace::new(vec![1.0 / n as f64; n], labels).expect("uniform weights are valid")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self, atom: usize) -> &str {
        &self.labels[atom]
    }

    pub fn is_null(&self, atom: usize) -> bool {
        self.weights[atom] < NULL_ATOM_EPS
    }

    /// Dirichlet(1,..,1) sample: a uniform point of the simplex.
    pub fn sample_random(rng: &mut LabRng, n: usize) -> Self {
        let mut w: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        FiniteSpace::from_weights(w).expect("normalized exponentials are a distribution")
    }
}

/// A partition of the atoms, i.e. a sigma-field on the space. Block ids
/// are normalized to 0..n_blocks in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePartition {
    block_of: Vec<u32>,
    n_blocks: u32,
}

fn normalize(raw: &[u32]) -> (Vec<u32>, u32) {
    let mut map: Vec<Option<u32>> = Vec::new();
    let mut next = 0u32;
    let mut out = Vec::with_capacity(raw.len());
    for &b in raw {
        let b = b as usize;
        if b >= map.len() {
            map.resize(b + 1, None);
        }
        let id = *map[b].get_or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out.push(id);
    }
    (out, next)
}

impl FinitePartition {
    pub fn new(block_of: Vec<u32>) -> Self {
        let (block_of, n_blocks) = normalize(&block_of);
        FinitePartition { block_of, n_blocks }
    }

    pub fn trivial(n_atoms: usize) -> Self {
        FinitePartition::new(vec![0; n_atoms])
    }

    pub fn discrete(n_atoms: usize) -> Self {
        FinitePartition::new((0..n_atoms as u32).collect())
    }

    pub fn from_classifier(n_atoms: usize, f: impl Fn(usize) -> u32) -> Self {
        FinitePartition::new((0..n_atoms).map(&f).collect())
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn n_blocks(&self) -> u32 {
        self.n_blocks
    }

    pub fn block(&self, atom: usize) -> u32 {
        self.block_of[atom]
    }

    pub fn block_of(&self) -> &[u32] {
        &self.block_of
    }

    pub fn validate_for(&self, space: &FiniteSpace) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::InvalidDistribution(format!(
                "partition of {} atoms on a space of {}",
                self.len(),
                space.len()
            )));
        }
        Ok(())
    }

    pub fn block_weights(&self, space: &FiniteSpace) -> Vec<f64> {
        let mut w = vec![0.0; self.n_blocks as usize];
        for (atom, &b) in self.block_of.iter().enumerate() {
            w[b as usize] += space.weight(atom);
        }
        w
    }

    /// Common refinement: the join of the two sigma-fields.
    pub fn join(&self, other: &FinitePartition) -> Result<FinitePartition> {
        if self.len() != other.len() {
            return Err(Error::InvalidDistribution(format!(
                "joining partitions of {} and {} atoms",
                self.len(),
                other.len()
            )));
        }
        let width = other.n_blocks.max(1);
        let raw: Vec<u32> = self
            .block_of
            .iter()
            .zip(&other.block_of)
            .map(|(&a, &b)| a * width + b)
            .collect();
        Ok(FinitePartition::new(raw))
    }

    /// Coarsest common coarsening: the intersection of the two
    /// sigma-fields mod pi. Only atoms of positive weight connect blocks;
    /// null atoms are attached to their own block's component afterwards.
    pub fn meet(&self, other: &FinitePartition, space: &FiniteSpace) -> Result<FinitePartition> {
        if self.len() != other.len() {
            return Err(Error::InvalidDistribution(format!(
                "meeting partitions of {} and {} atoms",
                self.len(),
                other.len()
            )));
        }
        self.validate_for(space)?;
        let n = self.len();
        let mut uf = UnionFind::new(n);
        for part in [self, other] {
            let mut first: Vec<Option<usize>> = vec![None; part.n_blocks as usize];
            for atom in 0..n {
                if space.is_null(atom) {
                    continue;
                }
                let b = part.block_of[atom] as usize;
                match first[b] {
                    None => first[b] = Some(atom),
                    Some(f) => uf.union(f, atom),
                }
            }
        }
        // Null atoms follow any positive-weight member of their self-block.
        let mut anchor: Vec<Option<usize>> = vec![None; self.n_blocks as usize];
        for atom in 0..n {
            if !space.is_null(atom) {
                let b = self.block_of[atom] as usize;
                anchor[b].get_or_insert(atom);
            }
        }
        for atom in 0..n {
            if space.is_null(atom) {
                if let Some(a) = anchor[self.block_of[atom] as usize] {
                    uf.union(a, atom);
                }
            }
        }
        let raw: Vec<u32> = (0..n).map(|atom| uf.find(atom) as u32).collect();
        Ok(FinitePartition::new(raw))
    }

    /// Every block of `self` lies inside a block of `other`: sigma(self)
    /// contains sigma(other).
    pub fn refines(&self, other: &FinitePartition) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut target: Vec<Option<u32>> = vec![None; self.n_blocks as usize];
        for (atom, &b) in self.block_of.iter().enumerate() {
            let t = other.block_of[atom];
            match target[b as usize] {
                None => target[b as usize] = Some(t),
                Some(x) if x == t => {}
                Some(_) => return false,
            }
        }
        true
    }

    /// `refines`, ignoring null atoms.
    pub fn refines_mod_null(&self, other: &FinitePartition, space: &FiniteSpace) -> bool {
        if self.len() != other.len() || self.len() != space.len() {
            return false;
        }
        let mut target: Vec<Option<u32>> = vec![None; self.n_blocks as usize];
        for (atom, &b) in self.block_of.iter().enumerate() {
            if space.is_null(atom) {
                continue;
            }
            let t = other.block_of[atom];
            match target[b as usize] {
                None => target[b as usize] = Some(t),
                Some(x) if x == t => {}
                Some(_) => return false,
            }
        }
        true
    }

    /// Same sigma-field up to null atoms.
    pub fn equal_mod_null(&self, other: &FinitePartition, space: &FiniteSpace) -> bool {
        self.refines_mod_null(other, space) && other.refines_mod_null(self, space)
    }

    /// pi(A and B) = pi(A) pi(B) for all block pairs, within `tol`.
    pub fn is_independent_of(
        &self,
        other: &FinitePartition,
        space: &FiniteSpace,
        tol: f64,
    ) -> bool {
        if self.len() != other.len() || self.len() != space.len() {
            return false;
        }
        let wa = self.block_weights(space);
        let wb = other.block_weights(space);
        let mut joint = vec![0.0; wa.len() * wb.len()];
        for atom in 0..self.len() {
            let idx = self.block_of[atom] as usize * wb.len() + other.block_of[atom] as usize;
            joint[idx] += space.weight(atom);
        }
        for (i, &a) in wa.iter().enumerate() {
            for (j, &b) in wb.iter().enumerate() {
                if (joint[i * wb.len() + j] - a * b).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Uniformly random block assignment with at most `max_blocks` labels.
    pub fn sample_random(rng: &mut LabRng, n_atoms: usize, max_blocks: u32) -> Self {
        FinitePartition::new(
            (0..n_atoms)
                .map(|_| rng.random_range(0..max_blocks.max(1)))
                .collect(),
        )
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic orientation keeps block normalization stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn space_validation() {
        assert!(FiniteSpace::from_weights(vec![0.5, 0.5]).is_ok());
        assert!(FiniteSpace::from_weights(vec![0.5, 0.6]).is_err());
        assert!(FiniteSpace::from_weights(vec![1.5, -0.5]).is_err());
        assert!(FiniteSpace::from_weights(vec![]).is_err());
        let bits = FiniteSpace::uniform_bits(3);
        assert_eq!(bits.len(), 8);
        assert_eq!(bits.label(5), "101");
    }

    #[test]
    fn partition_normalization_and_join() {
        let p = FinitePartition::new(vec![7, 7, 2, 7, 2]);
        assert_eq!(p.block_of(), &[0, 0, 1, 0, 1]);
        assert_eq!(p.n_blocks(), 2);
        let q = FinitePartition::new(vec![0, 1, 0, 1, 0]);
        let j = p.join(&q).unwrap();
        assert_eq!(j.block_of(), &[0, 1, 2, 1, 2]);
        assert!(j.refines(&p) && j.refines(&q));
    }

    #[test]
    fn meet_is_connected_components() {
        let space = FiniteSpace::uniform(6);
        // Blocks {0,1},{2,3},{4,5} and {1,2},{3,4},{0,5}: chained into one.
        let p = FinitePartition::new(vec![0, 0, 1, 1, 2, 2]);
        let q = FinitePartition::new(vec![2, 0, 0, 1, 1, 2]);
        let m = p.meet(&q, &space).unwrap();
        assert_eq!(m.n_blocks(), 1);
        // Disjoint halves stay separate.
        let r = FinitePartition::new(vec![0, 0, 0, 1, 1, 1]);
        let s = FinitePartition::new(vec![0, 1, 0, 2, 2, 3]);
        let m = r.meet(&s, &space).unwrap();
        assert_eq!(m.block_of(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn null_atoms_do_not_connect() {
        let space = FiniteSpace::new(
            vec![0.5, 0.0, 0.5],
            vec!["x".into(), "null".into(), "y".into()],
        )
        .unwrap();
        // The only overlap between {0,1} and {1,2} is the null atom 1.
        let p = FinitePartition::new(vec![0, 0, 1]);
        let q = FinitePartition::new(vec![0, 1, 1]);
        let m = p.meet(&q, &space).unwrap();
        assert!(!m.equal_mod_null(&FinitePartition::trivial(3), &space));
        assert_eq!(m.block(0) == m.block(2), false);
        // Mod-null equality ignores where the null atom landed.
        assert!(m.equal_mod_null(&FinitePartition::new(vec![0, 9, 1]), &space));
    }

    #[test]
    fn meet_join_lattice_laws_on_random_instances() {
        let mut rng = stream_rng(51, 0);
        for _ in 0..300 {
            let n = 8;
            let space = FiniteSpace::sample_random(&mut rng, n);
            let p = FinitePartition::sample_random(&mut rng, n, 4);
            let q = FinitePartition::sample_random(&mut rng, n, 4);
            let j = p.join(&q).unwrap();
            let m = p.meet(&q, &space).unwrap();
            assert!(j.refines(&p) && j.refines(&q));
            assert!(p.refines(&m) && q.refines(&m));
            // Absorption mod null.
            assert!(p.join(&m).unwrap().equal_mod_null(&p, &space));
            assert!(p.meet(&j, &space).unwrap().equal_mod_null(&p, &space));
        }
    }

    #[test]
    fn independence_of_product_coordinates() {
        let space = FiniteSpace::uniform_bits(2);
        let first = FinitePartition::from_classifier(4, |i| (i >> 1) as u32);
        let second = FinitePartition::from_classifier(4, |i| (i & 1) as u32);
        assert!(first.is_independent_of(&second, &space, 1e-12));
        assert!(!first.is_independent_of(&first, &space, 1e-12));
    }
}
