//! GF(2^m) arithmetic in a polynomial basis, m in {1, 2, 4, 8, 16}.
//!
//! Elements are m-bit patterns; addition is xor and multiplication is
//! carry-less polynomial multiplication reduced by a configured irreducible
//! modulus. Moduli are configuration data validated at startup: f of degree
//! m is irreducible over GF(2) iff x^(2^m) = x mod f and
//! gcd(x^(2^(m/p)) - x, f) = 1 for every prime p dividing m.
//!
//! Contexts precompute discrete log/antilog tables over a generator found
//! at construction, so hot-loop multiplication is two lookups; the
//! carry-less route stays available as an independent cross-check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUPPORTED_DEGREES: [u32; 5] = [1, 2, 4, 8, 16];

/// Default irreducible moduli per degree (bit i = coefficient of x^i).
pub fn default_moduli() -> BTreeMap<u32, u64> {
    BTreeMap::from([
        (1, 0x3),      // x + 1
        (2, 0x7),      // x^2 + x + 1
        (4, 0x13),     // x^4 + x + 1
        (8, 0x11d),    // x^8 + x^4 + x^3 + x^2 + 1
        (16, 0x1002b), // x^16 + x^5 + x^3 + x + 1
    ])
}

fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// Carry-less product of two GF(2) polynomials.
fn clmul(a: u64, b: u64) -> u64 {
    let mut acc = 0u64;
    let mut a = a;
    let mut shift = 0;
    while a != 0 {
        let tz = a.trailing_zeros();
        shift += tz;
        acc ^= b << shift;
        a >>= tz + 1;
        shift += 1;
    }
    acc
}

/// Remainder of a modulo f over GF(2).
fn pmod(mut a: u64, f: u64) -> u64 {
    let df = poly_degree(f);
    while poly_degree(a) >= df {
        a ^= f << (poly_degree(a) - df);
    }
    a
}

fn pmod_mul(a: u64, b: u64, f: u64) -> u64 {
    pmod(clmul(a, b), f)
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = pmod(a, b);
        a = b;
        b = r;
    }
    a
}

/// Irreducibility over GF(2) of a modulus of the given degree.
pub fn is_irreducible(modulus: u64, m: u32) -> bool {
    if m == 0 || poly_degree(modulus) != m as i32 {
        return false;
    }
    if m == 1 {
        return true;
    }
    // t_k = x^(2^k) mod f by repeated squaring.
    let mut t = pmod(0b10, modulus);
    let mut powers = Vec::with_capacity(m as usize);
    for _ in 0..m {
        t = pmod_mul(t, t, modulus);
        powers.push(t);
    }
    if powers[m as usize - 1] != pmod(0b10, modulus) {
        return false;
    }
    let mut rem = m;
    let mut p = 2;
    let mut primes = Vec::new();
    while rem > 1 {
        if rem % p == 0 {
            primes.push(p);
            while rem % p == 0 {
                rem /= p;
            }
        }
        p += 1;
    }
    for p in primes {
        let k = m / p;
        let g = poly_gcd(modulus, powers[k as usize - 1] ^ pmod(0b10, modulus));
        if poly_degree(g) > 0 {
            return false;
        }
    }
    true
}

/// An element tagged with its extension degree, for the degree-checked API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldElement {
    pub m: u32,
    pub value: u64,
}

/// 4-vector of raw element values over one field.
pub type FieldVector = [u64; 4];

/// 4x4 matrix over GF(2^m), row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldMatrix {
    pub m: u32,
    pub entries: [[u64; 4]; 4],
}

/// Arithmetic context for one degree.
#[derive(Debug, Clone)]
pub struct GfContext {
    m: u32,
    modulus: u64,
    generator: u64,
    log: Vec<u16>,
    exp: Vec<u16>,
}

impl GfContext {
    pub fn new(m: u32, modulus: u64) -> Result<Self> {
        if !SUPPORTED_DEGREES.contains(&m) {
            return Err(Error::InvalidConfig(format!(
                "unsupported field degree {m}; supported: {SUPPORTED_DEGREES:?}"
            )));
        }
        if !is_irreducible(modulus, m) {
            return Err(Error::ReducibleModulus { modulus });
        }
        let q = 1u64 << m;
        let group = q - 1;
        // Prime factors of the multiplicative group order.
        let mut primes = Vec::new();
        let mut rem = group;
        let mut p = 2u64;
        while p * p <= rem {
            if rem % p == 0 {
                primes.push(p);
                while rem % p == 0 {
                    rem /= p;
                }
            }
            p += 1;
        }
        if rem > 1 {
            primes.push(rem);
        }
        let pow = |mut base: u64, mut e: u64| -> u64 {
            let mut acc = 1u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = pmod_mul(acc, base, modulus);
                }
                base = pmod_mul(base, base, modulus);
                e >>= 1;
            }
            acc
        };
        let mut generator = 1u64;
        for g in 1..q {
            if group == 1 {
                generator = 1;
                break;
            }
            if primes.iter().all(|&p| pow(g, group / p) != 1) {
                generator = g;
                break;
            }
        }
        let mut log = vec![0u16; q as usize];
        let mut exp = vec![0u16; (2 * group) as usize];
        let mut acc = 1u64;
        for i in 0..group {
            exp[i as usize] = acc as u16;
            exp[(i + group) as usize] = acc as u16;
            log[acc as usize] = i as u16;
            acc = pmod_mul(acc, generator, modulus);
        }
        if acc != 1 {
            return Err(Error::InvalidConfig(format!(
                "generator search failed for modulus {modulus:#x}"
            )));
        }
        Ok(GfContext {
            m,
            modulus,
            generator,
            log,
            exp,
        })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Field size q = 2^m.
    pub fn order(&self) -> u64 {
        1u64 << self.m
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.order() && b < self.order());
        a ^ b
    }

    /// Table multiplication.
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.order() && b < self.order());
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize] as u64
    }

    /// Carry-less route, independent of the tables.
    pub fn mul_clmul(&self, a: u64, b: u64) -> u64 {
        pmod_mul(a, b, self.modulus)
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivisionByZero { degree: self.m });
        }
        let group = self.order() - 1;
        Ok(self.exp[(group - self.log[a as usize] as u64) as usize] as u64)
    }

    pub fn element(&self, value: u64) -> Result<FieldElement> {
        if value >= self.order() {
            return Err(Error::InvalidConfig(format!(
                "value {value:#x} out of range for GF(2^{})",
                self.m
            )));
        }
        Ok(FieldElement { m: self.m, value })
    }

    fn check_elem(&self, e: FieldElement) -> Result<u64> {
        if e.m != self.m {
            return Err(Error::DegreeMismatch {
                left: self.m,
                right: e.m,
            });
        }
        Ok(e.value)
    }

    pub fn add_elem(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let (a, b) = (self.check_elem(a)?, self.check_elem(b)?);
        self.element(self.add(a, b))
    }

    pub fn mul_elem(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let (a, b) = (self.check_elem(a)?, self.check_elem(b)?);
        self.element(self.mul(a, b))
    }

    pub fn inv_elem(&self, a: FieldElement) -> Result<FieldElement> {
        let a = self.check_elem(a)?;
        self.element(self.inv(a)?)
    }

    pub fn vec_add(&self, x: &FieldVector, y: &FieldVector) -> FieldVector {
        [x[0] ^ y[0], x[1] ^ y[1], x[2] ^ y[2], x[3] ^ y[3]]
    }

    pub fn matvec(&self, a: &FieldMatrix, x: &FieldVector) -> Result<FieldVector> {
        if a.m != self.m {
            return Err(Error::DegreeMismatch {
                left: self.m,
                right: a.m,
            });
        }
        let mut out = [0u64; 4];
        for (r, row) in a.entries.iter().enumerate() {
            let mut acc = 0u64;
            for (c, &e) in row.iter().enumerate() {
                acc ^= self.mul(e, x[c]);
            }
            out[r] = acc;
        }
        Ok(out)
    }

    pub fn sample_value(&self, rng: &mut impl rand::Rng) -> u64 {
        rng.random_range(0..self.order())
    }

    pub fn sample_vector(&self, rng: &mut impl rand::Rng) -> FieldVector {
        [
            self.sample_value(rng),
            self.sample_value(rng),
            self.sample_value(rng),
            self.sample_value(rng),
        ]
    }

    pub fn sample_matrix(&self, rng: &mut impl rand::Rng) -> FieldMatrix {
        let mut entries = [[0u64; 4]; 4];
        for row in entries.iter_mut() {
            for e in row.iter_mut() {
                *e = self.sample_value(rng);
            }
        }
        FieldMatrix { m: self.m, entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn contexts() -> Vec<GfContext> {
        default_moduli()
            .iter()
            .map(|(&m, &f)| GfContext::new(m, f).unwrap())
            .collect()
    }

    #[test]
    fn default_moduli_are_irreducible_and_reducibles_rejected() {
        for (&m, &f) in default_moduli().iter() {
            assert!(is_irreducible(f, m), "degree {m} modulus {f:#x}");
        }
        // (x+1)^2 = x^2 + 1
        assert!(!is_irreducible(0b101, 2));
        // x^2 + x = x(x+1)
        assert!(!is_irreducible(0b110, 2));
        // x^16 + x^3 + x + 1 has the root 1.
        assert!(!is_irreducible(0x1000b, 16));
        assert!(matches!(
            GfContext::new(2, 0b101),
            Err(Error::ReducibleModulus { modulus: 0b101 })
        ));
    }

    #[test]
    fn hand_multiplication_example() {
        // x * x = x + 1 mod x^2 + x + 1
        let ctx = GfContext::new(2, 0x7).unwrap();
        assert_eq!(ctx.mul(0b10, 0b10), 0b11);
    }

    #[test]
    fn characteristic_two_and_inverses() {
        for ctx in contexts() {
            for a in 0..ctx.order().min(256) {
                assert_eq!(ctx.add(a, a), 0);
            }
            if ctx.order() <= 256 {
                // Exhaustive inverse check for m <= 8.
                for a in 1..ctx.order() {
                    assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), 1);
                }
            } else {
                let mut rng = stream_rng(31, ctx.degree() as u64);
                for _ in 0..10_000 {
                    let a = rng.random_range(1..ctx.order());
                    assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), 1);
                }
            }
            assert!(matches!(
                ctx.inv(0),
                Err(Error::DivisionByZero { .. })
            ));
        }
    }

    #[test]
    fn field_axioms() {
        for ctx in contexts() {
            let q = ctx.order();
            if q <= 16 {
                // Exhaustive associativity/commutativity/distributivity.
                for a in 0..q {
                    for b in 0..q {
                        assert_eq!(ctx.mul(a, b), ctx.mul(b, a));
                        for c in 0..q {
                            assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
                            assert_eq!(
                                ctx.mul(a, ctx.add(b, c)),
                                ctx.add(ctx.mul(a, b), ctx.mul(a, c))
                            );
                        }
                    }
                }
            } else {
                let mut rng = stream_rng(32, ctx.degree() as u64);
                for _ in 0..10_000 {
                    let (a, b, c) = (
                        ctx.sample_value(&mut rng),
                        ctx.sample_value(&mut rng),
                        ctx.sample_value(&mut rng),
                    );
                    assert_eq!(ctx.mul(a, b), ctx.mul(b, a));
                    assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
                    assert_eq!(
                        ctx.mul(a, ctx.add(b, c)),
                        ctx.add(ctx.mul(a, b), ctx.mul(a, c))
                    );
                }
            }
        }
    }

    #[test]
    fn table_route_matches_carryless_route() {
        for ctx in contexts() {
            let mut rng = stream_rng(33, ctx.degree() as u64);
            for _ in 0..5_000 {
                let a = ctx.sample_value(&mut rng);
                let b = ctx.sample_value(&mut rng);
                assert_eq!(ctx.mul(a, b), ctx.mul_clmul(a, b));
            }
        }
    }

    #[test]
    fn degree_checks_are_enforced() {
        let g2 = GfContext::new(2, 0x7).unwrap();
        let g4 = GfContext::new(4, 0x13).unwrap();
        let a = g2.element(0b11).unwrap();
        let b = g4.element(0b1010).unwrap();
        assert!(matches!(
            g2.mul_elem(a, b),
            Err(Error::DegreeMismatch { .. })
        ));
        assert!(g2.element(4).is_err());
    }
}
