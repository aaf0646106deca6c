//! Arithmetic in the prime field `F_p` for small primes.
//!
//! Elements are canonical residues `0..p-1` stored as `u32`. The field object
//! is a lightweight descriptor; it never owns element storage.

use crate::{Error, Result};

/// Primes accepted by the crate.
pub const SUPPORTED_PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

/// Descriptor for `F_p = Z/p` with `2 <= p <= 13`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self> {
        if SUPPORTED_PRIMES.contains(&p) {
            Ok(PrimeField { p })
        } else {
            Err(Error::BadPrime(p))
        }
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        (a + self.p - b % self.p) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        (self.p - a % self.p) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        a * b % self.p
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1u32;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv(&self, a: u32) -> Result<u32> {
        if a % self.p == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    /// Smallest primitive root mod p (a generator of `F_p^*`).
    pub fn primitive_root(&self) -> u32 {
        if self.p == 2 {
            return 1;
        }
        let order = (self.p - 1) as u64;
        let primes = prime_factors(order);
        'next: for g in 2..self.p {
            for &q in &primes {
                if self.pow(g, order / q) == 1 {
                    continue 'next;
                }
            }
            return g;
        }
        unreachable!("F_p^* is cyclic");
    }

    /// Binomial coefficient `C(m, k) mod p` via Lucas' theorem.
    pub fn binom(&self, m: u64, k: u64) -> u32 {
        binom_mod_p(m, k, self.p)
    }
}

/// `C(m, k) mod p` by Lucas' theorem: the product of digit-wise binomials
/// in base p.
pub fn binom_mod_p(m: u64, k: u64, p: u32) -> u32 {
    if k > m {
        return 0;
    }
    let pp = p as u64;
    let mut m = m;
    let mut k = k;
    let mut acc = 1u64;
    while k > 0 || m > 0 {
        let md = m % pp;
        let kd = k % pp;
        if kd > md {
            return 0;
        }
        acc = acc * binom_small(md, kd) % pp;
        m /= pp;
        k /= pp;
    }
    acc as u32
}

fn binom_small(m: u64, k: u64) -> u64 {
    let k = k.min(m - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num *= m - i;
        den *= i + 1;
    }
    num / den
}

/// Distinct prime factors of `v` by trial division (desk scale only).
pub fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= v {
        if v % d == 0 {
            out.push(d);
            while v % d == 0 {
                v /= d;
            }
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_primes() {
        assert!(PrimeField::new(4).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(17).is_err());
        assert!(PrimeField::new(13).is_ok());
    }

    #[test]
    fn inverses() {
        for &p in &SUPPORTED_PRIMES {
            let f = PrimeField::new(p).unwrap();
            for a in 1..p {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "p={p} a={a}");
            }
            assert!(f.inv(0).is_err());
        }
    }

    #[test]
    fn binom_lucas() {
        // C(m, 0) = 1 and C(p, 1) = 0 mod p.
        for &p in &SUPPORTED_PRIMES {
            for m in 0..30u64 {
                assert_eq!(binom_mod_p(m, 0, p), 1);
            }
            assert_eq!(binom_mod_p(p as u64, 1, p), 0);
        }
        // C(7, 2) = 21 is odd.
        assert_eq!(binom_mod_p(7, 2, 2), 1);
        // Cross-check Lucas against Pascal's triangle mod p.
        for &p in &[2u32, 3, 5, 7] {
            let mut row = vec![1u32];
            for m in 0..=40u64 {
                for (k, &c) in row.iter().enumerate() {
                    assert_eq!(binom_mod_p(m, k as u64, p), c, "p={p} C({m},{k})");
                }
                let mut next = vec![1u32];
                for w in row.windows(2) {
                    next.push((w[0] + w[1]) % p);
                }
                next.push(1);
                row = next;
            }
        }
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(PrimeField::new(3).unwrap().primitive_root(), 2);
        assert_eq!(PrimeField::new(5).unwrap().primitive_root(), 2);
        assert_eq!(PrimeField::new(7).unwrap().primitive_root(), 3);
        let f = PrimeField::new(13).unwrap();
        let g = f.primitive_root();
        let mut seen = std::collections::HashSet::new();
        let mut v = 1;
        for _ in 0..12 {
            v = f.mul(v, g);
            seen.insert(v);
        }
        assert_eq!(seen.len(), 12);
    }
}
