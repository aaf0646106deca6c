//! Sparse exact arithmetic in `H = E(x_1..x_n) ⊗ F_p[y_1..y_n]`.
//!
//! A monomial is an exterior part (a strictly increasing set of `x` indices,
//! stored as a bitmask) together with a vector of `y` exponents. Products obey
//! the Koszul rule `x_i x_j = -x_j x_i`, `x_i^2 = 0`. For `p = 2` the ring is
//! purely polynomial and constructing any `x_i` is an error.
//!
//! Monomials are ordered degree-lexicographically with `y_1 > y_2 > ... > y_n`
//! and the exterior part compared as a sorted index list; this fixes
//! deterministic serialization and the division algorithm.
//!
//! Degrees are *algebraic* throughout (`|x_i| = |y_i| = 1`); the topological
//! degree (`|y_i| = 2`) is available for display.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::field::PrimeField;
use crate::glgroup::GLMatrix;
use crate::{Error, Result};

/// One monomial of `H`: exterior factors and `y` exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperMonomial {
    /// Bit `i` set means the factor `x_{i+1}` is present.
    ext: u32,
    /// `y[i]` is the exponent of `y_{i+1}`; length is always `n`.
    y: Vec<u32>,
}

impl SuperMonomial {
    pub fn unit(n: usize) -> Self {
        SuperMonomial { ext: 0, y: vec![0; n] }
    }

    pub fn new(n: usize, ext_indices: &[usize], yexp: Vec<u32>) -> Result<Self> {
        if yexp.len() != n {
            return Err(Error::IndexRange(format!(
                "y exponent vector has length {}, expected {}",
                yexp.len(),
                n
            )));
        }
        let mut ext = 0u32;
        let mut last = 0usize;
        for &i in ext_indices {
            if i < 1 || i > n {
                return Err(Error::IndexRange(format!("x index {i} not in 1..={n}")));
            }
            if i <= last {
                return Err(Error::IndexRange(format!(
                    "x indices must be strictly increasing, got {i} after {last}"
                )));
            }
            ext |= 1 << (i - 1);
            last = i;
        }
        Ok(SuperMonomial { ext, y: yexp })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Indices of the exterior factors, strictly increasing, 1-based.
    pub fn ext_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|i| self.ext >> i & 1 == 1).map(|i| i + 1).collect()
    }

    pub fn y_exponents(&self) -> &[u32] {
        &self.y
    }

    pub fn ext_count(&self) -> u32 {
        self.ext.count_ones()
    }

    /// Algebraic degree: `|ext| + sum of y exponents`.
    pub fn degree(&self) -> u32 {
        self.ext_count() + self.y.iter().sum::<u32>()
    }

    /// Topological degree: `|ext| + 2 * sum of y exponents`.
    pub fn topological_degree(&self) -> u32 {
        self.ext_count() + 2 * self.y.iter().sum::<u32>()
    }

    pub fn is_polynomial(&self) -> bool {
        self.ext == 0
    }

    /// Whether `self` divides `other` (polynomial part only).
    fn divides(&self, other: &SuperMonomial) -> bool {
        self.ext == 0
            && other.ext == 0
            && self.y.iter().zip(&other.y).all(|(a, b)| a <= b)
    }
}

impl Ord for SuperMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.n(), other.n());
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            c => return c,
        }
        // y_1 > y_2 > ... : compare exponent vectors left to right.
        match self.y.cmp(&other.y) {
            Ordering::Equal => {}
            c => return c,
        }
        // x-part as sorted index lists; x_1 x_2 > x_1 x_3 etc.
        other.ext_indices().cmp(&self.ext_indices())
    }
}

impl PartialOrd for SuperMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse element of `E(x) ⊗ F_p[y]` with canonical nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperPoly {
    p: u32,
    n: usize,
    terms: BTreeMap<SuperMonomial, u32>,
}

impl SuperPoly {
    pub fn zero(p: u32, n: usize) -> Result<Self> {
        PrimeField::new(p)?;
        Ok(SuperPoly { p, n, terms: BTreeMap::new() })
    }

    pub fn scalar(p: u32, n: usize, c: i64) -> Result<Self> {
        let mut f = Self::zero(p, n)?;
        let c = f.field().reduce(c);
        if c != 0 {
            f.terms.insert(SuperMonomial::unit(n), c);
        }
        Ok(f)
    }

    pub fn one(p: u32, n: usize) -> Result<Self> {
        Self::scalar(p, n, 1)
    }

    /// The variable `y_i`, 1-based.
    pub fn var_y(p: u32, n: usize, i: usize) -> Result<Self> {
        if i < 1 || i > n {
            return Err(Error::IndexRange(format!("y index {i} not in 1..={n}")));
        }
        let mut f = Self::zero(p, n)?;
        let mut y = vec![0; n];
        y[i - 1] = 1;
        f.terms.insert(SuperMonomial { ext: 0, y }, 1);
        Ok(f)
    }

    /// The exterior variable `x_i`, 1-based. Errors at `p = 2`.
    pub fn var_x(p: u32, n: usize, i: usize) -> Result<Self> {
        if p == 2 {
            return Err(Error::ExteriorAtTwo);
        }
        if i < 1 || i > n {
            return Err(Error::IndexRange(format!("x index {i} not in 1..={n}")));
        }
        let mut f = Self::zero(p, n)?;
        f.terms.insert(SuperMonomial { ext: 1 << (i - 1), y: vec![0; n] }, 1);
        Ok(f)
    }

    pub fn from_terms(
        p: u32,
        n: usize,
        terms: impl IntoIterator<Item = (SuperMonomial, i64)>,
    ) -> Result<Self> {
        let mut f = Self::zero(p, n)?;
        for (m, c) in terms {
            if m.n() != n {
                return Err(Error::Mismatch(p, n, p, m.n()));
            }
            if p == 2 && m.ext != 0 {
                return Err(Error::ExteriorAtTwo);
            }
            f.add_term(m, f.field().reduce(c));
        }
        Ok(f)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated at construction")
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(SuperMonomial::is_polynomial)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SuperMonomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn leading(&self) -> Option<(&SuperMonomial, u32)> {
        self.terms.iter().next_back().map(|(m, &c)| (m, c))
    }

    /// Coefficient of a monomial (zero if absent).
    pub fn coeff(&self, m: &SuperMonomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    /// Algebraic degree of a homogeneous element; `None` if inhomogeneous
    /// or zero.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys();
        let d = it.next()?.degree();
        it.all(|m| m.degree() == d).then_some(d)
    }

    fn add_term(&mut self, m: SuperMonomial, c: u32) {
        if c == 0 {
            return;
        }
        let p = self.p;
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = (*e.get() + c) % p;
                if v == 0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    fn check_compat(&self, other: &SuperPoly) -> Result<()> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Mismatch(self.p, self.n, other.p, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &SuperPoly) -> Result<SuperPoly> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SuperPoly) -> Result<SuperPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SuperPoly {
        let f = self.field();
        SuperPoly {
            p: self.p,
            n: self.n,
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), f.neg(c))).collect(),
        }
    }

    pub fn scale(&self, c: i64) -> SuperPoly {
        let f = self.field();
        let c = f.reduce(c);
        if c == 0 {
            return SuperPoly { p: self.p, n: self.n, terms: BTreeMap::new() };
        }
        SuperPoly {
            p: self.p,
            n: self.n,
            terms: self.terms.iter().map(|(m, &v)| (m.clone(), f.mul(v, c))).collect(),
        }
    }

    /// Koszul sign for merging two exterior masks: `(-1)^inversions`, or
    /// `None` when an index repeats.
    fn merge_ext(a: u32, b: u32) -> Option<(u32, bool)> {
        if a & b != 0 {
            return None;
        }
        // Count pairs (i in a, j in b) with j < i: each such pair is a
        // transposition when concatenating a-sorted then b-sorted.
        let mut inversions = 0u32;
        let mut bb = b;
        while bb != 0 {
            let j = bb.trailing_zeros();
            inversions += (a >> (j + 1)).count_ones();
            bb &= bb - 1;
        }
        Some((a | b, inversions % 2 == 1))
    }

    pub fn mul(&self, other: &SuperPoly) -> Result<SuperPoly> {
        self.check_compat(other)?;
        let f = self.field();
        let mut out = SuperPoly::zero(self.p, self.n)?;
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                let Some((ext, flip)) = Self::merge_ext(ma.ext, mb.ext) else {
                    continue;
                };
                let y = ma.y.iter().zip(&mb.y).map(|(a, b)| a + b).collect();
                let mut c = f.mul(ca, cb);
                if flip {
                    c = f.neg(c);
                }
                out.add_term(SuperMonomial { ext, y }, c);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<SuperPoly> {
        let mut acc = SuperPoly::one(self.p, self.n)?;
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// `f^(p^k)`: the Frobenius applied `k` times. Exact and cheap because
    /// coefficients are fixed by Frobenius and `x_i^2 = 0` kills exterior
    /// parts.
    pub fn frobenius_pow(&self, k: u32) -> SuperPoly {
        if k == 0 {
            return self.clone();
        }
        let q = self.p.pow(k);
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            if m.ext != 0 {
                continue; // x^p = 0
            }
            let y = m.y.iter().map(|&e| e * q).collect();
            terms.insert(SuperMonomial { ext: 0, y }, c);
        }
        SuperPoly { p: self.p, n: self.n, terms }
    }

    /// Apply `g` as the ring homomorphism extending
    /// `x_k -> sum_i g[i][k] x_i`, `y_k -> sum_i g[i][k] y_i`.
    pub fn substitute(&self, g: &GLMatrix) -> Result<SuperPoly> {
        if g.p() != self.p || g.n() != self.n {
            return Err(Error::Mismatch(self.p, self.n, g.p(), g.n()));
        }
        let n = self.n;
        // Images of the variables.
        let mut y_img = Vec::with_capacity(n);
        let mut x_img = Vec::with_capacity(n);
        for k in 0..n {
            let mut ly = SuperPoly::zero(self.p, n)?;
            for i in 0..n {
                let a = g.entry(i, k);
                if a != 0 {
                    let mut y = vec![0; n];
                    y[i] = 1;
                    ly.add_term(SuperMonomial { ext: 0, y }, a);
                }
            }
            y_img.push(ly);
            if self.p != 2 {
                let mut lx = SuperPoly::zero(self.p, n)?;
                for i in 0..n {
                    let a = g.entry(i, k);
                    if a != 0 {
                        lx.add_term(SuperMonomial { ext: 1 << i, y: vec![0; n] }, a);
                    }
                }
                x_img.push(lx);
            }
        }
        // Cache powers of the linear y-images per (variable, exponent).
        let mut pow_cache: Vec<std::collections::HashMap<u32, SuperPoly>> =
            vec![std::collections::HashMap::new(); n];
        let mut out = SuperPoly::zero(self.p, n)?;
        for (m, &c) in &self.terms {
            let mut acc = SuperPoly::scalar(self.p, n, c as i64)?;
            for i in 0..n {
                let e = m.y[i];
                if e == 0 {
                    continue;
                }
                if !pow_cache[i].contains_key(&e) {
                    let v = linear_pow(&y_img[i], e)?;
                    pow_cache[i].insert(e, v);
                }
                acc = acc.mul(&pow_cache[i][&e])?;
            }
            // Exterior factors in increasing index order.
            let mut bits = m.ext;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                acc = acc.mul(&x_img[i])?;
                bits &= bits - 1;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Exact division of polynomial parts: returns `q` with `q * g = self`,
    /// or an error when the division is inexact.
    pub fn exact_div(&self, g: &SuperPoly) -> Result<SuperPoly> {
        self.check_compat(g)?;
        if !self.is_polynomial() || !g.is_polynomial() {
            return Err(Error::NotPolynomial);
        }
        if g.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = self.field();
        let (gm, gc) = g.leading().expect("nonzero");
        let gc_inv = f.inv(gc)?;
        let mut rem = self.clone();
        let mut quot = SuperPoly::zero(self.p, self.n)?;
        while let Some((rm, rc)) = rem.leading() {
            if !gm.divides(rm) {
                return Err(Error::InexactDivision);
            }
            let y = rm.y.iter().zip(&gm.y).map(|(a, b)| a - b).collect();
            let qm = SuperMonomial { ext: 0, y };
            let qc = f.mul(rc, gc_inv);
            let mut t = SuperPoly::zero(self.p, self.n)?;
            t.terms.insert(qm.clone(), qc);
            rem = rem.sub(&t.mul(g)?)?;
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    /// Serialize to the canonical compact JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<SuperPoly> {
        serde_json::from_str(s).map_err(|e| Error::Parse { offset: 0, msg: e.to_string() })
    }
}

/// Raise a *linear* polynomial form to the `e`-th power using base-p digits
/// of `e`: `L^e = prod_j (L^(p^j))^(e_j)` where each `L^(p^j)` is again linear
/// in the Frobenius-twisted variables. Falls back to binary powering for
/// non-linear input.
fn linear_pow(l: &SuperPoly, e: u32) -> Result<SuperPoly> {
    let is_linear = l.terms.keys().all(|m| m.ext == 0 && m.degree() == 1);
    if !is_linear {
        return l.pow(e);
    }
    let p = l.p();
    let mut acc = SuperPoly::one(p, l.n())?;
    let mut e = e;
    let mut j = 0u32;
    while e > 0 {
        let digit = e % p;
        if digit > 0 {
            let twisted = l.frobenius_pow(j);
            acc = acc.mul(&twisted.pow(digit)?)?;
        }
        e /= p;
        j += 1;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Display: descending monomial order, coefficients in 0..p-1, '+'-separated.
// The output reparses to an equal value under the `parse` module grammar.
// ---------------------------------------------------------------------------

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, &c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for i in m.ext_indices() {
                factors.push(format!("x{i}"));
            }
            for (i, &e) in m.y.iter().enumerate() {
                if e == 1 {
                    factors.push(format!("y{}", i + 1));
                } else if e > 1 {
                    factors.push(format!("y{}^{}", i + 1, e));
                }
            }
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", c, factors.join("*"))?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON: {"p":3,"n":2,"terms":[{"c":2,"ext":[1],"y":[5,0]}]} with terms in
// descending monomial order. Round-trips bit-exactly.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    c: u32,
    ext: Vec<usize>,
    y: Vec<u32>,
}

impl Serialize for SuperPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SuperPoly", 3)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("n", &self.n)?;
        let terms: Vec<JsonTerm> = self
            .terms
            .iter()
            .rev()
            .map(|(m, &c)| JsonTerm { c, ext: m.ext_indices(), y: m.y.clone() })
            .collect();
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SuperPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: u32,
            n: usize,
            terms: Vec<JsonTerm>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.n > 16 {
            return Err(D::Error::custom("n too large"));
        }
        let mut out = SuperPoly::zero(raw.p, raw.n).map_err(D::Error::custom)?;
        for t in raw.terms {
            let m = SuperMonomial::new(raw.n, &t.ext, t.y).map_err(D::Error::custom)?;
            if raw.p == 2 && !m.is_polynomial() {
                return Err(D::Error::custom(Error::ExteriorAtTwo));
            }
            out.add_term(m, t.c % raw.p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y(p: u32, n: usize, i: usize) -> SuperPoly {
        SuperPoly::var_y(p, n, i).unwrap()
    }
    fn x(p: u32, n: usize, i: usize) -> SuperPoly {
        SuperPoly::var_x(p, n, i).unwrap()
    }

    #[test]
    fn additive_identity_and_inverse() {
        let f = y(3, 2, 1).add(&y(3, 2, 2).pow(4).unwrap()).unwrap();
        let zero = SuperPoly::zero(3, 2).unwrap();
        assert_eq!(f.add(&zero).unwrap(), f);
        assert_eq!(f.add(&f.scale(-1)).unwrap(), zero);
        // (y1) + (-1)(y1) = 0 over F_3
        assert_eq!(y(3, 2, 1).add(&y(3, 2, 1).scale(-1)).unwrap(), zero);
    }

    #[test]
    fn char_2_cancellation() {
        // (y1 + y2) + y2 = y1 over F_2
        let s = y(2, 2, 1).add(&y(2, 2, 2)).unwrap();
        assert_eq!(s.add(&y(2, 2, 2)).unwrap(), y(2, 2, 1));
    }

    #[test]
    fn exterior_square_and_anticommutation() {
        let z = SuperPoly::zero(3, 2).unwrap();
        assert_eq!(x(3, 2, 1).mul(&x(3, 2, 1)).unwrap(), z);
        // x2 * x1 = -x1 x2, canonically (p-1) * x1x2
        let prod = x(3, 2, 2).mul(&x(3, 2, 1)).unwrap();
        let expected = x(3, 2, 1).mul(&x(3, 2, 2)).unwrap().scale(-1);
        assert_eq!(prod, expected);
        let (m, c) = prod.leading().unwrap();
        assert_eq!(m.ext_indices(), vec![1, 2]);
        assert_eq!(c, 2);
    }

    #[test]
    fn poly_product_f2() {
        // (y2 + y1) * y2 = y2^2 + y1 y2 over F_2
        let lhs = y(2, 2, 2).add(&y(2, 2, 1)).unwrap().mul(&y(2, 2, 2)).unwrap();
        let rhs = y(2, 2, 2)
            .pow(2)
            .unwrap()
            .add(&y(2, 2, 1).mul(&y(2, 2, 2)).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn p2_rejects_exterior() {
        assert_eq!(SuperPoly::var_x(2, 2, 1).unwrap_err(), Error::ExteriorAtTwo);
    }

    #[test]
    fn mismatch_errors() {
        let a = y(3, 2, 1);
        let b = y(3, 3, 1);
        assert!(matches!(a.add(&b), Err(Error::Mismatch(..))));
        assert!(matches!(a.mul(&b), Err(Error::Mismatch(..))));
    }

    #[test]
    fn exact_division() {
        let y1 = y(3, 2, 1);
        assert_eq!(y1.pow(2).unwrap().exact_div(&y1).unwrap(), y1);
        assert_eq!(y(3, 2, 1).exact_div(&y(3, 2, 2)).unwrap_err(), Error::InexactDivision);
        // q*g / g = q for a random-ish pair
        let q = y(5, 2, 1)
            .pow(3)
            .unwrap()
            .add(&y(5, 2, 2).scale(2))
            .unwrap();
        let g = y(5, 2, 1).add(&y(5, 2, 2).pow(2).unwrap().scale(4)).unwrap();
        assert_eq!(q.mul(&g).unwrap().exact_div(&g).unwrap(), q);
    }

    #[test]
    fn frobenius_is_pth_power() {
        let f = y(3, 2, 1).add(&y(3, 2, 2).scale(2)).unwrap();
        assert_eq!(f.frobenius_pow(1), f.pow(3).unwrap());
        assert_eq!(f.frobenius_pow(2), f.pow(9).unwrap());
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let f = x(3, 2, 1)
            .mul(&y(3, 2, 1).pow(5).unwrap())
            .unwrap()
            .scale(2)
            .add(&y(3, 2, 2))
            .unwrap();
        let s = f.to_json();
        let g = SuperPoly::from_json(&s).unwrap();
        assert_eq!(f, g);
        assert_eq!(g.to_json(), s);
        // The documented example shape.
        let h = SuperPoly::from_json(r#"{"p":3,"n":2,"terms":[{"c":2,"ext":[1],"y":[5,0]}]}"#)
            .unwrap();
        assert_eq!(h.num_terms(), 1);
    }

    #[test]
    fn display_is_deterministic() {
        let f = y(3, 2, 2).add(&y(3, 2, 1).pow(2).unwrap().scale(2)).unwrap();
        assert_eq!(f.to_string(), "2*y1^2 + y2");
    }
}
