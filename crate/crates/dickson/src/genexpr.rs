//! Formal polynomials in named invariant generators.
//!
//! A `GenExpr` is a sparse polynomial whose variables are symbols like
//! `d[3,1]`, `h[2]`, or `Mhat[2;0,1]`, with an expansion homomorphism to
//! `SuperPoly`. Symbols of odd exterior degree (Mui classes with an odd
//! number of `x`-columns) anticommute; the product tracks the Koszul sign so
//! that `expand` is a ring homomorphism.

use std::collections::BTreeMap;
use std::fmt;

use crate::field::PrimeField;
use crate::invariants;
use crate::superpoly::SuperPoly;
use crate::{Error, Result};

/// A named invariant generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenSymbol {
    /// `h_i`, the orbit product of `y_i` over `V^{i-1}`.
    H { i: usize },
    /// `h_i` hatted by the antidiagonal involution.
    HHat { i: usize },
    /// `h_i(j-hat)`: the span omits `y_j`.
    HOmit { i: usize, j: usize },
    /// `h_i(j) = delta_{i,j} h_i`.
    HSwap { i: usize, j: usize },
    /// `L_m = h_1 ... h_m`.
    L { m: usize },
    /// `L_m` hatted.
    LHat { m: usize },
    /// `L_{m,i}`: the Moore determinant with the `p^i` row missing.
    LSub { m: usize, i: usize },
    /// Dickson generator `d_{m,i}`.
    D { m: usize, i: usize },
    /// `d_{m,i}` hatted.
    DHat { m: usize, i: usize },
    /// Parabolic truncation `d_{m,i}(I)` for `I = (1, m-1)`.
    DParab { m: usize, i: usize },
    /// Mui class `M_{m,s_1..s_k}`.
    M { m: usize, s: Vec<usize> },
    /// `M_{m,S}` hatted.
    MHat { m: usize, s: Vec<usize> },
}

impl GenSymbol {
    /// Algebraic degree of the expansion (y's count 1).
    pub fn degree(&self, p: u32) -> u64 {
        let p = p as u64;
        let geom = |m: usize| (p.pow(m as u32) - 1) / (p - 1);
        match self {
            GenSymbol::H { i } | GenSymbol::HHat { i } | GenSymbol::HSwap { i, .. } => {
                p.pow(*i as u32 - 1)
            }
            GenSymbol::HOmit { i, .. } => p.pow(*i as u32 - 2),
            GenSymbol::L { m } | GenSymbol::LHat { m } => geom(*m),
            GenSymbol::LSub { m, i } => geom(*m + 1) - p.pow(*i as u32),
            GenSymbol::D { m, i } | GenSymbol::DHat { m, i } | GenSymbol::DParab { m, i } => {
                p.pow(*m as u32) - p.pow(*i as u32)
            }
            GenSymbol::M { m, s } | GenSymbol::MHat { m, s } => {
                s.len() as u64 + geom(*m) - s.iter().map(|&t| p.pow(t as u32)).sum::<u64>()
            }
        }
    }

    /// Exterior degree of the expansion: odd symbols anticommute.
    pub fn exterior_degree(&self) -> usize {
        match self {
            GenSymbol::M { s, .. } | GenSymbol::MHat { s, .. } => s.len(),
            _ => 0,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.exterior_degree() % 2 == 1
    }

    /// Expand in the ambient ring `E(x_1..x_n) (x) F_p[y_1..y_n]` (cached).
    pub fn expand(&self, p: u32, n: usize) -> Result<SuperPoly> {
        invariants::expand_symbol(p, n, self).map(|a| (*a).clone())
    }
}

impl fmt::Display for GenSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subset =
            |s: &[usize]| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        match self {
            GenSymbol::H { i } => write!(f, "h[{i}]"),
            GenSymbol::HHat { i } => write!(f, "hhat[{i}]"),
            GenSymbol::HOmit { i, j } => write!(f, "homit[{i},{j}]"),
            GenSymbol::HSwap { i, j } => write!(f, "hswap[{i},{j}]"),
            GenSymbol::L { m } => write!(f, "L[{m}]"),
            GenSymbol::LHat { m } => write!(f, "Lhat[{m}]"),
            GenSymbol::LSub { m, i } => write!(f, "L[{m},{i}]"),
            GenSymbol::D { m, i } => write!(f, "d[{m},{i}]"),
            GenSymbol::DHat { m, i } => write!(f, "dhat[{m},{i}]"),
            GenSymbol::DParab { m, i } => write!(f, "d[{m},{i};I=1,{}]", m - 1),
            GenSymbol::M { m, s } => write!(f, "M[{m};{}]", subset(s)),
            GenSymbol::MHat { m, s } => write!(f, "Mhat[{m};{}]", subset(s)),
        }
    }
}

/// A product of symbol powers, sorted by symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GenMonomial(Vec<(GenSymbol, u32)>);

impl GenMonomial {
    pub fn unit() -> Self {
        GenMonomial(Vec::new())
    }

    pub fn single(sym: GenSymbol, exp: u32) -> Self {
        if exp == 0 {
            GenMonomial::unit()
        } else {
            GenMonomial(vec![(sym, exp)])
        }
    }

    pub fn from_factors(mut factors: Vec<(GenSymbol, u32)>) -> Self {
        factors.retain(|(_, e)| *e > 0);
        factors.sort();
        let mut out: Vec<(GenSymbol, u32)> = Vec::with_capacity(factors.len());
        for (s, e) in factors {
            if let Some(last) = out.last_mut() {
                if last.0 == s {
                    last.1 += e;
                    continue;
                }
            }
            out.push((s, e));
        }
        GenMonomial(out)
    }

    pub fn factors(&self) -> &[(GenSymbol, u32)] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self, p: u32) -> u64 {
        self.0.iter().map(|(s, e)| s.degree(p) * *e as u64).sum()
    }

    pub fn exterior_degree(&self) -> usize {
        self.0.iter().map(|(s, e)| s.exterior_degree() * *e as usize).sum()
    }

    pub fn exponent_of(&self, sym: &GenSymbol) -> u32 {
        self.0.iter().find(|(s, _)| s == sym).map(|(_, e)| *e).unwrap_or(0)
    }

    /// Merge two monomials; `None` when an odd symbol squares to zero.
    /// The boolean is the Koszul sign flip.
    fn merge(&self, other: &GenMonomial) -> Option<(GenMonomial, bool)> {
        // Interleave other's odd factors into self's sorted list, counting
        // transpositions past self's odd factors.
        let mut flip = false;
        for (sb, eb) in &other.0 {
            if !sb.is_odd() {
                continue;
            }
            if *eb >= 2 {
                return None; // odd square vanishes (p odd)
            }
            let mut passed = 0usize;
            for (sa, ea) in &self.0 {
                if sa.is_odd() {
                    match sa.cmp(sb) {
                        std::cmp::Ordering::Greater => passed += *ea as usize,
                        std::cmp::Ordering::Equal => return None,
                        std::cmp::Ordering::Less => {}
                    }
                }
            }
            if passed % 2 == 1 {
                flip = !flip;
            }
        }
        let mut combined = self.0.clone();
        combined.extend(other.0.iter().cloned());
        Some((GenMonomial::from_factors(combined), flip))
    }
}

impl fmt::Display for GenMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(s, e)| if *e == 1 { s.to_string() } else { format!("{s}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Sparse formal polynomial over `GenSymbol`s with `F_p` coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenExpr {
    p: u32,
    n: usize,
    terms: BTreeMap<GenMonomial, u32>,
}

impl GenExpr {
    pub fn zero(p: u32, n: usize) -> Result<Self> {
        PrimeField::new(p)?;
        Ok(GenExpr { p, n, terms: BTreeMap::new() })
    }

    pub fn scalar(p: u32, n: usize, c: i64) -> Result<Self> {
        let mut e = Self::zero(p, n)?;
        let c = e.field().reduce(c);
        if c != 0 {
            e.terms.insert(GenMonomial::unit(), c);
        }
        Ok(e)
    }

    pub fn one(p: u32, n: usize) -> Result<Self> {
        Self::scalar(p, n, 1)
    }

    pub fn symbol(p: u32, n: usize, sym: GenSymbol) -> Result<Self> {
        let mut e = Self::zero(p, n)?;
        e.terms.insert(GenMonomial::single(sym, 1), 1);
        Ok(e)
    }

    pub fn monomial(p: u32, n: usize, m: GenMonomial, c: i64) -> Result<Self> {
        let mut e = Self::zero(p, n)?;
        let c = e.field().reduce(c);
        if c != 0 {
            e.terms.insert(m, c);
        }
        Ok(e)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated")
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GenMonomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the given monomial (zero if absent).
    pub fn coeff(&self, m: &GenMonomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub(crate) fn add_term(&mut self, m: GenMonomial, c: u32) {
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

    fn check_compat(&self, other: &GenExpr) -> Result<()> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Mismatch(self.p, self.n, other.p, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &GenExpr) -> Result<GenExpr> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &GenExpr) -> Result<GenExpr> {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, c: i64) -> GenExpr {
        let f = self.field();
        let c = f.reduce(c);
        let mut out = GenExpr { p: self.p, n: self.n, terms: BTreeMap::new() };
        if c != 0 {
            for (m, &v) in &self.terms {
                out.terms.insert(m.clone(), f.mul(v, c));
            }
        }
        out
    }

    pub fn mul(&self, other: &GenExpr) -> Result<GenExpr> {
        self.check_compat(other)?;
        let f = self.field();
        let mut out = GenExpr::zero(self.p, self.n)?;
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                let Some((m, flip)) = ma.merge(mb) else { continue };
                let mut c = f.mul(ca, cb);
                if flip {
                    c = f.neg(c);
                }
                out.add_term(m, c);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<GenExpr> {
        let mut acc = GenExpr::one(self.p, self.n)?;
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Algebraic degree when homogeneous.
    pub fn homogeneous_degree(&self) -> Option<u64> {
        let mut it = self.terms.keys();
        let d = it.next()?.degree(self.p);
        it.all(|m| m.degree(self.p) == d).then_some(d)
    }

    /// The expansion homomorphism into `H`.
    pub fn expand(&self) -> Result<SuperPoly> {
        let mut out = SuperPoly::zero(self.p, self.n)?;
        for (m, &c) in &self.terms {
            let mut acc = SuperPoly::scalar(self.p, self.n, c as i64)?;
            for (sym, e) in m.factors() {
                let base = invariants::expand_symbol(self.p, self.n, sym)?;
                acc = acc.mul(&base.pow(*e)?)?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }
}

impl fmt::Display for GenExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, &c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.is_unit() {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_degrees() {
        assert_eq!(GenSymbol::H { i: 1 }.degree(3), 1);
        assert_eq!(GenSymbol::H { i: 3 }.degree(3), 9);
        assert_eq!(GenSymbol::L { m: 2 }.degree(3), 4);
        assert_eq!(GenSymbol::D { m: 2, i: 0 }.degree(3), 8);
        // L_{n,0} has the degree of L_n^p
        assert_eq!(GenSymbol::LSub { m: 2, i: 0 }.degree(3), 12);
        // M_{2,1} = det(x, y) has degree 1 + (1 + 3) - 3 = 2
        assert_eq!(GenSymbol::M { m: 2, s: vec![1] }.degree(3), 2);
    }

    #[test]
    fn odd_symbols_anticommute_formally() {
        let p = 3;
        let n = 2;
        let a = GenExpr::symbol(p, n, GenSymbol::M { m: 1, s: vec![0] }).unwrap();
        let b = GenExpr::symbol(p, n, GenSymbol::M { m: 2, s: vec![1] }).unwrap();
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        assert_eq!(ba, ab.scale(-1));
        assert!(a.mul(&a).unwrap().is_zero());
    }

    #[test]
    fn display_shape() {
        let p = 2;
        let n = 3;
        let d20 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 0 }).unwrap();
        let d21 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 1 }).unwrap();
        let e = d20.pow(2).unwrap().mul(&d21.pow(7).unwrap()).unwrap();
        assert_eq!(e.to_string(), "d[2,0]^2*d[2,1]^7");
    }
}
