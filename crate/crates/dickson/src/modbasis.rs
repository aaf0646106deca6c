//! Free module bases over the Dickson algebra, the rewriting engine for the
//! parabolic invariant rings, and the epimorphism `xi`.
//!
//! The `Pn11` engine rewrites monomials in `d_{n-1,0..n-2}` against the
//! three relations
//!
//! ```text
//! (rel-1)  d_{n-1,i} d_{n-1,n-2}^p = -d_{n,i} + d_{n,n-1} d_{n-1,i} + d_{n-1,i-1}^p
//! (rel-2)  d_{n-1,i} d_{n-1,j-1}^p = -d_{n,i} d_{n-1,j} + d_{n,j} d_{n-1,i}
//!                                     + d_{n-1,i-1}^p d_{n-1,j}
//! (rel-3)  d_{n-1,0}^{p+1}         = d_{n,1} d_{n-1,0} - d_{n,0} d_{n-1,1}
//! ```
//!
//! with `d_{m,-1} = 0` and `d_{m,m} = 1`, accumulating coefficients in
//! `D_n`. Each替换 strictly decreases the measure (total degree, then the
//! index-weighted degree), so the loop terminates; a hard iteration cap
//! falls back to the linear-algebra oracle and flags the case.
//!
//! The oracle — expand, enumerate Dickson monomials of the complementary
//! degree, and solve the F_p linear system — is independent of the engine
//! and serves as the derived-value source in tests.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::field::PrimeField;
use crate::genexpr::{GenExpr, GenMonomial, GenSymbol};
use crate::invariants::expand_symbol;
use crate::linalg;
use crate::superpoly::{SuperMonomial, SuperPoly};
use crate::{Error, Result};

/// The supported free-module basis families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    /// `H_n` over `D_n` (Campbell–Hughes).
    Hn,
    /// `F_p(1, n-1)` over `D_n`: powers of `h_1^{p-1}`.
    P1n1,
    /// `F_p(n-1, 1)` over `D_n`: the `d_{n-1,*}` monomial family.
    Pn11,
    /// The Sylow restriction image over `D_n` (super module).
    SylowImage,
    /// The restriction image of the wreath product `Sigma_p int
    /// Sigma_{p^{n-1}}`.
    Wr1,
    /// The restriction image of `Sigma_{p^{n-1}} int Sigma_p`.
    Wr2,
}

impl BasisFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hn" => Ok(BasisFamily::Hn),
            "p1n1" => Ok(BasisFamily::P1n1),
            "pn11" => Ok(BasisFamily::Pn11),
            "sylow" | "sylowimage" => Ok(BasisFamily::SylowImage),
            "wr1" => Ok(BasisFamily::Wr1),
            "wr2" => Ok(BasisFamily::Wr2),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisFamily::Hn => "hn",
            BasisFamily::P1n1 => "p1n1",
            BasisFamily::Pn11 => "pn11",
            BasisFamily::SylowImage => "sylow",
            BasisFamily::Wr1 => "wr1",
            BasisFamily::Wr2 => "wr2",
        }
    }

    /// The module rank over `D_n` when the paper states one.
    pub fn expected_rank(&self, p: u32, n: usize) -> Option<u64> {
        let pu = p as u64;
        match self {
            BasisFamily::Hn => Some((1..=n as u32).map(|m| pu.pow(m) - 1).product()),
            BasisFamily::P1n1 | BasisFamily::Pn11 => {
                Some((pu.pow(n as u32) - 1) / (pu - 1))
            }
            BasisFamily::SylowImage => Some(
                (1..=n as u32).map(|m| pu.pow(m) - 1).product::<u64>() * (1u64 << n),
            ),
            BasisFamily::Wr1 | BasisFamily::Wr2 => None,
        }
    }
}

/// One element of a free-module basis: a monomial in generator symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BasisElem(pub GenMonomial);

impl BasisElem {
    pub fn expand(&self, p: u32, n: usize) -> Result<SuperPoly> {
        GenExpr::monomial(p, n, self.0.clone(), 1)?.expand()
    }

    pub fn degree(&self, p: u32) -> u64 {
        self.0.degree(p)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_unit()
    }
}

impl fmt::Display for BasisElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A decomposition `f = sum_M c_M * M` over a basis family, coefficients in
/// the Dickson symbols `d[n,*]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub family: BasisFamily,
    pub p: u32,
    pub n: usize,
    /// Pairs `(M, c_M)` sorted by basis monomial; zero coefficients omitted.
    pub pairs: Vec<(BasisElem, GenExpr)>,
}

impl Decomposition {
    /// Coefficient of the unit basis element.
    pub fn unit_coefficient(&self) -> Result<GenExpr> {
        for (b, c) in &self.pairs {
            if b.is_unit() {
                return Ok(c.clone());
            }
        }
        GenExpr::zero(self.p, self.n)
    }

    /// `sum expand(c_M) * expand(M)`, for correctness checks.
    pub fn expand(&self) -> Result<SuperPoly> {
        let mut acc = SuperPoly::zero(self.p, self.n)?;
        for (b, c) in &self.pairs {
            acc = acc.add(&c.expand()?.mul(&b.expand(self.p, self.n)?)?)?;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> String {
        let pairs: Vec<serde_json::Value> = self
            .pairs
            .iter()
            .map(|(b, c)| {
                serde_json::json!({ "basis": b.to_string(), "coeff": c.to_string() })
            })
            .collect();
        serde_json::json!({
            "schema": "dickson/1",
            "family": self.family.name(),
            "p": self.p,
            "n": self.n,
            "pairs": pairs,
        })
        .to_string()
    }
}

fn d_sym(n: usize, i: usize) -> GenSymbol {
    GenSymbol::D { m: n, i }
}

// ---------------------------------------------------------------------------
// Basis enumeration
// ---------------------------------------------------------------------------

/// Enumerate the full finite basis of the family.
pub fn enumerate_basis(family: BasisFamily, p: u32, n: usize) -> Result<Vec<BasisElem>> {
    PrimeField::new(p)?;
    if n < 2 {
        return Err(Error::IndexRange("basis families need n >= 2".into()));
    }
    let mut out = Vec::new();
    match family {
        BasisFamily::Hn => {
            // h_1^{r_1} .. h_n^{r_n}, 0 <= r_i < p^{n-i+1} - 1.
            let bounds: Vec<u64> =
                (1..=n).map(|i| (p as u64).pow((n - i + 1) as u32) - 1).collect();
            let mut r = vec![0u64; n];
            loop {
                let factors: Vec<(GenSymbol, u32)> = r
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (GenSymbol::H { i: i + 1 }, e as u32))
                    .collect();
                out.push(BasisElem(GenMonomial::from_factors(factors)));
                let mut k = n;
                loop {
                    if k == 0 {
                        return Ok(sorted(out));
                    }
                    k -= 1;
                    r[k] += 1;
                    if r[k] < bounds[k] {
                        break;
                    }
                    r[k] = 0;
                }
            }
        }
        BasisFamily::P1n1 => {
            // h_1^{(p-1)m}, 0 <= m <= A_1 = p^{n-1} + ... + p.
            let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
            for m in 0..=a1 {
                let e = (p as u64 - 1) * m;
                out.push(BasisElem(GenMonomial::single(GenSymbol::H { i: 1 }, e as u32)));
            }
        }
        BasisFamily::Pn11 => {
            // All d_{n-1,*} exponents <= p-1, plus the shifted families
            // d_{n-1,t-1}^p * (exponents at indices >= t), per the displayed
            // n = 4 lemma.
            let w = n - 1; // number of d_{n-1,*} generators
            let mut stack = vec![vec![0u32; w]];
            let mut plain = Vec::new();
            while let Some(cur) = stack.pop() {
                if cur.len() == w {
                    plain.push(cur);
                    continue;
                }
                unreachable!();
            }
            // enumerate exponent boxes directly
            plain.clear();
            let mut e = vec![0u32; w];
            loop {
                plain.push(e.clone());
                let mut k = w;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    e[k] += 1;
                    if e[k] <= p - 1 {
                        break;
                    }
                    e[k] = 0;
                }
                if e.iter().all(|&v| v == 0) {
                    break;
                }
            }
            for ev in &plain {
                out.push(BasisElem(exps_to_monomial(n - 1, ev)));
            }
            for t in 1..=w {
                // d_{n-1,t-1}^p * prod_{i >= t} d_{n-1,i}^{m_i}, m_i <= p-1.
                let free = w - t;
                let mut e = vec![0u32; free];
                loop {
                    let mut full = vec![0u32; w];
                    full[t - 1] = p;
                    for (off, &v) in e.iter().enumerate() {
                        full[t + off] = v;
                    }
                    out.push(BasisElem(exps_to_monomial(n - 1, &full)));
                    let mut k = free;
                    loop {
                        if k == 0 {
                            break;
                        }
                        k -= 1;
                        e[k] += 1;
                        if e[k] <= p - 1 {
                            break;
                        }
                        e[k] = 0;
                    }
                    if free == 0 || e.iter().all(|&v| v == 0) {
                        break;
                    }
                }
            }
        }
        BasisFamily::SylowImage => {
            if p == 2 {
                return Err(Error::OddPrimeOnly("the Sylow image basis"));
            }
            // Tensor basis of E(G_1..G_n) (x) H_n^t over D_n, where
            // G_i = Mhat_{i,i-1} Lhat_{i-1}^{(p-3)/2}: products over subsets
            // of the exterior generators times the Campbell-Hughes box.
            let half = (p - 3) / 2;
            let mut ext_parts: Vec<GenMonomial> = Vec::new();
            for t in subsets_below(n) {
                let mut factors: Vec<(GenSymbol, u32)> = Vec::new();
                for &j0 in &t {
                    let i = j0 + 1;
                    factors.push((GenSymbol::MHat { m: i, s: vec![i - 1] }, 1));
                    if half > 0 && i >= 2 {
                        factors.push((GenSymbol::LHat { m: i - 1 }, half));
                    }
                }
                ext_parts.push(GenMonomial::from_factors(factors));
            }
            let bounds: Vec<u64> =
                (1..=n).map(|i| (p as u64).pow((n - i + 1) as u32) - 1).collect();
            let mut r = vec![0u64; n];
            loop {
                for ext in &ext_parts {
                    let mut factors: Vec<(GenSymbol, u32)> = ext.factors().to_vec();
                    for (i, &e) in r.iter().enumerate() {
                        if e > 0 {
                            factors.push((GenSymbol::HHat { i: i + 1 }, e as u32));
                        }
                    }
                    out.push(BasisElem(GenMonomial::from_factors(factors)));
                }
                let mut k = n;
                loop {
                    if k == 0 {
                        return Ok(sorted(out));
                    }
                    k -= 1;
                    r[k] += 1;
                    if r[k] < bounds[k] {
                        break;
                    }
                    r[k] = 0;
                }
            }
        }
        BasisFamily::Wr1 => {
            if p == 2 {
                return Err(Error::OddPrimeOnly("the wreath image basis"));
            }
            let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
            // hat(F_p(1,n-1)) (+) its translates by the exterior module
            // generators hat(M_{1,0} h_1^{p-2}) and hat(M_{n,T} L_n^{p-2})
            // with 1 <= t_k.
            let mut ext_parts: Vec<GenMonomial> = vec![GenMonomial::unit()];
            ext_parts.push(GenMonomial::from_factors(vec![
                (GenSymbol::MHat { m: 1, s: vec![0] }, 1),
                (GenSymbol::HHat { i: 1 }, p - 2),
            ]));
            for s in nonempty_subsets(n) {
                if *s.last().expect("nonempty") < 1 {
                    continue;
                }
                ext_parts.push(GenMonomial::from_factors(vec![
                    (GenSymbol::MHat { m: n, s: s.clone() }, 1),
                    (GenSymbol::LHat { m: n }, p - 2),
                ]));
            }
            for m in 0..=a1 {
                let e = ((p - 1) as u64 * m) as u32;
                for ext in &ext_parts {
                    let mut factors: Vec<(GenSymbol, u32)> = ext.factors().to_vec();
                    if e > 0 {
                        factors.push((GenSymbol::HHat { i: 1 }, e));
                    }
                    out.push(BasisElem(GenMonomial::from_factors(factors)));
                }
            }
        }
        BasisFamily::Wr2 => {
            if p == 2 {
                return Err(Error::OddPrimeOnly("the wreath image basis"));
            }
            // hat(F_p(n-1,1)) basis, alone and under the exterior module
            // generators hat(M_{n-1,S} L_{n-1}^{p-2}) and
            // hat(M_{n,(T,n-1)} h_n^{p-2}).
            let inner = enumerate_basis(BasisFamily::Pn11, p, n)?;
            let hat = |m: &GenMonomial| -> GenMonomial {
                GenMonomial::from_factors(
                    m.factors()
                        .iter()
                        .map(|(s, e)| {
                            let hs = match s {
                                GenSymbol::D { m, i } => GenSymbol::DHat { m: *m, i: *i },
                                other => other.clone(),
                            };
                            (hs, *e)
                        })
                        .collect(),
                )
            };
            let mut ext_parts: Vec<GenMonomial> = vec![GenMonomial::unit()];
            for s in nonempty_subsets(n - 1) {
                ext_parts.push(GenMonomial::from_factors(vec![
                    (GenSymbol::MHat { m: n - 1, s: s.clone() }, 1),
                    (GenSymbol::LHat { m: n - 1 }, p - 2),
                ]));
            }
            for t in subsets_below(n - 1) {
                let mut s = t.clone();
                s.push(n - 1);
                ext_parts.push(GenMonomial::from_factors(vec![
                    (GenSymbol::MHat { m: n, s }, 1),
                    (GenSymbol::HHat { i: n }, p - 2),
                ]));
            }
            for b in &inner {
                for ext in &ext_parts {
                    let mut factors: Vec<(GenSymbol, u32)> = ext.factors().to_vec();
                    factors.extend(hat(&b.0).factors().iter().cloned());
                    out.push(BasisElem(GenMonomial::from_factors(factors)));
                }
            }
        }
    }
    Ok(sorted(out))
}

fn sorted(mut v: Vec<BasisElem>) -> Vec<BasisElem> {
    v.sort();
    v.dedup();
    v
}

fn exps_to_monomial(m: usize, exps: &[u32]) -> GenMonomial {
    GenMonomial::from_factors(
        exps.iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (GenSymbol::D { m, i }, e))
            .collect(),
    )
}

fn subsets_below(limit: usize) -> Vec<Vec<usize>> {
    // All (possibly empty) strictly increasing subsets of 0..limit.
    let mut out = vec![Vec::new()];
    for mask in 1u32..(1 << limit) {
        out.push((0..limit).filter(|&b| mask >> b & 1 == 1).collect());
    }
    out.sort();
    out
}

fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    subsets_below(n).into_iter().filter(|s| !s.is_empty()).collect()
}

// ---------------------------------------------------------------------------
// The rewriting engine
// ---------------------------------------------------------------------------

const REWRITE_CAP: usize = 1_000_000;

/// Rewrite `f` (expressed in the family's generator symbols) onto the free
/// module basis with `D_n` coefficients.
pub fn rewrite(f: &GenExpr, family: BasisFamily) -> Result<Decomposition> {
    let p = f.p();
    let n = f.n();
    match family {
        BasisFamily::Pn11 => rewrite_pn11(f),
        BasisFamily::P1n1 => rewrite_p1n1(f),
        BasisFamily::Hn | BasisFamily::SylowImage => {
            oracle_decompose(&f.expand()?, family, p, n)
        }
        BasisFamily::Wr1 | BasisFamily::Wr2 => {
            oracle_decompose(&f.expand()?, family, p, n)
        }
    }
}

/// The epimorphism onto the `GL`-invariants: for the polynomial families
/// the coefficient of the unit basis element; for the Sylow image, the
/// image under the top-Mui decomposition — write the element as
/// `q + sum_J Mhat_{n,J} Lhat_n^{p-2} q_J` with `q, q_J` upper-triangular
/// invariants, and keep the unit Campbell–Hughes coefficient of each
/// component. On the ideal `(d_{n,0})` this agrees with the induced
/// transfer; outside it the decomposition may not exist, in which case the
/// value falls back to the free-basis reading (the sum of `c_M * M` over
/// the `GL`-invariant basis elements).
pub fn xi(f: &GenExpr, family: BasisFamily) -> Result<GenExpr> {
    match family {
        BasisFamily::SylowImage => {
            if let Some(v) = xi_top_mui(f)? {
                return Ok(v);
            }
            xi_basis_filter(f, family)
        }
        BasisFamily::Wr1 | BasisFamily::Wr2 => xi_basis_filter(f, family),
        _ => rewrite(f, family)?.unit_coefficient(),
    }
}

fn xi_basis_filter(f: &GenExpr, family: BasisFamily) -> Result<GenExpr> {
    let dec = rewrite(f, family)?;
    let mut acc = GenExpr::zero(dec.p, dec.n)?;
    for (b, c) in &dec.pairs {
        if basis_elem_is_gl_invariant(b, dec.p, dec.n)? {
            let belem = GenExpr::monomial(dec.p, dec.n, b.0.clone(), 1)?;
            acc = acc.add(&c.mul(&belem)?)?;
        }
    }
    Ok(acc)
}

/// Decompose `expand(f) = q + sum_J Mhat_{n,J} Lhat_n^{p-2} q_J` with
/// `q, q_J` in `H_n^t`, and apply the Campbell–Hughes unit extraction to
/// each component. `None` when the exterior part is not in the span of the
/// top Mui classes over `H_n^t` (possible off the ideal `(d_{n,0})`).
fn xi_top_mui(f: &GenExpr) -> Result<Option<GenExpr>> {
    let p = f.p();
    let n = f.n();
    let fe = f.expand()?;
    let omega = crate::glgroup::GLMatrix::omega(p, n)?;
    // Split off the x-free part.
    let mut poly_part = SuperPoly::zero(p, n)?;
    let mut components: BTreeMap<u32, SuperPoly> = BTreeMap::new();
    for (m, c) in fe.terms() {
        let t = SuperPoly::from_terms(p, n, [(m.clone(), c as i64)])?;
        if m.is_polynomial() {
            poly_part = poly_part.add(&t)?;
        } else {
            let e = components
                .entry(m.degree())
                .or_insert_with(|| SuperPoly::zero(p, n).expect("validated"));
            *e = e.add(&t)?;
        }
    }
    // xi on the polynomial part: unhat, rewrite over H_n, keep the unit.
    let mut acc = xi_hn_unit(&poly_part.substitute(&omega)?)?;
    for (_, comp) in components {
        if xi_top_mui_component(&comp, &mut acc)?.is_none() {
            return Ok(None);
        }
    }
    Ok(Some(acc))
}

fn xi_top_mui_component(comp: &SuperPoly, total: &mut GenExpr) -> Result<Option<()>> {
    use crate::invariants::{express_in_module, monomials_of_degree};
    let p = comp.p();
    let n = comp.n();
    let omega = crate::glgroup::GLMatrix::omega(p, n)?;
    let lhat_pow = expand_symbol(p, n, &GenSymbol::LHat { m: n })?.pow(p - 2)?;
    let mut prefactors = Vec::new();
    let mut prefactor_syms = Vec::new();
    for j in nonempty_subsets(n) {
        let m = expand_symbol(p, n, &GenSymbol::MHat { m: n, s: j.clone() })?;
        prefactors.push(m.mul(&lhat_pow)?);
        let sym = GenExpr::symbol(p, n, GenSymbol::MHat { m: n, s: j })?
            .mul(&GenExpr::symbol(p, n, GenSymbol::LHat { m: n })?.pow(p - 2)?)?;
        prefactor_syms.push(sym);
    }
    let hhat: Vec<SuperPoly> = (1..=n)
        .map(|i| expand_symbol(p, n, &GenSymbol::HHat { i }).map(|a| (*a).clone()))
        .collect::<Result<_>>()?;
    let hdegs: Vec<u64> = (1..=n).map(|i| (p as u64).pow(i as u32 - 1)).collect();
    let xdeg = comp.homogeneous_degree().expect("component is homogeneous") as u64;
    let mut pool = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for pf in &prefactors {
        let pd = pf.homogeneous_degree().expect("homogeneous") as u64;
        if pd <= xdeg && seen.insert(pd) {
            pool.extend(monomials_of_degree(p, n, &hhat, &hdegs, xdeg - pd)?);
        }
    }
    let Some(expr) = express_in_module(comp, &prefactors, &pool)? else {
        return Ok(None);
    };
    for (j, q) in expr.coefficients {
        let unit = xi_hn_unit(&q.substitute(&omega)?)?;
        *total = total.add(&prefactor_syms[j].mul(&unit)?)?;
    }
    Ok(Some(()))
}

/// The Campbell–Hughes unit coefficient of an element of `H_n`.
fn xi_hn_unit(q: &SuperPoly) -> Result<GenExpr> {
    if q.is_zero() {
        return GenExpr::zero(q.p(), q.n());
    }
    let dec = oracle_decompose(q, BasisFamily::Hn, q.p(), q.n())?;
    dec.unit_coefficient()
}

fn basis_elem_is_gl_invariant(b: &BasisElem, p: u32, n: usize) -> Result<bool> {
    type FlagCache = Mutex<HashMap<(u32, usize, GenMonomial), bool>>;
    static CACHE: OnceLock<FlagCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (p, n, b.0.clone());
    if let Some(&v) = cache.lock().expect("lock").get(&key) {
        return Ok(v);
    }
    let v = crate::invariants::invariant_under_gl(&b.expand(p, n)?)?;
    cache.lock().expect("lock").insert(key, v);
    Ok(v)
}

/// Working state for the Pn11 engine: exponent vectors of `d_{n-1,*}` with
/// `D_n` coefficients.
struct Pn11State {
    p: u32,
    n: usize,
    terms: BTreeMap<Vec<u32>, GenExpr>,
}

impl Pn11State {
    fn add(&mut self, exps: Vec<u32>, coeff: GenExpr) -> Result<()> {
        if coeff.is_zero() {
            return Ok(());
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(&coeff)?;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
        Ok(())
    }

    fn is_basis(&self, exps: &[u32]) -> bool {
        let p = self.p;
        if exps.iter().all(|&e| e <= p - 1) {
            return true;
        }
        // d_{t-1}^p with zeros below and <= p-1 above.
        if let Some(j) = exps.iter().position(|&e| e >= p) {
            exps[j] == p
                && exps[..j].iter().all(|&e| e == 0)
                && exps[j + 1..].iter().all(|&e| e <= p - 1)
        } else {
            false
        }
    }
}

fn rewrite_pn11(f: &GenExpr) -> Result<Decomposition> {
    let p = f.p();
    let n = f.n();
    if n < 2 {
        return Err(Error::IndexRange("pn11 needs n >= 2".into()));
    }
    let w = n - 1;
    let mut state = Pn11State { p, n, terms: BTreeMap::new() };
    // Split the input into d_{n-1,*} exponents и a D_n coefficient.
    for (mono, c) in f.terms() {
        let mut exps = vec![0u32; w];
        let mut coeff = GenExpr::scalar(p, n, c as i64)?;
        for (sym, e) in mono.factors() {
            match sym {
                GenSymbol::D { m, i } if *m == n - 1 && *i < w => exps[*i] += e,
                GenSymbol::D { m, i } if *m == n => {
                    coeff = coeff.mul(&GenExpr::symbol(p, n, d_sym(n, *i))?.pow(*e)?)?;
                }
                other => {
                    return Err(Error::UnsupportedFamily(format!(
                        "pn11 rewriting takes d[{},i] and d[{},j] factors, got {other}",
                        n - 1,
                        n
                    )))
                }
            }
        }
        state.add(exps, coeff)?;
    }
    // Reduction loop.
    let mut steps = 0usize;
    loop {
        let target = state
            .terms
            .keys()
            .rev()
            .find(|e| !state.is_basis(e))
            .cloned();
        let Some(exps) = target else { break };
        let coeff = state.terms.remove(&exps).expect("present");
        steps += 1;
        if steps > REWRITE_CAP {
            log::warn!("pn11 rewrite cap exceeded; falling back to the oracle");
            return oracle_decompose(&f.expand()?, BasisFamily::Pn11, p, n);
        }
        apply_pn11_relation(&mut state, &exps, &coeff)?;
    }
    let mut pairs = Vec::new();
    for (exps, coeff) in state.terms {
        pairs.push((BasisElem(exps_to_monomial(n - 1, &exps)), coeff));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Decomposition { family: BasisFamily::Pn11, p, n, pairs })
}

/// One reduction step on a non-basis monomial.
fn apply_pn11_relation(state: &mut Pn11State, exps: &[u32], coeff: &GenExpr) -> Result<()> {
    let p = state.p;
    let n = state.n;
    let w = n - 1;
    let dn = |i: usize| GenExpr::symbol(p, n, d_sym(n, i));
    let top = w - 1; // index of d_{n-1,n-2}
    if exps[top] >= p {
        // (rel-1) with i = the smallest occupied index (i = top needs p+1).
        let i = (0..w)
            .find(|&i| exps[i] >= 1 && (i != top || exps[top] >= p + 1))
            .expect("non-basis monomial with a full top pack has a companion");
        let mut rest = exps.to_vec();
        rest[i] -= 1;
        rest[top] -= p;
        // -d_{n,i} * rest
        state.add(rest.clone(), coeff.mul(&dn(i)?)?.scale(-1))?;
        // +d_{n,n-1} * d_{n-1,i} * rest
        let mut with_i = rest.clone();
        with_i[i] += 1;
        state.add(with_i, coeff.mul(&dn(n - 1)?)?)?;
        // +d_{n-1,i-1}^p * rest  (drops when i = 0)
        if i >= 1 {
            let mut shifted = rest;
            shifted[i - 1] += p;
            state.add(shifted, coeff.clone())?;
        }
        return Ok(());
    }
    if exps[0] >= p + 1 {
        // (rel-3): d_0^{p+1} = d_{n,1} d_0 - d_{n,0} d_1.
        let mut rest = exps.to_vec();
        rest[0] -= p + 1;
        let mut with_0 = rest.clone();
        with_0[0] += 1;
        state.add(with_0, coeff.mul(&dn(1)?)?)?;
        if w >= 2 {
            let mut with_1 = rest.clone();
            with_1[1] += 1;
            state.add(with_1, coeff.mul(&dn(0)?)?.scale(-1))?;
        } else {
            // n = 2: d_{1,1} = 1.
            state.add(rest, coeff.mul(&dn(0)?)?.scale(-1))?;
        }
        return Ok(());
    }
    // (rel-2): find the largest t < top with a p-pack.
    let t = (0..w - 1)
        .rev()
        .find(|&t| exps[t] >= p)
        .expect("non-basis monomial has a reducible pack");
    let i = if exps[t] >= p + 1 {
        t
    } else {
        (0..t).rev().find(|&i| exps[i] >= 1).expect("companion below the pack")
    };
    // d_{n-1,i} d_{n-1,t}^p = -d_{n,i} d_{n-1,t+1} + d_{n,t+1} d_{n-1,i}
    //                         + d_{n-1,i-1}^p d_{n-1,t+1}
    let mut rest = exps.to_vec();
    rest[i] -= 1;
    rest[t] -= p;
    let mut with_next = rest.clone();
    with_next[t + 1] += 1;
    state.add(with_next.clone(), coeff.mul(&dn(i)?)?.scale(-1))?;
    let mut with_i = rest.clone();
    with_i[i] += 1;
    state.add(with_i, coeff.mul(&dn(t + 1)?)?)?;
    if i >= 1 {
        let mut shifted = with_next;
        shifted[i - 1] += p;
        state.add(shifted, coeff.clone())?;
    }
    Ok(())
}

/// P1n1 engine: eliminate `d_{n,i}(I)` through the truncation recursion,
/// then reduce `h_1^{(p-1)m}` past `m = A_1` with the relation derived once
/// from the oracle.
fn rewrite_p1n1(f: &GenExpr) -> Result<Decomposition> {
    let p = f.p();
    let n = f.n();
    let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
    // d_{n,i}(I) = d_{n,i} - h_1^{(p-1)p^i} d_{n,i+1}(I), d_{n,n}(I) = 1:
    // expand each DParab factor into h-power/Dickson pairs.
    let dparab_lin = |i: usize| -> Result<Vec<(u64, GenExpr)>> {
        // list of (m, coeff) with the h_1 exponent (p-1)*m
        let mut acc: Vec<(u64, GenExpr)> = Vec::new();
        // Walk from the top: d_{n,n}(I) = 1.
        let mut curr: Vec<(u64, GenExpr)> = vec![(0, GenExpr::one(p, n)?)];
        let mut level = n;
        while level > i {
            level -= 1;
            let mut next: Vec<(u64, GenExpr)> = vec![(0, GenExpr::symbol(p, n, d_sym(n, level))?)];
            let shift = (p as u64).pow(level as u32);
            for (m, c) in &curr {
                next.push((m + shift, c.scale(-1)));
            }
            curr = merge_linear(p, n, next)?;
        }
        acc.extend(curr);
        Ok(acc)
    };
    let mut state: BTreeMap<u64, GenExpr> = BTreeMap::new();
    let add = |state: &mut BTreeMap<u64, GenExpr>, m: u64, c: GenExpr| -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        match state.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(&c)?;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
        Ok(())
    };
    for (mono, c) in f.terms() {
        // Expand the term into (m, coeff) pairs.
        let mut parts: Vec<(u64, GenExpr)> = vec![(0, GenExpr::scalar(p, n, c as i64)?)];
        for (sym, e) in mono.factors() {
            match sym {
                GenSymbol::H { i: 1 } => {
                    if *e as u64 % (p as u64 - 1) != 0 {
                        return Err(Error::UnsupportedFamily(format!(
                            "p1n1 rewriting takes h[1] powers divisible by p-1, got h[1]^{e}"
                        )));
                    }
                    let m = *e as u64 / (p as u64 - 1);
                    parts = parts.into_iter().map(|(mm, cc)| (mm + m, cc)).collect();
                }
                GenSymbol::DParab { m, i } if *m == n => {
                    let lin = dparab_lin(*i)?;
                    for _ in 0..*e {
                        let mut next: Vec<(u64, GenExpr)> = Vec::new();
                        for (mm, cc) in &parts {
                            for (lm, lc) in &lin {
                                next.push((mm + lm, cc.mul(lc)?));
                            }
                        }
                        parts = merge_linear(p, n, next)?;
                    }
                }
                GenSymbol::D { m, i } if *m == n => {
                    let dsym = GenExpr::symbol(p, n, d_sym(n, *i))?.pow(*e)?;
                    parts = parts
                        .into_iter()
                        .map(|(mm, cc)| cc.mul(&dsym).map(|v| (mm, v)))
                        .collect::<Result<_>>()?;
                }
                other => {
                    return Err(Error::UnsupportedFamily(format!(
                        "p1n1 rewriting takes h[1]^(p-1) and d[{n},i;I] factors, got {other}"
                    )))
                }
            }
        }
        for (m, cc) in parts {
            add(&mut state, m, cc)?;
        }
    }
    // Reduce m > A_1 with the derived relation.
    let reduction = p1n1_reduction(p, n)?;
    let mut steps = 0usize;
    loop {
        let Some((&m, _)) = state.iter().next_back() else { break };
        if m <= a1 {
            break;
        }
        steps += 1;
        if steps > REWRITE_CAP {
            log::warn!("p1n1 rewrite cap exceeded; falling back to the oracle");
            return oracle_decompose(&f.expand()?, BasisFamily::P1n1, p, n);
        }
        let coeff = state.remove(&m).expect("present");
        for (e, c) in reduction.iter() {
            add(&mut state, m - (a1 + 1) + e, coeff.mul(c)?)?;
        }
    }
    let mut pairs = Vec::new();
    for (m, coeff) in state {
        let e = ((p as u64 - 1) * m) as u32;
        pairs.push((BasisElem(GenMonomial::single(GenSymbol::H { i: 1 }, e)), coeff));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Decomposition { family: BasisFamily::P1n1, p, n, pairs })
}

fn merge_linear(p: u32, n: usize, parts: Vec<(u64, GenExpr)>) -> Result<Vec<(u64, GenExpr)>> {
    let mut map: BTreeMap<u64, GenExpr> = BTreeMap::new();
    for (m, c) in parts {
        match map.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(&c)?;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }
    let _ = (p, n);
    Ok(map.into_iter().collect())
}

type Reduction = Vec<(u64, GenExpr)>;

/// `h_1^{(p-1)(A_1+1)} = sum_e c_e h_1^{(p-1)e}` with `c_e in D_n`, derived
/// once per `(p, n)` by decomposing the expansion over the basis.
fn p1n1_reduction(p: u32, n: usize) -> Result<Arc<Reduction>> {
    type Cache = Mutex<HashMap<(u32, usize), Arc<Reduction>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("lock").get(&(p, n)) {
        return Ok(hit.clone());
    }
    let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
    let target = expand_symbol(p, n, &GenSymbol::H { i: 1 })?
        .frobenius_pow(0)
        .pow(((p as u64 - 1) * (a1 + 1)) as u32)?;
    let dec = oracle_decompose(&target, BasisFamily::P1n1, p, n)?;
    let mut red: Reduction = Vec::new();
    for (b, c) in dec.pairs {
        let e = b.0.factors().first().map(|(_, e)| *e).unwrap_or(0);
        red.push((e as u64 / (p as u64 - 1), c));
    }
    let arc = Arc::new(red);
    cache.lock().expect("lock").insert((p, n), arc.clone());
    Ok(arc)
}

// ---------------------------------------------------------------------------
// The linear-algebra oracle
// ---------------------------------------------------------------------------

/// Dickson monomials `prod d_{n,i}^{e_i}` of the exact algebraic degree,
/// with their exponent vectors.
pub fn dickson_monomials_of_degree(
    p: u32,
    n: usize,
    degree: u64,
) -> Result<Vec<(Vec<u32>, SuperPoly)>> {
    let degs: Vec<u64> = (0..n).map(|i| (p as u64).pow(n as u32) - (p as u64).pow(i as u32)).collect();
    let mut out = Vec::new();
    let mut exps = vec![0u32; n];
    fn rec(
        p: u32,
        n: usize,
        degs: &[u64],
        j: usize,
        left: u64,
        exps: &mut Vec<u32>,
        acc: &SuperPoly,
        out: &mut Vec<(Vec<u32>, SuperPoly)>,
    ) -> Result<()> {
        if left == 0 {
            out.push((exps.clone(), acc.clone()));
            // exponents beyond j stay zero
            return Ok(());
        }
        if j == n {
            return Ok(());
        }
        let mut acc_j = acc.clone();
        let mut used = 0u64;
        let mut e = 0u32;
        loop {
            exps[j] = e;
            rec(p, n, degs, j + 1, left - used, exps, &acc_j, out)?;
            used += degs[j];
            e += 1;
            if used > left {
                break;
            }
            acc_j = acc_j.mul(&*expand_symbol(p, n, &GenSymbol::D { m: n, i: j })?)?;
        }
        exps[j] = 0;
        Ok(())
    }
    let one = SuperPoly::one(p, n)?;
    rec(p, n, &degs, 0, degree, &mut exps, &one, &mut out)?;
    Ok(out)
}

/// Decompose an expanded element over the family basis by linear algebra.
/// This is the derived-value engine: independent of the rewriting path.
pub fn oracle_decompose(
    f: &SuperPoly,
    family: BasisFamily,
    p: u32,
    n: usize,
) -> Result<Decomposition> {
    if f.p() != p || f.n() != n {
        return Err(Error::Mismatch(p, n, f.p(), f.n()));
    }
    let basis = enumerate_basis(family, p, n)?;
    let expansions: Vec<SuperPoly> =
        basis.iter().map(|b| b.expand(p, n)).collect::<Result<_>>()?;
    // Split by algebraic degree.
    let mut components: BTreeMap<u32, SuperPoly> = BTreeMap::new();
    for (m, c) in f.terms() {
        let d = m.degree();
        let e = components
            .entry(d)
            .or_insert_with(|| SuperPoly::zero(p, n).expect("validated"));
        *e = e.add(&SuperPoly::from_terms(p, n, [(m.clone(), c as i64)])?)?;
    }
    let mut coeffs: BTreeMap<usize, GenExpr> = BTreeMap::new();
    for (deg, comp) in components {
        // Columns: (basis index, dickson exponent vector).
        let mut cols: Vec<SuperPoly> = Vec::new();
        let mut labels: Vec<(usize, Vec<u32>)> = Vec::new();
        for (j, (b, bexp)) in basis.iter().zip(&expansions).enumerate() {
            let bd = b.degree(p);
            if bd > deg as u64 {
                continue;
            }
            for (exps, dmono) in dickson_monomials_of_degree(p, n, deg as u64 - bd)? {
                let col = dmono.mul(bexp)?;
                if !col.is_zero() {
                    cols.push(col);
                    labels.push((j, exps));
                }
            }
        }
        // Coordinates.
        let mut monos: BTreeSet<SuperMonomial> = BTreeSet::new();
        for c in cols.iter().chain(std::iter::once(&comp)) {
            for (m, _) in c.terms() {
                monos.insert(m.clone());
            }
        }
        let monos: Vec<SuperMonomial> = monos.into_iter().collect();
        let index: HashMap<&SuperMonomial, usize> =
            monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut a = vec![vec![0u32; cols.len()]; monos.len()];
        for (col, cf) in cols.iter().enumerate() {
            for (m, c) in cf.terms() {
                a[index[m]][col] = c;
            }
        }
        let mut bvec = vec![0u32; monos.len()];
        for (m, c) in comp.terms() {
            bvec[index[m]] = c;
        }
        let Some(sol) = linalg::solve(p, &a, &bvec, cols.len()) else {
            return Err(Error::Inconsistency(format!(
                "degree-{deg} component is not in the {} module span",
                family.name()
            )));
        };
        if !sol.unique {
            return Err(Error::Inconsistency(format!(
                "degree-{deg} decomposition over {} is not unique: basis dependency",
                family.name()
            )));
        }
        for (col, lambda) in sol.x.iter().enumerate() {
            if *lambda == 0 {
                continue;
            }
            let (j, exps) = &labels[col];
            let mut mono_factors: Vec<(GenSymbol, u32)> = Vec::new();
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    mono_factors.push((d_sym(n, i), e));
                }
            }
            let term = GenExpr::monomial(
                p,
                n,
                GenMonomial::from_factors(mono_factors),
                *lambda as i64,
            )?;
            let entry = coeffs
                .entry(*j)
                .or_insert_with(|| GenExpr::zero(p, n).expect("validated"));
            *entry = entry.add(&term)?;
        }
    }
    let mut pairs: Vec<(BasisElem, GenExpr)> = coeffs
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| (basis[j].clone(), c))
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Decomposition { family, p, n, pairs })
}

// ---------------------------------------------------------------------------
// Freeness verification
// ---------------------------------------------------------------------------

/// Outcome of the cardinality / graded-dimension / independence checks.
#[derive(Debug, Clone)]
pub struct FreenessReport {
    pub family: BasisFamily,
    pub p: u32,
    pub n: usize,
    pub cardinality: usize,
    pub expected_rank: Option<u64>,
    pub degree_bound: u32,
    pub failures: Vec<String>,
}

impl FreenessReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Truncated power series `prod 1/(1 - t^d)` for the given degrees.
fn polynomial_series(degrees: &[u64], bound: usize) -> Vec<u64> {
    let mut s = vec![0u64; bound + 1];
    s[0] = 1;
    for &d in degrees {
        if d == 0 || d as usize > bound {
            continue;
        }
        let d = d as usize;
        // multiply by 1/(1-t^d): prefix sums with stride d
        for k in d..=bound {
            s[k] += s[k - d];
        }
    }
    s
}

fn series_mul(a: &[u64], b: &[u64], bound: usize) -> Vec<u64> {
    let mut out = vec![0u64; bound + 1];
    for i in 0..=bound {
        if a[i] == 0 {
            continue;
        }
        for j in 0..=bound - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// The graded dimension series of the invariant ring the family spans,
/// derived from its polynomial (and exterior) generator degrees.
fn family_series(family: BasisFamily, p: u32, n: usize, bound: usize) -> Option<Vec<u64>> {
    let pu = p as u64;
    match family {
        BasisFamily::Hn => {
            let degs: Vec<u64> = (1..=n).map(|i| pu.pow(i as u32 - 1)).collect();
            Some(polynomial_series(&degs, bound))
        }
        BasisFamily::P1n1 => {
            let mut degs = vec![pu - 1];
            degs.extend((1..n).map(|i| pu.pow(n as u32) - pu.pow(i as u32)));
            Some(polynomial_series(&degs, bound))
        }
        BasisFamily::Pn11 => {
            let mut degs: Vec<u64> =
                (0..n - 1).map(|i| pu.pow(n as u32 - 1) - pu.pow(i as u32)).collect();
            degs.push(pu.pow(n as u32) - pu.pow(n as u32 - 1));
            Some(polynomial_series(&degs, bound))
        }
        BasisFamily::SylowImage => {
            // E(Mhat_i Lhat^{(p-3)/2}) tensor H_n^t.
            let poly: Vec<u64> = (1..=n).map(|i| pu.pow(i as u32 - 1)).collect();
            let mut s = polynomial_series(&poly, bound);
            for i in 1..=n {
                let mut d = GenSymbol::MHat { m: i, s: vec![i - 1] }.degree(p);
                if i >= 2 {
                    d += (pu - 3) / 2 * GenSymbol::LHat { m: i - 1 }.degree(p);
                }
                let mut ext = vec![0u64; bound + 1];
                ext[0] = 1;
                if (d as usize) <= bound {
                    ext[d as usize] += 1;
                }
                s = series_mul(&s, &ext, bound);
            }
            Some(s)
        }
        BasisFamily::Wr1 => {
            let mut degs = vec![pu - 1];
            degs.extend((1..n).map(|i| pu.pow(n as u32) - pu.pow(i as u32)));
            let s = polynomial_series(&degs, bound);
            let geom_n = (pu.pow(n as u32) - 1) / (pu - 1);
            let mut ext = vec![0u64; bound + 1];
            ext[0] = 1;
            let mut bump = |d: u64| {
                if (d as usize) <= bound {
                    ext[d as usize] += 1;
                }
            };
            bump(pu - 1); // M_{1,0} h_1^{p-2}
            for t in nonempty_subsets(n) {
                if *t.last().expect("nonempty") < 1 {
                    continue;
                }
                let d = GenSymbol::M { m: n, s: t }.degree(p) + (pu - 2) * geom_n;
                bump(d);
            }
            Some(series_mul(&s, &ext, bound))
        }
        BasisFamily::Wr2 => {
            let mut degs: Vec<u64> =
                (0..n - 1).map(|i| pu.pow(n as u32 - 1) - pu.pow(i as u32)).collect();
            degs.push(pu.pow(n as u32) - pu.pow(n as u32 - 1));
            let s = polynomial_series(&degs, bound);
            let geom_n1 = (pu.pow(n as u32 - 1) - 1) / (pu - 1);
            let mut ext = vec![0u64; bound + 1];
            ext[0] = 1;
            let mut bump = |d: u64| {
                if (d as usize) <= bound {
                    ext[d as usize] += 1;
                }
            };
            for t in nonempty_subsets(n - 1) {
                let d = GenSymbol::M { m: n - 1, s: t }.degree(p) + (pu - 2) * geom_n1;
                bump(d);
            }
            for t0 in subsets_below(n - 1) {
                let mut t = t0.clone();
                t.push(n - 1);
                let d = GenSymbol::M { m: n, s: t }.degree(p) + (pu - 2) * pu.pow(n as u32 - 1);
                bump(d);
            }
            Some(series_mul(&s, &ext, bound))
        }
    }
}

/// Check (a) cardinality = rank, (b) the module series over `D_n` matches
/// the ring's graded dimensions, (c) degree-by-degree linear independence
/// (and span, where (b) applies) of the expanded basis.
pub fn verify_freeness(
    family: BasisFamily,
    p: u32,
    n: usize,
    degree_bound: u32,
) -> Result<FreenessReport> {
    let basis = enumerate_basis(family, p, n)?;
    let mut failures = Vec::new();
    let expected = family.expected_rank(p, n);
    if let Some(rank) = expected {
        if basis.len() as u64 != rank {
            failures.push(format!(
                "cardinality {} != rank {rank}",
                basis.len()
            ));
        }
    }
    let bound = degree_bound as usize;
    // (b) series identity: sum_B t^{deg B} * PS(D_n) == PS(ring).
    let ring_series = family_series(family, p, n, bound);
    if let Some(ring) = &ring_series {
        let dn_degs: Vec<u64> =
            (0..n).map(|i| (p as u64).pow(n as u32) - (p as u64).pow(i as u32)).collect();
        let dn = polynomial_series(&dn_degs, bound);
        let mut module = vec![0u64; bound + 1];
        for b in &basis {
            let d = b.degree(p) as usize;
            if d <= bound {
                for k in 0..=bound - d {
                    module[k + d] += dn[k];
                }
            }
        }
        for k in 0..=bound {
            if module[k] != ring[k] {
                failures.push(format!(
                    "graded dimension mismatch at degree {k}: module {} vs ring {}",
                    module[k], ring[k]
                ));
                break;
            }
        }
    }
    // (c) independence per degree (and span when the series is known).
    let expansions: Vec<SuperPoly> =
        basis.iter().map(|b| b.expand(p, n)).collect::<Result<_>>()?;
    for deg in 0..=bound as u64 {
        let mut cols: Vec<SuperPoly> = Vec::new();
        for (b, bexp) in basis.iter().zip(&expansions) {
            let bd = b.degree(p);
            if bd > deg {
                continue;
            }
            for (_, dmono) in dickson_monomials_of_degree(p, n, deg - bd)? {
                cols.push(dmono.mul(bexp)?);
            }
        }
        if cols.is_empty() {
            continue;
        }
        let mut monos: BTreeSet<SuperMonomial> = BTreeSet::new();
        for c in &cols {
            for (m, _) in c.terms() {
                monos.insert(m.clone());
            }
        }
        let monos: Vec<SuperMonomial> = monos.into_iter().collect();
        let index: HashMap<&SuperMonomial, usize> =
            monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut a = vec![vec![0u32; cols.len()]; monos.len()];
        for (col, cf) in cols.iter().enumerate() {
            for (m, c) in cf.terms() {
                a[index[m]][col] = c;
            }
        }
        let rank = linalg::rank(p, &a, cols.len());
        if rank != cols.len() {
            failures.push(format!(
                "dependent module elements in degree {deg}: rank {rank} of {}",
                cols.len()
            ));
        }
        if let Some(ring) = &ring_series {
            if rank as u64 != ring[deg as usize] {
                failures.push(format!(
                    "span failure in degree {deg}: rank {rank} vs ring dimension {}",
                    ring[deg as usize]
                ));
            }
        }
        if !failures.is_empty() {
            break;
        }
    }
    Ok(FreenessReport {
        family,
        p,
        n,
        cardinality: basis.len(),
        expected_rank: expected,
        degree_bound,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pn11_basis_matches_worked_example() {
        // (p,n) = (2,3): B = {d20^i d21^j, d20^2 d21^j, d21^2 : i,j <= 1},
        // seven elements.
        let basis = enumerate_basis(BasisFamily::Pn11, 2, 3).unwrap();
        assert_eq!(basis.len(), 7);
        let shown: Vec<String> = basis.iter().map(|b| b.to_string()).collect();
        for want in [
            "1",
            "d[2,0]",
            "d[2,1]",
            "d[2,0]*d[2,1]",
            "d[2,0]^2",
            "d[2,0]^2*d[2,1]",
            "d[2,1]^2",
        ] {
            assert!(shown.iter().any(|s| s == want), "missing {want}: {shown:?}");
        }
    }

    #[test]
    fn basis_cardinalities() {
        // |Pn11| = |P1n1| = (p^n - 1)/(p - 1).
        assert_eq!(enumerate_basis(BasisFamily::P1n1, 3, 2).unwrap().len(), 4);
        assert_eq!(enumerate_basis(BasisFamily::Pn11, 3, 4).unwrap().len(), 40);
        assert_eq!(enumerate_basis(BasisFamily::Pn11, 2, 4).unwrap().len(), 15);
        assert_eq!(enumerate_basis(BasisFamily::Hn, 2, 2).unwrap().len(), 3);
        assert_eq!(enumerate_basis(BasisFamily::SylowImage, 3, 2).unwrap().len(), 64);
    }

    #[test]
    fn p1n1_small_basis() {
        // (3,2): {1, h1^2, h1^4, h1^6}.
        let basis = enumerate_basis(BasisFamily::P1n1, 3, 2).unwrap();
        let shown: Vec<String> = basis.iter().map(|b| b.to_string()).collect();
        assert_eq!(shown, vec!["1", "h[1]^2", "h[1]^4", "h[1]^6"]);
    }

    #[test]
    fn rewrite_trivial_cases() {
        let p = 2;
        let n = 3;
        let one = GenExpr::one(p, n).unwrap();
        let dec = rewrite(&one, BasisFamily::Pn11).unwrap();
        assert_eq!(dec.pairs.len(), 1);
        assert!(dec.pairs[0].0.is_unit());
        assert_eq!(dec.pairs[0].1, GenExpr::one(p, n).unwrap());
        // xi(1) = 1 and xi(d_{n,0} * 1) = d_{n,0}.
        assert_eq!(xi(&one, BasisFamily::Pn11).unwrap(), one);
        let d30 = GenExpr::symbol(p, n, GenSymbol::D { m: 3, i: 0 }).unwrap();
        assert_eq!(xi(&d30, BasisFamily::Pn11).unwrap(), d30);
    }

    #[test]
    fn worked_example_relations_and_xi() {
        // d20 d21^2 = d30 + d32 d20 at (2,3), plus the full worked rewrite.
        let p = 2;
        let n = 3;
        let d20 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 0 }).unwrap();
        let d21 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 1 }).unwrap();
        let f = d20.mul(&d21.pow(2).unwrap()).unwrap();
        let dec = rewrite(&f, BasisFamily::Pn11).unwrap();
        // expansion correctness
        assert_eq!(dec.expand().unwrap(), f.expand().unwrap());
        // the displayed outcome: coefficient d30 on 1, d32 on d20.
        let as_map: HashMap<String, String> = dec
            .pairs
            .iter()
            .map(|(b, c)| (b.to_string(), c.to_string()))
            .collect();
        assert_eq!(as_map.get("1").map(String::as_str), Some("d[3,0]"));
        assert_eq!(as_map.get("d[2,0]").map(String::as_str), Some("d[3,2]"));
        assert_eq!(as_map.len(), 2);
        // xi(d20^2 d21^7) = d30^2 d31 with the displayed five-term rewrite.
        let g = d20.pow(2).unwrap().mul(&d21.pow(7).unwrap()).unwrap();
        let dec = rewrite(&g, BasisFamily::Pn11).unwrap();
        assert_eq!(dec.expand().unwrap(), g.expand().unwrap());
        let as_map: HashMap<String, String> = dec
            .pairs
            .iter()
            .map(|(b, c)| (b.to_string(), c.to_string()))
            .collect();
        assert_eq!(as_map.get("1").map(String::as_str), Some("d[3,0]^2*d[3,1]"));
        assert_eq!(as_map.get("d[2,1]").map(String::as_str), Some("d[3,0]^2*d[3,2]"));
        assert_eq!(as_map.get("d[2,0]^2").map(String::as_str), Some("d[3,0]^2"));
        assert_eq!(as_map.get("d[2,0]^2*d[2,1]").map(String::as_str), Some("d[3,2]^3"));
        assert_eq!(as_map.get("d[2,0]*d[2,1]").map(String::as_str), Some("d[3,0]*d[3,2]^2"));
        assert_eq!(as_map.len(), 5);
    }

    #[test]
    fn n4_lemma_relations() {
        // The six displayed identities behind the n = 4 basis, as expanded
        // polynomial identities at (2,4) and (3,4).
        for p in [2u32, 3] {
            let n = 4;
            let d3 = |i: usize| {
                (*expand_symbol(p, n, &GenSymbol::D { m: 3, i }).unwrap()).clone()
            };
            let d4 = |i: usize| {
                (*expand_symbol(p, n, &GenSymbol::D { m: 4, i }).unwrap()).clone()
            };
            // i) d40 = d43 d30 - d30 d32^p
            let lhs = d4(0);
            let rhs = d4(3)
                .mul(&d3(0))
                .unwrap()
                .sub(&d3(0).mul(&d3(2).pow(p).unwrap()).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs, "p={p} (i)");
            // ii) d41 = d43 d31 + d30^p - d31 d32^p
            let rhs = d4(3)
                .mul(&d3(1))
                .unwrap()
                .add(&d3(0).pow(p).unwrap())
                .unwrap()
                .sub(&d3(1).mul(&d3(2).pow(p).unwrap()).unwrap())
                .unwrap();
            assert_eq!(d4(1), rhs, "p={p} (ii)");
            // iii) d42 = d43 d32 + d31^p - d32^{p+1}
            let rhs = d4(3)
                .mul(&d3(2))
                .unwrap()
                .add(&d3(1).pow(p).unwrap())
                .unwrap()
                .sub(&d3(2).pow(p + 1).unwrap())
                .unwrap();
            assert_eq!(d4(2), rhs, "p={p} (iii)");
            // iv) -d30^{p+1} = d40 d31 - d41 d30
            let lhs = d3(0).pow(p + 1).unwrap().scale(-1);
            let rhs = d4(0).mul(&d3(1)).unwrap().sub(&d4(1).mul(&d3(0)).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "p={p} (iv)");
            // v) -d30 d31^p = d40 d32 - d42 d30
            let lhs = d3(0).mul(&d3(1).pow(p).unwrap()).unwrap().scale(-1);
            let rhs = d4(0).mul(&d3(2)).unwrap().sub(&d4(2).mul(&d3(0)).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "p={p} (v)");
            // vi) -d31^{p+1} = d41 d32 - d42 d31 - d30^p d32
            let lhs = d3(1).pow(p + 1).unwrap().scale(-1);
            let rhs = d4(1)
                .mul(&d3(2))
                .unwrap()
                .sub(&d4(2).mul(&d3(1)).unwrap())
                .unwrap()
                .sub(&d3(0).pow(p).unwrap().mul(&d3(2)).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs, "p={p} (vi)");
        }
    }

    #[test]
    fn engine_agrees_with_oracle_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xD1C5);
        for &(p, n) in &[(2u32, 3usize), (3, 2), (3, 3)] {
            for _ in 0..40 {
                // random element of F_p(n-1,1) in its generator symbols
                let mut f = GenExpr::zero(p, n).unwrap();
                for _ in 0..rng.random_range(1..=2) {
                    let mut mono = GenExpr::scalar(p, n, rng.random_range(1..p) as i64).unwrap();
                    for i in 0..n - 1 {
                        let e = rng.random_range(0..=p + 1);
                        if e > 0 {
                            mono = mono
                                .mul(
                                    &GenExpr::symbol(p, n, GenSymbol::D { m: n - 1, i })
                                        .unwrap()
                                        .pow(e)
                                        .unwrap(),
                                )
                                .unwrap();
                        }
                    }
                    if rng.random_bool(0.3) {
                        mono = mono
                            .mul(&GenExpr::symbol(p, n, GenSymbol::D { m: n, i: n - 1 }).unwrap())
                            .unwrap();
                    }
                    f = f.add(&mono).unwrap();
                }
                if f.is_zero() {
                    continue;
                }
                let dec = rewrite(&f, BasisFamily::Pn11).unwrap();
                let fe = f.expand().unwrap();
                assert_eq!(dec.expand().unwrap(), fe, "(p,n)=({p},{n}) f={f}");
                let odec = oracle_decompose(&fe, BasisFamily::Pn11, p, n).unwrap();
                assert_eq!(dec.pairs, odec.pairs, "(p,n)=({p},{n}) f={f}");
            }
        }
    }

    #[test]
    fn p1n1_rewrite_and_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xA11);
        for &(p, n) in &[(3u32, 2usize), (2, 3), (3, 3)] {
            let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
            // basis elements rewrite to themselves
            let h1 = GenExpr::symbol(p, n, GenSymbol::H { i: 1 }).unwrap();
            for m in [0u64, 1, a1] {
                let f = h1.pow(((p as u64 - 1) * m) as u32).unwrap();
                let dec = rewrite(&f, BasisFamily::P1n1).unwrap();
                assert_eq!(dec.expand().unwrap(), f.expand().unwrap());
                assert_eq!(dec.pairs.len(), 1);
            }
            // the first over-the-edge power and random d(I) products
            let f = h1.pow(((p as u64 - 1) * (a1 + 1)) as u32).unwrap();
            let dec = rewrite(&f, BasisFamily::P1n1).unwrap();
            assert_eq!(dec.expand().unwrap(), f.expand().unwrap());
            for _ in 0..6 {
                let mut f = GenExpr::scalar(p, n, rng.random_range(1..p) as i64).unwrap();
                let m = rng.random_range(0..=a1 + 2);
                f = f.mul(&h1.pow(((p as u64 - 1) * m) as u32).unwrap()).unwrap();
                for i in 1..n {
                    let e = rng.random_range(0..=1u32);
                    if e > 0 {
                        f = f
                            .mul(&GenExpr::symbol(p, n, GenSymbol::DParab { m: n, i }).unwrap())
                            .unwrap();
                    }
                }
                let dec = rewrite(&f, BasisFamily::P1n1).unwrap();
                let fe = f.expand().unwrap();
                assert_eq!(dec.expand().unwrap(), fe, "(p,n)=({p},{n}) f={f}");
                let odec = oracle_decompose(&fe, BasisFamily::P1n1, p, n).unwrap();
                assert_eq!(dec.pairs, odec.pairs, "(p,n)=({p},{n})");
            }
        }
    }

    #[test]
    fn freeness_small_grid() {
        for &(p, n) in &[(2u32, 3usize), (3, 2)] {
            for family in [BasisFamily::Pn11, BasisFamily::P1n1, BasisFamily::Hn] {
                let rep = verify_freeness(family, p, n, 14).unwrap();
                assert!(rep.ok(), "(p,n)=({p},{n}) {family:?}: {:?}", rep.failures);
            }
        }
        for family in [BasisFamily::SylowImage, BasisFamily::Wr1, BasisFamily::Wr2] {
            let rep = verify_freeness(family, 3, 2, 12).unwrap();
            assert!(rep.ok(), "{family:?}: {:?}", rep.failures);
        }
    }

    #[test]
    fn decomposition_json_is_stable() {
        let p = 2;
        let n = 3;
        let d20 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 0 }).unwrap();
        let d21 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 1 }).unwrap();
        let f = d20.mul(&d21.pow(2).unwrap()).unwrap();
        let dec = rewrite(&f, BasisFamily::Pn11).unwrap();
        let j1 = dec.to_json();
        let j2 = rewrite(&f, BasisFamily::Pn11).unwrap().to_json();
        assert_eq!(j1, j2);
        assert!(j1.contains("\"family\":\"pn11\""));
    }
}
