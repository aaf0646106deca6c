//! Constructors for the named invariants: `h_i` and its variants, the Moore
//! determinants `L_{m,i}`, Dickson generators `d_{m,i}` and their parabolic
//! truncations, and the Mui classes `M_{m,S}`, together with identity
//! checkers used by the verification suite.
//!
//! Expansions are cached per `(p, n, symbol)` because they are reused
//! heavily by the rewriting and transfer machinery. Dickson generators are
//! built from the subset-sum formula over `h_j^{p-1}` and cross-checked
//! against exact division of Moore determinants on first use; a mismatch is
//! an internal consistency failure.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::field::PrimeField;
use crate::genexpr::{GenExpr, GenSymbol};
use crate::glgroup::{parabolic_generators, unitriangular_generators, Composition, GLMatrix};
use crate::linalg;
use crate::superpoly::{SuperMonomial, SuperPoly};
use crate::{Error, Result};

type Cache = RwLock<HashMap<(u32, usize, GenSymbol), Arc<SuperPoly>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Expand a symbol in the ambient ring with `n` variables, with caching.
pub fn expand_symbol(p: u32, n: usize, sym: &GenSymbol) -> Result<Arc<SuperPoly>> {
    let key = (p, n, sym.clone());
    if let Some(hit) = cache().read().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let value = Arc::new(expand_uncached(p, n, sym)?);
    cache().write().expect("cache lock").insert(key, value.clone());
    Ok(value)
}

fn check_range(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::IndexRange(what.to_string()))
    }
}

fn expand_uncached(p: u32, n: usize, sym: &GenSymbol) -> Result<SuperPoly> {
    PrimeField::new(p)?;
    match sym {
        GenSymbol::H { i } => {
            check_range(1 <= *i && *i <= n, &format!("h[{i}] with n = {n}"))?;
            make_h(p, n, *i)
        }
        GenSymbol::HHat { i } => hat(p, n, &GenSymbol::H { i: *i }),
        GenSymbol::HOmit { i, j } => {
            check_range(
                2 <= *i && *i <= n && 1 <= *j && *j <= i - 1,
                &format!("homit[{i},{j}]"),
            )?;
            make_h_omit(p, n, *i, *j)
        }
        GenSymbol::HSwap { i, j } => {
            check_range(1 <= *j && j <= i && *i <= n, &format!("hswap[{i},{j}]"))?;
            let h = expand_symbol(p, n, &GenSymbol::H { i: *i })?;
            h.substitute(&swap_matrix(p, n, *i, *j)?)
        }
        GenSymbol::L { m } => {
            check_range(1 <= *m && *m <= n, &format!("L[{m}] with n = {n}"))?;
            let mut acc = SuperPoly::one(p, n)?;
            for i in 1..=*m {
                acc = acc.mul(&*expand_symbol(p, n, &GenSymbol::H { i })?)?;
            }
            Ok(acc)
        }
        GenSymbol::LHat { m } => hat(p, n, &GenSymbol::L { m: *m }),
        GenSymbol::LSub { m, i } => {
            check_range(1 <= *m && *m <= n && *i <= *m, &format!("L[{m},{i}]"))?;
            let exps: Vec<u32> = (0..=*m as u32).filter(|&e| e != *i as u32).collect();
            moore_det(p, n, &(1..=*m).collect::<Vec<_>>(), &exps)
        }
        GenSymbol::D { m, i } => {
            check_range(1 <= *m && *m <= n && *i < *m, &format!("d[{m},{i}]"))?;
            let by_formula = make_d_formula(p, n, *m, *i, false)?;
            // Cross-check: d_{m,i} = L_{m,i} / L_m exactly.
            let lsub = expand_symbol(p, n, &GenSymbol::LSub { m: *m, i: *i })?;
            let l = expand_symbol(p, n, &GenSymbol::LSub { m: *m, i: *m })?;
            let by_division = lsub.exact_div(&l)?;
            if by_formula != by_division {
                return Err(Error::Inconsistency(format!(
                    "d[{m},{i}] at p = {p}: subset-sum formula and Moore quotient disagree"
                )));
            }
            Ok(by_formula)
        }
        GenSymbol::DHat { m, i } => hat(p, n, &GenSymbol::D { m: *m, i: *i }),
        GenSymbol::DParab { m, i } => {
            check_range(1 <= *i && *i < *m && *m <= n, &format!("d[{m},{i}](I)"))?;
            make_d_formula(p, n, *m, *i, true)
        }
        GenSymbol::M { m, s } => {
            check_range(1 <= *m && *m <= n, &format!("M[{m};..] with n = {n}"))?;
            check_range(
                !s.is_empty()
                    && s.windows(2).all(|w| w[0] < w[1])
                    && *s.last().expect("nonempty") <= m - 1,
                &format!("M[{m};{s:?}]"),
            )?;
            let rows: Vec<usize> = (1..=*m).collect();
            let exps: Vec<u32> =
                (0..*m as u32).filter(|e| !s.contains(&(*e as usize))).collect();
            mui_class(p, n, &rows, s.len(), &exps)
        }
        GenSymbol::MHat { m, s } => hat(p, n, &GenSymbol::M { m: *m, s: s.clone() }),
    }
}

fn hat(p: u32, n: usize, base: &GenSymbol) -> Result<SuperPoly> {
    let f = expand_symbol(p, n, base)?;
    f.substitute(&GLMatrix::omega(p, n)?)
}

fn swap_matrix(p: u32, n: usize, i: usize, j: usize) -> Result<GLMatrix> {
    let mut a = vec![0u32; n * n];
    for k in 0..n {
        a[k * n + k] = 1;
    }
    if i != j {
        a[(i - 1) * n + (i - 1)] = 0;
        a[(j - 1) * n + (j - 1)] = 0;
        a[(i - 1) * n + (j - 1)] = 1;
        a[(j - 1) * n + (i - 1)] = 1;
    }
    GLMatrix::new(p, n, a)
}

/// `h_i` via the Moore expansion `sum_t (-1)^(i-1-t) d_{i-1,t} y_i^(p^t)`
/// with `d_{i-1,i-1} = 1`.
fn make_h(p: u32, n: usize, i: usize) -> Result<SuperPoly> {
    let mut acc = SuperPoly::zero(p, n)?;
    for t in 0..i {
        let d = if t == i - 1 {
            SuperPoly::one(p, n)?
        } else {
            (*expand_symbol(p, n, &GenSymbol::D { m: i - 1, i: t })?).clone()
        };
        let mut y = vec![0u32; n];
        y[i - 1] = p.pow(t as u32);
        let ypow = SuperPoly::from_terms(p, n, [(SuperMonomial::new(n, &[], y)?, 1i64)])?;
        let sign = if (i - 1 - t) % 2 == 0 { 1 } else { -1 };
        acc = acc.add(&d.mul(&ypow)?.scale(sign))?;
    }
    Ok(acc)
}

/// `h_i` as the literal orbit product over `V^{i-1}`; the independent
/// construction used to validate `make_h`.
pub fn h_by_orbit_product(p: u32, n: usize, i: usize) -> Result<SuperPoly> {
    check_range(1 <= i && i <= n, &format!("h[{i}] with n = {n}"))?;
    orbit_product(p, n, i, &(1..i).collect::<Vec<_>>())
}

/// `h_i(j-hat)`: the orbit product with `y_j` omitted from the span.
fn make_h_omit(p: u32, n: usize, i: usize, j: usize) -> Result<SuperPoly> {
    let span: Vec<usize> = (1..i).filter(|&t| t != j).collect();
    orbit_product(p, n, i, &span)
}

/// `prod_{v in <y_t : t in span>} (y_i - v)`.
fn orbit_product(p: u32, n: usize, i: usize, span: &[usize]) -> Result<SuperPoly> {
    let yi = SuperPoly::var_y(p, n, i)?;
    let mut acc = SuperPoly::one(p, n)?;
    let k = span.len();
    let total = (p as u64).pow(k as u32);
    for idx in 0..total {
        let mut v = SuperPoly::zero(p, n)?;
        let mut rem = idx;
        for &t in span {
            let c = (rem % p as u64) as i64;
            rem /= p as u64;
            if c != 0 {
                v = v.add(&SuperPoly::var_y(p, n, t)?.scale(c))?;
            }
        }
        acc = acc.mul(&yi.sub(&v)?)?;
    }
    Ok(acc)
}

/// Dickson generator `d_{m,i}` (or its parabolic truncation) by the
/// subset-sum formula: the sum over `(m-i)`-subsets `j_1 < .. < j_{m-i}` of
/// `prod_s (h_{j_s}^{p-1})^(p^{i+s-j_s})`. The truncation drops every subset
/// containing 1.
fn make_d_formula(p: u32, n: usize, m: usize, i: usize, truncated: bool) -> Result<SuperPoly> {
    fn rec(
        p: u32,
        n: usize,
        i: usize,
        size: usize,
        hi: usize,
        start: usize,
        subset: &mut Vec<usize>,
        acc: &mut SuperPoly,
    ) -> Result<()> {
        if subset.len() == size {
            let mut term = SuperPoly::one(p, n)?;
            for (s0, &j) in subset.iter().enumerate() {
                let s = s0 + 1;
                let e = (i + s - j) as u32;
                let h = expand_symbol(p, n, &GenSymbol::H { i: j })?;
                term = term.mul(&h.frobenius_pow(e).pow(p - 1)?)?;
            }
            *acc = acc.add(&term)?;
            return Ok(());
        }
        let remaining = size - subset.len();
        for j in start..=hi.saturating_sub(remaining - 1) {
            subset.push(j);
            rec(p, n, i, size, hi, j + 1, subset, acc)?;
            subset.pop();
        }
        Ok(())
    }
    let size = m - i;
    let lo = if truncated { 2 } else { 1 };
    let mut acc = SuperPoly::zero(p, n)?;
    let mut subset: Vec<usize> = Vec::new();
    rec(p, n, i, size, m, lo, &mut subset, &mut acc)?;
    Ok(acc)
}

/// Moore-style determinant: rows are variables `y_r` for `r in rows`,
/// columns are Frobenius powers `p^e` for `e in exps`.
fn moore_det(p: u32, n: usize, rows: &[usize], exps: &[u32]) -> Result<SuperPoly> {
    check_range(rows.len() == exps.len(), "determinant must be square")?;
    let k = rows.len();
    let f = PrimeField::new(p)?;
    let mut acc = SuperPoly::zero(p, n)?;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut visit = |perm: &[usize], odd: bool| -> Result<()> {
        let mut y = vec![0u32; n];
        for (r, &c) in perm.iter().enumerate() {
            y[rows[r] - 1] += p.pow(exps[c]);
        }
        let coef: i64 = if odd { -1 } else { 1 };
        let term = SuperPoly::from_terms(p, n, [(SuperMonomial::new(n, &[], y)?, coef)])?;
        acc = acc.add(&term)?;
        Ok(())
    };
    permutations_with_parity(&mut perm, 0, 0, &mut visit)?;
    let _ = f;
    Ok(acc)
}

fn permutations_with_parity(
    perm: &mut Vec<usize>,
    k: usize,
    swaps: usize,
    visit: &mut impl FnMut(&[usize], bool) -> Result<()>,
) -> Result<()> {
    if k == perm.len() {
        return visit(perm, swaps % 2 == 1);
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        let extra = usize::from(i != k);
        permutations_with_parity(perm, k + 1, swaps + extra, visit)?;
        perm.swap(k, i);
    }
    Ok(())
}

fn k_subsets(total: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(total: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..total {
            cur.push(v);
            rec(total, k, v + 1, cur, out);
            cur.pop();
        }
    }
    rec(total, k, 0, &mut cur, &mut out);
    out
}

/// General Mui-style class: choose `k` of the given rows to host `x`'s, and
/// fill the remaining rows with a Moore minor on the given exponents. The
/// sign is that of sorting the chosen rows in front of the rest; for `k < p`
/// this agrees with the classical `det/k!` definition and it stays
/// well-defined for all `k`.
fn mui_class(p: u32, n: usize, rows: &[usize], k: usize, exps: &[u32]) -> Result<SuperPoly> {
    if p == 2 {
        return Err(Error::ExteriorAtTwo);
    }
    check_range(k + exps.len() == rows.len(), "Mui class shape")?;
    let mut acc = SuperPoly::zero(p, n)?;
    for choice in k_subsets(rows.len(), k) {
        let inversions: usize = choice.iter().enumerate().map(|(t, &pos)| pos - t).sum();
        let xs: Vec<usize> = choice.iter().map(|&t| rows[t]).collect();
        let rest: Vec<usize> =
            (0..rows.len()).filter(|t| !choice.contains(t)).map(|t| rows[t]).collect();
        let minor = moore_det(p, n, &rest, exps)?;
        let xmono =
            SuperPoly::from_terms(p, n, [(SuperMonomial::new(n, &xs, vec![0; n])?, 1i64)])?;
        let term = xmono.mul(&minor)?;
        acc = acc.add(&term.scale(if inversions % 2 == 0 { 1 } else { -1 }))?;
    }
    Ok(acc)
}

/// `L_{m,i}(t-hat)`: the Moore determinant on columns `y_1..y_m` minus
/// `y_t`, rows `p^0..p^{m-1}` minus `p^i`.
pub fn l_omit(p: u32, n: usize, m: usize, i: usize, t: usize) -> Result<SuperPoly> {
    check_range(
        m <= n && i <= m - 1 && 1 <= t && t <= m,
        &format!("L[{m},{i}]({t}hat)"),
    )?;
    let rows: Vec<usize> = (1..=m).filter(|&r| r != t).collect();
    let exps: Vec<u32> = (0..m as u32).filter(|&e| e != i as u32).collect();
    moore_det(p, n, &rows, &exps)
}

/// `M_{m,i}(t-hat)`: one `x` column, `y`-columns `p^0..p^{m-2}` minus `p^i`,
/// with row `t` missing.
pub fn m_omit(p: u32, n: usize, m: usize, i: usize, t: usize) -> Result<SuperPoly> {
    check_range(
        m <= n && m >= 2 && i <= m - 2 && 1 <= t && t <= m,
        &format!("M[{m},{i}]({t}hat)"),
    )?;
    let rows: Vec<usize> = (1..=m).filter(|&r| r != t).collect();
    let exps: Vec<u32> = (0..(m - 1) as u32).filter(|&e| e != i as u32).collect();
    mui_class(p, n, &rows, 1, &exps)
}

// ---------------------------------------------------------------------------
// Generator families for restriction images
// ---------------------------------------------------------------------------

/// Groups whose restriction image has a stated generator set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RestrictionTag {
    /// The full symmetric group on `p^n` points: `GL`-invariants.
    FullSymmetric,
    /// The Sylow p-subgroup (iterated wreath of `Z/p`).
    Sylow,
    /// The wreath product attached to a two-part composition,
    /// `(1, n-1)` or `(n-1, 1)`.
    Wreath(Composition),
}

/// The generator list of the image of restriction, as formal expressions.
pub fn restriction_image_generators(
    tag: &RestrictionTag,
    p: u32,
    n: usize,
) -> Result<Vec<GenExpr>> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("restriction images"));
    }
    let sym = |s: GenSymbol| GenExpr::symbol(p, n, s);
    match tag {
        RestrictionTag::FullSymmetric => {
            // D_n plus the Mui classes M_{n,S} L_n^{p-2}.
            let mut out = Vec::new();
            for i in 0..n {
                out.push(sym(GenSymbol::D { m: n, i })?);
            }
            let lpow = sym(GenSymbol::L { m: n })?.pow(p - 2)?;
            for s in nonempty_subsets(n) {
                out.push(sym(GenSymbol::M { m: n, s })?.mul(&lpow)?);
            }
            Ok(out)
        }
        RestrictionTag::Sylow => {
            // E(Mhat_{1,0}, Mhat_{2,1} Lhat_1^{(p-3)/2}, ...) tensor H_n^t.
            let mut out = Vec::new();
            for i in 1..=n {
                let mhat = sym(GenSymbol::MHat { m: i, s: vec![i - 1] })?;
                let l = if i >= 2 {
                    sym(GenSymbol::LHat { m: i - 1 })?.pow((p - 3) / 2)?
                } else {
                    GenExpr::one(p, n)?
                };
                out.push(mhat.mul(&l)?);
            }
            for i in 1..=n {
                out.push(sym(GenSymbol::HHat { i })?);
            }
            Ok(out)
        }
        RestrictionTag::Wreath(comp) => {
            let parts = comp.parts();
            if comp.n() != n || parts.len() != 2 || (parts[0] != 1 && parts[1] != 1) {
                return Err(Error::UnsupportedComposition(parts.to_vec()));
            }
            // dhat_{nu_i, nu_i - k}, Mhat_{nu_i, nu_i - k} Lhat^{p-2}, and
            // the two-index Mhat classes, per flag dimension nu_i.
            let mut out = Vec::new();
            for (b, &nu) in comp.nus().iter().enumerate() {
                let block = parts[b];
                let lpow = sym(GenSymbol::LHat { m: nu })?.pow(p - 2)?;
                for k in 1..=block {
                    out.push(sym(GenSymbol::DHat { m: nu, i: nu - k })?);
                    out.push(sym(GenSymbol::MHat { m: nu, s: vec![nu - k] })?.mul(&lpow)?);
                    for kj in (k + 1)..nu {
                        let s = vec![nu - kj, nu - k];
                        out.push(sym(GenSymbol::MHat { m: nu, s })?.mul(&lpow)?);
                    }
                }
            }
            Ok(out)
        }
    }
}

fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).collect();
        out.push(s);
    }
    out.sort_by_key(|s| (s.len(), s.clone()));
    out
}

// ---------------------------------------------------------------------------
// Module-expression solver and relation checkers
// ---------------------------------------------------------------------------

/// Outcome of solving `target = sum_j gens[j] * c_j`.
pub struct ModuleExpression {
    /// For each generator index, the discovered coefficient.
    pub coefficients: Vec<(usize, SuperPoly)>,
}

/// Solve `target = sum_j gens[j] * c_j` where each `c_j` is an unknown
/// F_p-combination of the supplied coefficient monomials. Returns `None`
/// when no solution exists.
pub fn express_in_module(
    target: &SuperPoly,
    gens: &[SuperPoly],
    coeff_pool: &[SuperPoly],
) -> Result<Option<ModuleExpression>> {
    let p = target.p();
    let n = target.n();
    let mut products = Vec::new();
    let mut labels = Vec::new();
    for (j, g) in gens.iter().enumerate() {
        for (k, c) in coeff_pool.iter().enumerate() {
            let prod = g.mul(c)?;
            if !prod.is_zero() {
                products.push(prod);
                labels.push((j, k));
            }
        }
    }
    let mut monos: std::collections::BTreeSet<SuperMonomial> = std::collections::BTreeSet::new();
    for f in products.iter().chain(std::iter::once(target)) {
        for (m, _) in f.terms() {
            monos.insert(m.clone());
        }
    }
    let monos: Vec<SuperMonomial> = monos.into_iter().collect();
    let index: HashMap<&SuperMonomial, usize> =
        monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut a = vec![vec![0u32; products.len()]; monos.len()];
    for (col, f) in products.iter().enumerate() {
        for (m, c) in f.terms() {
            a[index[m]][col] = c;
        }
    }
    let mut b = vec![0u32; monos.len()];
    for (m, c) in target.terms() {
        b[index[m]] = c;
    }
    let Some(sol) = linalg::solve(p, &a, &b, products.len()) else {
        return Ok(None);
    };
    let mut per_gen: HashMap<usize, SuperPoly> = HashMap::new();
    for (col, &(j, k)) in labels.iter().enumerate() {
        if sol.x[col] != 0 {
            let add = coeff_pool[k].scale(sol.x[col] as i64);
            let entry =
                per_gen.entry(j).or_insert_with(|| SuperPoly::zero(p, n).expect("validated"));
            *entry = entry.add(&add)?;
        }
    }
    let mut coefficients: Vec<(usize, SuperPoly)> = per_gen.into_iter().collect();
    coefficients.sort_by_key(|(j, _)| *j);
    Ok(Some(ModuleExpression { coefficients }))
}

/// All products `prod_j gens[j]^(e_j)` of the given algebraic degree.
/// `degrees[j]` must be the degree of `gens[j]`.
pub fn monomials_of_degree(
    p: u32,
    n: usize,
    gens: &[SuperPoly],
    degrees: &[u64],
    target: u64,
) -> Result<Vec<SuperPoly>> {
    fn rec(
        gens: &[SuperPoly],
        degrees: &[u64],
        j: usize,
        left: u64,
        acc: &SuperPoly,
        out: &mut Vec<SuperPoly>,
    ) -> Result<()> {
        if left == 0 {
            out.push(acc.clone());
            return Ok(());
        }
        if j == gens.len() {
            return Ok(());
        }
        let mut power = acc.clone();
        let mut used = 0u64;
        loop {
            rec(gens, degrees, j + 1, left - used, &power, out)?;
            used += degrees[j];
            if degrees[j] == 0 || used > left {
                break;
            }
            power = power.mul(&gens[j])?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    let one = SuperPoly::one(p, n)?;
    rec(gens, degrees, 0, target, &one, &mut out)?;
    Ok(out)
}

/// Which displayed relation between Mui classes and `h`'s to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelatioCase {
    /// `M_{n-1,S} h_n = M_{n,S} + (corrections)`, the corrections being
    /// `M_{n,T}` times degree-matched polynomials in `d_{n-1,*}`.
    AdjoinTop,
    /// `M_{l,S} h_{l+1} .. h_n = M_{n,S} + sum M_{n,T} f_T` with
    /// `f_T in H_n` and `S = (0, .., k-1)`.
    Telescope { l: usize },
}

/// Verify the relation by expansion, solving for the correction
/// coefficients. Returns the coefficient table `(T, f_T)` on success; an
/// inconsistency error carries the failing degree.
pub fn check_relatio_m(
    case: RelatioCase,
    p: u32,
    n: usize,
    s: &[usize],
) -> Result<Vec<(Vec<usize>, SuperPoly)>> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("Mui relations"));
    }
    let k = s.len();
    let (lhs, coeff_gens): (SuperPoly, Vec<SuperPoly>) = match case {
        RelatioCase::AdjoinTop => {
            check_range(
                !s.is_empty() && *s.last().expect("nonempty") <= n - 2,
                "S must fit in 0..=n-2",
            )?;
            let m = expand_symbol(p, n, &GenSymbol::M { m: n - 1, s: s.to_vec() })?;
            let hn = expand_symbol(p, n, &GenSymbol::H { i: n })?;
            let mut gens = Vec::new();
            for i in 0..n - 1 {
                gens.push((*expand_symbol(p, n, &GenSymbol::D { m: n - 1, i })?).clone());
            }
            (m.mul(&hn)?, gens)
        }
        RelatioCase::Telescope { l } => {
            check_range(
                l >= k && l <= n && s.iter().enumerate().all(|(t, &v)| v == t),
                "S must be 0..k-1 with l >= k",
            )?;
            let m = expand_symbol(p, n, &GenSymbol::M { m: l, s: s.to_vec() })?;
            let mut lhs = (*m).clone();
            for i in l + 1..=n {
                lhs = lhs.mul(&*expand_symbol(p, n, &GenSymbol::H { i })?)?;
            }
            let mut gens = Vec::new();
            for i in 1..=n {
                gens.push((*expand_symbol(p, n, &GenSymbol::H { i })?).clone());
            }
            (lhs, gens)
        }
    };
    let principal = expand_symbol(p, n, &GenSymbol::M { m: n, s: s.to_vec() })?;
    let residual = lhs.sub(&principal)?;
    if residual.is_zero() {
        return Ok(Vec::new());
    }
    // Solve residual = sum over |T| = k of M_{n,T} * c_T.
    let mut t_sets = Vec::new();
    let mut t_polys = Vec::new();
    for t in nonempty_subsets(n).into_iter().filter(|t| t.len() == k && t.as_slice() != s) {
        t_polys.push((*expand_symbol(p, n, &GenSymbol::M { m: n, s: t.clone() })?).clone());
        t_sets.push(t);
    }
    let deg = residual
        .homogeneous_degree()
        .ok_or_else(|| Error::Inconsistency("residual is inhomogeneous".into()))?
        as u64;
    let degrees: Vec<u64> = coeff_gens
        .iter()
        .map(|g| g.homogeneous_degree().expect("generators are homogeneous") as u64)
        .collect();
    let mut pool = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for tp in &t_polys {
        let td = tp.homogeneous_degree().expect("homogeneous") as u64;
        if td <= deg {
            let need = deg - td;
            if seen.insert(need) {
                pool.extend(monomials_of_degree(p, residual.n(), &coeff_gens, &degrees, need)?);
            }
        }
    }
    let solution = express_in_module(&residual, &t_polys, &pool)?.ok_or_else(|| {
        Error::Inconsistency(format!(
            "relation failure: residual of degree {deg} is not an M-combination"
        ))
    })?;
    Ok(solution
        .coefficients
        .into_iter()
        .map(|(j, c)| (t_sets[j].clone(), c))
        .collect())
}

/// Kuhn–Mitchell polynomial generators of `F_p(I)`: `d_{nu_i, nu_i - k}`
/// for each block.
pub fn kuhn_mitchell_generators(p: u32, n: usize, comp: &Composition) -> Result<Vec<GenExpr>> {
    if comp.n() != n {
        return Err(Error::UnsupportedComposition(comp.parts().to_vec()));
    }
    let mut out = Vec::new();
    for (b, &nu) in comp.nus().iter().enumerate() {
        for k in 1..=comp.parts()[b] {
            out.push(GenExpr::symbol(p, n, GenSymbol::D { m: nu, i: nu - k })?);
        }
    }
    Ok(out)
}

/// Generators of `F_p(1, n-1)` closed under the Steenrod action:
/// `h_1^{p-1}` and the truncated Dickson elements `d_{n,i}(I)`.
pub fn p1n1_polynomial_generators(p: u32, n: usize) -> Result<Vec<GenExpr>> {
    let mut out = vec![GenExpr::symbol(p, n, GenSymbol::H { i: 1 })?.pow(p - 1)?];
    for i in 1..n {
        out.push(GenExpr::symbol(p, n, GenSymbol::DParab { m: n, i })?);
    }
    Ok(out)
}

/// Generators of `F_p(n-1, 1)`: the smaller Dickson generators plus
/// `d_{n,n-1}`.
pub fn pn11_polynomial_generators(p: u32, n: usize) -> Result<Vec<GenExpr>> {
    let mut out = Vec::new();
    for i in 0..n - 1 {
        out.push(GenExpr::symbol(p, n, GenSymbol::D { m: n - 1, i })?);
    }
    out.push(GenExpr::symbol(p, n, GenSymbol::D { m: n, i: n - 1 })?);
    Ok(out)
}

/// `is_invariant` over the generators of `GL(n, F_p)`.
pub fn invariant_under_gl(f: &SuperPoly) -> Result<bool> {
    let gens = crate::glgroup::gl_generators(f.p(), f.n())?;
    crate::glgroup::is_invariant(f, &gens)
}

pub fn invariant_under_un(f: &SuperPoly, transposed: bool) -> Result<bool> {
    let gens = unitriangular_generators(f.p(), f.n(), transposed)?;
    crate::glgroup::is_invariant(f, &gens)
}

pub fn invariant_under_parabolic(
    f: &SuperPoly,
    comp: &Composition,
    transposed: bool,
) -> Result<bool> {
    let gens = parabolic_generators(f.p(), comp, transposed)?;
    crate::glgroup::is_invariant(f, &gens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: u32, n: usize, m: usize, i: usize) -> SuperPoly {
        (*expand_symbol(p, n, &GenSymbol::D { m, i }).unwrap()).clone()
    }
    fn h(p: u32, n: usize, i: usize) -> SuperPoly {
        (*expand_symbol(p, n, &GenSymbol::H { i }).unwrap()).clone()
    }

    #[test]
    fn h_matches_orbit_product() {
        for &(p, n) in &[(2u32, 3usize), (3, 2), (3, 3), (5, 2)] {
            for i in 1..=n {
                assert_eq!(
                    h(p, n, i),
                    h_by_orbit_product(p, n, i).unwrap(),
                    "(p,n,i)=({p},{n},{i})"
                );
            }
        }
    }

    #[test]
    fn h_small_cases() {
        // h_1 = y_1
        assert_eq!(h(2, 2, 1), SuperPoly::var_y(2, 2, 1).unwrap());
        // p=2: h_2 = y_2^2 + y_1 y_2
        let y1 = SuperPoly::var_y(2, 2, 1).unwrap();
        let y2 = SuperPoly::var_y(2, 2, 2).unwrap();
        let expect = y2.pow(2).unwrap().add(&y1.mul(&y2).unwrap()).unwrap();
        assert_eq!(h(2, 2, 2), expect);
        // hhat_1 = y_n
        let hhat1 = GenSymbol::HHat { i: 1 }.expand(3, 3).unwrap();
        assert_eq!(hhat1, SuperPoly::var_y(3, 3, 3).unwrap());
    }

    #[test]
    fn d_small_cases() {
        // d_{1,0} = y_1^{p-1}
        assert_eq!(d(3, 2, 1, 0), SuperPoly::var_y(3, 2, 1).unwrap().pow(2).unwrap());
        // p=2: d_{2,1} = y_1^2 + y_1 y_2 + y_2^2
        let y1 = SuperPoly::var_y(2, 2, 1).unwrap();
        let y2 = SuperPoly::var_y(2, 2, 2).unwrap();
        let expect = y1
            .pow(2)
            .unwrap()
            .add(&y1.mul(&y2).unwrap())
            .unwrap()
            .add(&y2.pow(2).unwrap())
            .unwrap();
        assert_eq!(d(2, 2, 2, 1), expect);
    }

    #[test]
    fn l_product_equals_determinant() {
        // L_m = prod h_i agrees with the Moore determinant L_{m,m}.
        for &(p, n) in &[(2u32, 3usize), (3, 2), (3, 3), (5, 2)] {
            for m in 1..=n {
                let prod = (*expand_symbol(p, n, &GenSymbol::L { m }).unwrap()).clone();
                let det =
                    (*expand_symbol(p, n, &GenSymbol::LSub { m, i: m }).unwrap()).clone();
                assert_eq!(prod, det, "(p,n,m)=({p},{n},{m})");
            }
        }
    }

    #[test]
    fn l_n0_is_l_pth_power() {
        for &(p, n) in &[(2u32, 2usize), (3, 2)] {
            let l = (*expand_symbol(p, n, &GenSymbol::L { m: n }).unwrap()).clone();
            let l0 = (*expand_symbol(p, n, &GenSymbol::LSub { m: n, i: 0 }).unwrap()).clone();
            assert_eq!(l0, l.pow(p).unwrap());
        }
    }

    #[test]
    fn corol1_recursion() {
        // d_{n,n-i} = d_{n-1,n-i} h_n^{p-1} + d_{n-1,n-i-1}^p
        for &(p, n) in &[(2u32, 2usize), (2, 3), (3, 2), (3, 3), (5, 2)] {
            for i in 1..=n - 1 {
                let lhs = d(p, n, n, n - i);
                let hn = h(p, n, n).pow(p - 1).unwrap();
                let a = if n - i == n - 1 {
                    SuperPoly::one(p, n).unwrap()
                } else {
                    d(p, n, n - 1, n - i)
                };
                let b = if n - i == 0 {
                    SuperPoly::zero(p, n).unwrap()
                } else {
                    d(p, n, n - 1, n - i - 1).pow(p).unwrap()
                };
                let rhs = a.mul(&hn).unwrap().add(&b).unwrap();
                assert_eq!(lhs, rhs, "(p,n,i)=({p},{n},{i})");
            }
        }
    }

    #[test]
    fn h_hat_lemma() {
        // h_i = h_i^p(j-hat) - h_i(j-hat) (h_{i-1}(j))^{p-1}
        for &(p, n, i, j) in &[(3u32, 3usize, 3usize, 1usize), (3, 2, 2, 1), (5, 2, 2, 1), (2, 3, 3, 2)] {
            let hi = h(p, n, i);
            let omit = (*expand_symbol(p, n, &GenSymbol::HOmit { i, j }).unwrap()).clone();
            let swap =
                (*expand_symbol(p, n, &GenSymbol::HSwap { i: i - 1, j }).unwrap()).clone();
            let rhs = omit
                .pow(p)
                .unwrap()
                .sub(&omit.mul(&swap.pow(p - 1).unwrap()).unwrap())
                .unwrap();
            assert_eq!(hi, rhs, "(p,n,i,j)=({p},{n},{i},{j})");
        }
    }

    #[test]
    fn h_swap_identity_case() {
        // h_2(2) = h_2
        let hs = (*expand_symbol(3, 2, &GenSymbol::HSwap { i: 2, j: 2 }).unwrap()).clone();
        assert_eq!(hs, h(3, 2, 2));
        // h_2(1-hat) = y_2
        let ho = (*expand_symbol(3, 2, &GenSymbol::HOmit { i: 2, j: 1 }).unwrap()).clone();
        assert_eq!(ho, SuperPoly::var_y(3, 2, 2).unwrap());
    }

    #[test]
    fn dickson_invariance() {
        // d_{2,0} is GL(2,3)-invariant; y_1 is not invariant under a
        // transvection moving y_1.
        assert!(invariant_under_gl(&d(3, 2, 2, 0)).unwrap());
        assert!(invariant_under_gl(&d(3, 2, 2, 1)).unwrap());
        let y1 = SuperPoly::var_y(3, 2, 1).unwrap();
        assert!(!invariant_under_gl(&y1).unwrap());
        // h_i invariant under U_n, h_i^{p-1} under B_n.
        for i in 1..=3 {
            assert!(invariant_under_un(&h(3, 3, i), false).unwrap());
        }
        let borel = crate::glgroup::borel_generators(3, 3, false).unwrap();
        for i in 1..=3 {
            let hp = h(3, 3, i).pow(2).unwrap();
            assert!(crate::glgroup::is_invariant(&hp, &borel).unwrap());
        }
        // hhat_1 = y_n is U_n^t-invariant.
        let hhat1 = GenSymbol::HHat { i: 1 }.expand(3, 3).unwrap();
        assert!(invariant_under_un(&hhat1, true).unwrap());
    }

    #[test]
    fn mui_m10_is_x1() {
        let m = (*expand_symbol(3, 2, &GenSymbol::M { m: 1, s: vec![0] }).unwrap()).clone();
        assert_eq!(m, SuperPoly::var_x(3, 2, 1).unwrap());
    }

    #[test]
    fn mui_squares_vanish() {
        for s in [vec![0], vec![1]] {
            let m = (*expand_symbol(3, 2, &GenSymbol::M { m: 2, s }).unwrap()).clone();
            assert!(m.mul(&m).unwrap().is_zero());
        }
    }

    #[test]
    fn mui_product_law_n2() {
        // M_{2,0} M_{2,1} = -M_{2,0,1} L_2 at p = 3.
        let p = 3;
        let n = 2;
        let m0 = (*expand_symbol(p, n, &GenSymbol::M { m: 2, s: vec![0] }).unwrap()).clone();
        let m1 = (*expand_symbol(p, n, &GenSymbol::M { m: 2, s: vec![1] }).unwrap()).clone();
        let m01 =
            (*expand_symbol(p, n, &GenSymbol::M { m: 2, s: vec![0, 1] }).unwrap()).clone();
        let l = (*expand_symbol(p, n, &GenSymbol::L { m: 2 }).unwrap()).clone();
        assert_eq!(m0.mul(&m1).unwrap(), m01.mul(&l).unwrap().scale(-1));
    }

    #[test]
    fn decompos_identity() {
        // d_{n,n-i} = h_1^{(p-1)p^{n-i}} d_{n,n-i+1}(I) + d_{n,n-i}(I)
        for &(p, n) in &[(3u32, 3usize), (2, 3), (5, 2)] {
            for i in 1..=n - 1 {
                let lhs = d(p, n, n, n - i);
                let h1 = h(p, n, 1);
                let upper = if n - i + 1 == n {
                    SuperPoly::one(p, n).unwrap()
                } else {
                    (*expand_symbol(p, n, &GenSymbol::DParab { m: n, i: n - i + 1 }).unwrap())
                        .clone()
                };
                let tail =
                    (*expand_symbol(p, n, &GenSymbol::DParab { m: n, i: n - i }).unwrap())
                        .clone();
                let coef = h1.frobenius_pow((n - i) as u32).pow(p - 1).unwrap();
                let rhs = coef.mul(&upper).unwrap().add(&tail).unwrap();
                assert_eq!(lhs, rhs, "(p,n,i)=({p},{n},{i})");
            }
        }
    }

    #[test]
    fn d_parab_top_case() {
        // d_{4,3}(I) = d_{4,3} - h_1^{(p-1)p^3} at p = 2 (desk-size check of
        // the displayed example).
        let p = 2;
        let n = 4;
        let lhs = (*expand_symbol(p, n, &GenSymbol::DParab { m: 4, i: 3 }).unwrap()).clone();
        let h1 = h(p, n, 1);
        let rhs = d(p, n, 4, 3).sub(&h1.frobenius_pow(3).pow(p - 1).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_n0_factors_through_truncation() {
        // d_{n,0} = h_1^{p-1} d_{n,1}(I)
        for &(p, n) in &[(2u32, 3usize), (3, 3)] {
            let lhs = d(p, n, n, 0);
            let h1p = h(p, n, 1).pow(p - 1).unwrap();
            let d1i = (*expand_symbol(p, n, &GenSymbol::DParab { m: n, i: 1 }).unwrap()).clone();
            assert_eq!(lhs, h1p.mul(&d1i).unwrap());
        }
    }

    #[test]
    fn row_expansion_identities() {
        // L_n = (-1)^{t-1} sum_j (-1)^j y_t^{p^j} L_{n,j}(t-hat)
        for &(p, n) in &[(3u32, 2usize), (3, 3), (2, 3)] {
            let l = (*expand_symbol(p, n, &GenSymbol::L { m: n }).unwrap()).clone();
            for t in 1..=n {
                let mut acc = SuperPoly::zero(p, n).unwrap();
                for j in 0..n {
                    let yt = SuperPoly::var_y(p, n, t).unwrap().pow(p.pow(j as u32)).unwrap();
                    let minor = l_omit(p, n, n, j, t).unwrap();
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    acc = acc.add(&yt.mul(&minor).unwrap().scale(sign)).unwrap();
                }
                let sign = if (t - 1) % 2 == 0 { 1 } else { -1 };
                assert_eq!(l, acc.scale(sign), "L(1) at (p,n,t)=({p},{n},{t})");
            }
        }
        // M_{n,n-1} = (-1)^{t-1} [x_t L_{n,n-1}(t-hat) - y_t M_{n,0}(t-hat)
        //             + ... + (-1)^{n-1} y_t^{p^{n-2}} M_{n,n-2}(t-hat)]
        for &(p, n) in &[(3u32, 2usize), (3, 3)] {
            let m =
                (*expand_symbol(p, n, &GenSymbol::M { m: n, s: vec![n - 1] }).unwrap()).clone();
            for t in 1..=n {
                let xt = SuperPoly::var_x(p, n, t).unwrap();
                let mut acc =
                    xt.mul(&l_omit(p, n, n, n - 1, t).unwrap()).unwrap();
                for j in 0..n - 1 {
                    let yt = SuperPoly::var_y(p, n, t).unwrap().pow(p.pow(j as u32)).unwrap();
                    let minor = m_omit(p, n, n, j, t).unwrap();
                    let sign = if j % 2 == 0 { -1 } else { 1 };
                    acc = acc.add(&yt.mul(&minor).unwrap().scale(sign)).unwrap();
                }
                let sign = if (t - 1) % 2 == 0 { 1 } else { -1 };
                assert_eq!(m, acc.scale(sign), "M(1) at (p,n,t)=({p},{n},{t})");
            }
        }
    }

    #[test]
    fn relatio_m_cases() {
        // (i) at (3,2), S = (0) and at (3,3), S = (1).
        check_relatio_m(RelatioCase::AdjoinTop, 3, 2, &[0]).unwrap();
        check_relatio_m(RelatioCase::AdjoinTop, 3, 3, &[1]).unwrap();
        // (ii) trivial case l = n: no corrections at all.
        let table = check_relatio_m(RelatioCase::Telescope { l: 3 }, 3, 3, &[0]).unwrap();
        assert!(table.is_empty());
        // (ii) at l = 2, n = 3.
        check_relatio_m(RelatioCase::Telescope { l: 2 }, 3, 3, &[0]).unwrap();
    }

    #[test]
    fn hat_is_omega_substitution() {
        let omega = GLMatrix::omega(3, 3).unwrap();
        for (hatted, plain) in [
            (GenSymbol::HHat { i: 2 }, GenSymbol::H { i: 2 }),
            (GenSymbol::LHat { m: 2 }, GenSymbol::L { m: 2 }),
            (GenSymbol::DHat { m: 2, i: 0 }, GenSymbol::D { m: 2, i: 0 }),
            (GenSymbol::MHat { m: 2, s: vec![1] }, GenSymbol::M { m: 2, s: vec![1] }),
        ] {
            let lhs = (*expand_symbol(3, 3, &hatted).unwrap()).clone();
            let rhs = expand_symbol(3, 3, &plain).unwrap().substitute(&omega).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn cache_is_safe_under_concurrent_expansion() {
        let handles: Vec<_> = (0..8)
            .map(|t| {
                std::thread::spawn(move || {
                    let i = t % 3;
                    let d = (*expand_symbol(5, 2, &GenSymbol::D { m: 2, i: i % 2 }).unwrap())
                        .clone();
                    let h = (*expand_symbol(5, 2, &GenSymbol::H { i: 1 + i % 2 }).unwrap())
                        .clone();
                    (d.num_terms(), h.num_terms())
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(results.windows(2).all(|w| w[0].0 > 0 && w[1].1 > 0));
    }

    #[test]
    fn genexpr_expand_is_multiplicative() {
        let p = 3;
        let n = 2;
        let a = GenExpr::symbol(p, n, GenSymbol::M { m: 2, s: vec![1] }).unwrap();
        let b = GenExpr::symbol(p, n, GenSymbol::M { m: 2, s: vec![0] }).unwrap();
        let lhs = a.mul(&b).unwrap().expand().unwrap();
        let rhs = a.expand().unwrap().mul(&b.expand().unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        let lhs2 = b.mul(&a).unwrap().expand().unwrap();
        let rhs2 = b.expand().unwrap().mul(&a.expand().unwrap()).unwrap();
        assert_eq!(lhs2, rhs2);
    }
}

/// Solve `target = sum_k lambda_k pool[k]` for scalars; `None` if the
/// target is outside the span.
pub fn scalar_combination(target: &SuperPoly, pool: &[SuperPoly]) -> Result<Option<Vec<u32>>> {
    let mut monos: std::collections::BTreeSet<SuperMonomial> = std::collections::BTreeSet::new();
    for f in pool.iter().chain(std::iter::once(target)) {
        for (m, _) in f.terms() {
            monos.insert(m.clone());
        }
    }
    let monos: Vec<SuperMonomial> = monos.into_iter().collect();
    let index: HashMap<&SuperMonomial, usize> =
        monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut a = vec![vec![0u32; pool.len()]; monos.len()];
    for (col, f) in pool.iter().enumerate() {
        for (m, c) in f.terms() {
            a[index[m]][col] = c;
        }
    }
    let mut b = vec![0u32; monos.len()];
    for (m, c) in target.terms() {
        b[index[m]] = c;
    }
    Ok(linalg::solve(target.p(), &a, &b, pool.len()).map(|s| s.x))
}
