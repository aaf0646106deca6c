//! Steenrod reduced powers `P^k` and the Bockstein `beta` on `H`, with the
//! closed-form actions on invariant generators used as verification targets.
//!
//! `P^k` acts monomial-wise through instability and the Cartan formula:
//! `P^a(y^e) = C(e, a) y^{e + a(p-1)}`, `P^a(x) = 0` for `a > 0`. The
//! Bockstein is the Koszul-signed derivation with `beta(x_i) = y_i`,
//! `beta(y_i) = 0`.

use crate::field::PrimeField;
use crate::genexpr::{GenExpr, GenSymbol};
use crate::superpoly::{SuperMonomial, SuperPoly};
use crate::{Error, Result};

/// A single Steenrod operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteenrodOp {
    /// Reduced power `P^k`. `P^0` is the identity.
    P(u32),
    /// The Bockstein.
    Beta,
}

impl SteenrodOp {
    pub fn apply(&self, f: &SuperPoly) -> Result<SuperPoly> {
        match self {
            SteenrodOp::P(k) => apply_p(*k, f),
            SteenrodOp::Beta => apply_beta(f),
        }
    }
}

/// `P^k(f)` for odd `p`.
pub fn apply_p(k: u32, f: &SuperPoly) -> Result<SuperPoly> {
    if f.p() == 2 {
        return Err(Error::OddPrimeOnly("reduced powers P^k"));
    }
    if k == 0 {
        return Ok(f.clone());
    }
    let p = f.p();
    let n = f.n();
    let fld = PrimeField::new(p)?;
    let mut out = SuperPoly::zero(p, n)?;
    for (m, c) in f.terms() {
        // Distribute k over the y-factors: P^{a_i}(y_i^{e_i}) with
        // sum a_i = k; the x-part passes through untouched.
        let exps: Vec<u32> = m.y_exponents().to_vec();
        let ext: Vec<usize> = m.ext_indices();
        let mut stack: Vec<(usize, u32, u32, Vec<u32>)> = vec![(0, k, 1, Vec::new())];
        while let Some((i, left, coef, alloc)) = stack.pop() {
            if i == n {
                if left == 0 {
                    let y: Vec<u32> = exps
                        .iter()
                        .zip(&alloc)
                        .map(|(&e, &a)| e + a * (p - 1))
                        .collect();
                    let mono = SuperMonomial::new(n, &ext, y)?;
                    let v = fld.mul(c, coef);
                    out = out.add(&SuperPoly::from_terms(p, n, [(mono, v as i64)])?)?;
                }
                continue;
            }
            let cap = left.min(exps[i]);
            for a in 0..=cap {
                let b = fld.binom(exps[i] as u64, a as u64);
                if b == 0 {
                    continue;
                }
                let mut alloc2 = alloc.clone();
                alloc2.push(a);
                stack.push((i + 1, left - a, fld.mul(coef, b), alloc2));
            }
        }
    }
    Ok(out)
}

/// `beta(f)`: degree +1 derivation with the Koszul sign.
pub fn apply_beta(f: &SuperPoly) -> Result<SuperPoly> {
    if f.p() == 2 {
        return Err(Error::OddPrimeOnly("the Bockstein in this odd-p model"));
    }
    let p = f.p();
    let n = f.n();
    let mut out = SuperPoly::zero(p, n)?;
    for (m, c) in f.terms() {
        let ext = m.ext_indices();
        for (pos, &i) in ext.iter().enumerate() {
            // Replace the pos-th x-factor by y_i; crossing the first pos odd
            // factors contributes (-1)^pos.
            let rest: Vec<usize> = ext.iter().copied().filter(|&j| j != i).collect();
            let mut y = m.y_exponents().to_vec();
            y[i - 1] += 1;
            let mono = SuperMonomial::new(n, &rest, y)?;
            let sign: i64 = if pos % 2 == 0 { 1 } else { -1 };
            out = out.add(&SuperPoly::from_terms(p, n, [(mono, c as i64 * sign)])?)?;
        }
    }
    Ok(out)
}


// ---------------------------------------------------------------------------
// Closed forms. The printed sources for these rules carry garbled index
// bounds; the readings below are the ones the brute-force Cartan oracle
// confirms across the desk-scale grid (see `verify_*` and the test suite).
// ---------------------------------------------------------------------------

/// The signed Dickson monomial factor shared by the `d_{n,0}`- and
/// `h_n`-action formulas: for `q = sum_t a_t p^t` with digits `a_0..a_{r-1}`
/// and the chain `p-1 >= a_{r-1} >= ... >= a_0 >= 0`, the factor is
/// `(-1)^{a_{r-1}} prod_{t>=1} C(a_t, a_{t-1}) prod_t d_{m,t}^{a_t - a_{t-1}}`
/// over the Dickson generators of rank `m = r`; `None` when inadmissible.
fn chain_factor(p: u32, n: usize, rank: usize, q: u64) -> Result<Option<GenExpr>> {
    let fld = PrimeField::new(p)?;
    let mut digits = vec![0u32; rank];
    let mut rem = q;
    let mut t = 0usize;
    while rem > 0 {
        if t >= rank {
            return Ok(None);
        }
        digits[t] = (rem % p as u64) as u32;
        rem /= p as u64;
        t += 1;
    }
    let mut coef = 1u32;
    let mut expr = GenExpr::one(p, n)?;
    for t in 0..rank {
        let prev = if t == 0 { 0 } else { digits[t - 1] };
        if digits[t] < prev {
            return Ok(None);
        }
        if t > 0 {
            coef = fld.mul(coef, fld.binom(digits[t] as u64, prev as u64));
        }
        let e = digits[t] - prev;
        if e > 0 {
            expr = expr.mul(
                &GenExpr::symbol(p, n, GenSymbol::D { m: rank, i: t })?.pow(e)?,
            )?;
        }
    }
    if coef == 0 {
        return Ok(None);
    }
    expr = expr.scale(coef as i64);
    if digits[rank - 1] % 2 == 1 {
        expr = expr.scale(-1);
    }
    Ok(Some(expr))
}

/// Closed form for `P^q(d_{n,i}^{p^l})` as a Dickson expression; `None`
/// means the predicted value is zero.
///
/// For `l = 0` and `q = sum_t a_t p^t`: the value is
/// `(-1)^{a_{n-1}} prod_t C(a_t + [t=i], a_{t-1}) prod_t d_{n,t}^{m_t}` with
/// `m_t = a_t - a_{t-1} + [t=i]` and `a_{-1} = 0`, zero whenever some
/// `m_t < 0`, a digit spills past `t = n-1`, or the binomial product
/// vanishes. Higher `l` reduces through `P^{p j}(f^p) = (P^j f)^p`.
pub fn dickson_action_closed(
    p: u32,
    n: usize,
    i: usize,
    l: u32,
    q: u64,
) -> Result<Option<GenExpr>> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("reduced powers P^k"));
    }
    if i >= n {
        return Err(Error::IndexRange(format!("d[{n},{i}]")));
    }
    let fld = PrimeField::new(p)?;
    let d = GenExpr::symbol(p, n, GenSymbol::D { m: n, i })?;
    if q == 0 {
        return Ok(Some(d.pow(p.pow(l))?));
    }
    let pl = (p as u64).pow(l);
    if q % pl != 0 {
        return Ok(None);
    }
    let q0 = q / pl;
    let mut digits = vec![0u32; n];
    let mut rem = q0;
    let mut t = 0usize;
    while rem > 0 {
        if t >= n {
            return Ok(None);
        }
        digits[t] = (rem % p as u64) as u32;
        rem /= p as u64;
        t += 1;
    }
    let mut coef = 1u32;
    let mut mono = GenExpr::one(p, n)?;
    for t in 0..n {
        let prev = if t == 0 { 0 } else { digits[t - 1] };
        let here = digits[t] + u32::from(t == i);
        if here < prev {
            return Ok(None);
        }
        if t > 0 || i == 0 {
            coef = fld.mul(coef, fld.binom(here as u64, prev as u64));
        }
        let e = here - prev;
        if e > 0 {
            mono = mono.mul(
                &GenExpr::symbol(p, n, GenSymbol::D { m: n, i: t })?.pow(e * p.pow(l))?,
            )?;
        }
    }
    if coef == 0 {
        return Ok(None);
    }
    let mut expr = mono.scale(coef as i64);
    if digits[n - 1] % 2 == 1 {
        expr = expr.scale(-1);
    }
    Ok(Some(expr))
}

/// Closed form for `P^m h_n`: zero past the instability bound, `h_n^p` at
/// `m = p^{n-1}`, and `h_n` times the chain factor in `d_{n-1,*}` below it.
pub fn h_action_closed(p: u32, n: usize, m: u64) -> Result<Option<GenExpr>> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("reduced powers P^k"));
    }
    let hn = GenExpr::symbol(p, n, GenSymbol::H { i: n })?;
    if m == 0 {
        return Ok(Some(hn));
    }
    let pn1 = (p as u64).pow(n as u32 - 1);
    if m == pn1 {
        return Ok(Some(hn.pow(p)?));
    }
    if m > pn1 || n == 1 {
        return Ok(None);
    }
    match chain_factor(p, n, n - 1, m)? {
        Some(factor) => Ok(Some(hn.mul(&factor)?)),
        None => Ok(None),
    }
}

/// Closed form for `beta P^m (M_{i,i-1} L_{i-1}^{(p-3)/2})`; `None` means
/// zero. Admissible `m` have the shape
/// `(p^{i-2} + .. + 1) + sum_t a_t (p^{i-2} + .. + p^t)` with
/// `sum a_t <= (p-3)/2`; the value is the multinomial
/// `((p-3)/2; a_0, .., a_{i-2})` times
/// `L_i prod_t L_{i-1,t}^{a_t} L_{i-1}^{(p-3)/2 - sum a}`.
pub fn bockstein_action_closed(p: u32, n: usize, i: usize, m: u64) -> Result<Option<GenExpr>> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("the Bockstein"));
    }
    if i < 1 || i > n {
        return Err(Error::IndexRange(format!("M[{i};{}]", i.saturating_sub(1))));
    }
    let half = (p as u64 - 3) / 2;
    let base: u64 = (0..i.saturating_sub(1)).map(|t| (p as u64).pow(t as u32)).sum();
    if m < base {
        return Ok(None);
    }
    let excess = m - base;
    // Weight of slot t: p^{i-2} + ... + p^t.
    let weights: Vec<u64> = (0..i.saturating_sub(1))
        .map(|t| (t..i - 1).map(|u| (p as u64).pow(u as u32)).sum())
        .collect();
    // Enumerate allocations with sum a <= (p-3)/2; assert uniqueness.
    let mut found: Option<Vec<u64>> = None;
    let mut alloc = vec![0u64; weights.len()];
    // Simple bounded enumeration (slots and budgets are tiny at desk scale).
    fn enumerate(
        weights: &[u64],
        slot: usize,
        target: u64,
        budget: u64,
        alloc: &mut Vec<u64>,
        found: &mut Option<Vec<u64>>,
    ) -> Result<()> {
        if slot == weights.len() {
            if target == 0 {
                if found.is_some() {
                    return Err(Error::Inconsistency(
                        "ambiguous Bockstein digit decomposition".into(),
                    ));
                }
                *found = Some(alloc.clone());
            }
            return Ok(());
        }
        let cap = if weights[slot] == 0 { 0 } else { (target / weights[slot]).min(budget) };
        for a in 0..=cap {
            alloc[slot] = a;
            enumerate(weights, slot + 1, target - a * weights[slot], budget - a, alloc, found)?;
        }
        alloc[slot] = 0;
        Ok(())
    }
    enumerate(&weights, 0, excess, half, &mut alloc, &mut found)?;
    let Some(a) = found else { return Ok(None) };
    let total: u64 = a.iter().sum();
    // Multinomial ((p-3)/2)! / (prod a_t! ((p-3)/2 - total)!) mod p; all
    // arguments are < p at desk scale so the factorials are unit-safe.
    let fld = PrimeField::new(p)?;
    let fact = |v: u64| -> u32 { (1..=v).fold(1u32, |acc, k| fld.mul(acc, (k % p as u64) as u32)) };
    let mut denom = fact(half - total);
    for &at in &a {
        denom = fld.mul(denom, fact(at));
    }
    let coef = fld.mul(fact(half), fld.inv(denom)?);
    let mut expr = GenExpr::symbol(p, n, GenSymbol::L { m: i })?.scale(coef as i64);
    for (t, &at) in a.iter().enumerate() {
        if at > 0 {
            expr = expr.mul(
                &GenExpr::symbol(p, n, GenSymbol::LSub { m: i - 1, i: t })?.pow(at as u32)?,
            )?;
        }
    }
    if half > total {
        expr = expr.mul(
            &GenExpr::symbol(p, n, GenSymbol::L { m: i - 1 })?.pow((half - total) as u32)?,
        )?;
    }
    Ok(Some(expr))
}

/// A mismatch between a brute-force value and a closed form.
#[derive(Debug, Clone)]
pub struct ActionMismatch {
    pub what: String,
    pub brute: SuperPoly,
    pub closed: SuperPoly,
}

/// Compare brute force against `dickson_action_closed`.
pub fn verify_dickson_action(
    p: u32,
    n: usize,
    i: usize,
    l: u32,
    q: u64,
) -> Result<std::result::Result<(), ActionMismatch>> {
    let d = GenExpr::symbol(p, n, GenSymbol::D { m: n, i })?.pow(p.pow(l))?.expand()?;
    let brute = apply_p(q as u32, &d)?;
    let closed = match dickson_action_closed(p, n, i, l, q)? {
        Some(e) => e.expand()?,
        None => SuperPoly::zero(p, n)?,
    };
    Ok(if brute == closed {
        Ok(())
    } else {
        Err(ActionMismatch { what: format!("P^{q} d[{n},{i}]^(p^{l})"), brute, closed })
    })
}

/// Compare brute force against `h_action_closed`.
pub fn verify_h_action(p: u32, n: usize, m: u64) -> Result<std::result::Result<(), ActionMismatch>> {
    let h = GenExpr::symbol(p, n, GenSymbol::H { i: n })?.expand()?;
    let brute = apply_p(m as u32, &h)?;
    let closed = match h_action_closed(p, n, m)? {
        Some(e) => e.expand()?,
        None => SuperPoly::zero(p, n)?,
    };
    Ok(if brute == closed {
        Ok(())
    } else {
        Err(ActionMismatch { what: format!("P^{m} h[{n}]"), brute, closed })
    })
}

/// Compare brute force against `bockstein_action_closed` for
/// `M_{i,i-1} L_{i-1}^{(p-3)/2}`.
pub fn verify_bockstein_action(
    p: u32,
    n: usize,
    i: usize,
    m: u64,
) -> Result<std::result::Result<(), ActionMismatch>> {
    let mcls = GenExpr::symbol(p, n, GenSymbol::M { m: i, s: vec![i - 1] })?;
    let lpow = if i >= 2 {
        GenExpr::symbol(p, n, GenSymbol::L { m: i - 1 })?.pow((p - 3) / 2)?
    } else {
        GenExpr::one(p, n)?
    };
    let f = mcls.mul(&lpow)?.expand()?;
    let brute = apply_beta(&apply_p(m as u32, &f)?)?;
    let closed = match bockstein_action_closed(p, n, i, m)? {
        Some(e) => e.expand()?,
        None => SuperPoly::zero(p, n)?,
    };
    Ok(if brute == closed {
        Ok(())
    } else {
        Err(ActionMismatch { what: format!("beta P^{m} M[{i},{}]L^..", i - 1), brute, closed })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genexpr::{GenExpr, GenSymbol};

    #[test]
    fn basic_p_actions() {
        let p = 3;
        let n = 2;
        let y1 = SuperPoly::var_y(p, n, 1).unwrap();
        // P^0 f = f, P^1 y_1 = y_1^p
        let f = y1.pow(4).unwrap();
        assert_eq!(apply_p(0, &f).unwrap(), f);
        assert_eq!(apply_p(1, &y1).unwrap(), y1.pow(3).unwrap());
        // Instability: P^e(f) = f^p for y-degree e, 0 above.
        let g = y1.pow(2).unwrap().add(&SuperPoly::var_y(p, n, 2).unwrap().pow(2).unwrap()).unwrap();
        assert_eq!(apply_p(2, &g).unwrap(), g.pow(3).unwrap());
        assert!(apply_p(3, &g).unwrap().is_zero());
    }

    #[test]
    fn beta_rules() {
        let p = 3;
        let n = 2;
        let x1 = SuperPoly::var_x(p, n, 1).unwrap();
        let x2 = SuperPoly::var_x(p, n, 2).unwrap();
        let y1 = SuperPoly::var_y(p, n, 1).unwrap();
        let y2 = SuperPoly::var_y(p, n, 2).unwrap();
        assert_eq!(apply_beta(&x1).unwrap(), y1);
        assert!(apply_beta(&y1.pow(3).unwrap()).unwrap().is_zero());
        // beta(x1 x2) = y1 x2 - x1 y2
        let lhs = apply_beta(&x1.mul(&x2).unwrap()).unwrap();
        let rhs = y1.mul(&x2).unwrap().sub(&x1.mul(&y2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        // beta . beta = 0
        assert!(apply_beta(&lhs).unwrap().is_zero());
    }


    #[test]
    fn dickson_action_special_cases() {
        // P^{p^{i-1}} d_{n,i} = d_{n,i-1} and P^{p^{n-1}} d_{n,i} =
        // -d_{n,i} d_{n,n-1} at (p,n,i) = (3,2,1).
        let p = 3;
        let n = 2;
        let d1 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 1 }).unwrap().expand().unwrap();
        let d0 = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 0 }).unwrap().expand().unwrap();
        assert_eq!(apply_p(1, &d1).unwrap(), d0);
        assert_eq!(
            apply_p(3, &d1).unwrap(),
            d1.mul(&d1).unwrap().scale(-1)
        );
        // q outside the admissible shapes gives zero.
        assert!(apply_p(2, &d1).unwrap().is_zero());
    }

    #[test]
    fn h_action_special_cases() {
        // P^{p^{n-1}} h_n = h_n^p at (3,3); zero just past it at (3,2).
        let h3 = GenExpr::symbol(3, 3, GenSymbol::H { i: 3 }).unwrap().expand().unwrap();
        assert_eq!(apply_p(9, &h3).unwrap(), h3.pow(3).unwrap());
        let h2 = GenExpr::symbol(3, 2, GenSymbol::H { i: 2 }).unwrap().expand().unwrap();
        assert!(apply_p(4, &h2).unwrap().is_zero());
    }

    #[test]
    fn bockstein_action_instance() {
        // beta P^1 M_{2,1} = L_2 at p = 3 ((p-3)/2 = 0).
        let p = 3;
        let n = 2;
        let m21 = GenExpr::symbol(p, n, GenSymbol::M { m: 2, s: vec![1] }).unwrap()
            .expand()
            .unwrap();
        let l2 = GenExpr::symbol(p, n, GenSymbol::L { m: 2 }).unwrap().expand().unwrap();
        assert_eq!(apply_beta(&apply_p(1, &m21).unwrap()).unwrap(), l2);
    }

    #[test]
    fn closed_forms_match_brute_force_samples() {
        for q in 0..=10u64 {
            assert!(verify_dickson_action(3, 2, 0, 0, q).unwrap().is_ok(), "q={q}");
            assert!(verify_dickson_action(3, 2, 1, 1, q).unwrap().is_ok(), "q={q}");
        }
        for m in 0..=12u64 {
            assert!(verify_h_action(3, 3, m).unwrap().is_ok(), "m={m}");
        }
        for m in 0..=8u64 {
            assert!(verify_bockstein_action(3, 3, 3, m).unwrap().is_ok(), "m={m}");
        }
    }

    #[test]
    fn steenrod_action_closed_on_p1n1_generators() {
        // P^{p^l} maps {h_1^{p-1}, d_{n,i}(I)} into F_p(1, n-1): membership
        // is invariance under P(1, n-1).
        use crate::glgroup::Composition;
        use crate::invariants::{invariant_under_parabolic, p1n1_polynomial_generators};
        let p = 3;
        let n = 3;
        let comp = Composition::new(vec![1, n - 1]).unwrap();
        for g in p1n1_polynomial_generators(p, n).unwrap() {
            let gexp = g.expand().unwrap();
            assert!(invariant_under_parabolic(&gexp, &comp, false).unwrap());
            for l in [0u32, 1, 2] {
                let img = apply_p(p.pow(l), &gexp).unwrap();
                assert!(
                    invariant_under_parabolic(&img, &comp, false).unwrap(),
                    "P^(3^{l}) of {g} leaves the ring"
                );
            }
        }
    }

    #[test]
    fn cartan_formula_samples() {
        let p = 3;
        let n = 2;
        let h2 = GenExpr::symbol(p, n, GenSymbol::H { i: 2 }).unwrap().expand().unwrap();
        let d = GenExpr::symbol(p, n, GenSymbol::D { m: 2, i: 1 }).unwrap().expand().unwrap();
        for k in 0..=6u32 {
            let lhs = apply_p(k, &h2.mul(&d).unwrap()).unwrap();
            let mut rhs = SuperPoly::zero(p, n).unwrap();
            for i in 0..=k {
                let a = apply_p(i, &h2).unwrap();
                let b = apply_p(k - i, &d).unwrap();
                rhs = rhs.add(&a.mul(&b).unwrap()).unwrap();
            }
            assert_eq!(lhs, rhs, "k={k}");
        }
    }
}
