//! The invariant-theoretic transfer: the sum of an invariant over coset
//! representatives of `GL(n, F_p)`, together with the verification of its
//! agreement with the rewriting map `xi`.
//!
//! Transfers are computed on fully expanded elements. Inputs invariant
//! under the transposed convention (the hatted world) are handled by
//! conjugating through the antidiagonal involution: the representatives
//! `{w g w}` form a transversal of the conjugated subgroup, so
//! `tau_hat(f) = w(tau(w f))`. The selected convention is logged and
//! reported in the outcome.

use rand::{Rng, SeedableRng};

use crate::genexpr::{GenExpr, GenSymbol};
use crate::glgroup::{coset_reps, gl_generators, is_invariant, CosetFamily, GLMatrix, SubgroupTag};
use crate::invariants::expand_symbol;
use crate::modbasis::{enumerate_basis, xi, BasisFamily};
use crate::superpoly::SuperPoly;
use crate::{Error, Result};

/// Which invariance convention the input matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Invariant under the subgroup itself.
    Plain,
    /// Invariant under the antidiagonal conjugate (the hatted world).
    OmegaConjugated,
}

/// A transfer value together with the convention that produced it.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub value: SuperPoly,
    pub convention: Convention,
}

/// `tau*(f) = sum_g substitute(f, g)` over a full set of left coset
/// representatives. The input must be invariant under the subgroup (in
/// either convention); the output is checked to be `GL`-invariant.
pub fn transfer(f: &SuperPoly, tag: SubgroupTag) -> Result<TransferOutcome> {
    let fam = coset_reps(f.p(), f.n(), tag)?;
    transfer_with_family(f, &fam)
}

/// As `transfer`, but over a caller-supplied representative family (used by
/// the coset-choice independence checks).
pub fn transfer_with_family(f: &SuperPoly, fam: &CosetFamily) -> Result<TransferOutcome> {
    let p = f.p();
    let n = f.n();
    if fam.p != p || fam.n != n {
        return Err(Error::Mismatch(p, n, fam.p, fam.n));
    }
    let gens = fam.tag.generators(p, n)?;
    let (convention, work) = if is_invariant(f, &gens)? {
        (Convention::Plain, f.clone())
    } else {
        let omega = GLMatrix::omega(p, n)?;
        let conj = f.substitute(&omega)?;
        if is_invariant(&conj, &gens)? {
            (Convention::OmegaConjugated, conj)
        } else {
            return Err(Error::NotInvariant(fam.tag.name().to_string()));
        }
    };
    log::debug!("transfer over {}: convention {convention:?}", fam.tag.name());
    let mut acc = SuperPoly::zero(p, n)?;
    for g in &fam.reps {
        acc = acc.add(&work.substitute(g)?)?;
    }
    if convention == Convention::OmegaConjugated {
        let omega = GLMatrix::omega(p, n)?;
        acc = acc.substitute(&omega)?;
    }
    // The coset sum of an invariant is always GL-invariant.
    if !is_invariant(&acc, &gl_generators(p, n)?)? {
        return Err(Error::Inconsistency(format!(
            "transfer over {} produced a non-invariant value",
            fam.tag.name()
        )));
    }
    Ok(TransferOutcome { value: acc, convention })
}

/// Transfer of a formal expression: expand first.
pub fn transfer_genexpr(f: &GenExpr, tag: SubgroupTag) -> Result<TransferOutcome> {
    transfer(&f.expand()?, tag)
}

// ---------------------------------------------------------------------------
// Theorem-level verification
// ---------------------------------------------------------------------------

/// A failed comparison, with both sides fully expanded.
#[derive(Debug, Clone)]
pub struct TransferMismatch {
    pub what: String,
    pub transfer_side: SuperPoly,
    pub xi_side: SuperPoly,
}

pub type Report = std::result::Result<(), TransferMismatch>;

fn mismatch(what: String, t: SuperPoly, x: SuperPoly) -> Report {
    Err(TransferMismatch { what, transfer_side: t, xi_side: x })
}

/// `xi = tau*` for `F_p(n-1, 1)`: every non-unit basis element transfers to
/// zero, the unit transfers to one, and `tau* = expand . xi` on random
/// elements.
pub fn verify_main(p: u32, n: usize, seed: u64, samples: usize) -> Result<Report> {
    let fam = coset_reps(p, n, SubgroupTag::PN11)?;
    let one = SuperPoly::one(p, n)?;
    for b in enumerate_basis(BasisFamily::Pn11, p, n)? {
        let value = transfer_with_family(&b.expand(p, n)?, &fam)?.value;
        if b.is_unit() {
            if value != one {
                return Ok(mismatch(format!("tau*({b}) != 1"), value, one));
            }
        } else if !value.is_zero() {
            return Ok(mismatch(
                format!("tau*({b}) != 0"),
                value,
                SuperPoly::zero(p, n)?,
            ));
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let f = random_pn11_element(p, n, &mut rng)?;
        if f.is_zero() {
            continue;
        }
        let fe = f.expand()?;
        let tau = transfer_with_family(&fe, &fam)?.value;
        let xi_val = xi(&f, BasisFamily::Pn11)?.expand()?;
        if tau != xi_val {
            return Ok(mismatch(format!("tau* != xi on {f}"), tau, xi_val));
        }
    }
    Ok(Ok(()))
}

/// Random element of `F_p(n-1,1)` in its generator symbols, with exponents
/// that exercise the rewriting relations.
pub fn random_pn11_element(
    p: u32,
    n: usize,
    rng: &mut impl Rng,
) -> Result<GenExpr> {
    let mut f = GenExpr::zero(p, n)?;
    let terms = rng.random_range(1..=2);
    for _ in 0..terms {
        let mut mono = GenExpr::scalar(p, n, rng.random_range(1..p) as i64)?;
        for i in 0..n - 1 {
            let e = rng.random_range(0..=p + 1);
            if e > 0 {
                mono = mono.mul(
                    &GenExpr::symbol(p, n, GenSymbol::D { m: n - 1, i })?.pow(e)?,
                )?;
            }
        }
        if rng.random_bool(0.4) {
            mono = mono.mul(&GenExpr::symbol(p, n, GenSymbol::D { m: n, i: n - 1 })?)?;
        }
        f = f.add(&mono)?;
    }
    Ok(f)
}

/// The transfer kills the positive powers `h_1^{(p-1)m}` for `m <= A_1` and
/// sends `h_1^{p^n - 1}` to `(p-1) d_{n,0}`.
pub fn verify_p1n1_powers(p: u32, n: usize) -> Result<Report> {
    let fam = coset_reps(p, n, SubgroupTag::P1N1)?;
    let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
    let h1 = expand_symbol(p, n, &GenSymbol::H { i: 1 })?;
    let one = SuperPoly::one(p, n)?;
    let id = transfer_with_family(&one, &fam)?.value;
    if id != one {
        return Ok(mismatch("tau*(1) != 1".into(), id, one));
    }
    for m in 1..=a1 {
        let f = h1.pow(((p as u64 - 1) * m) as u32)?;
        let value = transfer_with_family(&f, &fam)?.value;
        if !value.is_zero() {
            return Ok(mismatch(
                format!("tau*(h1^((p-1){m})) != 0"),
                value,
                SuperPoly::zero(p, n)?,
            ));
        }
    }
    let f = h1.pow(((p as u64 - 1) * (a1 + 1)) as u32)?;
    let value = transfer_with_family(&f, &fam)?.value;
    // The top power transfers onto (-1)^{n-1} d_{n,0}: the coset sum is one
    // representative per line of V, and the classical power sum over all
    // nonzero vectors is (-1)^n d_{n,0}, off by the factor p-1 = -1. For
    // n = 2 this is the familiar (p-1) d_{n,0}.
    let d0 = expand_symbol(p, n, &GenSymbol::D { m: n, i: 0 })?;
    let sign = if (n - 1) % 2 == 0 { 1 } else { -1 };
    let expect = d0.scale(sign);
    if value != expect {
        return Ok(mismatch(
            format!("tau*(h1^(p^n-1)) != {}d_{{n,0}}", if sign == 1 { "" } else { "-" }),
            value,
            expect,
        ));
    }
    // Independent oracle: the same sum by direct enumeration of canonical
    // line representatives (last nonzero coordinate 1).
    let by_lines = line_power_sum(p, n)?;
    if value != by_lines {
        return Ok(mismatch("coset sum != direct line enumeration".into(), value, by_lines));
    }
    Ok(Ok(()))
}

/// `sum_u u^{p^n - 1}` over one representative per line of `V`.
fn line_power_sum(p: u32, n: usize) -> Result<SuperPoly> {
    let pn = (p as u64).pow(n as u32);
    let mut acc = SuperPoly::zero(p, n)?;
    for code in 1..pn {
        let mut digits = vec![0u32; n];
        let mut c = code;
        for d in digits.iter_mut() {
            *d = (c % p as u64) as u32;
            c /= p as u64;
        }
        let last_nz = (0..n).rev().find(|&i| digits[i] != 0).expect("nonzero");
        if digits[last_nz] != 1 {
            continue;
        }
        let mut u = SuperPoly::zero(p, n)?;
        for (i, &d) in digits.iter().enumerate() {
            if d != 0 {
                u = u.add(&SuperPoly::var_y(p, n, i + 1)?.scale(d as i64))?;
            }
        }
        acc = acc.add(&u.pow((pn - 1) as u32)?)?;
    }
    Ok(acc)
}

/// The worked counterexample and the ideal `(d_{n,0})` agreement:
/// `tau*(M_{1,0} h_1^{p^2-1-p}) = M_{2,1} L_2^{p-2}` over the `U_n` family,
/// and `tau-bar* = xi` on `f * d_{n,0}` for random `f` in the Sylow image.
pub fn verify_exterior_transfer(p: u32, n: usize, seed: u64, samples: usize) -> Result<Report> {
    if p == 2 {
        return Err(Error::OddPrimeOnly("the exterior transfer checks"));
    }
    let fam = coset_reps(p, n, SubgroupTag::Un)?;
    if (p, n) == (3, 2) {
        // tau*(x1 y1^5) = M_{2,1} L_2 over the 16 representatives.
        let f = SuperPoly::var_x(p, n, 1)?
            .mul(&SuperPoly::var_y(p, n, 1)?.pow((p * p - 1 - p) as u32)?)?;
        let tau = transfer_with_family(&f, &fam)?.value;
        let expect = expand_symbol(p, n, &GenSymbol::M { m: 2, s: vec![1] })?
            .mul(&expand_symbol(p, n, &GenSymbol::L { m: 2 })?.pow(p - 2)?)?;
        if tau != expect {
            return Ok(mismatch("Paradeigma value".into(), tau, expect));
        }
    }
    // tau-bar*(d_{n,0}) = d_{n,0}.
    let d0 = (*expand_symbol(p, n, &GenSymbol::D { m: n, i: 0 })?).clone();
    let tau_d0 = transfer_with_family(&d0, &fam)?.value;
    if tau_d0 != d0 {
        return Ok(mismatch("tau*(d_{n,0}) != d_{n,0}".into(), tau_d0, d0));
    }
    // Random f in the Sylow image: tau-bar*(f d_{n,0}) = xi(f d_{n,0}).
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d0_sym = GenExpr::symbol(p, n, GenSymbol::D { m: n, i: 0 })?;
    for _ in 0..samples {
        let f = random_sylow_element(p, n, &mut rng)?;
        if f.is_zero() {
            continue;
        }
        let fd = f.mul(&d0_sym)?;
        let fde = fd.expand()?;
        let tau = transfer_with_family(&fde, &fam)?.value;
        let xi_val = xi(&fd, BasisFamily::SylowImage)?.expand()?;
        if tau != xi_val {
            return Ok(mismatch(format!("tau-bar* != xi on ({f}) * d[{n},0]"), tau, xi_val));
        }
    }
    Ok(Ok(()))
}

/// Random element of the Sylow restriction image `E(G_1..G_n) (x) H_n^t`.
pub fn random_sylow_element(
    p: u32,
    n: usize,
    rng: &mut impl Rng,
) -> Result<GenExpr> {
    let half = (p - 3) / 2;
    let mut f = GenExpr::zero(p, n)?;
    let terms = rng.random_range(1..=2);
    for _ in 0..terms {
        let mut mono = GenExpr::scalar(p, n, rng.random_range(1..p) as i64)?;
        for i in 1..=n {
            if rng.random_bool(0.35) {
                mono = mono.mul(&GenExpr::symbol(
                    p,
                    n,
                    GenSymbol::MHat { m: i, s: vec![i - 1] },
                )?)?;
                if half > 0 && i >= 2 {
                    mono = mono.mul(
                        &GenExpr::symbol(p, n, GenSymbol::LHat { m: i - 1 })?.pow(half)?,
                    )?;
                }
            }
        }
        for i in 1..=n {
            let e = rng.random_range(0..p);
            if e > 0 {
                mono = mono.mul(&GenExpr::symbol(p, n, GenSymbol::HHat { i })?.pow(e)?)?;
            }
        }
        f = f.add(&mono)?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glgroup::{coset_reps_with_polys, find_primitive_poly};

    #[test]
    fn transfer_of_one_over_parabolic_families() {
        // [GL : P] = 1 + p + ... + p^{n-1} = 1 mod p, so tau*(1) = 1.
        for &(p, n) in &[(2u32, 3usize), (3, 2)] {
            let one = SuperPoly::one(p, n).unwrap();
            for tag in [SubgroupTag::P1N1, SubgroupTag::PN11] {
                let out = transfer(&one, tag).unwrap();
                assert_eq!(out.value, one, "(p,n)=({p},{n}) {tag:?}");
            }
        }
    }

    #[test]
    fn rejects_non_invariant_input() {
        let y2 = SuperPoly::var_y(3, 2, 2).unwrap();
        // y_2 is invariant under neither P(1,1) nor its conjugate... but it
        // is U_n^t-invariant, so use the parabolic tag.
        let err = transfer(&y2.pow(1).unwrap(), SubgroupTag::PN11).unwrap_err();
        assert!(matches!(err, Error::NotInvariant(_)));
    }

    #[test]
    fn paradeigma_and_exterior_agreement() {
        let report = verify_exterior_transfer(3, 2, 7, 3).unwrap();
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn main_theorem_small() {
        let report = verify_main(2, 3, 11, 8).unwrap();
        assert!(report.is_ok(), "{report:?}");
        let report = verify_main(3, 2, 11, 8).unwrap();
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn p1n1_power_kill() {
        let report = verify_p1n1_powers(3, 2).unwrap();
        assert!(report.is_ok(), "{report:?}");
        let report = verify_p1n1_powers(2, 3).unwrap();
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn dn_linearity_and_degree() {
        use rand::SeedableRng;
        let p = 3;
        let n = 2;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d1 = GenExpr::symbol(p, n, GenSymbol::D { m: n, i: 1 }).unwrap().expand().unwrap();
        for _ in 0..3 {
            let f = random_pn11_element(p, n, &mut rng).unwrap().expand().unwrap();
            if f.is_zero() {
                continue;
            }
            let lhs = transfer(&f.mul(&d1).unwrap(), SubgroupTag::PN11).unwrap().value;
            let rhs = d1.mul(&transfer(&f, SubgroupTag::PN11).unwrap().value).unwrap();
            assert_eq!(lhs, rhs);
            // degree preservation on homogeneous input
            if let Some(d) = f.homogeneous_degree() {
                let t = transfer(&f, SubgroupTag::PN11).unwrap().value;
                if !t.is_zero() {
                    assert_eq!(t.homogeneous_degree(), Some(d));
                }
            }
        }
    }

    #[test]
    fn coset_choice_independence() {
        // A different primitive polynomial gives the same transfer values.
        let p = 3;
        let n = 2;
        // x^2 + 2x + 2 is the other primitive quadratic over F_3.
        let alt = vec![vec![1u32], vec![2, 2]];
        assert!(crate::glgroup::is_primitive_poly(p, &alt[1]));
        assert_ne!(alt[1], find_primitive_poly(p, 2).unwrap());
        for tag in [SubgroupTag::P1N1, SubgroupTag::PN11, SubgroupTag::Un] {
            let fam_alt = coset_reps_with_polys(p, n, tag, &alt).unwrap();
            fam_alt.validate().unwrap();
        }
        let f = expand_symbol(p, n, &GenSymbol::H { i: 1 })
            .unwrap()
            .pow(8)
            .unwrap();
        let fam1 = coset_reps(p, n, SubgroupTag::P1N1).unwrap();
        let fam2 = coset_reps_with_polys(p, n, SubgroupTag::P1N1, &alt).unwrap();
        assert_eq!(
            transfer_with_family(&f, &fam1).unwrap().value,
            transfer_with_family(&f, &fam2).unwrap().value
        );
        let g = SuperPoly::var_x(p, n, 1)
            .unwrap()
            .mul(&SuperPoly::var_y(p, n, 1).unwrap().pow(5).unwrap())
            .unwrap();
        let fam1 = coset_reps(p, n, SubgroupTag::Un).unwrap();
        let fam2 = coset_reps_with_polys(p, n, SubgroupTag::Un, &alt).unwrap();
        assert_eq!(
            transfer_with_family(&g, &fam1).unwrap().value,
            transfer_with_family(&g, &fam2).unwrap().value
        );
    }

    #[test]
    fn hatted_inputs_use_conjugated_convention() {
        // hhat_1^{(p-1)m} is P(1,n-1)-invariant only through the omega
        // conjugate.
        let p = 3;
        let n = 2;
        let f = expand_symbol(p, n, &GenSymbol::HHat { i: 1 }).unwrap().pow(8).unwrap();
        let out = transfer(&f, SubgroupTag::P1N1).unwrap();
        assert_eq!(out.convention, Convention::OmegaConjugated);
        // The value matches the unhatted computation (it is GL-invariant).
        let g = expand_symbol(p, n, &GenSymbol::H { i: 1 }).unwrap().pow(8).unwrap();
        let out2 = transfer(&g, SubgroupTag::P1N1).unwrap();
        assert_eq!(out.value, out2.value);
    }
}
