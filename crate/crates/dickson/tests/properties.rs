//! Property tests for the ring axioms, substitution, division, and the
//! serialization round trips.

use dickson::glgroup::{gl_generators, GLMatrix};
use dickson::parse::parse_superpoly;
use dickson::superpoly::{SuperMonomial, SuperPoly};
use proptest::prelude::*;

fn arb_poly(p: u32, n: usize, max_terms: usize) -> impl Strategy<Value = SuperPoly> {
    let term = (
        0u32..(1 << n),
        proptest::collection::vec(0u32..5, n),
        1i64..p as i64,
    );
    proptest::collection::vec(term, 0..=max_terms).prop_map(move |terms| {
        let mut f = SuperPoly::zero(p, n).unwrap();
        for (ext_mask, y, c) in terms {
            let ext: Vec<usize> =
                (0..n).filter(|i| ext_mask >> i & 1 == 1).map(|i| i + 1).collect();
            let ext = if p == 2 { Vec::new() } else { ext };
            let m = SuperMonomial::new(n, &ext, y).unwrap();
            f = f
                .add(&SuperPoly::from_terms(p, n, [(m, c)]).unwrap())
                .unwrap();
        }
        f
    })
}

/// Invertible matrices as random words in the GL generators.
fn arb_matrix(p: u32, n: usize) -> impl Strategy<Value = GLMatrix> {
    proptest::collection::vec(0usize..8, 0..6).prop_map(move |word| {
        let gens = gl_generators(p, n).unwrap();
        let mut acc = GLMatrix::identity(p, n).unwrap();
        for w in word {
            acc = acc.mul(&gens[w % gens.len()]).unwrap();
        }
        acc
    })
}

fn homogeneous_parts(f: &SuperPoly) -> Vec<SuperPoly> {
    let mut by_degree: std::collections::BTreeMap<u32, SuperPoly> = Default::default();
    for (m, c) in f.terms() {
        let e = by_degree
            .entry(m.degree())
            .or_insert_with(|| SuperPoly::zero(f.p(), f.n()).unwrap());
        *e = e
            .add(&SuperPoly::from_terms(f.p(), f.n(), [(m.clone(), c as i64)]).unwrap())
            .unwrap();
    }
    by_degree.into_values().collect()
}

macro_rules! ring_axioms {
    ($name:ident, $p:expr, $n:expr) => {
        mod $name {
            use super::*;

            proptest! {
                #![proptest_config(ProptestConfig::with_cases(48))]

                #[test]
                fn associativity(
                    f in arb_poly($p, $n, 3),
                    g in arb_poly($p, $n, 3),
                    h in arb_poly($p, $n, 3),
                ) {
                    let lhs = f.mul(&g).unwrap().mul(&h).unwrap();
                    let rhs = f.mul(&g.mul(&h).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }

                #[test]
                fn distributivity(
                    f in arb_poly($p, $n, 3),
                    g in arb_poly($p, $n, 3),
                    h in arb_poly($p, $n, 3),
                ) {
                    let lhs = f.mul(&g.add(&h).unwrap()).unwrap();
                    let rhs = f.mul(&g).unwrap().add(&f.mul(&h).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }

                #[test]
                fn super_commutativity(
                    f in arb_poly($p, $n, 3),
                    g in arb_poly($p, $n, 3),
                ) {
                    // fg = (-1)^{|f||g|} gf on homogeneous exterior parts;
                    // check through the graded pieces.
                    for fp in homogeneous_parts(&f) {
                        for gp in homogeneous_parts(&g) {
                            let fg = fp.mul(&gp).unwrap();
                            let gf = gp.mul(&fp).unwrap();
                            // the Koszul sign depends on exterior degrees
                            let fe = fp.terms().next().map(|(m, _)| m.ext_count()).unwrap_or(0);
                            let ge = gp.terms().next().map(|(m, _)| m.ext_count()).unwrap_or(0);
                            let all_f = fp.terms().all(|(m, _)| m.ext_count() % 2 == fe % 2);
                            let all_g = gp.terms().all(|(m, _)| m.ext_count() % 2 == ge % 2);
                            if all_f && all_g {
                                let expect = if fe % 2 == 1 && ge % 2 == 1 {
                                    gf.scale(-1)
                                } else {
                                    gf.clone()
                                };
                                prop_assert_eq!(fg, expect);
                            }
                        }
                    }
                }

                #[test]
                fn substitution_is_a_ring_homomorphism(
                    f in arb_poly($p, $n, 3),
                    g in arb_poly($p, $n, 3),
                    a in arb_matrix($p, $n),
                ) {
                    let lhs = f.mul(&g).unwrap().substitute(&a).unwrap();
                    let rhs = f.substitute(&a).unwrap().mul(&g.substitute(&a).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }

                #[test]
                fn substitution_composes_contravariantly(
                    f in arb_poly($p, $n, 2),
                    g in arb_matrix($p, $n),
                    h in arb_matrix($p, $n),
                ) {
                    // substitute(substitute(f, g), h) = substitute(f, h * g)
                    let lhs = f.substitute(&g).unwrap().substitute(&h).unwrap();
                    let rhs = f.substitute(&h.mul(&g).unwrap()).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }

                #[test]
                fn exact_division_inverts_multiplication(
                    f in arb_poly($p, $n, 3),
                    g in arb_poly($p, $n, 3),
                ) {
                    // restrict to polynomial parts
                    let strip = |h: &SuperPoly| {
                        let mut acc = SuperPoly::zero($p, $n).unwrap();
                        for (m, c) in h.terms() {
                            if m.is_polynomial() {
                                acc = acc
                                    .add(&SuperPoly::from_terms($p, $n, [(m.clone(), c as i64)]).unwrap())
                                    .unwrap();
                            }
                        }
                        acc
                    };
                    let f = strip(&f);
                    let g = strip(&g);
                    if !g.is_zero() {
                        let prod = f.mul(&g).unwrap();
                        prop_assert_eq!(prod.exact_div(&g).unwrap(), f);
                    }
                }

                #[test]
                fn serialization_round_trips(f in arb_poly($p, $n, 4)) {
                    // JSON is bit-exact.
                    let js = f.to_json();
                    let back = SuperPoly::from_json(&js).unwrap();
                    prop_assert_eq!(&back, &f);
                    prop_assert_eq!(back.to_json(), js);
                    // The display form reparses to an equal value.
                    let text = f.to_string();
                    let reparsed = parse_superpoly(&text, $p, $n).unwrap();
                    prop_assert_eq!(reparsed, f);
                }
            }
        }
    };
}

ring_axioms!(f2_n3, 2, 3);
ring_axioms!(f3_n2, 3, 2);
ring_axioms!(f3_n3, 3, 3);
ring_axioms!(f5_n2, 5, 2);
