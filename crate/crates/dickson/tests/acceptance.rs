//! The acceptance gate: one integration check per stated criterion, each
//! printed as a pass/fail line with its runtime and held to its budget.
//! Everything is exact — the identities hold with tolerance zero or not at
//! all.

use std::time::{Duration, Instant};

use dickson::modbasis::BasisFamily;
use dickson::verify::{
    check_cardinality, check_dickson_mui, check_freeness, check_invariance, check_paradeigma,
    check_sect1_example, check_steenrod_bockstein, check_steenrod_cartan,
    check_steenrod_dickson, check_steenrod_h, check_thm_final, check_thm_main,
    check_transfer_powers, default_degree_bound,
};

const SEED: u64 = 0xD1C6_50;

fn run(name: &str, budget: Duration, check: impl FnOnce() -> Result<(), String>) {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    match &outcome {
        Ok(()) => println!("{name}: PASS ({:.2?})", elapsed),
        Err(e) => println!("{name}: FAIL ({:.2?}) {e}", elapsed),
    }
    assert!(outcome.is_ok(), "{name}: {}", outcome.unwrap_err());
    assert!(
        elapsed <= budget,
        "{name}: took {:.2?}, budget {:.2?}",
        elapsed,
        budget
    );
}

#[test]
fn criterion_1_worked_example() {
    run("criterion 1 (worked example, p=2 n=3)", Duration::from_secs(1), || {
        check_sect1_example()
    });
}

#[test]
fn criterion_2_main_theorem() {
    run("criterion 2 (xi = tau* on F_p(n-1,1))", Duration::from_secs(120), || {
        for (p, n) in [(2, 3), (3, 2), (3, 3), (5, 2)] {
            check_thm_main(p, n, SEED, 50).map_err(|e| format!("(p,n)=({p},{n}): {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_3_power_transfers() {
    run("criterion 3 (tau* on h_1 powers)", Duration::from_secs(60), || {
        for (p, n) in [(3, 2), (3, 3), (2, 3)] {
            check_transfer_powers(p, n).map_err(|e| format!("(p,n)=({p},{n}): {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_4_paradeigma() {
    run("criterion 4 (worked counterexample value)", Duration::from_secs(10), || {
        check_paradeigma()
    });
}

#[test]
fn criterion_5_ideal_agreement() {
    run("criterion 5 (tau-bar* = xi on (d_{n,0}))", Duration::from_secs(120), || {
        check_thm_final(SEED, 20)
    });
}

#[test]
fn criterion_6_dickson_mui_identities() {
    run("criterion 6 (Dickson/Mui identity suite)", Duration::from_secs(120), || {
        for (p, n) in [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)] {
            check_dickson_mui(p, n).map_err(|e| format!("(p,n)=({p},{n}): {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_7_steenrod_suite() {
    run("criterion 7 (Steenrod actions)", Duration::from_secs(180), || {
        for (p, n) in [(3, 2), (3, 3), (5, 2)] {
            check_steenrod_cartan(p, n, SEED, 100)
                .map_err(|e| format!("cartan (p,n)=({p},{n}): {e}"))?;
            check_steenrod_dickson(p, n)
                .map_err(|e| format!("dickson action (p,n)=({p},{n}): {e}"))?;
            check_steenrod_h(p, n).map_err(|e| format!("h action (p,n)=({p},{n}): {e}"))?;
        }
        for (p, n) in [(3, 2), (3, 3)] {
            check_steenrod_bockstein(p, n)
                .map_err(|e| format!("bockstein (p,n)=({p},{n}): {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_8_freeness() {
    run("criterion 8 (free module bases)", Duration::from_secs(180), || {
        let bound = default_degree_bound().max(24);
        for (p, n) in [(2, 3), (3, 2)] {
            for family in [BasisFamily::P1n1, BasisFamily::Pn11] {
                check_freeness(family, p, n, bound)
                    .map_err(|e| format!("{} (p,n)=({p},{n}): {e}", family.name()))?;
            }
        }
        for (p, n) in [(2, 3), (3, 2), (3, 3), (5, 2), (2, 4), (3, 4)] {
            for family in [BasisFamily::P1n1, BasisFamily::Pn11] {
                check_cardinality(family, p, n)
                    .map_err(|e| format!("{} (p,n)=({p},{n}): {e}", family.name()))?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_9_invariance() {
    run("criterion 9 (generator invariance at (3,3))", Duration::from_secs(120), || {
        check_invariance(3, 3)
    });
}
