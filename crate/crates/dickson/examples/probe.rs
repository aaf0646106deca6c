// scratch experiment (deleted before ship)
use dickson::genexpr::{GenExpr, GenSymbol};
use dickson::invariants::expand_symbol;
use dickson::modbasis::{xi, BasisFamily};
use dickson::superpoly::SuperPoly;

fn main() {
    for (p, n) in [(3u32, 2usize), (3, 3), (2, 3), (5, 2)] {
        let pn = (p as u64).pow(n as u32);
        let e = (pn - 1) as u32;
        // tau* = sum over one representative per line of u^(p^n - 1),
        // enumerated directly: reps u with last nonzero coordinate = 1.
        let mut acc = SuperPoly::zero(p, n).unwrap();
        for code in 1..pn {
            let mut digits = vec![0u32; n];
            let mut c = code;
            for d in digits.iter_mut() {
                *d = (c % p as u64) as u32;
                c /= p as u64;
            }
            // canonical line rep: last nonzero digit == 1
            let last_nz = (0..n).rev().find(|&i| digits[i] != 0).unwrap();
            if digits[last_nz] != 1 {
                continue;
            }
            let mut u = SuperPoly::zero(p, n).unwrap();
            for (i, &d) in digits.iter().enumerate() {
                if d != 0 {
                    u = u.add(&SuperPoly::var_y(p, n, i + 1).unwrap().scale(d as i64)).unwrap();
                }
            }
            acc = acc.add(&u.pow(e).unwrap()).unwrap();
        }
        let d0 = (*expand_symbol(p, n, &GenSymbol::D { m: n, i: 0 }).unwrap()).clone();
        let plus = acc == d0;
        let minus = acc == d0.scale(-1);
        println!("(p,n)=({p},{n}): sum over lines of u^(p^n-1): +d0={plus} -d0={minus}");
        // xi route
        let a1: u64 = (1..n).map(|t| (p as u64).pow(t as u32)).sum();
        let h1 = GenExpr::symbol(p, n, GenSymbol::H { i: 1 }).unwrap();
        let f = h1.pow(((p as u64 - 1) * (a1 + 1)) as u32).unwrap();
        let x = xi(&f, BasisFamily::P1n1).unwrap();
        println!("                xi(h1^(p^n-1)) = {x}");
    }
}
