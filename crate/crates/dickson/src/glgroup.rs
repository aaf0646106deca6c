//! Matrices over `F_p`, the lattice `U_n <= B_n <= P(I) <= GL(n, F_p)`,
//! generator sets, and families of coset representatives built from
//! companion matrices of primitive polynomials.
//!
//! Compositions are stored in display order: `Composition::new(vec![1, 2])`
//! is the parabolic `P(1,2)` whose top-left block is 1x1. The flag fixed by
//! `P(I)` is `V^i = <e_1, ..., e_{a_1+...+a_i}>`.

use std::collections::HashSet;
use std::fmt;

use crate::field::{prime_factors, PrimeField};
use crate::superpoly::SuperPoly;
use crate::{Error, Result};

/// Invertible `n x n` matrix over `F_p`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GLMatrix {
    p: u32,
    n: usize,
    a: Vec<u32>,
}

impl GLMatrix {
    pub fn new(p: u32, n: usize, entries: Vec<u32>) -> Result<Self> {
        let f = PrimeField::new(p)?;
        if entries.len() != n * n {
            return Err(Error::IndexRange(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        let a: Vec<u32> = entries.iter().map(|&v| v % p).collect();
        let m = GLMatrix { p, n, a };
        if m.det() == 0 {
            return Err(Error::Singular(p));
        }
        let _ = f;
        Ok(m)
    }

    pub fn from_rows(p: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::IndexRange("matrix is not square".into()));
            }
        }
        Self::new(p, n, rows.iter().flatten().copied().collect())
    }

    pub fn identity(p: u32, n: usize) -> Result<Self> {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Self::new(p, n, a)
    }

    /// The involution with 1's along the antidiagonal.
    pub fn omega(p: u32, n: usize) -> Result<Self> {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + (n - 1 - i)] = 1;
        }
        Self::new(p, n, a)
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
    pub fn entry(&self, i: usize, j: usize) -> u32 {
        self.a[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        (0..self.n).map(|i| self.a[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated")
    }

    pub fn det(&self) -> u32 {
        let f = PrimeField::new(self.p).expect("validated");
        let n = self.n;
        let mut a = self.a.clone();
        let mut det = 1u32;
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r * n + col] != 0);
            let Some(pr) = pivot else { return 0 };
            if pr != col {
                for j in 0..n {
                    a.swap(pr * n + j, col * n + j);
                }
                det = f.neg(det);
            }
            let inv = f.inv(a[col * n + col]).expect("nonzero pivot");
            det = f.mul(det, a[col * n + col]);
            for r in col + 1..n {
                let factor = f.mul(a[r * n + col], inv);
                if factor == 0 {
                    continue;
                }
                for j in col..n {
                    let v = f.sub(a[r * n + j], f.mul(factor, a[col * n + j]));
                    a[r * n + j] = v;
                }
            }
        }
        det
    }

    pub fn mul(&self, other: &GLMatrix) -> Result<GLMatrix> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Mismatch(self.p, self.n, other.p, other.n));
        }
        let f = self.field();
        let n = self.n;
        let mut out = vec![0u32; n * n];
        for i in 0..n {
            for k in 0..n {
                let v = self.a[i * n + k];
                if v == 0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] = f.add(out[i * n + j], f.mul(v, other.a[k * n + j]));
                }
            }
        }
        GLMatrix::new(self.p, n, out)
    }

    pub fn inv(&self) -> GLMatrix {
        let f = self.field();
        let n = self.n;
        let mut a = self.a.clone();
        let mut b = GLMatrix::identity(self.p, n).expect("identity").a;
        for col in 0..n {
            let pr = (col..n).find(|&r| a[r * n + col] != 0).expect("invertible");
            if pr != col {
                for j in 0..n {
                    a.swap(pr * n + j, col * n + j);
                    b.swap(pr * n + j, col * n + j);
                }
            }
            let inv = f.inv(a[col * n + col]).expect("pivot");
            for j in 0..n {
                a[col * n + j] = f.mul(a[col * n + j], inv);
                b[col * n + j] = f.mul(b[col * n + j], inv);
            }
            for r in 0..n {
                if r == col || a[r * n + col] == 0 {
                    continue;
                }
                let factor = a[r * n + col];
                for j in 0..n {
                    a[r * n + j] = f.sub(a[r * n + j], f.mul(factor, a[col * n + j]));
                    b[r * n + j] = f.sub(b[r * n + j], f.mul(factor, b[col * n + j]));
                }
            }
        }
        GLMatrix { p: self.p, n, a: b }
    }

    pub fn transpose(&self) -> GLMatrix {
        let n = self.n;
        let mut a = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[j * n + i] = self.a[i * n + j];
            }
        }
        GLMatrix { p: self.p, n, a }
    }

    pub fn pow(&self, e: u64) -> GLMatrix {
        let mut acc = GLMatrix::identity(self.p, self.n).expect("identity");
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same ring");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same ring");
            }
        }
        acc
    }

    pub fn scale(&self, c: u32) -> Result<GLMatrix> {
        let f = self.field();
        if c % self.p == 0 {
            return Err(Error::Singular(self.p));
        }
        GLMatrix::new(self.p, self.n, self.a.iter().map(|&v| f.mul(v, c)).collect())
    }

    /// Canonical representative of the scalar class: scale so the first
    /// nonzero entry of the first column is 1.
    pub fn scalar_normalize(&self) -> GLMatrix {
        let f = self.field();
        let lead = (0..self.n).map(|i| self.entry(i, 0)).find(|&v| v != 0).expect("invertible");
        self.scale(f.inv(lead).expect("nonzero")).expect("unit scalar")
    }

    /// Conjugate by the antidiagonal involution: `w * self * w`.
    pub fn omega_conjugate(&self) -> GLMatrix {
        let n = self.n;
        let mut a = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[(n - 1 - i) * n + (n - 1 - j)] = self.a[i * n + j];
            }
        }
        GLMatrix { p: self.p, n, a }
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            self.entry(i, i) == 1 && (0..i).all(|j| self.entry(i, j) == 0)
        })
    }

    pub fn is_upper_triangular(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| self.entry(i, j) == 0))
    }

    /// Membership in the block-upper parabolic attached to `comp`.
    pub fn is_block_upper(&self, comp: &Composition) -> bool {
        if comp.n() != self.n {
            return false;
        }
        let flags = comp.flags();
        // Entry (i, j) below the block diagonal must vanish: i >= nu_k > j
        // for some flag dimension nu_k.
        for &nu in &flags {
            for i in nu..self.n {
                for j in 0..nu {
                    if self.entry(i, j) != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether `g` fixes every flag subspace `V^i = <e_1..e_{nu_i}>` of the
    /// composition, i.e. `g(V^i) = V^i`.
    pub fn fixes_flag(&self, comp: &Composition) -> bool {
        // The columns 0..nu of g span g(V^nu); the flag is fixed exactly when
        // those columns have support in the first nu coordinates.
        self.is_block_upper(comp)
    }

    pub fn to_rows_json(&self) -> String {
        serde_json::to_string(&self.rows()).expect("serialization cannot fail")
    }

    pub fn from_rows_json(p: u32, s: &str) -> Result<GLMatrix> {
        let rows: Vec<Vec<u32>> =
            serde_json::from_str(s).map_err(|e| Error::Parse { offset: 0, msg: e.to_string() })?;
        GLMatrix::from_rows(p, &rows)
    }
}

impl fmt::Display for GLMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rows_json())
    }
}

/// Ordered block sizes of a parabolic subgroup, top-left block first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition {
    parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|&a| a == 0) {
            return Err(Error::UnsupportedComposition(parts));
        }
        Ok(Composition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Proper flag dimensions `nu_1 < ... < nu_{l-1}` (excluding `n`).
    pub fn flags(&self) -> Vec<usize> {
        let mut acc = 0;
        self.parts[..self.parts.len() - 1]
            .iter()
            .map(|&a| {
                acc += a;
                acc
            })
            .collect()
    }

    /// All partial sums `nu_1 < ... < nu_l = n`.
    pub fn nus(&self) -> Vec<usize> {
        let mut acc = 0;
        self.parts
            .iter()
            .map(|&a| {
                acc += a;
                acc
            })
            .collect()
    }
}

fn elem_matrix(p: u32, n: usize, r: usize, c: usize) -> GLMatrix {
    let mut a = vec![0; n * n];
    for i in 0..n {
        a[i * n + i] = 1;
    }
    a[r * n + c] = 1;
    GLMatrix::new(p, n, a).expect("transvection is invertible")
}

fn cycle_matrix(p: u32, n: usize, lo: usize, hi: usize) -> GLMatrix {
    // Permutation cycling coordinates lo..=hi.
    let mut a = vec![0; n * n];
    for i in 0..n {
        if i < lo || i > hi {
            a[i * n + i] = 1;
        }
    }
    for j in lo..=hi {
        let i = if j == hi { lo } else { j + 1 };
        a[i * n + j] = 1;
    }
    GLMatrix::new(p, n, a).expect("permutation is invertible")
}

/// A finite generating set of the parabolic `P(I)` (block upper-triangular),
/// or of its transpose: per diagonal block a primitive-root diagonal, and
/// for blocks of size >= 2 a transvection pair and a cycle; plus every
/// cross-block transvection above the diagonal.
pub fn parabolic_generators(p: u32, comp: &Composition, transposed: bool) -> Result<Vec<GLMatrix>> {
    let f = PrimeField::new(p)?;
    let n = comp.n();
    let g = f.primitive_root();
    let mut gens = Vec::new();
    let mut start = 0usize;
    for &size in comp.parts() {
        // diag(1, .., g, .., 1) with g leading the block
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = if i == start { g } else { 1 };
        }
        if g != 1 {
            gens.push(GLMatrix::new(p, n, a)?);
        }
        if size >= 2 {
            gens.push(elem_matrix(p, n, start, start + 1));
            gens.push(elem_matrix(p, n, start + 1, start));
            if size >= 3 {
                gens.push(cycle_matrix(p, n, start, start + size - 1));
            }
        }
        start += size;
    }
    // Cross-block transvections.
    let mut block_of = vec![0usize; n];
    {
        let mut b = 0;
        let mut upto = comp.parts()[0];
        for (i, slot) in block_of.iter_mut().enumerate() {
            while i >= upto {
                b += 1;
                upto += comp.parts()[b];
            }
            *slot = b;
        }
    }
    for r in 0..n {
        for c in r + 1..n {
            if block_of[r] != block_of[c] {
                gens.push(elem_matrix(p, n, r, c));
            }
        }
    }
    if gens.is_empty() {
        // p = 2 with all blocks of size 1: the trivial group.
        gens.push(GLMatrix::identity(p, n)?);
    }
    if transposed {
        gens = gens.into_iter().map(|m| m.transpose()).collect();
    }
    Ok(gens)
}

/// Generators of the full `GL(n, F_p)`.
pub fn gl_generators(p: u32, n: usize) -> Result<Vec<GLMatrix>> {
    parabolic_generators(p, &Composition::new(vec![n])?, false)
}

/// Generators of the unipotent upper-triangular group `U_n` (or `U_n^t`).
pub fn unitriangular_generators(p: u32, n: usize, transposed: bool) -> Result<Vec<GLMatrix>> {
    PrimeField::new(p)?;
    let mut gens = Vec::new();
    for r in 0..n {
        for c in r + 1..n {
            let m = elem_matrix(p, n, r, c);
            gens.push(if transposed { m.transpose() } else { m });
        }
    }
    if gens.is_empty() {
        gens.push(GLMatrix::identity(p, n)?);
    }
    Ok(gens)
}

/// Generators of the Borel subgroup `B_n` (upper triangular).
pub fn borel_generators(p: u32, n: usize, transposed: bool) -> Result<Vec<GLMatrix>> {
    parabolic_generators(p, &Composition::new(vec![1; n])?, transposed)
}

// ---------------------------------------------------------------------------
// Primitive polynomials and companion matrices
// ---------------------------------------------------------------------------

/// Multiply polynomials mod (f, p) where `f` is monic of degree n given by
/// its low coefficients `c[0..n]`.
fn polymulmod(a: &[u32], b: &[u32], c: &[u32], p: u32) -> Vec<u32> {
    let f = PrimeField::new(p).expect("checked");
    let n = c.len();
    let mut prod = vec![0u32; 2 * n];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = f.add(prod[i + j], f.mul(ai, bj));
        }
    }
    // Reduce: x^n = -c
    for k in (n..2 * n).rev() {
        let v = prod[k];
        if v == 0 {
            continue;
        }
        prod[k] = 0;
        for (j, &cj) in c.iter().enumerate() {
            prod[k - n + j] = f.sub(prod[k - n + j], f.mul(v, cj));
        }
    }
    prod.truncate(n);
    prod
}

fn x_pow_mod(e: u64, c: &[u32], p: u32) -> Vec<u32> {
    let n = c.len();
    let mut acc = vec![0u32; n];
    acc[0] = 1;
    if n == 0 {
        return acc;
    }
    let mut base = vec![0u32; n];
    if n == 1 {
        // x = -c0
        base[0] = PrimeField::new(p).expect("checked").neg(c[0]);
    } else {
        base[1] = 1;
    }
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = polymulmod(&acc, &base, c, p);
        }
        e >>= 1;
        if e > 0 {
            base = polymulmod(&base, &base, c, p);
        }
    }
    acc
}

/// Whether the root of the monic polynomial with low coefficients `c` has
/// multiplicative order exactly `p^n - 1`.
pub fn is_primitive_poly(p: u32, c: &[u32]) -> bool {
    let n = c.len() as u32;
    let order = (p as u64).pow(n) - 1;
    let one = {
        let mut v = vec![0u32; c.len()];
        v[0] = 1;
        v
    };
    if x_pow_mod(order, c, p) != one {
        return false;
    }
    for q in prime_factors(order) {
        if x_pow_mod(order / q, c, p) == one {
            return false;
        }
    }
    true
}

/// The lexicographically smallest (by coefficient vector `c_0, .., c_{n-1}`)
/// monic primitive polynomial of degree `n` over `F_p`.
pub fn find_primitive_poly(p: u32, n: usize) -> Result<Vec<u32>> {
    PrimeField::new(p)?;
    if n == 0 || n > 6 {
        return Err(Error::IndexRange(format!("degree {n} out of supported range")));
    }
    let mut c = vec![0u32; n];
    loop {
        if is_primitive_poly(p, &c) {
            return Ok(c);
        }
        // Lexicographic successor with c_{n-1} least significant.
        let mut k = n;
        loop {
            if k == 0 {
                return Err(Error::Inconsistency(format!(
                    "no primitive polynomial of degree {n} over F_{p}"
                )));
            }
            k -= 1;
            c[k] += 1;
            if c[k] < p {
                break;
            }
            c[k] = 0;
        }
    }
}

/// Companion matrix of a monic polynomial: subdiagonal 1's, last column
/// `-c_0, .., -c_{n-1}`.
pub fn companion_matrix(p: u32, c: &[u32]) -> Result<GLMatrix> {
    let f = PrimeField::new(p)?;
    let n = c.len();
    if n == 0 {
        return Err(Error::IndexRange("empty polynomial".into()));
    }
    if c[0] % p == 0 {
        return Err(Error::Singular(p));
    }
    let mut a = vec![0u32; n * n];
    for i in 1..n {
        a[i * n + (i - 1)] = 1;
    }
    for i in 0..n {
        a[i * n + (n - 1)] = f.neg(c[i]);
    }
    GLMatrix::new(p, n, a)
}

/// The automorphism of `V = <y_1..y_n>` acting as multiplication by a
/// primitive root on the last `m` coordinates (identified with `F_{p^m}` via
/// `sigma^i -> y_{n-i}`) and fixing `y_1..y_{n-m}`.
pub fn nested_field_action(p: u32, n: usize, m: usize, prpoly: &[u32]) -> Result<GLMatrix> {
    if m == 0 || m > n || prpoly.len() != m {
        return Err(Error::IndexRange(format!("nested size {m} with n = {n}")));
    }
    let small = companion_matrix(p, prpoly)?.omega_conjugate();
    let mut a = vec![0u32; n * n];
    let off = n - m;
    for i in 0..off {
        a[i * n + i] = 1;
    }
    for i in 0..m {
        for j in 0..m {
            a[(off + i) * n + (off + j)] = small.entry(i, j);
        }
    }
    GLMatrix::new(p, n, a)
}

// ---------------------------------------------------------------------------
// Coset representative families
// ---------------------------------------------------------------------------

/// Subgroups for which coset transversals are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubgroupTag {
    /// `P(1, n-1)`: stabilizer of the line `<e_1>`.
    P1N1,
    /// `P(n-1, 1)`: stabilizer of the hyperplane `<e_1..e_{n-1}>`.
    PN11,
    /// Unipotent upper-triangular `U_n`.
    Un,
}

impl SubgroupTag {
    pub fn name(&self) -> &'static str {
        match self {
            SubgroupTag::P1N1 => "P(1,n-1)",
            SubgroupTag::PN11 => "P(n-1,1)",
            SubgroupTag::Un => "U_n",
        }
    }

    /// Index of the subgroup in `GL(n, F_p)`.
    pub fn index(&self, p: u32, n: usize) -> u64 {
        let pn = (p as u64).pow(n as u32);
        match self {
            SubgroupTag::P1N1 | SubgroupTag::PN11 => (pn - 1) / (p as u64 - 1),
            SubgroupTag::Un => (1..=n as u32).map(|m| (p as u64).pow(m) - 1).product(),
        }
    }

    /// Membership test for the subgroup itself.
    pub fn contains(&self, g: &GLMatrix) -> bool {
        let n = g.n();
        match self {
            SubgroupTag::P1N1 => (1..n).all(|i| g.entry(i, 0) == 0),
            SubgroupTag::PN11 => (0..n - 1).all(|j| g.entry(n - 1, j) == 0),
            SubgroupTag::Un => g.is_upper_unitriangular(),
        }
    }

    /// Generators of the subgroup (untransposed convention).
    pub fn generators(&self, p: u32, n: usize) -> Result<Vec<GLMatrix>> {
        match self {
            SubgroupTag::P1N1 => {
                parabolic_generators(p, &Composition::new(vec![1, n - 1])?, false)
            }
            SubgroupTag::PN11 => {
                parabolic_generators(p, &Composition::new(vec![n - 1, 1])?, false)
            }
            SubgroupTag::Un => unitriangular_generators(p, n, false),
        }
    }
}

/// A full set of left coset representatives for `GL(n, F_p)` over a subgroup.
#[derive(Debug, Clone)]
pub struct CosetFamily {
    pub tag: SubgroupTag,
    pub p: u32,
    pub n: usize,
    pub reps: Vec<GLMatrix>,
}

impl CosetFamily {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Exhaustive pairwise check that representatives lie in distinct left
    /// cosets, plus the index count.
    pub fn validate(&self) -> Result<()> {
        let expect = self.tag.index(self.p, self.n);
        if self.reps.len() as u64 != expect {
            return Err(Error::Inconsistency(format!(
                "{}: {} representatives, index is {expect}",
                self.tag.name(),
                self.reps.len()
            )));
        }
        for i in 0..self.reps.len() {
            for j in i + 1..self.reps.len() {
                let q = self.reps[i].inv().mul(&self.reps[j])?;
                if self.tag.contains(&q) {
                    return Err(Error::Inconsistency(format!(
                        "{}: representatives {i} and {j} share a coset",
                        self.tag.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coset representatives using the lexicographically smallest primitive
/// polynomials.
pub fn coset_reps(p: u32, n: usize, tag: SubgroupTag) -> Result<CosetFamily> {
    let polys: Vec<Vec<u32>> =
        (1..=n).map(|m| find_primitive_poly(p, m)).collect::<Result<_>>()?;
    coset_reps_with_polys(p, n, tag, &polys)
}

/// Coset representatives from caller-supplied primitive polynomials, one per
/// degree `1..=n`. Results of transfer computations must not depend on the
/// choice.
pub fn coset_reps_with_polys(
    p: u32,
    n: usize,
    tag: SubgroupTag,
    polys: &[Vec<u32>],
) -> Result<CosetFamily> {
    let f = PrimeField::new(p)?;
    if polys.len() < n || polys[n - 1].len() != n {
        return Err(Error::IndexRange("need primitive polynomials of degree 1..=n".into()));
    }
    let top = nested_field_action(p, n, n, &polys[n - 1])?;
    let reps = match tag {
        SubgroupTag::P1N1 | SubgroupTag::PN11 => {
            let idx = tag.index(p, n);
            let mut reps = Vec::with_capacity(idx as usize);
            let mut power = GLMatrix::identity(p, n)?;
            for _ in 0..idx {
                let rep = match tag {
                    SubgroupTag::P1N1 => power.inv(),
                    SubgroupTag::PN11 => power.transpose(),
                    SubgroupTag::Un => unreachable!(),
                };
                reps.push(rep.scalar_normalize());
                power = power.mul(&top)?;
            }
            // Index congruence that justifies transfer(1) = 1.
            debug_assert_eq!(idx % p as u64, 1);
            reps
        }
        SubgroupTag::Un => {
            let mut reps = vec![GLMatrix::identity(p, n)?];
            for m in 1..=n {
                let a_m = nested_field_action(p, n, m, &polys[m - 1])?;
                let count = (p as u64).pow(m as u32) - 1; // exponents 0..=p^m-2
                let mut next = Vec::with_capacity(reps.len() * count as usize);
                let mut power = GLMatrix::identity(p, n)?;
                let mut inv_powers = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    inv_powers.push(power.inv());
                    power = power.mul(&a_m)?;
                }
                // Left factor runs over the larger field: (A_n^{i_n})^{-1} ... (A_1^{i_1})^{-1}
                for left in &inv_powers {
                    for r in &reps {
                        next.push(left.mul(r)?);
                    }
                }
                reps = next;
            }
            let expect = tag.index(p, n);
            if reps.len() as u64 != expect {
                return Err(Error::Inconsistency(format!(
                    "U_n family has {} reps, expected {expect}",
                    reps.len()
                )));
            }
            let _ = f;
            reps
        }
    };
    Ok(CosetFamily { tag, p, n, reps })
}

/// True iff `substitute(f, g) = f` for every generator `g`.
pub fn is_invariant(f: &SuperPoly, gens: &[GLMatrix]) -> Result<bool> {
    for g in gens {
        if &f.substitute(g)? != f {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Order of the group generated by `gens`, by orbit enumeration. Desk scale
/// only; used as a generation certificate in tests.
pub fn generated_group_order(p: u32, n: usize, gens: &[GLMatrix]) -> Result<u64> {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let id = GLMatrix::identity(p, n)?;
    let mut frontier = vec![id.clone()];
    seen.insert(id.a.clone());
    while let Some(g) = frontier.pop() {
        for h in gens {
            let gh = g.mul(h)?;
            if seen.insert(gh.a.clone()) {
                frontier.push(gh);
            }
        }
    }
    Ok(seen.len() as u64)
}

/// `|GL(n, F_p)|`.
pub fn gl_order(p: u32, n: usize) -> u64 {
    let pn = (p as u64).pow(n as u32);
    (0..n as u32).map(|i| pn - (p as u64).pow(i)).product()
}

/// `|P(I)|` for a composition of `n`.
pub fn parabolic_order(p: u32, comp: &Composition) -> u64 {
    let n = comp.n();
    // Unipotent radical has p^(number of above-diagonal cross-block entries).
    let mut cross = 0usize;
    let nus = comp.nus();
    let mut start = 0usize;
    for (b, &size) in comp.parts().iter().enumerate() {
        let above = n - nus[b];
        cross += size * above;
        start += size;
    }
    let _ = start;
    comp.parts().iter().map(|&a| gl_order(p, a)).product::<u64>()
        * (p as u64).pow(cross as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse() {
        let m = GLMatrix::from_rows(3, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(m.det(), 2);
        let mi = m.inv();
        assert_eq!(m.mul(&mi).unwrap(), GLMatrix::identity(3, 2).unwrap());
        assert_eq!(mi, GLMatrix::from_rows(3, &[vec![1, 1], vec![1, 0]]).unwrap());
    }

    #[test]
    fn singular_rejected() {
        assert!(matches!(
            GLMatrix::from_rows(3, &[vec![1, 2], vec![2, 4]]),
            Err(Error::Singular(3))
        ));
    }

    #[test]
    fn primitive_polys() {
        // Paper's example: Pr_2(x) = 2 + x + x^2 over F_3.
        assert_eq!(find_primitive_poly(3, 2).unwrap(), vec![2, 1]);
        // Only option for (2, 1) is x + 1.
        assert_eq!(find_primitive_poly(2, 1).unwrap(), vec![1]);
        // Root order check across the small grid.
        for &(p, n) in &[(2u32, 3usize), (3, 2), (3, 3), (5, 2), (2, 4)] {
            let c = find_primitive_poly(p, n).unwrap();
            assert!(is_primitive_poly(p, &c), "(p,n)=({p},{n})");
        }
    }

    #[test]
    fn companion_satisfies_its_polynomial() {
        // A_2 for Pr_2 = 2 + x + x^2 over F_3, as in the worked example.
        let c = find_primitive_poly(3, 2).unwrap();
        let a = companion_matrix(3, &c).unwrap();
        assert_eq!(a, GLMatrix::from_rows(3, &[vec![0, 1], vec![1, 2]]).unwrap());
        // Pr_n(A_n) = 0 for (p, n) = (2, 3).
        let c = find_primitive_poly(2, 3).unwrap();
        let a = companion_matrix(2, &c).unwrap();
        let f = PrimeField::new(2).unwrap();
        let n = 3;
        let mut acc = vec![0u32; n * n]; // c_0 I + c_1 A + c_2 A^2 + A^3
        for (e, &coef) in c.iter().chain(std::iter::once(&1)).enumerate() {
            let pw = a.pow(e as u64);
            for i in 0..n * n {
                acc[i] = f.add(acc[i], f.mul(coef, pw.a[i]));
            }
        }
        assert!(acc.iter().all(|&v| v == 0));
    }

    #[test]
    fn coset_families_validate() {
        for &(p, n) in &[(2u32, 2usize), (2, 3), (3, 2)] {
            for tag in [SubgroupTag::P1N1, SubgroupTag::PN11, SubgroupTag::Un] {
                let fam = coset_reps(p, n, tag).unwrap();
                fam.validate().unwrap_or_else(|e| panic!("(p,n)=({p},{n}) {tag:?}: {e}"));
            }
        }
        // Counts quoted in the build contract.
        assert_eq!(coset_reps(3, 2, SubgroupTag::P1N1).unwrap().len(), 4);
        assert_eq!(coset_reps(2, 3, SubgroupTag::Un).unwrap().len(), 21);
        assert_eq!(coset_reps(2, 2, SubgroupTag::P1N1).unwrap().len(), 3);
        assert_eq!(coset_reps(3, 2, SubgroupTag::Un).unwrap().len(), 16);
    }

    #[test]
    fn parabolic_generators_fix_flags_and_generate() {
        for parts in [vec![3], vec![1, 2], vec![2, 1], vec![1, 1, 1]] {
            let comp = Composition::new(parts.clone()).unwrap();
            for p in [2u32, 3] {
                let gens = parabolic_generators(p, &comp, false).unwrap();
                for g in &gens {
                    assert!(g.fixes_flag(&comp), "p={p} parts={parts:?} g={g}");
                }
                let order = generated_group_order(p, 3, &gens).unwrap();
                assert_eq!(order, parabolic_order(p, &comp), "p={p} parts={parts:?}");
            }
        }
    }

    #[test]
    fn unitriangular_group_order() {
        for p in [2u32, 3] {
            let gens = unitriangular_generators(p, 3, false).unwrap();
            assert_eq!(generated_group_order(p, 3, &gens).unwrap(), (p as u64).pow(3));
        }
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = GLMatrix::from_rows(5, &[vec![1, 2], vec![3, 4]]).unwrap();
        let s = m.to_rows_json();
        assert_eq!(GLMatrix::from_rows_json(5, &s).unwrap(), m);
    }
}
