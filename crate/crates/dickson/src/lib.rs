//! Exact computer algebra in the super-commutative ring
//! `H = E(x_1..x_n) ⊗ F_p[y_1..y_n]` and its rings of invariants.
//!
//! The crate builds the classical objects of modular invariant theory over a
//! prime field — upper-triangular invariants `h_i`, Moore determinants `L_{n,i}`,
//! Dickson generators `d_{n,i}`, Mui classes `M_{n,S}` and their parabolic
//! variants — together with Steenrod reduced powers and the Bockstein, free
//! module bases over the Dickson algebra with a rewriting map `xi`, and the
//! invariant-theoretic transfer computed as an explicit sum over coset
//! representatives of `GL(n, F_p)`.
//!
//! Everything is exact: coefficients live in `F_p` for a prime `2 <= p <= 13`
//! and all identities are checked by full expansion. See the `verify` module
//! for the suite that exercises the main identities at desk scale.

pub mod field;
pub mod genexpr;
pub mod glgroup;
pub mod invariants;
pub(crate) mod linalg;
pub mod modbasis;
pub mod parse;
pub mod steenrod;
pub mod superpoly;
pub mod transfer;
pub mod verify;

pub use field::PrimeField;
pub use genexpr::{GenExpr, GenSymbol};
pub use glgroup::{Composition, CosetFamily, GLMatrix, SubgroupTag};
pub use modbasis::{BasisFamily, Decomposition};
pub use superpoly::{SuperMonomial, SuperPoly};

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not a supported prime (need a prime p with 2 <= p <= 13)")]
    BadPrime(u32),
    #[error("mismatched rings: F_{0} in {1} variables vs F_{2} in {3} variables")]
    Mismatch(u32, usize, u32, usize),
    #[error("exterior generators x_i do not exist for p = 2")]
    ExteriorAtTwo,
    #[error("index out of range: {0}")]
    IndexRange(String),
    #[error("inexact division")]
    InexactDivision,
    #[error("division by zero")]
    DivisionByZero,
    #[error("operand is not purely polynomial")]
    NotPolynomial,
    #[error("matrix is singular mod {0}")]
    Singular(u32),
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("unsupported family or subgroup tag: {0}")]
    UnsupportedFamily(String),
    #[error("unsupported composition {0:?}")]
    UnsupportedComposition(Vec<usize>),
    #[error("{0} requires an odd prime")]
    OddPrimeOnly(&'static str),
    #[error("input is not invariant under {0}")]
    NotInvariant(String),
    #[error("expression mixes raw variables with named generators")]
    MixedExpression,
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
    #[error("rewriting exceeded the iteration cap")]
    RewriteDiverged,
}

pub type Result<T> = std::result::Result<T, Error>;
