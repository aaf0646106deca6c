//! Dense Gaussian elimination over `F_p`, shared by the decomposition
//! oracle and the identity solvers.

use crate::field::PrimeField;

/// Solution of a linear system over `F_p`.
pub(crate) struct Solution {
    pub x: Vec<u32>,
    /// Whether the solution is unique (no free columns).
    pub unique: bool,
}

/// Solve `A x = b` over `F_p` where `a` is row-major with `cols` columns.
/// Returns `None` when the system is inconsistent. Free variables are set
/// to zero.
pub(crate) fn solve(p: u32, a: &[Vec<u32>], b: &[u32], cols: usize) -> Option<Solution> {
    let f = PrimeField::new(p).expect("validated prime");
    let rows = a.len();
    debug_assert_eq!(b.len(), rows);
    let mut m: Vec<Vec<u32>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            debug_assert_eq!(row.len(), cols);
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, pr);
        let inv = f.inv(m[rank][col]).expect("nonzero pivot");
        for v in m[rank].iter_mut() {
            *v = f.mul(*v, inv);
        }
        for r in 0..rows {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                for j in col..=cols {
                    let sub = f.mul(factor, m[rank][j]);
                    m[r][j] = f.sub(m[r][j], sub);
                }
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // Inconsistent when a zero row has nonzero rhs.
    for r in m.iter().skip(rank) {
        if r[cols] != 0 {
            return None;
        }
    }
    // Also the rows below rank were never reduced past `break`; recheck all.
    for r in &m {
        if r[..cols].iter().all(|&v| v == 0) && r[cols] != 0 {
            return None;
        }
    }
    let mut x = vec![0u32; cols];
    for (col, &pr) in pivot_of_col.iter().enumerate() {
        if pr != usize::MAX {
            x[col] = m[pr][cols];
        }
    }
    Some(Solution { x, unique: rank == cols })
}

/// Rank of the matrix over `F_p`.
pub(crate) fn rank(p: u32, a: &[Vec<u32>], cols: usize) -> usize {
    let f = PrimeField::new(p).expect("validated prime");
    let mut m: Vec<Vec<u32>> = a.to_vec();
    let rows = m.len();
    let mut rank = 0usize;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, pr);
        let inv = f.inv(m[rank][col]).expect("nonzero pivot");
        for j in col..cols {
            m[rank][j] = f.mul(m[rank][j], inv);
        }
        for r in rank + 1..rows {
            if m[r][col] != 0 {
                let factor = m[r][col];
                for j in col..cols {
                    let sub = f.mul(factor, m[rank][j]);
                    m[r][j] = f.sub(m[r][j], sub);
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_detects_inconsistency() {
        // x + 2y = 1, 2x + 2y = 2 over F_3 -> x = 1, y = 0
        let a = vec![vec![1, 2], vec![2, 2]];
        let s = solve(3, &a, &[1, 2], 2).unwrap();
        assert_eq!(s.x, vec![1, 0]);
        assert!(s.unique);
        // Inconsistent system.
        let a = vec![vec![1, 1], vec![2, 2]];
        assert!(solve(3, &a, &[1, 1], 2).is_none());
        // Underdetermined but consistent.
        let s = solve(3, &a, &[1, 2], 2).unwrap();
        assert!(!s.unique);
    }

    #[test]
    fn rank_works() {
        let a = vec![vec![1, 2, 0], vec![2, 2, 0], vec![0, 0, 0]];
        assert_eq!(rank(3, &a, 3), 2);
    }
}
