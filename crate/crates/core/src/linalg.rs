//! Exact rational linear algebra for the geometry layer.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Q = BigRational;

/// Row-reduces `m` in place and returns the pivot columns.
fn row_reduce(m: &mut [Vec<Q>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Q::one() / &m[row][col];
        for v in m[row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..m[r].len() {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    let Some(ncols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut m = rows.to_vec();
    row_reduce(&mut m, ncols).len()
}

/// Affine dimension of a point set (−1 for the empty set is reported as 0).
pub fn affine_dimension(points: &[Vec<Q>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    rank(&diffs)
}

pub enum Solution {
    Unique(Vec<Q>),
    Inconsistent,
    Underdetermined,
}

/// Solves `A x = b` for a possibly non-square `A` given as rows.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Solution {
    let ncols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = row_reduce(&mut m, ncols);
    for row in m.iter().skip(pivots.len()) {
        if !row[ncols].is_zero() {
            return Solution::Inconsistent;
        }
    }
    if pivots.len() < ncols {
        return Solution::Underdetermined;
    }
    Solution::Unique((0..ncols).map(|i| m[i][ncols].clone()).collect())
}

/// Decides whether `point` is a convex combination of `others` with an exact
/// phase-one simplex method (Bland's rule, so it terminates).
pub fn in_convex_hull(point: &[Q], others: &[Vec<Q>]) -> bool {
    if others.is_empty() {
        return false;
    }
    let k = others.len();
    let d = point.len();
    let m = d + 1;
    // Rows: coordinates then the affine row; columns: λ (k) then artificials (m), then rhs.
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for r in 0..m {
        let mut row = vec![Q::zero(); k + m + 1];
        for (j, q) in others.iter().enumerate() {
            row[j] = if r < d { q[r].clone() } else { Q::one() };
        }
        let mut rhs = if r < d { point[r].clone() } else { Q::one() };
        if rhs.is_negative() {
            for v in row.iter_mut().take(k) {
                *v = -v.clone();
            }
            rhs = -rhs;
        }
        row[k + r] = Q::one();
        row[k + m] = rhs;
        t.push(row);
    }
    // Objective row: minimise the sum of artificials, written in reduced form.
    let mut obj = vec![Q::zero(); k + m + 1];
    for row in &t {
        for c in 0..k {
            obj[c] -= &row[c];
        }
        obj[k + m] -= &row[k + m];
    }
    t.push(obj);
    let mut basis: Vec<usize> = (k..k + m).collect();
    loop {
        let Some(enter) = (0..k + m).find(|&c| t[m][c].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..m {
            if t[r][enter].is_positive() {
                let ratio = &t[r][k + m] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else {
            break;
        };
        let inv = Q::one() / &t[pr][enter];
        for v in t[pr].iter_mut() {
            *v *= &inv;
        }
        for r in 0..=m {
            if r != pr && !t[r][enter].is_zero() {
                let factor = t[r][enter].clone();
                for c in 0..=k + m {
                    let delta = &factor * &t[pr][c];
                    t[r][c] -= delta;
                }
            }
        }
        basis[pr] = enter;
    }
    t[m][k + m].is_zero()
}

/// Determinant of a square matrix.
pub fn determinant(rows: &[Vec<Q>]) -> Q {
    let n = rows.len();
    let mut m = rows.to_vec();
    let mut det = Q::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Q::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        det *= &m[col][col];
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] / &m[col][col];
                for c in col..n {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| Q::from_integer(BigInt::from(x))).collect()
    }

    #[test]
    fn hull_membership() {
        let tri = vec![qv(&[0, 0]), qv(&[4, 0]), qv(&[0, 4])];
        assert!(in_convex_hull(&qv(&[1, 1]), &tri));
        assert!(in_convex_hull(&qv(&[2, 2]), &tri));
        assert!(!in_convex_hull(&qv(&[3, 3]), &tri));
        assert!(!in_convex_hull(&qv(&[-1, 0]), &tri));
    }

    #[test]
    fn determinant_and_rank() {
        let m = vec![qv(&[2, 1]), qv(&[1, 3])];
        assert_eq!(determinant(&m), Q::from_integer(BigInt::from(5)));
        assert_eq!(rank(&[qv(&[1, 2]), qv(&[2, 4])]), 1);
        assert_eq!(affine_dimension(&[qv(&[0, 0]), qv(&[1, 1]), qv(&[2, 2])]), 1);
    }
}
