//! Small dense linear algebra over a [`Field`].

use crate::scalar::{Field, ZeroTest};

pub type Matrix<F> = Vec<Vec<F>>;

/// Solve `a·x = b` by Gaussian elimination with partial pivoting.
///
/// The pivot is the certainly-nonzero entry of largest magnitude in its
/// column. Returns `None` when no such entry exists (singular, or not
/// decidable in ball arithmetic).
pub fn solve<F: Field>(mut a: Matrix<F>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| a[r][col].zero_test() == ZeroTest::NonZero)
            .max_by(|&r, &s| a[r][col].to_f64().abs().total_cmp(&a[s][col].to_f64().abs()))?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            if a[r][col].is_exact_zero() {
                continue;
            }
            let f = a[r][col].clone() / a[col][col].clone();
            for c in col..n {
                let t = f.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
            b[r] = b[r].clone() - f * b[col].clone();
        }
    }
    let mut x = vec![F::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}

/// Pivots of elimination without row exchanges, so that the `k`-th leading
/// principal minor is the product of the first `k+1` pivots.
///
/// Stops after the first pivot that is not certainly nonzero; that pivot is
/// still returned so callers can tell an exact zero from an undecided one.
pub fn leading_pivots<F: Field>(mut a: Matrix<F>) -> Vec<F> {
    let n = a.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let p = a[k][k].clone();
        out.push(p.clone());
        if p.zero_test() != ZeroTest::NonZero {
            break;
        }
        for r in k + 1..n {
            let f = a[r][k].clone() / p.clone();
            for c in k..n {
                let t = f.clone() * a[k][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    #[test]
    fn solves_with_row_exchange() {
        let a: Matrix<Rational> = vec![vec![int(0), int(1)], vec![int(2), int(3)]];
        let x = solve(a, vec![int(4), int(5)]).unwrap();
        assert_eq!(x, vec![rat(-7, 2), int(4)]);
    }

    #[test]
    fn singular_is_none() {
        let a: Matrix<Rational> = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve(a, vec![int(1), int(1)]).is_none());
    }

    #[test]
    fn pivots_give_minors() {
        let a: Matrix<Rational> = vec![
            vec![int(2), int(1), int(0)],
            vec![int(1), int(3), int(1)],
            vec![int(0), int(1), int(4)],
        ];
        let p = leading_pivots(a);
        assert_eq!(p[0].clone(), int(2));
        assert_eq!(p[0].clone() * p[1].clone(), int(5));
        assert_eq!(p[0].clone() * p[1].clone() * p[2].clone(), int(18));
    }

    #[test]
    fn pivots_stop_at_zero() {
        let a: Matrix<Rational> = vec![vec![int(1), int(1)], vec![int(1), int(1)]];
        let p = leading_pivots(a);
        assert_eq!(p, vec![int(1), int(0)]);
    }
}
