//! Canonical coset representatives for `U(Z) \ U(Q)` and `U_w(Q) / U_w(Z)`.
//!
//! Both reductions sweep superdiagonal offsets `d = 1, …, n−1` in increasing
//! order. A row (resp. column) operation that fixes an entry of offset `d`
//! only touches entries of offset `> d`, so the finished matrix has every
//! free entry in `[0, 1)` and is the unique such representative.

use std::collections::BTreeSet;

use num_traits::Zero;

use super::matrix::{ExactMatrix, Rational};
use crate::error::{precondition, Result};

/// `x = γ · x̂` with `γ ∈ U(Z)` and every strictly upper entry of `x̂` in `[0, 1)`.
pub fn unipotent_normal_form_left(x: &ExactMatrix) -> Result<(ExactMatrix, ExactMatrix)> {
    if !x.is_upper_unitriangular() {
        return Err(precondition("left normal form needs an upper unitriangular matrix"));
    }
    let n = x.n();
    let mut xh = x.clone();
    // γ^{-1} accumulated as the product of the row operations applied.
    let mut gamma_inv = ExactMatrix::identity(n);
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let f = xh.get(i, j).floor();
            if f.is_zero() {
                continue;
            }
            // row_i -= f * row_j, i.e. left multiplication by I - f E_ij
            add_row_multiple(&mut xh, i, j, &f);
            add_row_multiple(&mut gamma_inv, i, j, &f);
        }
    }
    let gamma = gamma_inv.inverse().expect("unipotent matrices are invertible");
    Ok((gamma, xh))
}

/// `y = ŷ · γ` with `γ ∈ U_w(Z)` and every pattern entry of `ŷ` in `[0, 1)`.
///
/// `pattern` lists the free positions `(i, j)`, `i < j`, of `U_w` (0-based);
/// `y` must vanish off the pattern.
pub fn unipotent_normal_form_right(
    y: &ExactMatrix,
    pattern: &BTreeSet<(usize, usize)>,
) -> Result<(ExactMatrix, ExactMatrix)> {
    if !y.is_upper_unitriangular() {
        return Err(precondition("right normal form needs an upper unitriangular matrix"));
    }
    let n = y.n();
    for i in 0..n {
        for j in i + 1..n {
            if !pattern.contains(&(i, j)) && !y.get(i, j).is_zero() {
                return Err(precondition(format!(
                    "entry ({}, {}) lies outside the U_w pattern",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut yh = y.clone();
    let mut gamma_inv = ExactMatrix::identity(n);
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            if !pattern.contains(&(i, j)) {
                continue;
            }
            let f = yh.get(i, j).floor();
            if f.is_zero() {
                continue;
            }
            // col_j -= f * col_i, i.e. right multiplication by I - f E_ij
            add_col_multiple(&mut yh, j, i, &f);
            add_col_multiple(&mut gamma_inv, j, i, &f);
        }
    }
    let gamma = gamma_inv.inverse().expect("unipotent matrices are invertible");
    Ok((yh, gamma))
}

fn add_row_multiple(m: &mut ExactMatrix, target: usize, source: usize, f: &Rational) {
    for k in 0..m.n() {
        let s = m.get(source, k);
        if s.is_zero() {
            continue;
        }
        let v = m.get(target, k) - f * s;
        m.set(target, k, v);
    }
}

fn add_col_multiple(m: &mut ExactMatrix, target: usize, source: usize, f: &Rational) {
    for k in 0..m.n() {
        let s = m.get(k, source);
        if s.is_zero() {
            continue;
        }
        let v = m.get(k, target) - f * s;
        m.set(k, target, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::matrix::{int, rat};
    use proptest::prelude::*;

    fn full_pattern(n: usize) -> BTreeSet<(usize, usize)> {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    fn unipotent(n: usize, vals: &[(i64, i64)]) -> ExactMatrix {
        let mut m = ExactMatrix::identity(n);
        let mut it = vals.iter();
        for i in 0..n {
            for j in i + 1..n {
                let &(a, b) = it.next().unwrap();
                m.set(i, j, rat(a, b));
            }
        }
        m
    }

    // Independent coset test: x1 x2^{-1} integral.
    fn same_left_coset(x1: &ExactMatrix, x2: &ExactMatrix) -> bool {
        (x1 * &x2.inverse().unwrap()).is_integral()
    }

    #[test]
    fn identity_and_single_entry() {
        let id = ExactMatrix::identity(3);
        let (g, xh) = unipotent_normal_form_left(&id).unwrap();
        assert_eq!((g, xh), (id.clone(), id));

        let mut x = ExactMatrix::identity(2);
        x.set(0, 1, rat(7, 2));
        let (g, xh) = unipotent_normal_form_left(&x).unwrap();
        assert_eq!(g.get(0, 1), &int(3));
        assert_eq!(xh.get(0, 1), &rat(1, 2));

        let (yh, g) = unipotent_normal_form_right(&x, &full_pattern(2)).unwrap();
        assert_eq!(yh.get(0, 1), &rat(1, 2));
        assert_eq!(g.get(0, 1), &int(3));
    }

    #[test]
    fn rejects_bad_input() {
        let m = ExactMatrix::from_i64(&[[1, 0], [1, 1]]);
        assert!(unipotent_normal_form_left(&m).is_err());
        let mut y = ExactMatrix::identity(3);
        y.set(1, 2, rat(1, 2));
        let pat: BTreeSet<_> = [(0, 1)].into_iter().collect();
        assert!(unipotent_normal_form_right(&y, &pat).is_err());
    }

    proptest! {
        #[test]
        fn left_normal_form_is_coset_invariant(
            vals in proptest::collection::vec((-40i64..40, 1i64..9), 3),
            shift in proptest::collection::vec(-5i64..5, 3),
        ) {
            let x = unipotent(3, &vals);
            let g = unipotent(3, &shift.iter().map(|&s| (s, 1)).collect::<Vec<_>>());
            let (gamma, xh) = unipotent_normal_form_left(&x).unwrap();
            prop_assert_eq!(&(&gamma * &xh), &x);
            prop_assert!(gamma.is_integral());
            for i in 0..3 { for j in i+1..3 {
                prop_assert!(*xh.get(i,j) >= int(0) && *xh.get(i,j) < int(1));
            }}
            let (_, xh2) = unipotent_normal_form_left(&(&g * &x)).unwrap();
            prop_assert_eq!(&xh2, &xh);
            prop_assert!(same_left_coset(&x, &xh));
            let (_, again) = unipotent_normal_form_left(&xh).unwrap();
            prop_assert_eq!(again, xh);
        }

        #[test]
        fn right_normal_form_recomposes(
            vals in proptest::collection::vec((-40i64..40, 1i64..9), 6),
            shift in proptest::collection::vec(-5i64..5, 6),
        ) {
            let y = unipotent(4, &vals);
            let pat = full_pattern(4);
            let (yh, gamma) = unipotent_normal_form_right(&y, &pat).unwrap();
            prop_assert_eq!(&(&yh * &gamma), &y);
            prop_assert!(gamma.is_integral());
            let g = unipotent(4, &shift.iter().map(|&s| (s, 1)).collect::<Vec<_>>());
            let (yh2, _) = unipotent_normal_form_right(&(&y * &g), &pat).unwrap();
            prop_assert_eq!(&yh2, &yh);
            let (again, _) = unipotent_normal_form_right(&yh, &pat).unwrap();
            prop_assert_eq!(again, yh);
        }
    }
}
