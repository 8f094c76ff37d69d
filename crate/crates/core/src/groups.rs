//! Principal congruence subgroups, the `D_q` conjugation and the indices
//! `V_q = [SL_n(Z) : Γ(q)]` and `N_q = [Γ(q)^♮ ∩ U(Q) : U(Z)]`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactalg::arith::prime_divisors;
use crate::exactalg::{int, ExactMatrix, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Flavor {
    /// `Γ(q)`: integral, determinant one, congruent to the identity mod `q`.
    GammaQ,
    /// `Γ(q)^♮ = D_q^{-1} Γ(q) D_q`.
    GammaQNatural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CongruenceSpec {
    pub n: usize,
    pub q: u64,
    pub flavor: Flavor,
}

impl CongruenceSpec {
    pub fn new(n: usize, q: u64, flavor: Flavor) -> Result<Self> {
        if n < 2 || q < 1 {
            return Err(Error::Precondition(format!("need n >= 2 and q >= 1, got n={n}, q={q}")));
        }
        Ok(CongruenceSpec { n, q, flavor })
    }

    pub fn natural(n: usize, q: u64) -> Result<Self> {
        Self::new(n, q, Flavor::GammaQNatural)
    }
}

/// `D_q = diag(q^{n-1}, …, q, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DqMatrix {
    pub n: usize,
    pub q: u64,
}

impl DqMatrix {
    pub fn matrix(&self) -> ExactMatrix {
        let d: Vec<Rational> = (0..self.n)
            .map(|i| Rational::from_integer(BigInt::from(self.q).pow((self.n - 1 - i) as u32)))
            .collect();
        ExactMatrix::diag(&d)
    }

    pub fn det(&self) -> BigInt {
        BigInt::from(self.q).pow((self.n * (self.n - 1) / 2) as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `D_q^{-1} g D_q`, entry `(i,j)` scaled by `q^{i-j}`: maps `Γ(q)` onto `Γ(q)^♮`.
    Natural,
    /// `D_q g D_q^{-1}`, entry `(i,j)` scaled by `q^{j-i}`: maps `Γ(q)^♮` onto `Γ(q)`.
    ToGamma,
}

fn qpow(q: u64, e: i64) -> Rational {
    let p = Rational::from_integer(BigInt::from(q).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

pub fn conjugate_by_dq(g: &ExactMatrix, q: u64, direction: Direction) -> ExactMatrix {
    g.map(|i, j, v| {
        if v.is_zero() || i == j {
            return v.clone();
        }
        let e = match direction {
            Direction::Natural => i as i64 - j as i64,
            Direction::ToGamma => j as i64 - i as i64,
        };
        v * qpow(q, e)
    })
}

fn in_gamma(g: &ExactMatrix, q: u64) -> bool {
    let q = BigInt::from(q);
    let n = g.n();
    g.is_integral()
        && (0..n).all(|i| {
            (0..n).all(|j| {
                let mut v = g.get(i, j).numer().clone();
                if i == j {
                    v -= 1;
                }
                v.is_multiple_of(&q)
            })
        })
        && g.det().is_one()
}

/// Membership read off the entry pattern of `Γ(q)^♮`: `(i,j)` lies in
/// `q^{i-j+1}Z` off the diagonal and in `1 + qZ` on it.
pub fn natural_pattern_member(g: &ExactMatrix, q: u64) -> bool {
    let n = g.n();
    let qq = int(q as i64);
    for i in 0..n {
        for j in 0..n {
            let v = g.get(i, j);
            let ok = if i == j {
                let t = (v - Rational::one()) / &qq;
                t.is_integer()
            } else {
                (v / qpow(q, i as i64 - j as i64 + 1)).is_integer()
            };
            if !ok {
                return false;
            }
        }
    }
    g.det().is_one()
}

/// Membership test. For the `♮` flavor the conjugation criterion
/// `D_q g D_q^{-1} ∈ Γ(q)` decides, and the entry pattern is checked
/// against it.
pub fn is_member(g: &ExactMatrix, spec: &CongruenceSpec) -> Result<bool> {
    if g.n() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: g.n(),
        });
    }
    match spec.flavor {
        Flavor::GammaQ => Ok(in_gamma(g, spec.q)),
        Flavor::GammaQNatural => {
            let verdict = in_gamma(&conjugate_by_dq(g, spec.q, Direction::ToGamma), spec.q);
            if verdict != natural_pattern_member(g, spec.q) {
                return Err(Error::Integrity(format!(
                    "conjugation and pattern criteria disagree on {g}"
                )));
            }
            Ok(verdict)
        }
    }
}

/// `V_q = |SL_n(Z/qZ)| = q^{n²-1} ∏_{p | q} ∏_{k=2}^{n} (1 - p^{-k})`.
pub fn index_sl(n: usize, q: u64) -> BigInt {
    let mut v = Rational::from_integer(BigInt::from(q).pow((n * n - 1) as u32));
    for p in prime_divisors(q) {
        for k in 2..=n as u32 {
            let pk = BigInt::from(p).pow(k);
            v *= Rational::new(&pk - 1, pk);
        }
    }
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// `N_q = q^{n(n-1)(n-2)/6}`.
pub fn unipotent_index(n: usize, q: u64) -> BigInt {
    BigInt::from(q).pow((n * (n - 1) * (n.saturating_sub(2)) / 6) as u32)
}

/// Counts `[Γ(q)^♮ ∩ U(Q) : U(Z)]` by walking the grid of unipotent `x` with
/// entry `(i,j)` in `(1/q^{j-i-1})Z ∩ [0,1)` and testing membership of each.
pub fn unipotent_index_direct(n: usize, q: u64) -> Result<u64> {
    let spec = CongruenceSpec::natural(n, q)?;
    let positions: Vec<(usize, usize, u64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, q.pow((j - i - 1) as u32)))
        .collect();
    let mut count = 0u64;
    let mut digits = vec![0u64; positions.len()];
    loop {
        let mut x = ExactMatrix::identity(n);
        for (&(i, j, den), &d) in positions.iter().zip(&digits) {
            x.set(i, j, Rational::new(BigInt::from(d), BigInt::from(den)));
        }
        if is_member(&x, &spec)? {
            count += 1;
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(count);
            }
            digits[k] += 1;
            if digits[k] < positions[k].2 {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Determinant of a small integer matrix by cofactor-free Bareiss elimination.
pub fn det_i128(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Visit every element of `SL_n(Z/qZ)` as a row-major vector of residues
/// in `[0, q)`. Returns the number visited.
pub fn for_each_sl_mod(n: usize, q: u64, mut f: impl FnMut(&[i64])) -> u64 {
    let total = (q as u128).pow((n * n) as u32);
    let mut digits = vec![0i64; n * n];
    let mut count = 0u64;
    for _ in 0..total {
        let rows: Vec<Vec<i128>> = digits
            .chunks(n)
            .map(|r| r.iter().map(|&v| v as i128).collect())
            .collect();
        if (det_i128(&rows) - 1).rem_euclid(q as i128) == 0 {
            f(&digits);
            count += 1;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < q as i64 {
                break;
            }
            *d = 0;
        }
    }
    count
}

/// `|SL_n(Z/qZ)|` by exhaustive enumeration of all `q^{n²}` matrices.
pub fn sl_order_exhaustive(n: usize, q: u64) -> u64 {
    for_each_sl_mod(n, q, |_| {})
}

/// Largest absolute entry of an integral matrix, as an integer.
pub fn max_norm_int(g: &ExactMatrix) -> Option<u64> {
    let m = g.max_norm();
    m.is_integer().then(|| m.to_integer().abs().to_u64()).flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rat;
    use proptest::prelude::*;

    #[test]
    fn membership_examples() {
        let spec = CongruenceSpec::natural(2, 3).unwrap();
        assert!(is_member(&ExactMatrix::identity(2), &spec).unwrap());
        let g = ExactMatrix::from_i64(&[[4, 1], [27, 7]]);
        assert!(is_member(&g, &spec).unwrap());
        assert_eq!(
            conjugate_by_dq(&g, 3, Direction::ToGamma),
            ExactMatrix::from_i64(&[[4, 3], [9, 7]])
        );
        let g = ExactMatrix::from_i64(&[[4, 1], [9, 7]]);
        assert!(!is_member(&g, &spec).unwrap());
        assert!(is_member(&ExactMatrix::identity(3), &spec).is_err());
    }

    #[test]
    fn conjugation_example() {
        let g = ExactMatrix::from_i64(&[[1, 3], [9, 1]]);
        assert_eq!(
            conjugate_by_dq(&g, 3, Direction::Natural),
            ExactMatrix::from_i64(&[[1, 1], [27, 1]])
        );
        assert_eq!(conjugate_by_dq(&ExactMatrix::identity(4), 5, Direction::Natural), ExactMatrix::identity(4));
        assert_eq!(DqMatrix { n: 3, q: 2 }.det(), BigInt::from(8));
        let d = DqMatrix { n: 3, q: 2 }.matrix();
        let g = ExactMatrix::from_i64(&[[1, 2, 3], [4, 5, 6], [7, 8, 10]]);
        assert_eq!(
            conjugate_by_dq(&g, 2, Direction::Natural),
            &(&d.inverse().unwrap() * &g) * &d
        );
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_sl(2, 1), BigInt::from(1));
        assert_eq!(index_sl(2, 2), BigInt::from(6));
        assert_eq!(index_sl(2, 6), BigInt::from(144));
        // CRT oracle: exhaustive factors
        assert_eq!(sl_order_exhaustive(2, 2) * sl_order_exhaustive(2, 3), 144);
        assert_eq!(unipotent_index(2, 7), BigInt::from(1));
        assert_eq!(unipotent_index(3, 2), BigInt::from(2));
        assert_eq!(unipotent_index(4, 3), BigInt::from(81));
        assert_eq!(unipotent_index_direct(3, 2).unwrap(), 2);
        assert_eq!(unipotent_index_direct(4, 3).unwrap(), 81);
    }

    #[test]
    fn bareiss_determinant() {
        let m = vec![vec![2, 1, 0], vec![1, 3, 1], vec![0, 1, 4]];
        assert_eq!(det_i128(&m), 18);
        let m = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(det_i128(&m), -1);
    }

    fn elementary(n: usize, i: usize, j: usize, k: i64) -> ExactMatrix {
        let mut e = ExactMatrix::identity(n);
        e.set(i, j, int(k));
        e
    }

    // Random members of Γ(q): products of elementary matrices I + qk E_ij.
    fn gamma_element(n: usize, q: u64, ops: &[(usize, usize, i64)]) -> ExactMatrix {
        ops.iter().fold(ExactMatrix::identity(n), |acc, &(i, j, k)| {
            let (i, j) = (i % n, j % n);
            if i == j {
                acc
            } else {
                &acc * &elementary(n, i, j, k * q as i64)
            }
        })
    }

    proptest! {
        #[test]
        fn natural_flavor_is_conjugate_of_gamma(
            q in 1u64..6,
            ops in proptest::collection::vec((0usize..3, 0usize..3, -3i64..4), 0..6),
            ops2 in proptest::collection::vec((0usize..3, 0usize..3, -3i64..4), 0..6),
            u in proptest::collection::vec(-5i64..6, 3),
        ) {
            let n = 3;
            let gq = CongruenceSpec::new(n, q, Flavor::GammaQ).unwrap();
            let nat = CongruenceSpec::natural(n, q).unwrap();
            let g = gamma_element(n, q, &ops);
            prop_assert!(is_member(&g, &gq).unwrap());
            let h = conjugate_by_dq(&g, q, Direction::Natural);
            prop_assert!(is_member(&h, &nat).unwrap());
            prop_assert_eq!(conjugate_by_dq(&h, q, Direction::ToGamma), g.clone());
            // closure under products and inverses, and U(Z) inside
            let h2 = conjugate_by_dq(&gamma_element(n, q, &ops2), q, Direction::Natural);
            prop_assert!(is_member(&(&h * &h2), &nat).unwrap());
            prop_assert!(is_member(&h.inverse().unwrap(), &nat).unwrap());
            let mut x = ExactMatrix::identity(n);
            x.set(0, 1, int(u[0])); x.set(0, 2, int(u[1])); x.set(1, 2, int(u[2]));
            prop_assert!(is_member(&x, &nat).unwrap());
        }

        #[test]
        fn membership_agrees_for_arbitrary_rationals(
            q in 1u64..5,
            e in proptest::collection::vec((-30i64..30, prop::sample::select(vec![1i64, 2, 3, 4, 8, 9])), 4),
        ) {
            let g = ExactMatrix::from_rows(vec![
                vec![rat(e[0].0, e[0].1), rat(e[1].0, e[1].1)],
                vec![rat(e[2].0, e[2].1), rat(e[3].0, e[3].1)],
            ]).unwrap();
            let nat = CongruenceSpec::natural(2, q).unwrap();
            let gq = CongruenceSpec::new(2, q, Flavor::GammaQ).unwrap();
            prop_assert_eq!(
                is_member(&g, &nat).unwrap(),
                is_member(&conjugate_by_dq(&g, q, Direction::ToGamma), &gq).unwrap()
            );
        }

        #[test]
        fn conjugation_round_trip(
            q in 1u64..8,
            e in proptest::collection::vec((-50i64..50, 1i64..12), 9),
        ) {
            let rows = e.chunks(3).map(|r| r.iter().map(|&(a, b)| rat(a, b)).collect()).collect();
            let g = ExactMatrix::from_rows(rows).unwrap();
            let h = conjugate_by_dq(&g, q, Direction::Natural);
            prop_assert_eq!(conjugate_by_dq(&h, q, Direction::ToGamma), g);
        }
    }
}
