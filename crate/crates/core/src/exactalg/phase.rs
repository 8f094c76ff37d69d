//! Exact exponential sums `Σ m_φ e(φ)` over rational phases.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use super::cyclotomic::Cyclotomic;
use super::matrix::{fmt_rat, frac, Rational};

/// A rational number reduced mod 1, standing for `e(x) = exp(2πi x)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalPhase(Rational);

impl RationalPhase {
    pub fn new(x: &Rational) -> Self {
        RationalPhase(frac(x))
    }

    pub fn zero() -> Self {
        RationalPhase(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn neg(&self) -> Self {
        RationalPhase::new(&-&self.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalPhase::new(&(&self.0 + &other.0))
    }

    pub fn to_complex(&self) -> Complex64 {
        let x = self.0.to_f64().unwrap_or(0.0);
        Complex64::from_polar(1.0, std::f64::consts::TAU * x)
    }
}

impl Serialize for RationalPhase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for RationalPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_rat(&self.0))
    }
}

/// Multiset of phases with signed multiplicities. Zero multiplicities are
/// never stored, so two sums with the same terms compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseSum {
    terms: BTreeMap<RationalPhase, i64>,
}

/// Numeric value of a [`PhaseSum`] with a guaranteed absolute error bound.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseValue {
    pub re: f64,
    pub im: f64,
    /// Real part in fixed-point decimal with `precision` fractional digits.
    pub re_decimal: String,
    pub im_decimal: String,
    pub precision: u32,
    pub abs_error: f64,
}

impl PhaseSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(phase: RationalPhase, mult: i64) -> Self {
        let mut s = Self::new();
        s.add_term(phase, mult);
        s
    }

    pub fn constant(m: i64) -> Self {
        Self::singleton(RationalPhase::zero(), m)
    }

    pub fn add_term(&mut self, phase: RationalPhase, mult: i64) {
        if mult == 0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(phase) {
            Entry::Vacant(v) => {
                v.insert(mult);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += mult;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn merge(&mut self, other: &PhaseSum) {
        for (p, &m) in &other.terms {
            self.add_term(p.clone(), m);
        }
    }

    pub fn merged(mut self, other: &PhaseSum) -> PhaseSum {
        self.merge(other);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&RationalPhase, i64)> {
        self.terms.iter().map(|(p, &m)| (p, m))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// `Σ |m_φ|`, the trivial bound on the absolute value.
    pub fn total_multiplicity(&self) -> u64 {
        self.terms.values().map(|m| m.unsigned_abs()).sum()
    }

    /// Signed multiplicity sum, i.e. the value at the trivial character.
    pub fn signed_count(&self) -> i64 {
        self.terms.values().sum()
    }

    /// Complex conjugate: every phase negated.
    pub fn conj(&self) -> PhaseSum {
        let mut out = PhaseSum::new();
        for (p, &m) in &self.terms {
            out.add_term(p.neg(), m);
        }
        out
    }

    pub fn scale(&self, k: i64) -> PhaseSum {
        let mut out = PhaseSum::new();
        for (p, &m) in &self.terms {
            out.add_term(p.clone(), m * k);
        }
        out
    }

    /// Product of the two sums (convolution of phases).
    pub fn mul(&self, other: &PhaseSum) -> PhaseSum {
        let mut out = PhaseSum::new();
        for (p, &m) in &self.terms {
            for (q, &k) in &other.terms {
                out.add_term(p.add(q), m * k);
            }
        }
        out
    }

    /// Least common multiple of the phase denominators.
    pub fn conductor(&self) -> u64 {
        self.terms.keys().fold(1u64, |acc, p| {
            acc.lcm(&p.value().denom().to_u64().expect("phase denominator fits in u64"))
        })
    }

    /// Exact value as an element of `Z[ζ_N]`, `N` the conductor. Cost is
    /// linear in `N`.
    pub fn to_cyclotomic(&self) -> Cyclotomic {
        let n = self.conductor();
        Cyclotomic::from_exponents(
            n,
            self.terms.iter().map(|(p, &m)| {
                let v = p.value();
                let k = (v.numer() * BigInt::from(n) / v.denom())
                    .to_u64()
                    .expect("phase exponent fits");
                (k, m as i128)
            }),
        )
    }

    /// Exact equality of values (not of multisets).
    pub fn value_eq(&self, other: &PhaseSum) -> bool {
        self.to_cyclotomic().sub(&other.to_cyclotomic()).is_zero()
    }

    /// The value, if it is a rational integer.
    pub fn exact_integer(&self) -> Option<i128> {
        self.to_cyclotomic().as_integer()
    }

    pub fn to_complex(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(p, &m)| p.to_complex() * m as f64)
            .sum()
    }

    /// Evaluate to `precision` decimal digits. Each `e(φ)` is computed in
    /// fixed point with `precision + ⌈log10(Σ|m|)⌉ + 3` digits, so the
    /// accumulated error stays below `10^-precision`. Summation runs in
    /// phase order.
    pub fn eval(&self, precision: u32) -> PhaseValue {
        let precision = precision.max(1);
        let total = self.total_multiplicity().max(1);
        let extra = (total as f64).log10().ceil() as u32;
        let digits = precision + extra + 3;
        let scale = BigInt::from(10u32).pow(digits);
        let pi = fixed_pi(&scale);
        let mut re = BigInt::zero();
        let mut im = BigInt::zero();
        for (p, &m) in &self.terms {
            let (c, s) = fixed_cos_sin(p.value(), &scale, &pi);
            re += c * m;
            im += s * m;
        }
        let z = self.to_complex();
        PhaseValue {
            re: z.re,
            im: z.im,
            re_decimal: fixed_to_decimal(&re, digits, precision),
            im_decimal: fixed_to_decimal(&im, digits, precision),
            precision,
            abs_error: 10f64.powi(-(precision as i32)),
        }
    }

    pub fn to_pairs(&self) -> Vec<(String, i64)> {
        self.terms.iter().map(|(p, &m)| (p.to_string(), m)).collect()
    }
}

impl Serialize for PhaseSum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (p, &m) in &self.terms {
            seq.serialize_element(&format!("{p}:{m}"))?;
        }
        seq.end()
    }
}

impl FromIterator<(RationalPhase, i64)> for PhaseSum {
    fn from_iter<T: IntoIterator<Item = (RationalPhase, i64)>>(iter: T) -> Self {
        let mut s = PhaseSum::new();
        for (p, m) in iter {
            s.add_term(p, m);
        }
        s
    }
}

// ---- fixed-point trigonometry -------------------------------------------

fn fixed_atan_inv(x: u32, scale: &BigInt) -> BigInt {
    // atan(1/x) = Σ (-1)^k / ((2k+1) x^{2k+1})
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut power = scale / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut k = 0u32;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    sum
}

fn fixed_pi(scale: &BigInt) -> BigInt {
    // Machin: π = 16 atan(1/5) − 4 atan(1/239), with guard digits
    let guard = BigInt::from(10u32).pow(6);
    let big = scale * &guard;
    (fixed_atan_inv(5, &big) * 16 - fixed_atan_inv(239, &big) * 4) / guard
}

/// `(cos 2πφ, sin 2πφ)` scaled by `scale`, for rational `φ ∈ [0, 1)`.
fn fixed_cos_sin(phi: &Rational, scale: &BigInt, pi: &BigInt) -> (BigInt, BigInt) {
    // quadrant reduction: φ = k/4 + r with r ∈ [0, 1/4)
    let four = Rational::from_integer(BigInt::from(4));
    let k = (phi * &four).floor().to_integer().to_i64().unwrap_or(0).rem_euclid(4);
    let r = phi - Rational::new(BigInt::from(k), BigInt::from(4));
    // angle a = 2π r in fixed point
    let a = (pi * BigInt::from(2) * r.numer()) / r.denom();
    let mut cos = BigInt::zero();
    let mut sin = BigInt::zero();
    let mut term = scale.clone(); // a^j / j!
    let mut j = 0u32;
    while !term.is_zero() {
        match j % 4 {
            0 => cos += &term,
            1 => sin += &term,
            2 => cos -= &term,
            _ => sin -= &term,
        }
        j += 1;
        term = &term * &a / scale / BigInt::from(j);
    }
    match k {
        0 => (cos, sin),
        1 => (-sin, cos),
        2 => (-cos, -sin),
        _ => (sin, -cos),
    }
}

fn fixed_to_decimal(v: &BigInt, digits: u32, precision: u32) -> String {
    // round to `precision` fractional digits
    let drop = BigInt::from(10u32).pow(digits - precision);
    let half = &drop / 2;
    let rounded = if v.is_negative() {
        let t: BigInt = (-v.clone() + &half) / &drop;
        -t
    } else {
        (v + &half) / &drop
    };
    let neg = rounded.is_negative();
    let s = rounded.abs().to_string();
    let p = precision as usize;
    let s = if s.len() <= p {
        format!("{}{}", "0".repeat(p + 1 - s.len()), s)
    } else {
        s
    };
    let (int_part, frac_part) = s.split_at(s.len() - p);
    let body = format!("{int_part}.{frac_part}");
    if neg && !rounded.is_zero() {
        format!("-{body}")
    } else {
        body
    }
}

impl One for PhaseSum {
    fn one() -> Self {
        PhaseSum::constant(1)
    }
}

impl std::ops::Mul for PhaseSum {
    type Output = PhaseSum;
    fn mul(self, rhs: PhaseSum) -> PhaseSum {
        PhaseSum::mul(&self, &rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::matrix::rat;
    use proptest::prelude::*;

    fn ph(a: i64, b: i64) -> RationalPhase {
        RationalPhase::new(&rat(a, b))
    }

    #[test]
    fn examples() {
        let one = PhaseSum::constant(1);
        assert_eq!(one.eval(10).re_decimal, "1.0000000000");
        let cancel: PhaseSum = [(ph(1, 2), 1), (ph(0, 1), 1)].into_iter().collect();
        let v = cancel.eval(12);
        assert_eq!(v.re_decimal, "0.000000000000");
        assert_eq!(v.im_decimal, "0.000000000000");
        let third: PhaseSum = [(ph(1, 3), 1), (ph(2, 3), 1)].into_iter().collect();
        // 2 cos(2π/3) = -1
        assert_eq!(third.eval(20).re_decimal, "-1.00000000000000000000");
        assert_eq!(third.exact_integer(), Some(-1));
    }

    #[test]
    fn high_precision_matches_known_digits() {
        // e(1/8) = (1 + i)/√2; √2/2 = 0.70710678118654752440084436...
        let s = PhaseSum::singleton(ph(1, 8), 1);
        let v = s.eval(25);
        assert_eq!(v.re_decimal, "0.7071067811865475244008444");
        assert_eq!(v.im_decimal, "0.7071067811865475244008444");
        let s = PhaseSum::singleton(ph(7, 12), 3);
        let v = s.eval(18);
        // 3 cos(7π/6) = -3√3/2 = -2.598076211353315940...
        assert_eq!(v.re_decimal, "-2.598076211353315940");
        assert_eq!(v.im_decimal, "-1.500000000000000000");
    }

    #[test]
    fn zero_multiplicities_are_dropped() {
        let mut s = PhaseSum::singleton(ph(1, 5), 2);
        s.add_term(ph(6, 5), -2);
        assert!(s.is_empty());
        assert_eq!(s, PhaseSum::new());
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_eval_additive(
            a in proptest::collection::vec((0i64..30, prop::sample::select(vec![1i64, 2, 3, 4, 6, 8, 12, 24]), -4i64..5), 0..12),
            b in proptest::collection::vec((0i64..30, prop::sample::select(vec![1i64, 5, 10, 15, 30]), -4i64..5), 0..12),
        ) {
            let sa: PhaseSum = a.iter().map(|&(x, y, m)| (ph(x, y), m)).collect();
            let sb: PhaseSum = b.iter().map(|&(x, y, m)| (ph(x, y), m)).collect();
            let ab = sa.clone().merged(&sb);
            let ba = sb.clone().merged(&sa);
            prop_assert_eq!(&ab, &ba);
            let z = sa.to_complex() + sb.to_complex();
            prop_assert!((ab.to_complex() - z).norm() < 1e-9);
            let v = ab.eval(8);
            let re: f64 = v.re_decimal.parse().unwrap();
            prop_assert!((re - z.re).abs() < 1e-7);
            prop_assert!(ab.value_eq(&ba));
            prop_assert!(sa.mul(&sb).value_eq(&sb.mul(&sa)));
            prop_assert_eq!(sa.conj().conj(), sa.clone());
        }
    }
}
