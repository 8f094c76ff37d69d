//! Elements of `Z[ζ_N]` in the power basis modulo the cyclotomic polynomial.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_integer::Integer;

fn cache() -> &'static Mutex<HashMap<u64, Vec<i128>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<i128>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients of `Φ_N`, lowest degree first.
pub fn cyclotomic_polynomial(order: u64) -> Vec<i128> {
    assert!(order >= 1);
    if let Some(p) = cache().lock().unwrap().get(&order) {
        return p.clone();
    }
    // x^N - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![0i128; order as usize + 1];
    num[0] = -1;
    num[order as usize] = 1;
    for d in 1..order {
        if order.is_multiple_of(d) {
            num = exact_div(&num, &cyclotomic_polynomial(d));
        }
    }
    cache().lock().unwrap().insert(order, num.clone());
    num
}

/// Division of integer polynomials by a monic divisor, remainder discarded.
fn exact_div(num: &[i128], den: &[i128]) -> Vec<i128> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    debug_assert_eq!(den[dd], 1);
    let mut quot = vec![0i128; rem.len() - dd];
    for k in (0..quot.len()).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        if c != 0 {
            for (i, &d) in den.iter().enumerate() {
                rem[k + i] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "division was not exact");
    quot
}

/// Reduce `Σ coeffs[k] x^k` modulo the monic polynomial `modulus` in place.
fn reduce(coeffs: &mut Vec<i128>, modulus: &[i128]) {
    let deg = modulus.len() - 1;
    let support: Vec<(usize, i128)> = modulus[..deg]
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| (i, c))
        .collect();
    for k in (deg..coeffs.len()).rev() {
        let c = coeffs[k];
        if c == 0 {
            continue;
        }
        coeffs[k] = 0;
        // x^k = x^{k-deg} * x^deg and x^deg ≡ -Σ modulus[i] x^i
        for &(i, m) in &support {
            coeffs[k - deg + i] -= c * m;
        }
    }
    coeffs.truncate(deg.max(1));
    coeffs.resize(deg.max(1), 0);
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cyclotomic {
    order: u64,
    coeffs: Vec<i128>,
}

impl Cyclotomic {
    /// `Σ_k mult[k] ζ_N^k` for exponents `k` taken mod `N`.
    pub fn from_exponents(order: u64, terms: impl IntoIterator<Item = (u64, i128)>) -> Self {
        let mut raw = vec![0i128; order as usize];
        for (k, m) in terms {
            raw[(k % order) as usize] += m;
        }
        let phi = cyclotomic_polynomial(order);
        reduce(&mut raw, &phi);
        Cyclotomic { order, coeffs: raw }
    }

    pub fn from_integer(order: u64, v: i128) -> Self {
        Self::from_exponents(order, [(0, v)])
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The value as an integer, if it lies in `Z`.
    pub fn as_integer(&self) -> Option<i128> {
        self.coeffs[1..].iter().all(|&c| c == 0).then_some(self.coeffs[0])
    }

    /// Re-express in `Z[ζ_M]` for a multiple `M` of the current order.
    pub fn lift(&self, order: u64) -> Self {
        assert_eq!(order % self.order, 0);
        let step = order / self.order;
        Self::from_exponents(
            order,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| (k as u64 * step, c)),
        )
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let m = a.order.lcm(&b.order);
        (a.lift(m), b.lift(m))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = Self::common(self, other);
        Cyclotomic {
            order: a.order,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i128) -> Self {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = Self::common(self, other);
        let mut raw = vec![0i128; a.coeffs.len() + b.coeffs.len()];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                raw[i + j] += x * y;
            }
        }
        reduce(&mut raw, &cyclotomic_polynomial(a.order));
        Cyclotomic {
            order: a.order,
            coeffs: raw,
        }
    }

    /// Complex conjugate (`ζ ↦ ζ^{-1}`).
    pub fn conj(&self) -> Self {
        let n = self.order;
        Self::from_exponents(
            n,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| ((n - k as u64) % n, c)),
        )
    }

    pub fn to_complex(&self) -> num_complex::Complex64 {
        let n = self.order as f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                num_complex::Complex64::from_polar(c as f64, std::f64::consts::TAU * k as f64 / n)
            })
            .sum()
    }
}
