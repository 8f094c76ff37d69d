//! Integer number theory on machine words.

use num_integer::Integer;

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing prime order.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if m < 2 {
        return out;
    }
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

pub fn prime_divisors(m: u64) -> Vec<u64> {
    factorize(m).into_iter().map(|(p, _)| p).collect()
}

pub fn is_prime(m: u64) -> bool {
    m >= 2 && factorize(m) == vec![(m, 1)]
}

pub fn is_squarefree(m: u64) -> bool {
    factorize(m).iter().all(|&(_, e)| e == 1)
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut m: u64, p: u64) -> u32 {
    debug_assert!(m != 0 && p >= 2);
    let mut v = 0;
    while m.is_multiple_of(p) {
        m /= p;
        v += 1;
    }
    v
}

/// Split `c = c_q * c'` where `c_q = (c, q^∞)` carries exactly the primes of
/// `q` and `gcd(c', q) = 1`.
pub fn crt_split(c: u64, q: u64) -> (u64, u64) {
    assert!(c >= 1 && q >= 1, "crt_split needs positive arguments");
    let mut rest = c;
    let mut part = 1u64;
    loop {
        let g = rest.gcd(&q);
        if g == 1 {
            break;
        }
        rest /= g;
        part *= g;
    }
    (part, rest)
}

/// `(a, b^∞)`: the largest divisor of `a` composed of primes of `b`.
pub fn gcd_with_power(a: u64, b: u64) -> u64 {
    crt_split(a, b).0
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u128;
    let mut b = (base % m) as u128;
    let m128 = m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: i64, m: i64) -> Option<i64> {
    assert!(m >= 1);
    if m == 1 {
        return Some(0);
    }
    let e = a.rem_euclid(m).extended_gcd(&m);
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m))
}

/// Euler's totient.
pub fn totient(m: u64) -> u64 {
    factorize(m)
        .iter()
        .fold(m, |acc, &(p, _)| acc / p * (p - 1))
}

/// Smallest primitive root modulo a prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    assert!(is_prime(p));
    if p == 2 {
        return 1;
    }
    let phi = p - 1;
    let primes = prime_divisors(phi);
    (2..p)
        .find(|&g| primes.iter().all(|&r| mod_pow(g, phi / r, p) != 1))
        .expect("every prime has a primitive root")
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// Floor division for signed integers.
pub fn div_floor(a: i128, b: i128) -> i128 {
    Integer::div_floor(&a, &b)
}

pub fn div_ceil(a: i128, b: i128) -> i128 {
    -Integer::div_floor(&-a, &b)
}
