//! Arithmetic laws satisfied by Kloosterman sets and sums.

use num_bigint::BigInt;
use num_traits::{Pow, ToPrimitive};
use serde::Serialize;

use super::{enumerate, kloosterman_sum, wstar_query, KloostermanQuery, KloostermanSum, Method};
use crate::bruhat::{SpecialWeyl, WeylElement};
use crate::error::{precondition, Result};
use crate::exactalg::arith::{crt_split, gcd_with_power, is_prime, is_squarefree, mod_inv, valuation};
use crate::exactalg::{PhaseSum, PhaseValue};
use crate::groups::unipotent_index;
use crate::Budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisibilityCase {
    /// `w = id`: nonempty only for `c = (1, …, 1)`.
    Identity,
    /// Generic block-shaped `w`: `q^{n+1} | c_j` for some `j`.
    Generic,
    /// `w = w_1`: for `c = (mγ^{n-1}, …, γ)`, `(m, q) = 1`, `q^{n+1} | γ^{n-1}`.
    Voronoi,
    /// `w = w_*`: `q^n | c_j` for all `j`.
    WStar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divisibility {
    pub case: DivisibilityCase,
    /// `c` violates the necessary divisibility, so the set is empty.
    pub vanishes: bool,
    /// Same with the sharper exponents; `None` where there is no sharper form.
    pub strengthened_vanishes: Option<bool>,
    pub note: Option<String>,
}

impl Divisibility {
    pub fn admissible(&self) -> bool {
        !self.vanishes
    }
}

fn pow_u128(b: u64, e: u32) -> u128 {
    (b as u128).pow(e)
}

fn divides_pow(q: u64, e: u32, x: u64) -> bool {
    (x as u128).is_multiple_of(pow_u128(q, e))
}

/// Necessary divisibility of the moduli for a nonempty Kloosterman set.
pub fn divisibility_check(n: usize, q: u64, w: &WeylElement, c: &[u64]) -> Result<Divisibility> {
    if w.n() != n || c.len() != n - 1 {
        return Err(precondition("dimension of w or c does not match n"));
    }
    if w.block_type().is_none() {
        return Err(precondition(format!("{} is not block shaped", w.name())));
    }
    if w.is_identity() {
        return Ok(Divisibility {
            case: DivisibilityCase::Identity,
            vanishes: c.iter().any(|&x| x != 1),
            strengthened_vanishes: None,
            note: None,
        });
    }
    let nn = n as u32;
    if w.is_special(SpecialWeyl::WStar) {
        return Ok(Divisibility {
            case: DivisibilityCase::WStar,
            vanishes: !c.iter().all(|&x| divides_pow(q, nn, x)),
            strengthened_vanishes: None,
            note: None,
        });
    }
    if w.is_special(SpecialWeyl::VoronoiW1) {
        let gamma = c[n - 2];
        let shape = (2..n).all(|j| Some(c[j - 1] as u128) == (gamma as u128).checked_pow((n - j) as u32))
            && gamma > 0
            && {
                let g = (gamma as u128).pow(nn - 1);
                (c[0] as u128).is_multiple_of(g) && num_integer::gcd((c[0] as u128 / g) as u64, q) == 1
            };
        if !shape {
            return Ok(Divisibility {
                case: DivisibilityCase::Voronoi,
                vanishes: false,
                strengthened_vanishes: Some(false),
                note: Some("moduli not of the form (m γ^{n-1}, γ^{n-2}, ..., γ) with (m, q) = 1".into()),
            });
        }
        let vanishes = !(gamma as u128).pow(nn - 1).is_multiple_of(pow_u128(q, nn + 1));
        // (n-1) v_p(γ) ≥ (n+1 + 2/(n-2)) v_p(q), cleared of denominators
        let strengthened = if n >= 3 {
            let f = crate::exactalg::arith::factorize(q);
            Some(f.iter().any(|&(p, e)| {
                let vg = valuation(gamma, p) as u64;
                let lhs = (nn as u64 - 1) * vg * (nn as u64 - 2);
                let rhs = ((nn as u64 + 1) * (nn as u64 - 2) + 2) * e as u64;
                lhs < rhs
            }))
        } else {
            None
        };
        return Ok(Divisibility { case: DivisibilityCase::Voronoi, vanishes, strengthened_vanishes: strengthened, note: None });
    }
    let vanishes = !c.iter().any(|&x| divides_pow(q, nn + 1, x));
    let strong = (nn + 2).min(2 * nn - 2);
    Ok(Divisibility {
        case: DivisibilityCase::Generic,
        vanishes,
        strengthened_vanishes: Some(!c.iter().any(|&x| divides_pow(q, strong, x))),
        note: None,
    })
}

/// Whether a nonempty set with these parameters respects the divisibility law.
pub fn divisibility_holds(query: &KloostermanQuery) -> Result<bool> {
    Ok(divisibility_check(query.n, query.q, &query.w, &query.c)?.admissible())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SupportForm {
    Vanishes,
    /// `c_j = q^n r s^{j-1}`.
    FormOne { r: u64, s: u64 },
    /// `c_j = q^n r s^{n-1-j}`.
    FormTwo { r: u64, s: u64 },
}

fn progression(c: &[u64], base: u64) -> Option<(u64, u64)> {
    if base == 0 || !c[0].is_multiple_of(base) {
        return None;
    }
    let r = c[0] / base;
    let s = if c.len() > 1 {
        if !c[1].is_multiple_of(c[0]) {
            return None;
        }
        c[1] / c[0]
    } else {
        1
    };
    let mut cur = c[0] as u128;
    for &cj in &c[1..] {
        cur *= s as u128;
        if cur != cj as u128 {
            return None;
        }
    }
    Some((r, s))
}

/// Which geometric progression family, if any, contains `c`.
pub fn wstar_support_check(n: usize, q: u64, c: &[u64]) -> Result<SupportForm> {
    if c.len() + 1 != n || n < 2 {
        return Err(precondition("c must have n - 1 entries"));
    }
    let Some(base) = q.checked_pow(n as u32) else {
        return Ok(SupportForm::Vanishes);
    };
    if let Some((r, s)) = progression(c, base) {
        return Ok(SupportForm::FormOne { r, s });
    }
    let rev: Vec<u64> = c.iter().rev().copied().collect();
    if let Some((r, s)) = progression(&rev, base) {
        return Ok(SupportForm::FormTwo { r, s });
    }
    Ok(SupportForm::Vanishes)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrtFactorCheck {
    pub lhs: KloostermanSum,
    pub n_prime: Vec<i64>,
    pub n_twisted: Vec<i64>,
    pub rhs_level_q: KloostermanSum,
    pub rhs_level_one: KloostermanSum,
    pub equal: bool,
}

/// Both sides of `S_q(M, N, q c') = S_q(M, N', (q, …, q)) · S_1(M, N'', c')`.
///
/// `N'_{n-i} ≡ N_{n-i} c_{n-w(i)} c_{n-w(i+1)+1} / (c_{n-w(i)+1} c_{n-w(i+1)}) (mod q)`
/// and `N''` is `N` with its first and last entries divided by `q` modulo
/// `c'_1 ⋯ c'_{n-1}`.
pub fn crt_factor_check(
    q: u64,
    w: &WeylElement,
    m: &[i64],
    nv: &[i64],
    v: &[i8],
    c_prime: &[u64],
    budget: Budget,
) -> Result<CrtFactorCheck> {
    let n = w.n();
    if w.image(0) != n - 1 || w.image(n - 1) != 0 {
        return Err(precondition("hypothesis w(1) = n, w(n) = 1 fails"));
    }
    if c_prime.len() != n - 1 {
        return Err(precondition("c' must have n - 1 entries"));
    }
    let prod: u128 = c_prime.iter().map(|&x| x as u128).product();
    if num_integer::gcd(prod, q as u128) != 1 {
        return Err(precondition("hypothesis gcd(c'_1 ... c'_{n-1}, q) = 1 fails"));
    }
    let c_full: Vec<u64> = c_prime.iter().map(|&x| x * q).collect();
    let lhs_q = KloostermanQuery::new(q, w.clone(), m.to_vec(), nv.to_vec(), v.to_vec(), c_full)?;
    let lhs = kloosterman_sum(&lhs_q, Method::Exact, budget)?;

    let cc = |j: usize| -> i64 {
        if j == 0 || j == n {
            1
        } else {
            c_prime[j - 1] as i64
        }
    };
    let qi = q as i64;
    let mut n_prime = vec![0i64; n - 1];
    for i in 1..n {
        let wi = w.image(i - 1) + 1;
        let wi1 = w.image(i) + 1;
        let num = cc(n - wi) * cc(n + 1 - wi1);
        let den = cc(n + 1 - wi) * cc(n - wi1);
        let den_inv = if qi == 1 { 0 } else { mod_inv(den.rem_euclid(qi), qi).expect("coprime to q") };
        n_prime[n - i - 1] = (nv[n - i - 1] % qi * (num % qi) % qi * den_inv).rem_euclid(qi.max(1));
    }
    let qs = vec![q; n - 1];
    let rq = KloostermanQuery::new(q, w.clone(), m.to_vec(), n_prime.clone(), v.to_vec(), qs)?;
    let rhs_level_q = kloosterman_sum(&rq, Method::Exact, budget)?;

    let modulus = prod as i64;
    let q_bar = if modulus == 1 { 0 } else { mod_inv(qi.rem_euclid(modulus), modulus).expect("coprime") };
    let mut n_twisted = nv.to_vec();
    if modulus > 1 {
        n_twisted[0] = (n_twisted[0] * q_bar).rem_euclid(modulus);
        let last = n - 2;
        n_twisted[last] = (n_twisted[last] * q_bar).rem_euclid(modulus);
    }
    let r1 = KloostermanQuery::new(1, w.clone(), m.to_vec(), n_twisted.clone(), v.to_vec(), c_prime.to_vec())?;
    let rhs_level_one = kloosterman_sum(&r1, Method::Exact, budget)?;
    let equal = lhs.value.value_eq(&rhs_level_q.value.mul(&rhs_level_one.value));
    Ok(CrtFactorCheck { lhs, n_prime, n_twisted, rhs_level_q, rhs_level_one, equal })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrtCountCheck {
    pub q_part: Vec<u64>,
    pub coprime_part: Vec<u64>,
    pub full: usize,
    pub level_q: usize,
    pub level_one: usize,
    /// Every coprime part is `≡ 1 (mod q)`. Otherwise the coprime torus
    /// shifts the congruence class at `q` and the count need not split.
    pub applicable: bool,
    pub holds: bool,
}

/// `|set_q(a ∘ c')| = |set_q(a)| · |set_1(c')|` for `a` supported on primes of `q`
/// and `c'` coprime to `q`.
pub fn crt_count_check(q: u64, w: &WeylElement, c: &[u64], budget: Budget) -> Result<CrtCountCheck> {
    let (a, cp): (Vec<u64>, Vec<u64>) = c.iter().map(|&x| crt_split(x, q)).unzip();
    let size = |lvl: u64, cv: &[u64]| -> Result<usize> {
        let query = KloostermanQuery::plain(lvl, w.clone(), cv.to_vec())?;
        Ok(enumerate(&query, Method::Exact, budget)?.len())
    };
    let full = size(q, c)?;
    let level_q = size(q, &a)?;
    let level_one = size(1, &cp)?;
    let applicable = cp.iter().all(|&x| x % q == 1 % q);
    Ok(CrtCountCheck {
        holds: !applicable || full == level_q * level_one,
        applicable,
        q_part: a,
        coprime_part: cp,
        full,
        level_q,
        level_one,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CabCount {
    pub n: usize,
    pub p: u64,
    pub alpha: u32,
    pub beta: u32,
    pub count: u64,
    #[serde(serialize_with = "crate::exactalg::ser_display")]
    pub bound: BigInt,
    pub exponent: u64,
    pub within_bound: bool,
    /// `N_p · p^{(n-1)²} = p^{(n³+3n²-10n+6)/6}`.
    pub exponent_identity: bool,
}

/// `(n³ + 3n² − 10n + 6)/6 + 2α(n−1) + (n−1)(n−2)β`.
pub fn cab_exponent(n: usize, alpha: u32, beta: u32) -> u64 {
    let n = n as u64;
    (n * n * n + 3 * n * n + 6 - 10 * n) / 6 + 2 * alpha as u64 * (n - 1) + (n - 1) * (n - 2) * beta as u64
}

/// The bound `2 p^{e(n, α, β)}` alone.
pub fn cab_bound(n: usize, p: u64, alpha: u32, beta: u32) -> BigInt {
    BigInt::from(2) * BigInt::from(p).pow(cab_exponent(n, alpha, beta) as u32)
}

fn exponent_identity(n: usize, p: u64) -> bool {
    let lhs = unipotent_index(n, p) * BigInt::from(p).pow(((n - 1) * (n - 1)) as u32);
    lhs == BigInt::from(p).pow(cab_exponent(n, 0, 0) as u32)
}

/// Count the `w_*` set on the lemma's moduli and compare with its bound.
pub fn cab_count_and_bound(n: usize, p: u64, alpha: u32, beta: u32, budget: Budget) -> Result<CabCount> {
    let set = super::enumerate_set_wstar(n, p, alpha, beta, budget)?;
    let bound = cab_bound(n, p, alpha, beta);
    let count = set.len() as u64;
    Ok(CabCount {
        n,
        p,
        alpha,
        beta,
        count,
        within_bound: BigInt::from(count) <= bound,
        exponent: cab_exponent(n, alpha, beta),
        bound,
        exponent_identity: exponent_identity(n, p),
    })
}

/// Provable chain `|S| ≤ |set| = |set_p(a)| · |set_1(c')| ≤ C_{α,β}-bound · |set_1(c')|`.
#[derive(Clone, Debug, Serialize)]
pub struct SupportChain {
    pub p_part: Vec<u64>,
    pub coprime_part: Vec<u64>,
    pub alpha: u32,
    pub beta: u32,
    pub reversed: bool,
    pub set_p_part: usize,
    /// Count for the lemma's own moduli, differing from `p_part` only by reversal.
    pub set_lemma_moduli: usize,
    pub set_coprime_part: usize,
    #[serde(serialize_with = "crate::exactalg::ser_display")]
    pub cab_bound: BigInt,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    pub query: KloostermanQuery,
    pub support: SupportForm,
    pub sum: PhaseSum,
    pub abs_value: PhaseValue,
    pub set_size: usize,
    pub abs_within_set_size: bool,
    /// `N_q (c_1⋯c_{n-1}) / q^{n-1} · (∏ c_j/q^n, q^∞)`.
    pub reference: f64,
    pub ratio: f64,
    pub chain: Option<SupportChain>,
}

/// Evaluate `S^v_{q,w_*}` and the provable chain of bounds around it.
pub fn support_bound_check(query: &KloostermanQuery, budget: Budget) -> Result<SupportReport> {
    let (n, q) = (query.n, query.q);
    if !is_squarefree(q) {
        return Err(precondition(format!("q = {q} is not squarefree")));
    }
    if !query.w.is_special(SpecialWeyl::WStar) {
        return Err(precondition("the support theorem concerns w = w_*"));
    }
    let support = wstar_support_check(n, q, &query.c)?;
    let set = enumerate(query, Method::Exact, budget)?;
    let sum = if query.is_compatible() { set.phases.clone() } else { PhaseSum::new() };
    let abs_value = abs_phase_sum(&sum);
    let set_size = set.len();
    let abs_within_set_size = abs_value.re <= set_size as f64 + abs_value.abs_error;

    let nq = unipotent_index(n, q).to_f64().unwrap_or(f64::INFINITY);
    let prod_c: f64 = query.c.iter().map(|&x| x as f64).product();
    let mut gcd_part = 1f64;
    if query.c.iter().all(|&x| (x as u128).is_multiple_of((q as u128).pow(n as u32))) {
        for &x in &query.c {
            gcd_part *= gcd_with_power(x / q.pow(n as u32), q) as f64;
        }
    }
    let reference = nq * prod_c / (q as f64).powi(n as i32 - 1) * gcd_part;
    let ratio = abs_value.re / reference;

    let chain = if is_prime(q) && support != SupportForm::Vanishes {
        chain_for(query, set_size, budget)?
    } else {
        None
    };
    Ok(SupportReport { query: query.clone(), support, sum, abs_value, set_size, abs_within_set_size, reference, ratio, chain })
}

fn chain_for(query: &KloostermanQuery, set_size: usize, budget: Budget) -> Result<Option<SupportChain>> {
    let (n, p) = (query.n, query.q);
    let (a, cp): (Vec<u64>, Vec<u64>) = query.c.iter().map(|&x| crt_split(x, p)).unzip();
    if cp.iter().any(|&x| x % p != 1 % p) {
        return Ok(None);
    }
    let exps: Vec<i64> = a.iter().map(|&x| valuation(x, p) as i64).collect();
    let fits = |e: &[i64]| -> Option<(u32, u32)> {
        let alpha = e[0] - n as i64;
        let beta = if e.len() > 1 { e[1] - e[0] } else { 0 };
        let ok = alpha >= 0
            && beta >= 0
            && e.iter().enumerate().all(|(j, &x)| x == n as i64 + alpha + beta * j as i64);
        ok.then_some((alpha as u32, beta as u32))
    };
    let rev: Vec<i64> = exps.iter().rev().copied().collect();
    let (alpha, beta, reversed) = match (fits(&exps), fits(&rev)) {
        (Some((a, b)), _) => (a, b, false),
        (None, Some((a, b))) => (a, b, true),
        _ => return Ok(None),
    };
    let w = query.w.clone();
    let count = |lvl: u64, c: Vec<u64>| -> Result<usize> {
        Ok(enumerate(&KloostermanQuery::plain(lvl, w.clone(), c)?, Method::Exact, budget)?.len())
    };
    let set_p_part = count(p, a.clone())?;
    let lemma_moduli = wstar_query(n, p, alpha, beta)?.c;
    let set_lemma_moduli = if reversed { count(p, lemma_moduli)? } else { set_p_part };
    let set_coprime_part = count(1, cp.clone())?;
    let cab = cab_bound(n, p, alpha, beta);
    let holds = set_size == set_p_part * set_coprime_part
        && set_p_part == set_lemma_moduli
        && BigInt::from(set_p_part) <= cab;
    Ok(Some(SupportChain {
        p_part: a,
        coprime_part: cp,
        alpha,
        beta,
        reversed,
        set_p_part,
        set_lemma_moduli,
        set_coprime_part,
        cab_bound: cab,
        holds,
    }))
}

/// `|S|` to 30 digits, as the real part of a [`PhaseValue`].
fn abs_phase_sum(s: &PhaseSum) -> PhaseValue {
    let v = s.eval(30);
    let abs = v.re.hypot(v.im);
    PhaseValue {
        re: abs,
        im: 0.0,
        re_decimal: format!("{abs:.15}"),
        im_decimal: "0".into(),
        precision: v.precision,
        abs_error: v.abs_error * 2.0 + 1e-12,
    }
}
