//! Unipotent data and Gelfand-Graev averages in `GL_n(F_p)`.

mod table;

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::error::{precondition, Error, Result};
use crate::exactalg::arith::is_prime;
use crate::exactalg::{ser_display, Cyclotomic};
use crate::Budget;

pub use table::{character_table_oracle, cuspidal_indices, CharacterTable, ClassInfo, FpGroup};

/// Non-increasing list of positive parts.
pub type Partition = Vec<usize>;

/// All partitions of `n`, largest first.
pub fn partitions(n: usize) -> Vec<Partition> {
    fn go(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rem.min(max)).rev() {
            cur.push(part);
            go(rem - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Ordered compositions of `n`.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub(crate) fn rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let nr = a.len();
    let nc = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..nc {
        let Some(piv) = (rank..nr).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = crate::exactalg::arith::mod_pow(a[rank][c], p - 2, p);
        for v in a[rank].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..nr {
            if i != rank && a[i][c] != 0 {
                let f = a[i][c];
                for cc in 0..nc {
                    a[i][cc] = (a[i][cc] + p * p - f * a[rank][cc] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn mat_mul_mod(a: &[Vec<u64>], b: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(0, |s, k| (s + a[i][k] * b[k][j]) % p)).collect())
        .collect()
}

/// Jordan type of a unipotent matrix over `F_p`, or `None` if it is not unipotent.
pub(crate) fn unipotent_type_of(u: &[Vec<u64>], p: u64) -> Option<Partition> {
    let n = u.len();
    let nil: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| (u[i][j] % p + p - u64::from(i == j)) % p).collect())
        .collect();
    let mut ranks = vec![n];
    let mut pow = nil.clone();
    for _ in 0..n {
        ranks.push(rank_mod_p(&pow, p));
        pow = mat_mul_mod(&pow, &nil, p);
    }
    if ranks[n] != 0 {
        return None;
    }
    // blocks of size >= k: r_{k-1} - r_k
    let at_least: Vec<usize> = (1..=n).map(|k| ranks[k - 1] - ranks[k]).collect();
    let mut parts = Vec::new();
    for k in 1..=n {
        let next = if k < n { at_least[k] } else { 0 };
        for _ in 0..at_least[k - 1] - next {
            parts.push(k);
        }
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Some(parts)
}

/// Jordan type of a unitriangular matrix over `F_p`.
pub fn unipotent_jordan_type(u: &[Vec<u64>], p: u64) -> Result<Partition> {
    let n = u.len();
    if !is_prime(p) {
        return Err(precondition("p must be prime"));
    }
    if u.iter().any(|r| r.len() != n) {
        return Err(precondition("matrix must be square"));
    }
    for i in 0..n {
        for j in 0..=i {
            let want = u64::from(i == j);
            if u[i][j] % p != want {
                return Err(Error::Invalid("matrix is not upper unitriangular mod p".into()));
            }
        }
    }
    Ok(unipotent_type_of(u, p).expect("unitriangular matrices are unipotent"))
}

fn ser_partition_map<S: Serializer>(m: &BTreeMap<Partition, i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        let key: Vec<String> = k.iter().map(ToString::to_string).collect();
        map.serialize_entry(&format!("({})", key.join(",")), v)?;
    }
    map.end()
}

/// Character values on the unipotent classes, keyed by Jordan type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnipotentClassFunction {
    pub n: usize,
    pub p: u64,
    #[serde(serialize_with = "ser_partition_map")]
    pub values: BTreeMap<Partition, i64>,
    pub dim: i64,
}

impl UnipotentClassFunction {
    pub fn new(n: usize, p: u64, values: BTreeMap<Partition, i64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(precondition("p must be prime"));
        }
        for part in partitions(n) {
            if !values.contains_key(&part) {
                return Err(precondition(format!("no value for Jordan type {part:?}")));
            }
        }
        if values.len() != partitions(n).len() {
            return Err(precondition("values keyed by something other than partitions of n"));
        }
        let dim = values[&vec![1; n]];
        if dim <= 0 {
            return Err(precondition("value at the identity must be positive"));
        }
        Ok(UnipotentClassFunction { n, p, values, dim })
    }

    pub fn from_pairs(n: usize, p: u64, pairs: &[(&[usize], i64)]) -> Result<Self> {
        Self::new(n, p, pairs.iter().map(|(k, v)| (k.to_vec(), *v)).collect())
    }

    pub fn trivial(n: usize, p: u64) -> Result<Self> {
        Self::new(n, p, partitions(n).into_iter().map(|k| (k, 1)).collect())
    }

    pub fn value(&self, part: &[usize]) -> i64 {
        self.values[part]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GGReport {
    pub n: usize,
    pub p: u64,
    pub character: UnipotentClassFunction,
    /// Coefficients `a_i` of the additive character on the simple-root coordinates.
    pub twist: Vec<u64>,
    /// `Σ_{u of type λ} ψ̃(u)` for each Jordan type λ.
    #[serde(serialize_with = "ser_partition_map")]
    pub weighted_class_sizes: BTreeMap<Partition, i64>,
    #[serde(serialize_with = "ser_display")]
    pub sum_value: BigRational,
    pub expected: Option<i64>,
}

/// Enumerates `U(F_p)` and calls `f` with the strictly upper entries in row-major order.
fn for_each_unitriangular(n: usize, p: u64, mut f: impl FnMut(&[Vec<u64>])) {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut u: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
    let total = p.pow(slots.len() as u32);
    for _ in 0..total {
        f(&u);
        for &(i, j) in &slots {
            u[i][j] += 1;
            if u[i][j] < p {
                break;
            }
            u[i][j] = 0;
        }
    }
}

/// `p^{-n(n-1)/2} Σ_{u ∈ U(F_p)} χ(u) ψ̃(u)` with `ψ̃(u) = e(-(u_12 + … + u_{n-1,n})/p)`.
pub fn gg_sum(chi: &UnipotentClassFunction, budget: Budget) -> Result<GGReport> {
    gg_sum_twisted(chi, &vec![1; chi.n.saturating_sub(1)], budget)
}

/// As [`gg_sum`] with `ψ̃_a(u) = e(-Σ a_i u_{i,i+1}/p)`.
pub fn gg_sum_twisted(chi: &UnipotentClassFunction, twist: &[u64], budget: Budget) -> Result<GGReport> {
    let (n, p) = (chi.n, chi.p);
    if twist.len() != n.saturating_sub(1) {
        return Err(Error::DimensionMismatch { expected: n.saturating_sub(1), got: twist.len() });
    }
    let dim_u = (n * n.saturating_sub(1) / 2) as u32;
    let size = (p as u128).checked_pow(dim_u).unwrap_or(u128::MAX);
    budget.check("unitriangular matrices over F_p", size)?;

    let mut counts: BTreeMap<Partition, Vec<i128>> = BTreeMap::new();
    for_each_unitriangular(n, p, |u| {
        let ty = unipotent_type_of(u, p).expect("unitriangular");
        let s = (0..n - 1).fold(0, |acc, i| (acc + twist[i] % p * u[i][i + 1]) % p);
        counts.entry(ty).or_insert_with(|| vec![0; p as usize])[((p - s) % p) as usize] += 1;
    });
    let mut total = Cyclotomic::from_integer(p, 0);
    let mut weighted = BTreeMap::new();
    for (ty, by_exp) in &counts {
        let class_sum = Cyclotomic::from_exponents(p, by_exp.iter().enumerate().map(|(e, &c)| (e as u64, c)));
        if let Some(v) = class_sum.as_integer() {
            weighted.insert(ty.clone(), v as i64);
        }
        let chi_val = *chi.values.get(ty).ok_or_else(|| precondition(format!("no value for {ty:?}")))?;
        total = total.add(&class_sum.scale(chi_val as i128));
    }
    let num = total
        .as_integer()
        .ok_or_else(|| Error::Integrity("Gelfand-Graev average is not rational".into()))?;
    let sum_value = BigRational::new(BigInt::from(num), BigInt::from(p).pow(dim_u));
    let expected = if is_known_cuspidal(chi) { Some(1) } else { None };
    Ok(GGReport { n, p, character: chi.clone(), twist: twist.to_vec(), weighted_class_sizes: weighted, sum_value, expected })
}

fn formula_cuspidal(n: usize, p: u64) -> Option<UnipotentClassFunction> {
    let p_i = p as i64;
    let pairs: Vec<(&[usize], i64)> = match n {
        2 => vec![(&[1, 1], p_i - 1), (&[2], -1)],
        3 => vec![(&[1, 1, 1], (p_i - 1) * (p_i * p_i - 1)), (&[2, 1], -(p_i - 1)), (&[3], 1)],
        _ => return None,
    };
    UnipotentClassFunction::from_pairs(n, p, &pairs).ok()
}

fn is_known_cuspidal(chi: &UnipotentClassFunction) -> bool {
    formula_cuspidal(chi.n, chi.p).as_ref() == Some(chi)
}

/// `∏_{i=1}^{n-1} (p^i - 1)`.
pub fn cuspidal_dim(n: usize, p: u64) -> Result<BigInt> {
    if !is_prime(p) {
        return Err(precondition("p must be prime"));
    }
    Ok((1..n as u32).map(|i| BigInt::from(p).pow(i) - 1).product())
}

/// Unipotent restriction of the cuspidal characters of `GL_n(F_p)` for `n ∈ {2, 3}`,
/// checked against the full character table.
pub fn cuspidal_unipotent_char(n: usize, p: u64, budget: Budget) -> Result<UnipotentClassFunction> {
    let claimed = formula_cuspidal(n, p).ok_or_else(|| precondition("only n = 2, 3 are supported"))?;
    let table = character_table_oracle(n, p, budget)?;
    let cusp = cuspidal_indices(&table, budget)?;
    if cusp.is_empty() {
        return Err(Error::Integrity("character table has no cuspidal characters".into()));
    }
    for &i in &cusp {
        let got = unipotent_restriction(&table, i)?;
        if got != claimed {
            return Err(Error::Integrity(format!(
                "cuspidal character {i} restricts to {:?}, expected {:?}",
                got.values, claimed.values
            )));
        }
    }
    Ok(claimed)
}

/// Restriction of character `i` of the table to unipotent classes.
pub fn unipotent_restriction(table: &CharacterTable, i: usize) -> Result<UnipotentClassFunction> {
    let mut values = BTreeMap::new();
    for (r, cls) in table.classes.iter().enumerate() {
        if let Some(ty) = &cls.unipotent_type {
            let v = table.chars[i][r]
                .as_integer()
                .ok_or_else(|| Error::Integrity("irrational value on a unipotent class".into()))?;
            values.insert(ty.clone(), v as i64);
        }
    }
    UnipotentClassFunction::new(table.n, table.p, values)
}

/// Elements of the unipotent radical of the standard parabolic with block sizes `comp`.
pub(crate) fn radical_elements(comp: &[usize], p: u64) -> Vec<Vec<Vec<u64>>> {
    let n: usize = comp.iter().sum();
    let mut block = Vec::with_capacity(n);
    for (b, &len) in comp.iter().enumerate() {
        block.extend(std::iter::repeat_n(b, len));
    }
    let slots: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| block[i] < block[j]).collect();
    let mut out = Vec::new();
    let mut u: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
    for _ in 0..p.pow(slots.len() as u32) {
        out.push(u.clone());
        for &(i, j) in &slots {
            u[i][j] += 1;
            if u[i][j] < p {
                break;
            }
            u[i][j] = 0;
        }
    }
    out
}

fn validate_composition(n: usize, parts: &[usize]) -> Result<()> {
    if parts.is_empty() || parts.contains(&0) || parts.iter().sum::<usize>() != n {
        return Err(Error::Invalid(format!("{parts:?} is not a composition of {n}")));
    }
    Ok(())
}

fn q_factorial_core(m: usize, p: u64) -> BigInt {
    (1..=m as u32).map(|i| BigInt::from(p).pow(i) - 1).product()
}

/// `|GL_n(F_p)| / |P(F_p)|` for the standard parabolic with blocks `parts`.
pub fn flag_count(n: usize, parts: &[usize], p: u64) -> Result<BigInt> {
    validate_composition(n, parts)?;
    if !is_prime(p) {
        return Err(precondition("p must be prime"));
    }
    let den: BigInt = parts.iter().map(|&k| q_factorial_core(k, p)).product();
    Ok(q_factorial_core(n, p) / den)
}

/// `p^{Σ_{i<j} n_i n_j}`, the pure power form of the flag count.
pub fn power_display(parts: &[usize], p: u64) -> BigInt {
    let mut e = 0u32;
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            e += (parts[i] * parts[j]) as u32;
        }
    }
    BigInt::from(p).pow(e)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParabolicReport {
    pub n: usize,
    pub parts: Vec<usize>,
    pub p: u64,
    pub dims: Vec<u64>,
    #[serde(serialize_with = "ser_display")]
    pub flag_count: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub dim_count: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub power_display: BigInt,
    /// `flag_count / power_display`.
    pub ratio: f64,
    pub power_display_exact: bool,
}

/// `flag_count(n, parts, p) · ∏ d_i`.
pub fn parabolic_dim_count(n: usize, parts: &[usize], p: u64, dims: &[u64]) -> Result<ParabolicReport> {
    if dims.len() != parts.len() {
        return Err(Error::DimensionMismatch { expected: parts.len(), got: dims.len() });
    }
    let fc = flag_count(n, parts, p)?;
    let dim_count = &fc * dims.iter().map(|&d| BigInt::from(d)).product::<BigInt>();
    let pd = power_display(parts, p);
    let ratio = BigRational::new(fc.clone(), pd.clone()).to_f64().unwrap_or(f64::NAN);
    Ok(ParabolicReport {
        n,
        parts: parts.to_vec(),
        p,
        dims: dims.to_vec(),
        power_display_exact: fc == pd,
        flag_count: fc,
        dim_count,
        power_display: pd,
        ratio,
    })
}

/// Row echelon form of the span of `rows` over `F_p`, used as a subspace key.
fn rref_key(rows: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = rows.to_vec();
    let nr = a.len();
    let nc = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..nc {
        let Some(piv) = (rank..nr).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = crate::exactalg::arith::mod_pow(a[rank][c], p - 2, p);
        for v in a[rank].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..nr {
            if i != rank && a[i][c] != 0 {
                let f = a[i][c];
                for cc in 0..nc {
                    a[i][cc] = (a[i][cc] + p * p - f * a[rank][cc] % p) % p;
                }
            }
        }
        rank += 1;
    }
    a.truncate(rank);
    a
}

/// Counts `P(F_p) \ GL_n(F_p)` by collecting the distinct partial flags
/// spanned by leading rows of every group element.
pub fn flag_count_by_orbits(n: usize, parts: &[usize], p: u64, budget: Budget) -> Result<u64> {
    validate_composition(n, parts)?;
    let group = FpGroup::new(n, p, budget)?;
    let mut cuts = Vec::new();
    let mut acc = 0;
    for &k in &parts[..parts.len() - 1] {
        acc += k;
        cuts.push(acc);
    }
    let mut seen = HashSet::new();
    for i in 0..group.order() {
        let rows: Vec<Vec<u64>> = group.element(i).chunks(n).map(|r| r.iter().map(|&v| v as u64).collect()).collect();
        let key: Vec<Vec<Vec<u64>>> = cuts.iter().map(|&c| rref_key(&rows[..c], p)).collect();
        seen.insert(key);
    }
    Ok(seen.len() as u64)
}

/// `|GL_n(F_p)|`.
pub fn gl_order(n: usize, p: u64) -> BigInt {
    let pn = BigInt::from(p).pow(n as u32);
    (0..n as u32).map(|i| &pn - BigInt::from(p).pow(i)).product()
}

#[cfg(test)]
mod tests;
