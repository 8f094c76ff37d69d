//! Counting `Γ(q)` in norm balls and lifting `SL_n(Z/qZ)` to small integral matrices.
//!
//! Both problems fix the first `n - 1` rows and solve for the last one: with
//! cofactor vector `k` of the fixed rows the last row `r` must satisfy
//! `r · k = 1`, together with a congruence and a box. Writing
//! `r = r_0 + q s` turns this into one linear equation for `s` in a box,
//! which [`LinearBox`] counts or lists.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, Result};
use crate::exactalg::arith::{div_ceil, div_floor};
use crate::exactalg::{ExactMatrix, Rational};
use crate::groups::{det_i128, for_each_sl_mod, index_sl};
use crate::Budget;

/// Entrywise maximum, or the Frobenius norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallNorm {
    Max,
    Frobenius,
}

/// Integer solutions of `Σ a_j s_j = rhs` with `lo_j ≤ s_j ≤ hi_j`.
#[derive(Clone, Debug)]
pub struct LinearBox {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LinearBox {
    pub fn count(&self) -> u64 {
        let mut total = 0u64;
        self.walk(0, self.rhs as i128, &mut vec![0; self.coeffs.len()], &mut |_, c| {
            total += c;
            true
        });
        total
    }

    /// Call `f` on each solution; stop early when it returns `false`.
    pub fn for_each(&self, mut f: impl FnMut(&[i64]) -> bool) {
        let n = self.coeffs.len();
        let mut buf = vec![0; n];
        self.walk(0, self.rhs as i128, &mut buf, &mut |s, _| {
            // expand the last two coordinates explicitly
            let mut s = s.to_vec();
            let mut go = true;
            self.last_two(&mut s, &mut |full| {
                go = f(full);
                go
            });
            go
        });
    }

    fn walk(&self, j: usize, rhs: i128, s: &mut Vec<i64>, f: &mut dyn FnMut(&[i64], u64) -> bool) -> bool {
        let n = self.coeffs.len();
        if n - j <= 2 {
            let cnt = self.tail_count(j, rhs);
            if cnt == 0 {
                return true;
            }
            s.truncate(j);
            s.resize(n, 0);
            let mut with_rhs = s.clone();
            // keep the residual right-hand side in the slot after the prefix
            with_rhs.push(rhs as i64);
            return f(&with_rhs, cnt);
        }
        for v in self.lo[j]..=self.hi[j] {
            s[j] = v;
            if !self.walk(j + 1, rhs - self.coeffs[j] as i128 * v as i128, s, f) {
                return false;
            }
        }
        true
    }

    /// Solutions of the trailing (at most two) coordinates, as a count.
    fn tail_count(&self, j: usize, rhs: i128) -> u64 {
        match self.tail_params(j, rhs) {
            Tail::Empty => 0,
            Tail::Boxes(c) => c,
            Tail::Line { t_lo, t_hi, .. } => (t_hi - t_lo + 1) as u64,
        }
    }

    fn last_two(&self, s: &mut Vec<i64>, f: &mut dyn FnMut(&[i64]) -> bool) {
        let n = self.coeffs.len();
        let rhs = s.pop().expect("residual rhs") as i128;
        let j = n.saturating_sub(2);
        match self.tail_params(j, rhs) {
            Tail::Empty => {}
            Tail::Boxes(_) => {
                // zero coefficients: every free coordinate ranges over its box
                let fixed = self.fixed_tail(j, rhs);
                let ranges: Vec<(i64, i64)> = (j..n)
                    .map(|i| match fixed[i - j] {
                        Some(v) => (v, v),
                        None => (self.lo[i], self.hi[i]),
                    })
                    .collect();
                let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                loop {
                    s[j..n].copy_from_slice(&cur);
                    if !f(s) {
                        return;
                    }
                    let mut d = 0;
                    loop {
                        if d == cur.len() {
                            return;
                        }
                        cur[d] += 1;
                        if cur[d] <= ranges[d].1 {
                            break;
                        }
                        cur[d] = ranges[d].0;
                        d += 1;
                    }
                }
            }
            Tail::Line { p0, p1, d0, d1, t_lo, t_hi } => {
                for t in t_lo..=t_hi {
                    s[j] = (p0 + t * d0) as i64;
                    if j + 1 < n {
                        s[j + 1] = (p1 + t * d1) as i64;
                    }
                    if !f(s) {
                        return;
                    }
                }
            }
        }
    }

    /// For the degenerate tail, the forced value of each coordinate (if any).
    fn fixed_tail(&self, j: usize, rhs: i128) -> Vec<Option<i64>> {
        let n = self.coeffs.len();
        let nz: Vec<usize> = (j..n).filter(|&i| self.coeffs[i] != 0).collect();
        (j..n)
            .map(|i| {
                if nz.len() == 1 && nz[0] == i {
                    Some((rhs / self.coeffs[i] as i128) as i64)
                } else {
                    None
                }
            })
            .collect()
    }

    fn tail_params(&self, j: usize, rhs: i128) -> Tail {
        let n = self.coeffs.len();
        let size = |i: usize| (self.hi[i] - self.lo[i] + 1).max(0) as u64;
        if (j..n).any(|i| size(i) == 0) {
            return Tail::Empty;
        }
        let nz: Vec<usize> = (j..n).filter(|&i| self.coeffs[i] != 0).collect();
        match nz.len() {
            0 => {
                if rhs == 0 {
                    Tail::Boxes((j..n).map(size).product())
                } else {
                    Tail::Empty
                }
            }
            1 => {
                let i = nz[0];
                let a = self.coeffs[i] as i128;
                if rhs % a != 0 {
                    return Tail::Empty;
                }
                let v = rhs / a;
                if v < self.lo[i] as i128 || v > self.hi[i] as i128 {
                    return Tail::Empty;
                }
                Tail::Boxes((j..n).filter(|&k| k != i).map(size).product())
            }
            _ => {
                let (a0, a1) = (self.coeffs[j] as i128, self.coeffs[j + 1] as i128);
                let e = a0.extended_gcd(&a1);
                let g = e.gcd;
                if rhs % g != 0 {
                    return Tail::Empty;
                }
                let m = rhs / g;
                let (p0, p1) = (e.x * m, e.y * m);
                let (d0, d1) = (a1 / g, -a0 / g);
                let range = |p: i128, d: i128, lo: i64, hi: i64| -> (i128, i128) {
                    let (lo, hi) = (lo as i128 - p, hi as i128 - p);
                    if d > 0 {
                        (div_ceil(lo, d), div_floor(hi, d))
                    } else {
                        (div_ceil(-hi, -d), div_floor(-lo, -d))
                    }
                };
                let r0 = range(p0, d0, self.lo[j], self.hi[j]);
                let r1 = range(p1, d1, self.lo[j + 1], self.hi[j + 1]);
                let (t_lo, t_hi) = (r0.0.max(r1.0), r0.1.min(r1.1));
                if t_lo > t_hi {
                    Tail::Empty
                } else {
                    Tail::Line { p0, p1, d0, d1, t_lo, t_hi }
                }
            }
        }
    }
}

enum Tail {
    Empty,
    Boxes(u64),
    Line { p0: i128, p1: i128, d0: i128, d1: i128, t_lo: i128, t_hi: i128 },
}

/// Cofactor vector `k` of the first `n - 1` rows: `det = Σ_j r_j k_j` for last row `r`.
fn cofactors(rows: &[Vec<i64>], n: usize) -> Vec<i64> {
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i128>> = rows
                .iter()
                .map(|r| (0..n).filter(|&c| c != j).map(|c| r[c] as i128).collect())
                .collect();
            let sign = if (n - 1 + j).is_multiple_of(2) { 1 } else { -1 };
            (sign * if minor.is_empty() { 1 } else { det_i128(&minor) }) as i64
        })
        .collect()
}

/// Values `v ≡ r (mod q)` with `|v| ≤ t`.
fn residue_values(r: i64, q: i64, t: i64) -> Vec<i64> {
    let r = r.rem_euclid(q);
    let start = r + q * div_ceil((-t - r) as i128, q as i128) as i64;
    (0..).map(|k| start + k * q).take_while(|&v| v <= t).collect()
}

/// Last rows `r = base + q s ≡ target (mod q)`, `|r_j| ≤ t`, with `r · cof = 1`,
/// as `(base, box for s)`.
fn last_row_box(cof: &[i64], target: &[i64], q: i64, t: i64) -> Option<(Vec<i64>, LinearBox)> {
    let n = cof.len();
    let base: Vec<i64> = target.iter().map(|&x| x.rem_euclid(q)).collect();
    let dot: i128 = base.iter().zip(cof).map(|(&b, &k)| b as i128 * k as i128).sum();
    let rem = 1 - dot;
    if rem % q as i128 != 0 {
        return None;
    }
    let lo = (0..n).map(|j| div_ceil((-t - base[j]) as i128, q as i128) as i64).collect();
    let hi = (0..n).map(|j| div_floor((t - base[j]) as i128, q as i128) as i64).collect();
    let lb = LinearBox { coeffs: cof.to_vec(), rhs: (rem / q as i128) as i64, lo, hi };
    Some((base, lb))
}

#[derive(Clone, Debug, Serialize)]
pub struct BallCountReport {
    pub n: usize,
    pub q: u64,
    #[serde(rename = "T")]
    pub t: u64,
    pub norm: BallNorm,
    pub count: u64,
    /// `T^{n(n-1)} / V_q`.
    #[serde(serialize_with = "ser_rat")]
    pub main_term: Rational,
    /// `T^{n(n-1)/2}`.
    pub secondary_term: u64,
    #[serde(serialize_with = "ser_rat")]
    pub ratio: Rational,
    pub ratio_decimal: f64,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::exactalg::fmt_rat(r))
}

/// Prefix rows `0..n-1` for the ball problem: row `i` is `≡ e_i (mod q)`.
fn prefix_rows(n: usize, q: i64, t: i64) -> Vec<Vec<Vec<i64>>> {
    (0..n - 1)
        .map(|i| {
            let per: Vec<Vec<i64>> = (0..n).map(|j| residue_values(i64::from(i == j), q, t)).collect();
            cartesian(&per)
        })
        .collect()
}

fn cartesian(lists: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|p| {
                l.iter().map(move |&v| {
                    let mut p = p.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Exact number of `γ ∈ Γ(q)` with `‖γ‖ ≤ T`.
pub fn count_ball(n: usize, q: u64, t: u64, budget: Budget) -> Result<BallCountReport> {
    count_ball_with_norm(n, q, t, BallNorm::Max, budget)
}

pub fn count_ball_with_norm(n: usize, q: u64, t: u64, norm: BallNorm, budget: Budget) -> Result<BallCountReport> {
    if !(2..=3).contains(&n) {
        return Err(precondition("ball counting is implemented for n = 2, 3"));
    }
    if t == 0 || q == 0 {
        return Err(precondition("T and q must be positive"));
    }
    let (qi, ti) = (q as i64, t as i64);
    let rows = prefix_rows(n, qi, ti);
    let prefixes: u128 = rows.iter().map(|r| r.len() as u128).product();
    budget.check("first-row tuples of the ball count", prefixes)?;
    let target: Vec<i64> = (0..n).map(|j| i64::from(j == n - 1)).collect();
    let t2 = (t as i128) * (t as i128);
    let count_for = |prefix: &[&Vec<i64>]| -> u64 {
        let fixed: Vec<Vec<i64>> = prefix.iter().map(|r| r.to_vec()).collect();
        if norm == BallNorm::Frobenius {
            let used: i128 = fixed.iter().flatten().map(|&v| v as i128 * v as i128).sum();
            if used > t2 {
                return 0;
            }
        }
        let cof = cofactors(&fixed, n);
        let Some((base, lb)) = last_row_box(&cof, &target, qi, ti) else {
            return 0;
        };
        match norm {
            BallNorm::Max => lb.count(),
            BallNorm::Frobenius => {
                let used: i128 = fixed.iter().flatten().map(|&v| v as i128 * v as i128).sum();
                let mut c = 0;
                lb.for_each(|s| {
                    let sq: i128 = s
                        .iter()
                        .zip(&base)
                        .map(|(&sj, &b)| {
                            let v = (b + qi * sj) as i128;
                            v * v
                        })
                        .sum();
                    if used + sq <= t2 {
                        c += 1;
                    }
                    true
                });
                c
            }
        }
    };
    let count: u64 = match n {
        2 => rows[0].par_iter().map(|r0| count_for(&[r0])).sum(),
        _ => rows[0]
            .par_iter()
            .map(|r0| rows[1].iter().map(|r1| count_for(&[r0, r1])).sum::<u64>())
            .sum(),
    };
    let vq = index_sl(n, q);
    let e = (n * (n - 1)) as u32;
    let main_term = Rational::new(BigInt::from(t).pow(e), vq);
    let secondary_term = t.pow(e / 2);
    let denom = &main_term + Rational::from_integer(BigInt::from(secondary_term));
    let ratio = Rational::from_integer(BigInt::from(count)) / denom;
    Ok(BallCountReport {
        n,
        q,
        t,
        norm,
        count,
        ratio_decimal: ratio.to_f64().unwrap_or(f64::NAN),
        main_term,
        secondary_term,
        ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BallPrediction {
    /// `(Tq)^ε (T^{n(n-1)}/q^{n²-1} + T^{n(n-1)/2})`.
    pub upper: f64,
    /// The bracket of `upper` alone, exactly.
    #[serde(serialize_with = "ser_rat")]
    pub upper_shape: Rational,
    /// `T^{n(n-1)}/q^{n²-1} + (T/q)^{n(n-1)/2} + 1`.
    #[serde(serialize_with = "ser_rat")]
    pub lower_shape: Rational,
}

pub fn predicted_ball_bound(n: usize, q: u64, t: u64, epsilon: f64) -> BallPrediction {
    let e = (n * (n - 1)) as u32;
    let qv = BigInt::from(q).pow((n * n - 1) as u32);
    let main = Rational::new(BigInt::from(t).pow(e), qv);
    let upper_shape = &main + Rational::from_integer(BigInt::from(t).pow(e / 2));
    let lower_shape = &main
        + Rational::new(BigInt::from(t).pow(e / 2), BigInt::from(q).pow(e / 2))
        + Rational::from_integer(1.into());
    let upper = ((t * q) as f64).powf(epsilon) * upper_shape.to_f64().unwrap_or(f64::INFINITY);
    BallPrediction { upper, upper_shape, lower_shape }
}

fn check_residue_matrix(gbar: &[Vec<i64>], q: u64) -> Result<usize> {
    let n = gbar.len();
    if !(2..=3).contains(&n) || gbar.iter().any(|r| r.len() != n) {
        return Err(precondition("smallest_lift needs a square matrix with n = 2 or 3"));
    }
    let m: Vec<Vec<i128>> = gbar.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    if (det_i128(&m) - 1).rem_euclid(q as i128) != 0 {
        return Err(precondition("det(gbar) is not 1 modulo q"));
    }
    Ok(n)
}

/// A lift of norm at most `bound`, if one exists.
pub fn lift_within(gbar: &[Vec<i64>], q: u64, bound: u64) -> Result<Option<Vec<Vec<i64>>>> {
    let n = check_residue_matrix(gbar, q)?;
    let (qi, b) = (q as i64, bound as i64);
    let rows: Vec<Vec<Vec<i64>>> = (0..n - 1)
        .map(|i| cartesian(&(0..n).map(|j| residue_values(gbar[i][j], qi, b)).collect::<Vec<_>>()))
        .collect();
    let try_prefix = |prefix: &[&Vec<i64>]| -> Option<Vec<Vec<i64>>> {
        let fixed: Vec<Vec<i64>> = prefix.iter().map(|r| r.to_vec()).collect();
        let cof = cofactors(&fixed, n);
        let (base, lb) = last_row_box(&cof, &gbar[n - 1], qi, b)?;
        let mut found = None;
        lb.for_each(|s| {
            found = Some(base.iter().zip(s).map(|(&x, &sj)| x + qi * sj).collect::<Vec<i64>>());
            false
        });
        found.map(|last| {
            let mut m = fixed;
            m.push(last);
            m
        })
    };
    let hit = match n {
        2 => rows[0].iter().find_map(|r0| try_prefix(&[r0])),
        _ => rows[0]
            .iter()
            .find_map(|r0| rows[1].iter().find_map(|r1| try_prefix(&[r0, r1]))),
    };
    Ok(hit)
}

/// A lift `γ ∈ SL_n(Z)` of `gbar` of least max-norm, and that norm.
pub fn smallest_lift(gbar: &[Vec<i64>], q: u64) -> Result<(ExactMatrix, u64)> {
    check_residue_matrix(gbar, q)?;
    let mut bound = 1;
    loop {
        if let Some(m) = lift_within(gbar, q, bound)? {
            let norm = m.iter().flatten().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            debug_assert_eq!(norm, bound);
            return Ok((ExactMatrix::from_i64(&m), norm));
        }
        bound += 1;
    }
}

/// Census settings; classes are sampled once `|SL_n(Z/qZ)|` exceeds `sample_above`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CensusConfig {
    pub epsilon: f64,
    pub sample_above: u64,
    pub sample_size: u64,
    pub seed: u64,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig { epsilon: 0.2, sample_above: 1_000_000, sample_size: 20_000, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub n: usize,
    pub q: u64,
    pub epsilon: f64,
    /// `q^{1 + 1/n + ε}`.
    pub threshold: f64,
    /// `(class, minimal norm)` in enumeration order.
    pub norms: Vec<(Vec<Vec<i64>>, u64)>,
    pub failure_count: u64,
    pub examined: u64,
    pub total: u64,
    pub sampled: bool,
    pub seed: Option<u64>,
    pub max_norm: u64,
}

impl LiftReport {
    pub fn failure_fraction(&self) -> f64 {
        self.failure_count as f64 / self.examined.max(1) as f64
    }
}

fn random_sl(n: usize, q: u64, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    loop {
        let m: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..q as i64)).collect()).collect();
        let mi: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
        if (det_i128(&mi) - 1).rem_euclid(q as i128) == 0 {
            return m;
        }
    }
}

/// Minimal lift norms over `SL_n(Z/qZ)` against the threshold `q^{1+1/n+ε}`.
pub fn lifting_census(n: usize, q: u64, cfg: CensusConfig, budget: Budget) -> Result<LiftReport> {
    if !(2..=3).contains(&n) || q < 2 {
        return Err(precondition("lifting census needs n in {2, 3} and q >= 2"));
    }
    let total = index_sl(n, q).to_u64().ok_or_else(|| precondition("group too large"))?;
    let sampled = total > cfg.sample_above;
    let classes: Vec<Vec<Vec<i64>>> = if sampled {
        budget.check("sampled lifting census classes", cfg.sample_size as u128)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..cfg.sample_size).map(|_| random_sl(n, q, &mut rng)).collect()
    } else {
        budget.check("lifting census classes", total as u128)?;
        let mut out = Vec::with_capacity(total as usize);
        for_each_sl_mod(n, q, |flat| out.push(flat.chunks(n).map(|r| r.to_vec()).collect()));
        out
    };
    let norms: Vec<(Vec<Vec<i64>>, u64)> = classes
        .into_par_iter()
        .map(|g| smallest_lift(&g, q).map(|(_, norm)| (g, norm)))
        .collect::<Result<_>>()?;
    let threshold = (q as f64).powf(1.0 + 1.0 / n as f64 + cfg.epsilon);
    let failure_count = norms.iter().filter(|(_, v)| *v as f64 > threshold).count() as u64;
    let max_norm = norms.iter().map(|(_, v)| *v).max().unwrap_or(0);
    Ok(LiftReport {
        n,
        q,
        epsilon: cfg.epsilon,
        threshold,
        examined: norms.len() as u64,
        norms,
        failure_count,
        total,
        sampled,
        seed: sampled.then_some(cfg.seed),
        max_norm,
    })
}

/// `count / (T^{n(n-1)}/V_q + T^{n(n-1)/2})` as a float, for trend tables.
pub fn ball_ratio(r: &BallCountReport) -> f64 {
    r.ratio_decimal
}
