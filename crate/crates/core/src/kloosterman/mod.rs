//! Kloosterman sets and sums for `Γ(q)^♮`.
//!
//! A Kloosterman set is `U(Z) \ (U c^* w U_w ∩ Γ(q)^♮) / U_w(Z)`, listed as
//! pairs `(x̂, ŷ)` of canonical representatives, and the sum attached to it is
//! `S^v_{q,w}(M, N, c) = Σ θ_M(x̂) θ_N^v(ŷ)`.

mod checks;
mod engine;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use serde::Serialize;

use crate::bruhat::{compatibility_int, cstar_embed_int, u_w_pattern, SpecialWeyl, WeylElement};
use crate::error::{precondition, Error, Result};
use crate::exactalg::arith::{is_prime, is_squarefree};
use crate::exactalg::{
    unipotent_normal_form_left, unipotent_normal_form_right, ExactMatrix, PhaseSum, Rational, RationalPhase,
};
use crate::groups::{is_member, CongruenceSpec};
use crate::Budget;

pub use checks::{
    cab_count_and_bound, crt_count_check, crt_factor_check, divisibility_check, divisibility_holds,
    support_bound_check, wstar_support_check, CabCount, CrtCountCheck, CrtFactorCheck, Divisibility,
    DivisibilityCase, SupportForm, SupportReport,
};

use engine::{Engine, XLattice, YSource, Q};

/// Parameters of one Kloosterman sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KloostermanQuery {
    pub n: usize,
    pub q: u64,
    pub w: WeylElement,
    pub v: Vec<i8>,
    #[serde(rename = "M")]
    pub m: Vec<i64>,
    #[serde(rename = "N")]
    pub nv: Vec<i64>,
    pub c: Vec<u64>,
}

impl KloostermanQuery {
    pub fn new(q: u64, w: WeylElement, m: Vec<i64>, nv: Vec<i64>, v: Vec<i8>, c: Vec<u64>) -> Result<Self> {
        let n = w.n();
        if q == 0 {
            return Err(precondition("level q must be at least 1"));
        }
        for (name, len) in [("M", m.len()), ("N", nv.len()), ("c", c.len())] {
            if len != n - 1 {
                return Err(precondition(format!("{name} has length {len}, expected {}", n - 1)));
            }
        }
        if v.len() != n || v.iter().any(|&s| s != 1 && s != -1) {
            return Err(precondition("v must be a vector of n signs ±1"));
        }
        if c.contains(&0) {
            return Err(precondition("moduli must be positive"));
        }
        Ok(KloostermanQuery { n, q, w, v, m, nv, c })
    }

    /// `M = N = (1, …, 1)`, `v = (1, …, 1)`.
    pub fn plain(q: u64, w: WeylElement, c: Vec<u64>) -> Result<Self> {
        let n = w.n();
        Self::new(q, w, vec![1; n - 1], vec![1; n - 1], vec![1; n], c)
    }

    pub fn with_characters(mut self, m: Vec<i64>, nv: Vec<i64>) -> Result<Self> {
        self.m = m;
        self.nv = nv;
        Self::new(self.q, self.w, self.m, self.nv, self.v, self.c)
    }

    pub fn is_compatible(&self) -> bool {
        compatibility_int(&self.w, &self.m, &self.nv, &self.v, &self.c)
    }

    fn spec(&self) -> Result<CongruenceSpec> {
        CongruenceSpec::natural(self.n, self.q)
    }
}

/// How free `y` entries of a representative are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridHeight {
    /// Per-coordinate heights derived from the bottom-row minors.
    Proven,
    /// Every free `y` entry ranges over `{0, 1/H, …, (H-1)/H}`.
    Uniform(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Every unknown solved from its membership condition.
    Exact,
    /// Coordinate lattice for `w_*` and `c = (p^{n+α}, …, p^{n+α+β(n-2)})`.
    WstarLattice,
    /// Candidate grid for `y`; `x` solved.
    GridOracle(GridHeight),
    /// `x̂ = A/c`, `ŷ = D/c` with `AD ≡ 1 (mod c)`, `A ≡ D ≡ 1 (mod q)`.
    ClassicalN2,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::WstarLattice => "wstar_lattice",
            Method::GridOracle(_) => "grid_oracle",
            Method::ClassicalN2 => "classical_n2",
        }
    }

    pub fn parse(s: &str, height: Option<u64>) -> Result<Self> {
        Ok(match s {
            "exact" => Method::Exact,
            "wstar_lattice" | "wstar" => Method::WstarLattice,
            "grid_oracle" | "grid" => Method::GridOracle(match height {
                Some(h) => GridHeight::Uniform(h),
                None => GridHeight::Proven,
            }),
            "classical_n2" | "classical" => Method::ClassicalN2,
            _ => return Err(Error::Invalid(format!("unknown backend {s:?}"))),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// One double coset, with its phase `θ_M(x̂) θ_N^v(ŷ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Representative {
    pub x: ExactMatrix,
    pub y: ExactMatrix,
    pub phase: RationalPhase,
}

#[derive(Clone, Debug, Serialize)]
pub struct KloostermanSet {
    pub query: KloostermanQuery,
    pub method: Method,
    pub reps: Vec<Representative>,
    /// Multiset of phases over the set, before the compatibility test.
    pub phases: PhaseSum,
    /// False only for a grid below the proven heights.
    pub complete: bool,
    pub flags: Vec<String>,
    pub nodes: u64,
}

impl KloostermanSet {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Canonical representatives as a set, for comparisons across backends.
    pub fn rep_set(&self) -> BTreeSet<(Vec<String>, Vec<String>)> {
        let key = |m: &ExactMatrix| {
            m.rows()
                .iter()
                .flat_map(|r| r.iter().map(crate::exactalg::fmt_rat))
                .collect::<Vec<_>>()
        };
        self.reps.iter().map(|r| (key(&r.x), key(&r.y))).collect()
    }
}

const NON_SQUAREFREE: &str = "outside the theorem hypotheses: q not squarefree";
const POSSIBLY_INCOMPLETE: &str = "possibly incomplete: grid height below the proven coordinate heights";

/// Enumerate the Kloosterman set of `query` with the given backend.
pub fn enumerate(query: &KloostermanQuery, method: Method, budget: Budget) -> Result<KloostermanSet> {
    let (raw, complete, nodes) = match method {
        Method::ClassicalN2 => classical_raw(query, budget)?,
        _ => {
            let (ysrc, xlat, complete) = backend_inputs(query, method)?;
            let engine = Engine::new(
                query.q, &query.w, &query.c, &query.m, &query.nv, &query.v, ysrc, xlat, budget.0,
            );
            debug_assert_eq!(engine.torus().len(), query.n);
            let raw = engine.run()?;
            (raw, complete, engine.nodes())
        }
    };
    finish(query, method, raw, complete, nodes)
}

/// Set for `w_*` and `c = (p^{n+α}, p^{n+α+β}, …, p^{n+α+β(n-2)})` with `M = N = 1`.
pub fn enumerate_set_wstar(n: usize, p: u64, alpha: u32, beta: u32, budget: Budget) -> Result<KloostermanSet> {
    let query = wstar_query(n, p, alpha, beta)?;
    enumerate(&query, Method::WstarLattice, budget)
}

pub(crate) fn wstar_query(n: usize, p: u64, alpha: u32, beta: u32) -> Result<KloostermanQuery> {
    if n < 3 {
        return Err(precondition("the w_* coordinate lattice needs n >= 3"));
    }
    if !is_prime(p) {
        return Err(precondition(format!("{p} is not prime")));
    }
    let c = (0..n - 1)
        .map(|j| {
            let e = n as u32 + alpha + beta * j as u32;
            p.checked_pow(e).ok_or_else(|| precondition("moduli overflow u64"))
        })
        .collect::<Result<Vec<_>>>()?;
    KloostermanQuery::plain(p, WeylElement::special(n, SpecialWeyl::WStar)?, c)
}

/// Exhaustive grid oracle.
pub fn enumerate_set_oracle(query: &KloostermanQuery, height: GridHeight, budget: Budget) -> Result<KloostermanSet> {
    enumerate(query, Method::GridOracle(height), budget)
}

/// Per-position heights `H` such that every free entry of `ŷ` lies in `(1/H)Z`.
///
/// Row `w(k)` of `y` is read off the bottom `m = n - k` rows of `g` as a ratio
/// of `m × m` minors. The denominator minor is `±c_m` and the numerator minor
/// lies in `q^{ΣR - ΣT} Z` because `g_{ij} ∈ q^{i-j} Z`.
pub fn proven_y_heights(query: &KloostermanQuery) -> HashMap<(usize, usize), u64> {
    let n = query.n;
    let w = &query.w;
    let q = query.q as i128;
    let pattern = u_w_pattern(w);
    let mut out = HashMap::new();
    for k in 0..n {
        let m = n - k;
        let cm = if m == n { 1 } else { query.c[m - 1] as i128 };
        let sum_r: i64 = (k..n).map(|r| r as i64).sum();
        let sum_s: i64 = (k..n).map(|r| w.image(r) as i64).sum();
        let p = w.image(k);
        for j in p + 1..n {
            if !pattern.contains(&(p, j)) {
                continue;
            }
            let e = sum_s - sum_r + j as i64 - p as i64;
            let h = Ratio::from_integer(cm) * pow_q(q, e);
            out.insert((p, j), h.numer().unsigned_abs() as u64);
        }
    }
    out
}

fn pow_q(q: i128, e: i64) -> Q {
    if e >= 0 {
        Q::from_integer(q.pow(e as u32))
    } else {
        Q::new(1, q.pow((-e) as u32))
    }
}

fn backend_inputs(query: &KloostermanQuery, method: Method) -> Result<(YSource, Option<XLattice>, bool)> {
    match method {
        Method::Exact => Ok((YSource::Solve, None, true)),
        Method::GridOracle(h) => {
            let proven = proven_y_heights(query);
            let mut lists = HashMap::new();
            let mut complete = true;
            for (&pos, &ph) in &proven {
                let height = match h {
                    GridHeight::Proven => ph,
                    GridHeight::Uniform(u) => {
                        if u == 0 {
                            return Err(precondition("grid height must be positive"));
                        }
                        complete &= u % ph == 0;
                        u
                    }
                };
                lists.insert(pos, (0..height as i128).map(|a| Q::new(a, height as i128)).collect());
            }
            Ok((YSource::Lists(lists), None, complete))
        }
        Method::WstarLattice => {
            let (lists, xlat) = wstar_lattice(query)?;
            Ok((YSource::Lists(lists), Some(xlat), true))
        }
        Method::ClassicalN2 => unreachable!("handled separately"),
    }
}

/// Candidate lattice for `y` and the lattice `x` must lie in, for `w_*`.
fn wstar_lattice(query: &KloostermanQuery) -> Result<(HashMap<(usize, usize), Vec<Q>>, XLattice)> {
    let n = query.n;
    let wstar = WeylElement::special(n, SpecialWeyl::WStar)?;
    if n < 3 || query.w != wstar {
        return Err(precondition("wstar_lattice needs n >= 3 and w = w_*"));
    }
    let p = query.q;
    if !is_prime(p) {
        return Err(precondition("wstar_lattice needs prime level"));
    }
    let exps: Vec<u32> = query
        .c
        .iter()
        .map(|&cj| crate::exactalg::arith::valuation(cj, p))
        .collect();
    let ok_powers = query.c.iter().zip(&exps).all(|(&cj, &e)| p.pow(e) == cj);
    let alpha = exps[0] as i64 - n as i64;
    let beta = if n > 2 { exps[1] as i64 - exps[0] as i64 } else { 0 };
    let progression = exps
        .iter()
        .enumerate()
        .all(|(j, &e)| e as i64 == n as i64 + alpha + beta * j as i64);
    if !ok_powers || alpha < 0 || beta < 0 || !progression {
        return Err(precondition(
            "wstar_lattice needs c = (p^{n+a}, p^{n+a+b}, ..., p^{n+a+b(n-2)}) with a, b >= 0",
        ));
    }
    let (a, b) = (alpha as u32, beta as u32);
    let pi = p as i128;
    let pw = |e: u32| pi.pow(e);
    let grid = |den: i128| (0..den).map(|k| Q::new(k, den)).collect::<Vec<_>>();
    let corner = |e: u32| {
        let den = pw(e);
        (0..pw(e - 1)).map(|k| Q::new(1 + pi * k, den)).collect::<Vec<_>>()
    };
    let mut lists = HashMap::new();
    for j in 1..n - 1 {
        lists.insert((0, j), grid(pw(j as u32 + a)));
    }
    for i in 1..n - 1 {
        lists.insert((i, n - 1), grid(pw((1 + a + b) * (n - 1 - i) as u32)));
    }
    lists.insert((0, n - 1), corner(n as u32 + a));
    let mut entries = HashMap::new();
    for j in 1..n - 1 {
        entries.insert((0, j), (pw(j as u32 + a + b), false));
    }
    for i in 1..n - 1 {
        entries.insert((i, n - 1), (pw((n - 1 - i) as u32 + a), false));
    }
    entries.insert((0, n - 1), (pw(n as u32 + a), true));
    for i in 1..n - 1 {
        for j in i + 1..n - 1 {
            entries.insert((i, j), (pw((j - i - 1) as u32 + a + b), false));
        }
    }
    Ok((lists, XLattice { p: pi, entries }))
}

type Raw = Vec<(Vec<Vec<Q>>, Vec<Vec<Q>>, Q)>;

fn classical_raw(query: &KloostermanQuery, budget: Budget) -> Result<(Raw, bool, u64)> {
    if query.n != 2 || !query.w.is_special(SpecialWeyl::WLong) {
        return Err(precondition("classical_n2 needs n = 2 and w = w_l"));
    }
    let (q, c) = (query.q as i128, query.c[0] as i128);
    budget.check("classical Kloosterman residues", c as u128)?;
    let mut raw = Vec::new();
    if c % (q * q) != 0 {
        return Ok((raw, true, c as u64));
    }
    for a in 0..c {
        if (a - 1).rem_euclid(q) != 0 {
            continue;
        }
        let Some(d) = crate::exactalg::arith::mod_inv(a as i64, c as i64) else {
            continue;
        };
        let d = d as i128;
        if (d - 1).rem_euclid(q) != 0 {
            continue;
        }
        let (xa, yd) = (Q::new(a, c), Q::new(d, c));
        let x = vec![vec![Q::from_integer(1), xa], vec![Q::from_integer(0), Q::from_integer(1)]];
        let y = vec![vec![Q::from_integer(1), yd], vec![Q::from_integer(0), Q::from_integer(1)]];
        let sign = i128::from(query.v[0]) * i128::from(query.v[1]);
        let ph = Q::from_integer(query.m[0] as i128) * xa + Q::from_integer(query.nv[0] as i128 * sign) * yd;
        raw.push((x, y, ph - ph.floor()));
    }
    Ok((raw, true, c as u64))
}

fn to_rational(v: &Q) -> Rational {
    Rational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
}

fn to_matrix(rows: &[Vec<Q>]) -> ExactMatrix {
    ExactMatrix::from_rows(rows.iter().map(|r| r.iter().map(to_rational).collect()).collect())
        .expect("square by construction")
}

/// Re-verify membership and canonical form of every representative.
fn finish(query: &KloostermanQuery, method: Method, raw: Raw, complete: bool, nodes: u64) -> Result<KloostermanSet> {
    use rayon::prelude::*;
    let spec = query.spec()?;
    let cw = &cstar_embed_int(&query.c) * &query.w.matrix();
    let pattern = u_w_pattern(&query.w);
    let reps: Vec<Representative> = raw
        .into_par_iter()
        .map(|(x, y, ph)| {
            let x = to_matrix(&x);
            let y = to_matrix(&y);
            let g = &(&x * &cw) * &y;
            if !is_member(&g, &spec)? {
                return Err(Error::Integrity(format!("representative {g} is not in the congruence subgroup")));
            }
            let (_, xh) = unipotent_normal_form_left(&x)?;
            let (yh, _) = unipotent_normal_form_right(&y, &pattern)?;
            if xh != x || yh != y {
                return Err(Error::Integrity("representative is not in canonical form".into()));
            }
            Ok(Representative { x, y, phase: RationalPhase::new(&to_rational(&ph)) })
        })
        .collect::<Result<_>>()?;
    let mut seen = HashSet::new();
    for r in &reps {
        if !seen.insert((&r.x, &r.y)) {
            return Err(Error::Integrity("duplicate representative".into()));
        }
    }
    let phases: PhaseSum = reps.iter().map(|r| (r.phase.clone(), 1)).collect();
    let mut flags = Vec::new();
    if !is_squarefree(query.q) {
        flags.push(NON_SQUAREFREE.to_string());
    }
    if !complete {
        flags.push(POSSIBLY_INCOMPLETE.to_string());
    }
    Ok(KloostermanSet { query: query.clone(), method, reps, phases, complete, flags, nodes })
}

/// `θ_M(x) θ_N^v(y)` as a phase mod 1.
pub fn phase_of(query: &KloostermanQuery, x: &ExactMatrix, y: &ExactMatrix) -> RationalPhase {
    let n = query.n;
    let mut acc = Rational::from_integer(0.into());
    for k in 0..n - 1 {
        let (mk, nk) = (query.m[n - k - 2], query.nv[n - k - 2]);
        let sign = i64::from(query.v[k]) * i64::from(query.v[k + 1]);
        acc += x.get(k, k + 1) * Rational::from_integer(mk.into());
        acc += y.get(k, k + 1) * Rational::from_integer((nk * sign).into());
    }
    RationalPhase::new(&acc)
}

/// The value of a Kloosterman sum with the bookkeeping behind it.
#[derive(Clone, Debug, Serialize)]
pub struct KloostermanSum {
    pub value: PhaseSum,
    pub set_size: usize,
    pub block_shaped: bool,
    pub compatible: bool,
    pub method: Method,
    pub complete: bool,
    pub flags: Vec<String>,
}

/// `S^v_{q,w}(M, N, c)`; zero when `w` is not block shaped or the characters
/// are incompatible.
pub fn kloosterman_sum(query: &KloostermanQuery, method: Method, budget: Budget) -> Result<KloostermanSum> {
    let block_shaped = query.w.block_type().is_some();
    let compatible = block_shaped && query.is_compatible();
    let mut flags = Vec::new();
    if !is_squarefree(query.q) {
        flags.push(NON_SQUAREFREE.to_string());
    }
    if !compatible {
        return Ok(KloostermanSum {
            value: PhaseSum::new(),
            set_size: 0,
            block_shaped,
            compatible,
            method,
            complete: true,
            flags,
        });
    }
    let set = enumerate(query, method, budget)?;
    Ok(KloostermanSum {
        value: set.phases.clone(),
        set_size: set.len(),
        block_shaped,
        compatible,
        method,
        complete: set.complete,
        flags: set.flags,
    })
}

#[cfg(test)]
mod tests;
