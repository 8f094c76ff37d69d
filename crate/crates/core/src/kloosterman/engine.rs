//! Row-by-row enumeration of `U(Z)\(U c^* w U_w ∩ Γ(q)^♮)/U_w(Z)`.
//!
//! Write `A = x · B` with `B = t w y`, so row `k` of `A` is
//! `t_k s_k Y_{w(k)} + Σ_{r>k} x_{kr} B_r`. Rows are fixed from the bottom
//! up. In row `k` the column `w(r)`, `r > k`, involves only `x_{kr'}` with
//! `w(r') ≤ w(r)`, so taking `x_{kr}` in increasing order of `w(r)` each new
//! unknown enters one membership condition `A_{k,w(r)} ∈ off + step·Z`
//! linearly; all its solutions in `[0, 1)` are listed. The free entries of
//! `Y_{w(k)}` sit in columns untouched by those conditions and are then
//! either solved the same way or drawn from a candidate list and filtered.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::bruhat::{u_w_pattern, WeylElement};
use crate::error::{Error, Result};

pub(crate) type Q = Ratio<i128>;

/// `A_{kj} ∈ off + step·Z`, i.e. `q^{j-k} A_{kj} ≡ δ_{kj} (mod q)`.
#[derive(Clone, Debug)]
struct Cond {
    off: Q,
    step: Q,
}

fn qpow(q: i128, e: i64) -> Q {
    if e >= 0 {
        Q::from_integer(q.pow(e as u32))
    } else {
        Q::new(1, q.pow((-e) as u32))
    }
}

impl Cond {
    fn new(q: i128, k: usize, j: usize) -> Self {
        let e = j as i64 - k as i64;
        Cond {
            off: if k == j { qpow(q, -e) } else { Q::zero() },
            step: qpow(q, 1 - e),
        }
    }

    fn holds(&self, a: &Q) -> bool {
        ((a - self.off) / self.step).is_integer()
    }

    /// All `x ∈ [0, 1)` with `rest + b·x` satisfying the condition.
    fn solve(&self, rest: &Q, b: &Q) -> Vec<Q> {
        debug_assert!(!b.is_zero());
        let u = (rest - self.off) / self.step;
        let beta = b / self.step;
        // rest + b x = off + step m  ⇔  x = (m - u) / beta
        let (lo, hi) = if beta.is_positive() {
            // m ∈ [u, u + beta)
            (u.ceil().to_integer(), (u + beta).ceil().to_integer() - 1)
        } else {
            // m ∈ (u + beta, u]
            ((u + beta).floor().to_integer() + 1, u.floor().to_integer())
        };
        (lo..=hi).map(|m| (Q::from_integer(m) - u) / beta).collect()
    }
}

/// Where the free entries of `y` come from.
#[derive(Clone, Debug)]
pub(crate) enum YSource {
    /// Solve each entry from its column condition.
    Solve,
    /// Candidate lists per free position `(row, col)` of `y`.
    Lists(HashMap<(usize, usize), Vec<Q>>),
}

/// Lattice the solved `x` entries are required to lie in; a solved entry
/// outside it is reported as an integrity failure.
#[derive(Clone, Debug)]
pub(crate) struct XLattice {
    pub p: i128,
    /// `(den, corner)`: entry times `den` is integral, and `≡ 1 (mod p)` when `corner`.
    pub entries: HashMap<(usize, usize), (i128, bool)>,
}

impl XLattice {
    fn check(&self, pos: (usize, usize), x: &Q) -> bool {
        let Some(&(den, corner)) = self.entries.get(&pos) else {
            return true;
        };
        let v = x * Q::from_integer(den);
        if !v.is_integer() {
            return false;
        }
        !corner || (v.to_integer() - 1).mod_floor(&self.p) == 0
    }
}

struct RowPlan {
    k: usize,
    pivot: usize,
    ts: Q,
    /// Rows `r > k` sorted by `w(r)`.
    xs: Vec<usize>,
    /// Columns to check after the first `i` entries of `xs` are fixed.
    checks: Vec<Vec<usize>>,
    yfree: Vec<usize>,
    conds: Vec<Cond>,
}

pub(crate) struct Engine {
    n: usize,
    w: WeylElement,
    t: Vec<Q>,
    m: Vec<i64>,
    nv: Vec<i64>,
    v: Vec<i8>,
    plans: Vec<RowPlan>,
    ysrc: YSource,
    xlat: Option<XLattice>,
    budget: u128,
    nodes: AtomicU64,
}

/// One element `(x̂, ŷ)` with its phase `θ_M(x̂) θ_N^v(ŷ)` as a rational mod 1.
pub(crate) type RawRep = (Vec<Vec<Q>>, Vec<Vec<Q>>, Q);

#[derive(Clone)]
struct State {
    x: Vec<Vec<Q>>,
    y: Vec<Vec<Q>>,
    b: Vec<Vec<Q>>,
    phase: Q,
}

impl Engine {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        q: u64,
        w: &WeylElement,
        c: &[u64],
        m: &[i64],
        nv: &[i64],
        v: &[i8],
        ysrc: YSource,
        xlat: Option<XLattice>,
        budget: u128,
    ) -> Self {
        let n = w.n();
        let q = q as i128;
        let cc = |j: usize| -> i128 {
            if j == 0 || j == n {
                1
            } else {
                c[j - 1] as i128
            }
        };
        // c^* entry k (0-based) = c_{n-k} / c_{n-k-1}
        let t: Vec<Q> = (0..n).map(|k| Q::new(cc(n - k), cc(n - k - 1))).collect();
        let inv = w.inverse_perm();
        let pattern = u_w_pattern(w);
        let plans = (0..n)
            .rev()
            .map(|k| {
                let pivot = w.image(k);
                let mut xs: Vec<usize> = (k + 1..n).collect();
                xs.sort_by_key(|&r| w.image(r));
                let mut checks = vec![Vec::new(); xs.len() + 1];
                for j in 0..n {
                    let fixed_by_later_rows = inv[j] > k;
                    let free_y = pattern.contains(&(pivot, j));
                    if fixed_by_later_rows || free_y {
                        continue;
                    }
                    let stage = xs.iter().filter(|&&r| w.image(r) < j).count();
                    checks[stage].push(j);
                }
                let yfree: Vec<usize> = (pivot + 1..n).filter(|&j| pattern.contains(&(pivot, j))).collect();
                RowPlan {
                    k,
                    pivot,
                    ts: t[k] * Q::from_integer(w.row_sign(k) as i128),
                    xs,
                    checks,
                    yfree,
                    conds: (0..n).map(|j| Cond::new(q, k, j)).collect(),
                }
            })
            .collect();
        Engine {
            n,
            w: w.clone(),
            t,
            m: m.to_vec(),
            nv: nv.to_vec(),
            v: v.to_vec(),
            plans,
            ysrc,
            xlat,
            budget,
            nodes: AtomicU64::new(0),
        }
    }

    pub(crate) fn torus(&self) -> &[Q] {
        &self.t
    }

    pub(crate) fn nodes(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    fn tick(&self, k: u64) -> Result<()> {
        let before = self.nodes.fetch_add(k, Ordering::Relaxed) + k;
        if before as u128 > self.budget {
            return Err(Error::ResourceExceeded {
                what: "Kloosterman set enumeration nodes".into(),
                needed: before as u128,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn y_candidates(&self, plan: &RowPlan, j: usize, rest: &Q) -> Vec<Q> {
        let cond = &plan.conds[j];
        match &self.ysrc {
            YSource::Solve => cond.solve(rest, &plan.ts),
            YSource::Lists(lists) => lists
                .get(&(plan.pivot, j))
                .map(|l| {
                    l.iter()
                        .filter(|y| cond.holds(&(rest + plan.ts * *y)))
                        .copied()
                        .collect()
                })
                .unwrap_or_default(),
        }
    }

    /// Enumerate everything; results are in a deterministic order.
    pub(crate) fn run(&self) -> Result<Vec<RawRep>> {
        let n = self.n;
        let init = State {
            x: identity(n),
            y: identity(n),
            b: vec![vec![Q::zero(); n]; n],
            phase: Q::zero(),
        };
        // split on the states after the bottom row
        let mut firsts = Vec::new();
        self.row(0, init, &mut |st| {
            firsts.push(st);
            Ok(())
        })?;
        let parts: Vec<Result<Vec<RawRep>>> = firsts
            .into_par_iter()
            .map(|st| {
                let mut out = Vec::new();
                self.descend(1, st, &mut out)?;
                Ok(out)
            })
            .collect();
        let mut all = Vec::new();
        for p in parts {
            all.extend(p?);
        }
        Ok(all)
    }

    fn descend(&self, level: usize, st: State, out: &mut Vec<RawRep>) -> Result<()> {
        if level == self.n {
            out.push((st.x, st.y, st.phase));
            return Ok(());
        }
        let mut next = Vec::new();
        self.row(level, st, &mut |s| {
            next.push(s);
            Ok(())
        })?;
        for s in next {
            self.descend(level + 1, s, out)?;
        }
        Ok(())
    }

    /// All completions of row `plan.k` given the rows below.
    fn row(&self, level: usize, st: State, emit: &mut dyn FnMut(State) -> Result<()>) -> Result<()> {
        let plan = &self.plans[level];
        let mut acc = vec![Q::zero(); self.n];
        acc[plan.pivot] = plan.ts;
        let mut st = st;
        self.x_step(plan, 0, &mut acc, &mut st, emit)
    }

    fn x_step(
        &self,
        plan: &RowPlan,
        i: usize,
        acc: &mut Vec<Q>,
        st: &mut State,
        emit: &mut dyn FnMut(State) -> Result<()>,
    ) -> Result<()> {
        self.tick(1)?;
        if !plan.checks[i].iter().all(|&j| plan.conds[j].holds(&acc[j])) {
            return Ok(());
        }
        if i == plan.xs.len() {
            return self.y_step(plan, acc, st, emit);
        }
        let r = plan.xs[i];
        let col = self.w.image(r);
        let b = st.b[r][col];
        for xv in plan.conds[col].solve(&acc[col], &b) {
            if let Some(lat) = &self.xlat {
                if !lat.check((plan.k, r), &xv) {
                    return Err(Error::Integrity(format!(
                        "solved x_({},{}) = {} lies outside the coordinate lattice",
                        plan.k + 1,
                        r + 1,
                        xv
                    )));
                }
            }
            let saved = acc.clone();
            for j in col..self.n {
                if !st.b[r][j].is_zero() {
                    acc[j] += xv * st.b[r][j];
                }
            }
            st.x[plan.k][r] = xv;
            self.x_step(plan, i + 1, acc, st, emit)?;
            *acc = saved;
        }
        st.x[plan.k][r] = Q::zero();
        Ok(())
    }

    fn y_step(
        &self,
        plan: &RowPlan,
        acc: &[Q],
        st: &State,
        emit: &mut dyn FnMut(State) -> Result<()>,
    ) -> Result<()> {
        let cands: Vec<Vec<Q>> = plan
            .yfree
            .iter()
            .map(|&j| self.y_candidates(plan, j, &acc[j]))
            .collect();
        if cands.iter().any(|c| c.is_empty()) {
            return Ok(());
        }
        let total: u64 = cands.iter().map(|c| c.len() as u64).product();
        self.tick(total)?;
        let k = plan.k;
        let p = plan.pivot;
        let n = self.n;
        let x_phase = if k + 1 < n {
            Q::from_integer(self.m[n - k - 2] as i128) * st.x[k][k + 1]
        } else {
            Q::zero()
        };
        let mut idx = vec![0usize; cands.len()];
        loop {
            let mut s = st.clone();
            for (slot, &j) in plan.yfree.iter().enumerate() {
                s.y[p][j] = cands[slot][idx[slot]];
            }
            for j in 0..n {
                s.b[k][j] = plan.ts * s.y[p][j];
            }
            let mut ph = s.phase + x_phase;
            if p + 1 < n && !s.y[p][p + 1].is_zero() {
                let sign = i128::from(self.v[p]) * i128::from(self.v[p + 1]);
                ph += Q::from_integer(self.nv[n - p - 2] as i128 * sign) * s.y[p][p + 1];
            }
            s.phase = ph - ph.floor();
            emit(s)?;
            // odometer
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return Ok(());
                }
                idx[d] += 1;
                if idx[d] < cands[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
}

fn identity(n: usize) -> Vec<Vec<Q>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}
