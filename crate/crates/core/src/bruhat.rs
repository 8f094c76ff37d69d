//! Weyl elements, the Bruhat decomposition `g = x · t · w · y` with
//! `y ∈ U_w`, torus embeddings and the compatibility condition for
//! Kloosterman sums.
//!
//! A Weyl element is stored as the permutation `i ↦ w(i)` with
//! `w_{i, w(i)} = ±1` (0-based internally). Representatives have
//! determinant one; when the permutation is odd the first row carries `-1`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{precondition, Error, Result};
use crate::exactalg::{
    fmt_rat, int, unipotent_normal_form_left, unipotent_normal_form_right, ExactMatrix, Rational,
};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WeylElement {
    perm: Vec<usize>,
    sign_row: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialWeyl {
    Identity,
    WStar,
    WLong,
    VoronoiW1,
}

impl SpecialWeyl {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "id" | "identity" => Ok(SpecialWeyl::Identity),
            "wstar" | "w_star" | "w*" => Ok(SpecialWeyl::WStar),
            "wl" | "w_long" | "wlong" => Ok(SpecialWeyl::WLong),
            "w1" | "voronoi" | "voronoi_w1" => Ok(SpecialWeyl::VoronoiW1),
            _ => Err(Error::Invalid(format!("unknown Weyl element {s:?}"))),
        }
    }
}

fn is_odd(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len > 0 {
            transpositions += len - 1;
        }
    }
    transpositions % 2 == 1
}

impl WeylElement {
    /// From a 0-based permutation; the sign is placed in the first row when
    /// the permutation is odd.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let distinct: BTreeSet<_> = perm.iter().copied().collect();
        if n < 2 || distinct.len() != n || perm.iter().any(|&p| p >= n) {
            return Err(Error::Invalid(format!("not a permutation of 0..{n}: {perm:?}")));
        }
        let sign_row = is_odd(&perm).then_some(0);
        Ok(WeylElement { perm, sign_row })
    }

    /// The anti-diagonal block element with identity blocks `I_{d_1}, …, I_{d_r}`
    /// from the top-right corner down to the bottom-left.
    pub fn from_block_type(d: &[usize]) -> Result<Self> {
        if d.is_empty() || d.contains(&0) {
            return Err(Error::Invalid(format!("bad block type {d:?}")));
        }
        let n: usize = d.iter().sum();
        let mut perm = Vec::with_capacity(n);
        let mut s = 0;
        for &dk in d {
            for a in 0..dk {
                perm.push(n - s - dk + a);
            }
            s += dk;
        }
        Self::from_perm(perm)
    }

    pub fn special(n: usize, which: SpecialWeyl) -> Result<Self> {
        if n < 2 {
            return Err(precondition("Weyl elements need n >= 2"));
        }
        let blocks = match which {
            SpecialWeyl::Identity => vec![n],
            SpecialWeyl::WLong => vec![1; n],
            SpecialWeyl::WStar if n == 2 => vec![1, 1],
            SpecialWeyl::WStar => vec![1, n - 2, 1],
            SpecialWeyl::VoronoiW1 => vec![n - 1, 1],
        };
        Self::from_block_type(&blocks)
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// `w(i)` for 0-based `i`.
    pub fn image(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn sign_row(&self) -> Option<usize> {
        self.sign_row
    }

    /// The entry `w_{i, w(i)} ∈ {±1}`.
    pub fn row_sign(&self, i: usize) -> i64 {
        if self.sign_row == Some(i) {
            -1
        } else {
            1
        }
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.n()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    pub fn matrix(&self) -> ExactMatrix {
        let mut m = ExactMatrix::zero(self.n());
        for (i, &p) in self.perm.iter().enumerate() {
            m.set(i, p, int(self.row_sign(i)));
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `(d_1, …, d_r)` when the element has the anti-diagonal block shape.
    pub fn block_type(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut blocks = Vec::new();
        let mut s = 0;
        while s < n {
            let mut d = 1;
            while s + d < n && self.perm[s + d] == self.perm[s + d - 1] + 1 {
                d += 1;
            }
            if self.perm[s] + s + d != n {
                return None;
            }
            blocks.push(d);
            s += d;
        }
        Some(blocks)
    }

    pub fn is_special(&self, which: SpecialWeyl) -> bool {
        Self::special(self.n(), which).is_ok_and(|w| w == *self)
    }

    /// Short name for the special elements, else the block type or permutation.
    pub fn name(&self) -> String {
        for (which, name) in [
            (SpecialWeyl::Identity, "id"),
            (SpecialWeyl::WStar, "wstar"),
            (SpecialWeyl::WLong, "wl"),
            (SpecialWeyl::VoronoiW1, "w1"),
        ] {
            if self.is_special(which) {
                return name.to_string();
            }
        }
        match self.block_type() {
            Some(b) => format!(
                "blocks({})",
                b.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
            ),
            None => format!("perm({})", self.perm1().join(",")),
        }
    }

    fn perm1(&self) -> Vec<String> {
        self.perm.iter().map(|p| (p + 1).to_string()).collect()
    }

    /// All Weyl elements of shape `(w)` for a given `n`, one per composition.
    pub fn all_block_shaped(n: usize) -> Vec<WeylElement> {
        fn compositions(n: usize) -> Vec<Vec<usize>> {
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
        compositions(n)
            .iter()
            .map(|d| Self::from_block_type(d).expect("valid composition"))
            .collect()
    }
}

impl fmt::Debug for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeylElement({})", self.name())
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for WeylElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            name: String,
            perm: Vec<usize>,
            sign_row: Option<usize>,
            block_type: Option<Vec<usize>>,
        }
        Repr {
            name: self.name(),
            perm: self.perm.iter().map(|p| p + 1).collect(),
            sign_row: self.sign_row.map(|r| r + 1),
            block_type: self.block_type(),
        }
        .serialize(s)
    }
}

/// Free positions `(i, j)`, `i < j`, of `U_w = w^{-1} U^⊤ w ∩ U` (0-based).
/// Since `w^{-1} E_{ab} w = ± E_{w(a), w(b)}`, position `(i, j)` is free
/// exactly when `w^{-1}(i) > w^{-1}(j)`.
pub fn u_w_pattern(w: &WeylElement) -> BTreeSet<(usize, usize)> {
    let inv = w.inverse_perm();
    let n = w.n();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| inv[i] > inv[j])
        .collect()
}

/// `c^* = diag(1/c_{n-1}, c_{n-1}/c_{n-2}, …, c_2/c_1, c_1)`; entry `k`
/// (1-based) is `c_{n-k+1}/c_{n-k}` with `c_0 = c_n = 1`.
pub fn cstar_embed(c: &[Rational]) -> ExactMatrix {
    let n = c.len() + 1;
    let ext = |j: usize| -> Rational {
        if j == 0 || j == n {
            Rational::one()
        } else {
            c[j - 1].clone()
        }
    };
    let d: Vec<Rational> = (1..=n).map(|k| ext(n - k + 1) / ext(n - k)).collect();
    ExactMatrix::diag(&d)
}

pub fn cstar_embed_int(c: &[u64]) -> ExactMatrix {
    cstar_embed(&c.iter().map(|&v| int(v as i64)).collect::<Vec<_>>())
}

/// `ι(y) = diag(y_{n-1}⋯y_1, …, y_2 y_1, y_1, 1)`.
pub fn iota_embed(y: &[Rational]) -> Result<ExactMatrix> {
    if y.iter().any(|v| !v.is_positive()) {
        return Err(precondition("iota_embed needs positive entries"));
    }
    let n = y.len() + 1;
    let d: Vec<Rational> = (1..=n)
        .map(|j| y[..n - j].iter().fold(Rational::one(), |acc, v| acc * v))
        .collect();
    Ok(ExactMatrix::diag(&d))
}

/// Iwasawa `y`-coordinates of a diagonal matrix: `(t_{n-1}/t_n, …, t_1/t_2)`.
pub fn iwasawa_y(t: &ExactMatrix) -> Result<Vec<Rational>> {
    if !t.is_diagonal() {
        return Err(precondition("iwasawa_y needs a diagonal matrix"));
    }
    let n = t.n();
    let d: Vec<Rational> = (0..n).map(|i| t.get(i, i).abs()).collect();
    if d.iter().any(|v| v.is_zero()) {
        return Err(Error::Singular);
    }
    Ok((1..n).map(|i| &d[n - 1 - i] / &d[n - i]).collect())
}

/// `^w y`: the Iwasawa coordinates of `w ι(y)^{-1} w^{-1}`.
pub fn w_y(w: &WeylElement, y: &[Rational]) -> Result<Vec<Rational>> {
    let wm = w.matrix();
    let m = &(&wm * &iota_embed(y)?.inverse()?) * &wm.inverse()?;
    iwasawa_y(&m)
}

/// Factorization `g = x · t · w · y` with `x ∈ U(Q)`, `t` diagonal, `y ∈ U_w(Q)`.
#[derive(Clone, Debug, Serialize)]
pub struct BruhatData {
    pub x: ExactMatrix,
    /// Diagonal of `t`.
    #[serde(serialize_with = "ser_rats")]
    pub torus: Vec<Rational>,
    /// Moduli `c_k = |t_{n-k+1} ⋯ t_n|`; for `|det g| = 1`, `t = ε c^*`.
    #[serde(serialize_with = "ser_rats")]
    pub c: Vec<Rational>,
    /// `ε`: signs of the torus entries.
    pub torus_signs: Vec<i8>,
    pub w: WeylElement,
    pub y: ExactMatrix,
}

fn ser_rats<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(fmt_rat).collect::<Vec<_>>().serialize(s)
}

impl BruhatData {
    pub fn recompose(&self) -> ExactMatrix {
        let t = ExactMatrix::diag(&self.torus);
        &(&(&self.x * &t) * &self.w.matrix()) * &self.y
    }

    /// The moduli as positive integers, if they are.
    pub fn c_integral(&self) -> Option<Vec<u64>> {
        self.c
            .iter()
            .map(|v| if v.is_integer() { v.to_integer().to_u64() } else { None })
            .collect()
    }

    /// Canonical representatives `(x̂, ŷ)` of `U(Z) x` and `y U_w(Z)`.
    pub fn canonical(&self) -> (ExactMatrix, ExactMatrix) {
        let (_, xh) = unipotent_normal_form_left(&self.x).expect("x is unipotent");
        let (yh, _) =
            unipotent_normal_form_right(&self.y, &u_w_pattern(&self.w)).expect("y lies in U_w");
        (xh, yh)
    }
}

/// Bruhat decomposition by elimination from the bottom row up.
///
/// Row `i` of `g` equals `t_i s_i Y_{w(i)} + Σ_{r>i} x_{ir} B_r` where `B_r`
/// is row `r` of `t w y` and `Y_p` row `p` of `y`. Clearing the pivot
/// columns of the rows below (in descending order) leaves `t_i s_i Y_{w(i)}`,
/// whose leftmost nonzero entry sits at `w(i)`.
pub fn bruhat_decompose(g: &ExactMatrix) -> Result<BruhatData> {
    let n = g.n();
    if g.det().is_zero() {
        return Err(Error::Singular);
    }
    let mut x = ExactMatrix::identity(n);
    let mut b_rows: Vec<Vec<Rational>> = vec![Vec::new(); n];
    let mut pivots = vec![0usize; n];
    let mut ts = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut res = g.row(i).to_vec();
        for r in (i + 1..n).rev() {
            let p = pivots[r];
            if res[p].is_zero() {
                continue;
            }
            let f = &res[p] / &b_rows[r][p];
            for (k, v) in res.iter_mut().enumerate() {
                if !b_rows[r][k].is_zero() {
                    *v -= &f * &b_rows[r][k];
                }
            }
            x.set(i, r, f);
        }
        let p = res
            .iter()
            .position(|v| !v.is_zero())
            .ok_or(Error::Singular)?;
        pivots[i] = p;
        ts[i] = res[p].clone();
        b_rows[i] = res;
    }
    let w = WeylElement::from_perm(pivots.clone())?;
    let mut y = ExactMatrix::identity(n);
    let mut torus = vec![Rational::zero(); n];
    for i in 0..n {
        let s = int(w.row_sign(i));
        torus[i] = &ts[i] * &s;
        let lead = &ts[i];
        for (k, v) in b_rows[i].iter().enumerate() {
            y.set(pivots[i], k, v / lead);
        }
    }
    let c: Vec<Rational> = (1..n)
        .map(|k| {
            torus[n - k..]
                .iter()
                .fold(Rational::one(), |acc, t| acc * t)
                .abs()
        })
        .collect();
    let torus_signs = torus.iter().map(|t| if t.is_negative() { -1 } else { 1 }).collect();
    let data = BruhatData {
        x,
        torus,
        c,
        torus_signs,
        w,
        y,
    };
    if data.recompose() != *g {
        return Err(Error::Integrity("Bruhat factors do not recompose".into()));
    }
    Ok(data)
}

/// `c_k = |det g[last k rows, columns w(last k rows)]|`.
pub fn moduli_from_minors(g: &ExactMatrix, w: &WeylElement) -> Vec<Rational> {
    let n = g.n();
    (1..n)
        .map(|k| {
            let rows: Vec<usize> = (n - k..n).collect();
            let mut cols: Vec<usize> = rows.iter().map(|&r| w.image(r)).collect();
            cols.sort_unstable();
            g.minor(&rows, &cols).abs()
        })
        .collect()
}

/// Character index `(N, v)` of `θ_N^v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CharacterIndex {
    pub n_vec: Vec<i64>,
    pub v: Vec<i8>,
}

/// Condition making `S^v_{q,w}(M, N, c)` well defined.
///
/// Since `w E_{ij} w^{-1} = s_a s_b E_{ab}` with `a = w^{-1}(i)`, `b = w^{-1}(j)`,
/// comparing the linear forms `θ_M(c^* w x w^{-1} c^{*-1})` and `θ_N^v(x)` on
/// `x ∈ w^{-1} U w ∩ U` gives, for every `i` with `w(i) + 1 = w(i+1)`
/// (1-based, `c_0 = c_n = 1`),
///
/// `s_i s_{i+1} M_{n-i} c_{n-i+1} c_{n-i-1} / c_{n-i}² = v_{w(i)} v_{w(i)+1} N_{n-w(i)}`,
///
/// `s` the row signs of `w`. Elements not of block shape return `false`.
pub fn compatibility(w: &WeylElement, m: &[i64], nv: &[i64], v: &[i8], c: &[Rational]) -> bool {
    let n = w.n();
    if w.block_type().is_none() {
        return false;
    }
    assert_eq!(m.len(), n - 1);
    assert_eq!(nv.len(), n - 1);
    assert_eq!(c.len(), n - 1);
    assert_eq!(v.len(), n);
    let cc = |j: usize| -> Rational {
        if j == 0 || j == n {
            Rational::one()
        } else {
            c[j - 1].clone()
        }
    };
    for i in 1..n {
        let (wi, wi1) = (w.image(i - 1) + 1, w.image(i) + 1);
        if wi1 != wi + 1 {
            continue;
        }
        let sign = w.row_sign(i - 1) * w.row_sign(i);
        let lhs = int(m[n - i - 1] * sign) * cc(n - i + 1) * cc(n - i - 1) / (cc(n - i) * cc(n - i));
        let rhs = int(i64::from(v[wi - 1]) * i64::from(v[wi]) * nv[n - wi - 1]);
        if lhs != rhs {
            return false;
        }
    }
    true
}

/// Same as [`compatibility`] with integer moduli.
pub fn compatibility_int(w: &WeylElement, m: &[i64], nv: &[i64], v: &[i8], c: &[u64]) -> bool {
    let c: Vec<Rational> = c.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect();
    compatibility(w, m, nv, v, &c)
}
