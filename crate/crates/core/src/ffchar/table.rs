//! Character tables of `GL_n(F_p)` for small `n, p`.
//!
//! Conjugacy classes come from orbits under conjugation by generators. The
//! irreducible characters are the common eigenvectors of the class
//! multiplication matrices, found modulo a prime `P ≡ 1 (mod exp G)` and
//! lifted to exact cyclotomic values through eigenvalue multiplicities.

use std::collections::HashMap;

use serde::Serialize;

use super::{rank_mod_p, Partition};
use crate::error::{precondition, Error, Result};
use crate::exactalg::arith::{is_prime, mod_pow, primitive_root};
use crate::exactalg::Cyclotomic;
use crate::Budget;

/// `GL_n(F_p)` with elements stored as row-major digit vectors.
pub struct FpGroup {
    pub n: usize,
    pub p: u64,
    elems: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FpGroup {
    pub fn new(n: usize, p: u64, budget: Budget) -> Result<Self> {
        if !is_prime(p) || n == 0 {
            return Err(precondition("need n >= 1 and p prime"));
        }
        let cells = (p as u128).pow((n * n) as u32);
        budget.check("matrices scanned for GL_n(F_p)", cells)?;
        let mut elems = Vec::new();
        let mut digits = vec![0u8; n * n];
        for _ in 0..cells {
            let rows: Vec<Vec<u64>> = digits.chunks(n).map(|r| r.iter().map(|&v| v as u64).collect()).collect();
            if rank_mod_p(&rows, p) == n {
                elems.push(digits.clone());
            }
            for d in digits.iter_mut() {
                *d += 1;
                if (*d as u64) < p {
                    break;
                }
                *d = 0;
            }
        }
        let index = elems.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(FpGroup { n, p, elems, index })
    }

    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn element(&self, i: usize) -> &[u8] {
        &self.elems[i]
    }

    pub fn index_of(&self, m: &[u8]) -> usize {
        self.index[m]
    }

    pub fn mul(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let n = self.n;
        let p = self.p as u32;
        let mut out = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0u32;
                for k in 0..n {
                    s += a[i * n + k] as u32 * b[k * n + j] as u32;
                }
                out[i * n + j] = (s % p) as u8;
            }
        }
        out
    }

    pub fn identity(&self) -> Vec<u8> {
        let n = self.n;
        (0..n * n).map(|k| u8::from(k / n == k % n)).collect()
    }

    pub fn inverse(&self, a: &[u8]) -> Vec<u8> {
        // a^{-1} = a^{ord - 1}
        let id = self.identity();
        let mut prev = id.clone();
        let mut cur = a.to_vec();
        while cur != id {
            prev = cur.clone();
            cur = self.mul(&cur, a);
        }
        prev
    }

    pub fn element_order(&self, a: &[u8]) -> u64 {
        let id = self.identity();
        let mut cur = a.to_vec();
        let mut k = 1;
        while cur != id {
            cur = self.mul(&cur, a);
            k += 1;
        }
        k
    }

    /// Transvections `I + E_{i,i±1}` and `diag(z, 1, …, 1)`.
    fn generators(&self) -> Vec<Vec<u8>> {
        let n = self.n;
        let mut gens = Vec::new();
        for i in 0..n.saturating_sub(1) {
            for (a, b) in [(i, i + 1), (i + 1, i)] {
                let mut g = self.identity();
                g[a * n + b] = 1;
                gens.push(g);
            }
        }
        let mut d = self.identity();
        d[0] = primitive_root(self.p) as u8 % self.p as u8;
        if self.p == 2 {
            d[0] = 1;
        }
        gens.push(d);
        gens
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassInfo {
    pub representative: Vec<Vec<u64>>,
    pub size: u64,
    pub order: u64,
    /// Jordan type when the class is unipotent.
    pub unipotent_type: Option<Partition>,
}

/// Full character table with exact values in `Q(ζ_e)`, `e` the exponent of the group.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub n: usize,
    pub p: u64,
    pub group_order: u64,
    pub exponent: u64,
    pub modulus_prime: u64,
    pub classes: Vec<ClassInfo>,
    /// `chars[i][r] = χ_i(g_r)`.
    pub chars: Vec<Vec<Cyclotomic>>,
    /// Class index of each group element.
    pub class_of: Vec<usize>,
    pub inverse_class: Vec<usize>,
}

impl CharacterTable {
    pub fn degrees(&self) -> Vec<i128> {
        self.chars.iter().map(|c| c[0].as_integer().expect("degrees are integers")).collect()
    }

    /// `⟨χ_i, χ_j⟩ |G| = Σ_r |C_r| χ_i(g_r) conj(χ_j(g_r))`.
    pub fn inner_times_order(&self, i: usize, j: usize) -> Cyclotomic {
        let e = self.exponent;
        let mut acc = Cyclotomic::from_integer(e, 0);
        for (r, cls) in self.classes.iter().enumerate() {
            let t = self.chars[i][r].mul(&self.chars[j][r].conj()).scale(cls.size as i128);
            acc = acc.add(&t);
        }
        acc
    }

    /// Exact first and second orthogonality.
    pub fn orthogonality_holds(&self) -> bool {
        let k = self.classes.len();
        let g = self.group_order as i128;
        if self.chars.len() != k {
            return false;
        }
        for i in 0..k {
            for j in i..k {
                let v = self.inner_times_order(i, j);
                if v.as_integer() != Some(if i == j { g } else { 0 }) {
                    return false;
                }
            }
        }
        for r in 0..k {
            for s in r..k {
                let mut acc = Cyclotomic::from_integer(self.exponent, 0);
                for ch in &self.chars {
                    acc = acc.add(&ch[r].mul(&ch[s].conj()));
                }
                let want = if r == s { g / self.classes[r].size as i128 } else { 0 };
                if acc.as_integer() != Some(want) {
                    return false;
                }
            }
        }
        true
    }
}

fn inv_mod(a: u64, m: u64) -> u64 {
    mod_pow(a % m, m - 2, m)
}

fn next_prime_1_mod(e: u64, above: u64) -> u64 {
    let mut k = above / e + 1;
    loop {
        let cand = k * e + 1;
        if cand > above && is_prime(cand) {
            return cand;
        }
        k += 1;
    }
}

/// Null space of `m` (rows × cols) over `F_P`, as column vectors.
fn null_space(m: &[Vec<u64>], cols: usize, pp: u64) -> Vec<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = m.to_vec();
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, piv);
        let inv = inv_mod(a[r][c], pp);
        for v in a[r].iter_mut() {
            *v = *v * inv % pp;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for cc in 0..cols {
                    a[i][cc] = (a[i][cc] + pp * pp - f * a[r][cc] % pp) % pp;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = (pp - a[i][f]) % pp;
            }
            v
        })
        .collect()
}

/// Character table by the Dixon method.
pub fn character_table_oracle(n: usize, p: u64, budget: Budget) -> Result<CharacterTable> {
    let group = FpGroup::new(n, p, budget)?;
    let order = group.order();
    budget.check("group elements for the character table", order as u128)?;
    if order > 100_000 {
        return Err(Error::ResourceExceeded {
            what: "character table group order".into(),
            needed: order as u128,
            budget: 100_000,
        });
    }

    // conjugacy classes
    let gens = group.generators();
    let gens_inv: Vec<Vec<u8>> = gens.iter().map(|g| group.inverse(g)).collect();
    let mut class_of = vec![usize::MAX; order];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let id_idx = group.index_of(&group.identity());
    let mut seeds: Vec<usize> = vec![id_idx];
    seeds.extend((0..order).filter(|&i| i != id_idx));
    for start in seeds {
        if class_of[start] != usize::MAX {
            continue;
        }
        let c = members.len();
        let mut stack = vec![start];
        class_of[start] = c;
        let mut list = vec![start];
        while let Some(x) = stack.pop() {
            for (g, gi) in gens.iter().zip(&gens_inv) {
                let y = group.mul(&group.mul(g, group.element(x)), gi);
                let yi = group.index_of(&y);
                if class_of[yi] == usize::MAX {
                    class_of[yi] = c;
                    list.push(yi);
                    stack.push(yi);
                }
            }
        }
        members.push(list);
    }
    let k = members.len();
    let reps: Vec<usize> = members.iter().map(|m| m[0]).collect();
    let orders: Vec<u64> = reps.iter().map(|&r| group.element_order(group.element(r))).collect();
    let exponent = orders.iter().fold(1u64, |a, &b| num_integer::lcm(a, b));
    let inverse_class: Vec<usize> = reps
        .iter()
        .map(|&r| class_of[group.index_of(&group.inverse(group.element(r)))])
        .collect();
    let sizes: Vec<u64> = members.iter().map(|m| m.len() as u64).collect();

    // class multiplication coefficients a[j][r][s] = #{x ∈ C_j : x^{-1} z_s ∈ C_r}
    let inverses: Vec<Vec<u8>> = (0..order).map(|i| group.inverse(group.element(i))).collect();
    let mut coeff = vec![vec![vec![0u64; k]; k]; k];
    for (j, cj) in members.iter().enumerate() {
        for (s, &z) in reps.iter().enumerate() {
            for &x in cj {
                let y = group.mul(&inverses[x], group.element(z));
                coeff[j][class_of[group.index_of(&y)]][s] += 1;
            }
        }
    }

    let bound = (2.0 * (order as f64).sqrt()).ceil() as u64;
    let mut pp = next_prime_1_mod(exponent, bound);
    while (order as u64).is_multiple_of(pp) {
        pp = next_prime_1_mod(exponent, pp);
    }

    // split F_P^k into common eigenspaces
    let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..k)
        .map(|i| (0..k).map(|r| u64::from(r == i)).collect())
        .collect()];
    for a in coeff.iter().skip(1) {
        if spaces.iter().all(|s| s.len() == 1) {
            break;
        }
        let mut next = Vec::new();
        for basis in spaces {
            if basis.len() == 1 {
                next.push(basis);
                continue;
            }
            next.extend(split_space(a, &basis, k, pp)?);
        }
        spaces = next;
    }
    if spaces.len() != k || spaces.iter().any(|s| s.len() != 1) {
        return Err(Error::Integrity("class matrices did not split into one-dimensional eigenspaces".into()));
    }

    let g_root = primitive_root(pp);
    let zeta_e = mod_pow(g_root, (pp - 1) / exponent, pp);
    let mut chars = Vec::with_capacity(k);
    for basis in &spaces {
        let v = &basis[0];
        let norm = inv_mod(v[id_idx_class(&class_of, id_idx)], pp);
        let omega: Vec<u64> = v.iter().map(|&x| x * norm % pp).collect();
        // χ(1)² = |G| / Σ_r ω_r ω_{r*} / |C_r|
        let mut s = 0u64;
        for r in 0..k {
            s = (s + omega[r] * omega[inverse_class[r]] % pp * inv_mod(sizes[r] % pp, pp)) % pp;
        }
        let d2 = (order as u64 % pp) * inv_mod(s, pp) % pp;
        let dmax = (order as f64).sqrt() as u64 + 1;
        let d = (1..=dmax)
            .find(|&d| d * d % pp == d2)
            .ok_or_else(|| Error::Integrity("no admissible degree".into()))?;
        let modp: Vec<u64> = (0..k).map(|r| omega[r] * d % pp * inv_mod(sizes[r] % pp, pp) % pp).collect();
        // exact values from eigenvalue multiplicities
        let mut row = Vec::with_capacity(k);
        for r in 0..k {
            let o = orders[r];
            let zeta_o = mod_pow(zeta_e, exponent / o, pp);
            let mut powers_class = Vec::with_capacity(o as usize);
            let mut cur = group.identity();
            for _ in 0..o {
                powers_class.push(class_of[group.index_of(&cur)]);
                cur = group.mul(&cur, group.element(reps[r]));
            }
            let inv_o = inv_mod(o % pp, pp);
            let mut terms = Vec::new();
            for kk in 0..o {
                let mut m = 0u64;
                for (l, &cl) in powers_class.iter().enumerate() {
                    let z = mod_pow(zeta_o, (o - (kk * l as u64) % o) % o, pp);
                    m = (m + modp[cl] * z) % pp;
                }
                m = m * inv_o % pp;
                if m > d {
                    return Err(Error::Integrity(format!("eigenvalue multiplicity {m} exceeds degree {d}")));
                }
                if m > 0 {
                    terms.push((kk * (exponent / o), m as i128));
                }
            }
            let val = Cyclotomic::from_exponents(exponent, terms);
            if reduce_mod_p(&val, zeta_e, pp) != modp[r] {
                return Err(Error::Integrity("lifted character value disagrees modulo P".into()));
            }
            row.push(val);
        }
        chars.push(row);
    }
    chars.sort_by_key(|c| c[0].as_integer());

    let classes = reps
        .iter()
        .zip(&sizes)
        .zip(&orders)
        .map(|((&r, &size), &ord)| {
            let m: Vec<Vec<u64>> = group.element(r).chunks(n).map(|x| x.iter().map(|&v| v as u64).collect()).collect();
            let unipotent_type = super::unipotent_type_of(&m, p);
            ClassInfo { representative: m, size, order: ord, unipotent_type }
        })
        .collect();
    Ok(CharacterTable {
        n,
        p,
        group_order: order as u64,
        exponent,
        modulus_prime: pp,
        classes,
        chars,
        class_of,
        inverse_class,
    })
}

fn id_idx_class(class_of: &[usize], id_idx: usize) -> usize {
    class_of[id_idx]
}

fn reduce_mod_p(v: &Cyclotomic, zeta: u64, pp: u64) -> u64 {
    let mut acc = 0u64;
    for (i, &c) in v.coeffs().iter().enumerate() {
        let z = mod_pow(zeta, i as u64, pp);
        acc = (acc + (c.rem_euclid(pp as i128) as u64) * z) % pp;
    }
    acc
}

/// Common eigenspaces of `a` restricted to the invariant subspace spanned by `basis`.
fn split_space(a: &[Vec<u64>], basis: &[Vec<u64>], k: usize, pp: u64) -> Result<Vec<Vec<Vec<u64>>>> {
    let d = basis.len();
    // image vectors a·b for each basis vector b (columns indexed by r: (a b)_r = Σ_s a[r][s] b_s)
    let images: Vec<Vec<u64>> = basis
        .iter()
        .map(|b| (0..k).map(|r| (0..k).fold(0u64, |acc, s| (acc + a[r][s] * b[s]) % pp)).collect())
        .collect();
    // express each image in the basis: solve B c = image
    let coords: Vec<Vec<u64>> = images.iter().map(|img| solve_in_basis(basis, img, k, pp)).collect::<Result<_>>()?;
    // matrix R with R[i][j] = coordinate i of image j
    let mut out = Vec::new();
    let mut covered = 0;
    for lambda in 0..pp {
        let m: Vec<Vec<u64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let v = coords[j][i] + if i == j { pp - lambda } else { 0 };
                        v % pp
                    })
                    .collect()
            })
            .collect();
        let ns = null_space(&m, d, pp);
        if ns.is_empty() {
            continue;
        }
        covered += ns.len();
        let sub: Vec<Vec<u64>> = ns
            .iter()
            .map(|c| (0..k).map(|r| (0..d).fold(0u64, |acc, i| (acc + c[i] * basis[i][r]) % pp)).collect())
            .collect();
        out.push(sub);
        if covered == d {
            break;
        }
    }
    if covered != d {
        return Err(Error::Integrity("class matrix is not diagonalizable modulo P".into()));
    }
    Ok(out)
}

fn solve_in_basis(basis: &[Vec<u64>], target: &[u64], k: usize, pp: u64) -> Result<Vec<u64>> {
    let d = basis.len();
    // augmented k × (d+1) system
    let mut m: Vec<Vec<u64>> = (0..k)
        .map(|r| {
            let mut row: Vec<u64> = (0..d).map(|i| basis[i][r]).collect();
            row.push(target[r]);
            row
        })
        .collect();
    let mut piv_cols = Vec::new();
    let mut row = 0;
    for c in 0..d {
        let Some(pr) = (row..k).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(row, pr);
        let inv = inv_mod(m[row][c], pp);
        for v in m[row].iter_mut() {
            *v = *v * inv % pp;
        }
        for i in 0..k {
            if i != row && m[i][c] != 0 {
                let f = m[i][c];
                for cc in 0..=d {
                    m[i][cc] = (m[i][cc] + pp * pp - f * m[row][cc] % pp) % pp;
                }
            }
        }
        piv_cols.push(c);
        row += 1;
    }
    if piv_cols.len() != d || (row..k).any(|i| m[i][d] != 0) {
        return Err(Error::Integrity("subspace is not invariant".into()));
    }
    let mut x = vec![0u64; d];
    for (i, &c) in piv_cols.iter().enumerate() {
        x[c] = m[i][d];
    }
    Ok(x)
}

/// Indices of the characters with no nonzero vector fixed by any proper
/// standard parabolic radical.
pub fn cuspidal_indices(table: &CharacterTable, budget: Budget) -> Result<Vec<usize>> {
    let (n, p) = (table.n, table.p);
    let group = FpGroup::new(n, p, budget)?;
    let mut radicals = Vec::new();
    for comp in super::compositions(n).into_iter().filter(|c| c.len() >= 2) {
        radicals.push(super::radical_elements(&comp, p));
    }
    let mut out = Vec::new();
    for (i, ch) in table.chars.iter().enumerate() {
        let cusp = radicals.iter().all(|rad| {
            let mut acc = Cyclotomic::from_integer(table.exponent, 0);
            for u in rad {
                let flat: Vec<u8> = u.iter().flatten().map(|&v| v as u8).collect();
                let cls = table.class_of[group.index_of(&flat)];
                acc = acc.add(&ch[cls]);
            }
            acc.is_zero()
        });
        if cusp {
            out.push(i);
        }
    }
    Ok(out)
}
