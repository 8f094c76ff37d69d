use super::*;
use crate::bruhat::bruhat_decompose;
use crate::exactalg::rat;
use proptest::prelude::*;

fn w(n: usize, which: SpecialWeyl) -> WeylElement {
    WeylElement::special(n, which).unwrap()
}

/// Σ_{d mod c, (d,c)=1} e((m d + n d̄)/c), straight from the definition.
fn classical_oracle(m: i64, nn: i64, c: i64) -> PhaseSum {
    let mut s = PhaseSum::new();
    for d in 0..c {
        if num_integer::gcd(d, c) != 1 {
            continue;
        }
        let dbar = (0..c).find(|e| (d * e) % c == 1 % c).unwrap();
        s.add_term(RationalPhase::new(&rat(m * d + nn * dbar, c)), 1);
    }
    s
}

/// Every `(x, y)` with entries in `(1/h)Z ∩ [0, 1)` tested by plain matrix membership.
fn naive_set(query: &KloostermanQuery, h: i64) -> BTreeSet<(Vec<String>, Vec<String>)> {
    let n = query.n;
    let spec = query.spec().unwrap();
    let cw = &cstar_embed_int(&query.c) * &query.w.matrix();
    let xs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let ys: Vec<(usize, usize)> = u_w_pattern(&query.w).into_iter().collect();
    let slots = xs.len() + ys.len();
    let mut idx = vec![0i64; slots];
    let mut out = BTreeSet::new();
    let key = |m: &ExactMatrix| m.rows().iter().flat_map(|r| r.iter().map(crate::exactalg::fmt_rat)).collect();
    loop {
        let mut x = ExactMatrix::identity(n);
        let mut y = ExactMatrix::identity(n);
        for (s, &(i, j)) in xs.iter().enumerate() {
            x.set(i, j, rat(idx[s], h));
        }
        for (s, &(i, j)) in ys.iter().enumerate() {
            y.set(i, j, rat(idx[xs.len() + s], h));
        }
        if is_member(&(&(&x * &cw) * &y), &spec).unwrap() {
            out.insert((key(&x), key(&y)));
        }
        let mut d = 0;
        loop {
            if d == slots {
                return out;
            }
            idx[d] += 1;
            if idx[d] < h {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[test]
fn trivial_weyl_counts() {
    for n in 2..=3 {
        for q in [1u64, 2, 3] {
            let id = w(n, SpecialWeyl::Identity);
            let query = KloostermanQuery::plain(q, id.clone(), vec![1; n - 1]).unwrap();
            let s = kloosterman_sum(&query, Method::Exact, Budget::SMOKE).unwrap();
            let nq = q.pow((n * (n - 1) * (n - 2) / 6) as u32) as i128;
            assert_eq!(s.value.exact_integer(), Some(nq), "n={n} q={q}");
            let mut c = vec![1; n - 1];
            c[0] = 2;
            let query = KloostermanQuery::plain(q, id, c).unwrap();
            assert!(enumerate(&query, Method::Exact, Budget::SMOKE).unwrap().is_empty());
        }
    }
}

#[test]
fn classical_examples() {
    let wl = w(2, SpecialWeyl::WLong);
    for (c, val) in [(2u64, 1i128), (3, -1)] {
        let query = KloostermanQuery::plain(1, wl.clone(), vec![c]).unwrap();
        let s = kloosterman_sum(&query, Method::Exact, Budget::SMOKE).unwrap();
        assert_eq!(s.value.exact_integer(), Some(val));
    }
    let query = KloostermanQuery::plain(1, wl, vec![5]).unwrap();
    assert_eq!(enumerate(&query, Method::Exact, Budget::SMOKE).unwrap().len(), 4);
}

#[test]
fn n2_backends_match_classical_oracle() {
    let wl = w(2, SpecialWeyl::WLong);
    for c in 1..=24u64 {
        for (m, nn) in [(1i64, 1i64), (2, 3), (3, 4)] {
            let query = KloostermanQuery::new(1, wl.clone(), vec![m], vec![nn], vec![1, 1], vec![c]).unwrap();
            let exact = enumerate(&query, Method::Exact, Budget::SMOKE).unwrap();
            let classical = enumerate(&query, Method::ClassicalN2, Budget::SMOKE).unwrap();
            assert_eq!(exact.rep_set(), classical.rep_set());
            assert!(exact.phases.value_eq(&classical_oracle(m, nn, c as i64)), "c={c}");
        }
    }
    for q in [2u64, 3] {
        for c in 1..=40u64 {
            let query = KloostermanQuery::plain(q, wl.clone(), vec![c]).unwrap();
            let exact = enumerate(&query, Method::Exact, Budget::SMOKE).unwrap();
            let classical = enumerate(&query, Method::ClassicalN2, Budget::SMOKE).unwrap();
            assert_eq!(exact.rep_set(), classical.rep_set(), "q={q} c={c}");
        }
    }
}

#[test]
fn wstar_below_divisibility_is_empty() {
    let query = KloostermanQuery::plain(2, w(3, SpecialWeyl::WStar), vec![4, 4]).unwrap();
    assert!(enumerate(&query, Method::Exact, Budget::SMOKE).unwrap().is_empty());
}

#[test]
fn wstar_lattice_grid_and_exact_agree() {
    for (p, a, b) in [(2u64, 0u32, 0u32), (2, 1, 0), (2, 0, 1), (3, 0, 0)] {
        let lattice = enumerate_set_wstar(3, p, a, b, Budget::DESK).unwrap();
        let query = lattice.query.clone();
        let grid = enumerate_set_oracle(&query, GridHeight::Proven, Budget::DESK).unwrap();
        let exact = enumerate(&query, Method::Exact, Budget::DESK).unwrap();
        assert_eq!(lattice.is_empty(), (p, a, b) == (2, 0, 1));
        assert_eq!(lattice.rep_set(), grid.rep_set(), "p={p} a={a} b={b}");
        assert_eq!(lattice.rep_set(), exact.rep_set());
        assert!(BigInt::from(lattice.len()) <= checks::cab_bound(3, p, a, b));
    }
}

#[test]
fn exact_matches_naive_grid_on_tiny_cells() {
    let cases: Vec<(u64, WeylElement, Vec<u64>)> = vec![
        (1, w(3, SpecialWeyl::WStar), vec![2, 2]),
        (1, w(3, SpecialWeyl::WStar), vec![2, 4]),
        (1, w(3, SpecialWeyl::VoronoiW1), vec![4, 2]),
        (1, WeylElement::from_block_type(&[1, 2]).unwrap(), vec![2, 4]),
        (2, w(3, SpecialWeyl::WStar), vec![8, 8]),
        (1, w(3, SpecialWeyl::WStar), vec![3, 3]),
    ];
    for (q, we, c) in cases {
        let query = KloostermanQuery::plain(q, we.clone(), c.clone()).unwrap();
        let exact = enumerate(&query, Method::Exact, Budget::DESK).unwrap();
        let mut h = 1i64;
        for r in &exact.reps {
            for m in [&r.x, &r.y] {
                h = num_integer::lcm(h, m.common_denominator().try_into().unwrap());
            }
        }
        let naive = naive_set(&query, h);
        assert_eq!(naive, exact.rep_set(), "q={q} w={we} c={c:?} h={h}");
    }
}

#[test]
fn grid_below_proven_height_is_flagged() {
    let query = KloostermanQuery::plain(2, w(3, SpecialWeyl::WStar), vec![8, 8]).unwrap();
    let low = enumerate_set_oracle(&query, GridHeight::Uniform(2), Budget::SMOKE).unwrap();
    assert!(!low.complete);
    assert!(low.flags.iter().any(|f| f.contains("possibly incomplete")));
    let full = enumerate_set_oracle(&query, GridHeight::Proven, Budget::SMOKE).unwrap();
    assert!(full.complete);
    assert!(low.rep_set().is_subset(&full.rep_set()));
}

#[test]
fn budget_is_enforced() {
    let query = KloostermanQuery::plain(2, w(3, SpecialWeyl::WStar), vec![32, 32]).unwrap();
    let err = enumerate(&query, Method::Exact, Budget(50)).unwrap_err();
    assert!(matches!(err, Error::ResourceExceeded { .. }));
}

#[test]
fn non_squarefree_level_is_flagged() {
    let query = KloostermanQuery::plain(4, w(2, SpecialWeyl::WLong), vec![16]).unwrap();
    let s = kloosterman_sum(&query, Method::Exact, Budget::SMOKE).unwrap();
    assert!(s.flags.iter().any(|f| f.contains("not squarefree")));
}

#[test]
fn incompatible_characters_give_zero() {
    let id = w(3, SpecialWeyl::Identity);
    let query = KloostermanQuery::new(2, id, vec![1, 2], vec![1, 1], vec![1; 3], vec![1, 1]).unwrap();
    let s = kloosterman_sum(&query, Method::Exact, Budget::SMOKE).unwrap();
    assert!(!s.compatible);
    assert!(s.value.is_empty());
}

#[test]
fn divisibility_examples() {
    let ws = w(3, SpecialWeyl::WStar);
    assert!(divisibility_check(3, 2, &ws, &[8, 16]).unwrap().admissible());
    assert!(divisibility_check(3, 2, &ws, &[8, 4]).unwrap().vanishes);
    let generic = WeylElement::from_block_type(&[1, 2]).unwrap();
    let d = divisibility_check(3, 2, &generic, &[8, 8]).unwrap();
    assert_eq!(d.case, DivisibilityCase::Generic);
    assert!(d.vanishes);
    let d4 = divisibility_check(4, 2, &w(4, SpecialWeyl::WLong), &[32, 4, 4]).unwrap();
    assert_eq!(d4.case, DivisibilityCase::Generic);
    assert!(!d4.vanishes);
    assert_eq!(d4.strengthened_vanishes, Some(true));
}

#[test]
fn support_examples() {
    assert_eq!(wstar_support_check(3, 2, &[8, 24]).unwrap(), SupportForm::FormOne { r: 1, s: 3 });
    assert_eq!(wstar_support_check(3, 2, &[16, 24]).unwrap(), SupportForm::Vanishes);
    assert_eq!(wstar_support_check(3, 2, &[8, 8]).unwrap(), SupportForm::FormOne { r: 1, s: 1 });
    assert_eq!(wstar_support_check(3, 2, &[24, 8]).unwrap(), SupportForm::FormTwo { r: 1, s: 3 });
    assert_eq!(wstar_support_check(4, 2, &[16, 32, 64]).unwrap(), SupportForm::FormOne { r: 1, s: 2 });
}

#[test]
fn cab_bounds() {
    let c = cab_count_and_bound(3, 2, 0, 0, Budget::DESK).unwrap();
    assert_eq!(c.bound, BigInt::from(64));
    assert!(c.count > 0 && c.within_bound && c.exponent_identity);
    assert_eq!(checks::cab_bound(4, 2, 0, 0), BigInt::from(2 * 8192));
    assert_eq!(checks::cab_exponent(3, 0, 0), 5);
}

#[test]
fn crt_factorisation_examples() {
    let wl = w(2, SpecialWeyl::WLong);
    let r = crt_factor_check(2, &wl, &[1], &[1], &[1, 1], &[3], Budget::SMOKE).unwrap();
    assert!(r.equal);
    let r = crt_factor_check(2, &wl, &[1], &[1], &[1, 1], &[1], Budget::SMOKE).unwrap();
    assert!(r.equal);
    assert_eq!(r.rhs_level_one.value.exact_integer(), Some(1));
    let cc = crt_count_check(2, &wl, &[12], Budget::SMOKE).unwrap();
    assert!(cc.holds, "{cc:?}");
    let cc = crt_count_check(2, &w(3, SpecialWeyl::WStar), &[8, 24], Budget::DESK).unwrap();
    assert!(cc.holds && cc.applicable, "{cc:?}");
    // c' = (1, 4) ≡ 1 mod 3 splits; c' = (1, 2) moves the class at 3 and the full set is empty
    let ws = w(3, SpecialWeyl::WStar);
    let cc = crt_count_check(3, &ws, &[27, 108], Budget::DESK).unwrap();
    assert!(cc.applicable && cc.holds && cc.full == 486, "{cc:?}");
    let cc = crt_count_check(3, &ws, &[27, 54], Budget::DESK).unwrap();
    assert!(!cc.applicable && cc.full == 0 && cc.level_q * cc.level_one == 243, "{cc:?}");
}

#[test]
fn conjugate_symmetry() {
    let ws = w(3, SpecialWeyl::WStar);
    let q1 = KloostermanQuery::new(2, ws.clone(), vec![1, 3], vec![2, 1], vec![1; 3], vec![8, 8]).unwrap();
    let q2 = KloostermanQuery::new(2, ws, vec![-1, -3], vec![-2, -1], vec![1; 3], vec![8, 8]).unwrap();
    let s1 = kloosterman_sum(&q1, Method::Exact, Budget::SMOKE).unwrap();
    let s2 = kloosterman_sum(&q2, Method::Exact, Budget::SMOKE).unwrap();
    assert!(s2.value.value_eq(&s1.value.conj()));
}

fn unipotent_int(n: usize, vals: &[i64], pattern: Option<&BTreeSet<(usize, usize)>>) -> ExactMatrix {
    let mut m = ExactMatrix::identity(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if pattern.is_none_or(|p| p.contains(&(i, j))) {
                m.set(i, j, rat(vals[k % vals.len()], 1));
            }
            k += 1;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Moving `g` inside its double coset `U(Z) g U(Z)` and re-decomposing
    /// leaves the phase unchanged when the characters are compatible.
    #[test]
    fn phase_is_well_defined(
        left in proptest::collection::vec(-3i64..=3, 3),
        right in proptest::collection::vec(-3i64..=3, 3),
        pick in 0usize..8,
        m in proptest::collection::vec(-3i64..=3, 2),
    ) {
        let ws = w(3, SpecialWeyl::WStar);
        let query = KloostermanQuery::new(2, ws, m.clone(), vec![m[1], m[0]], vec![1; 3], vec![16, 32]).unwrap();
        prop_assume!(query.is_compatible());
        let set = enumerate(&query, Method::Exact, Budget::SMOKE).unwrap();
        prop_assume!(!set.is_empty());
        let rep = &set.reps[pick % set.len()];
        let cw = &cstar_embed_int(&query.c) * &query.w.matrix();
        let g = &(&rep.x * &cw) * &rep.y;
        let moved = &(&unipotent_int(3, &left, None) * &g) * &unipotent_int(3, &right, None);
        let bd = bruhat_decompose(&moved).unwrap();
        let (xh, yh) = bd.canonical();
        prop_assert_eq!(phase_of(&query, &xh, &yh), rep.phase.clone());
        prop_assert!(set.reps.iter().any(|r| r.x == xh && r.y == yh));
    }

    #[test]
    fn abs_sum_at_most_set_size(m1 in -4i64..=4, m2 in -4i64..=4, c1 in 1u64..=4, c2 in 1u64..=4) {
        let ws = w(3, SpecialWeyl::WStar);
        let query = KloostermanQuery::new(1, ws, vec![m1, m2], vec![m2, m1], vec![1; 3], vec![c1, c2]).unwrap();
        let s = kloosterman_sum(&query, Method::Exact, Budget::SMOKE).unwrap();
        prop_assert!(s.value.to_complex().norm() <= s.set_size as f64 + 1e-9);
    }
}
