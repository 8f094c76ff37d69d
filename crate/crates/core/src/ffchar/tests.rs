use super::*;
use proptest::prelude::*;

fn upper(n: usize, entries: &[((usize, usize), u64)]) -> Vec<Vec<u64>> {
    let mut u: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
    for &((i, j), v) in entries {
        u[i][j] = v;
    }
    u
}

/// Floating-point Gelfand-Graev average, computed without class bookkeeping.
fn gg_float(chi: &UnipotentClassFunction, twist: &[u64]) -> f64 {
    let (n, p) = (chi.n, chi.p);
    let mut re = 0.0;
    let mut im = 0.0;
    for_each_unitriangular(n, p, |u| {
        let ty = unipotent_type_of(u, p).unwrap();
        let s: u64 = (0..n - 1).map(|i| twist[i] * u[i][i + 1]).sum();
        let ang = -2.0 * std::f64::consts::PI * (s % p) as f64 / p as f64;
        let v = chi.value(&ty) as f64;
        re += v * ang.cos();
        im += v * ang.sin();
    });
    assert!(im.abs() < 1e-9);
    re / (p as f64).powi((n * (n - 1) / 2) as i32)
}

#[test]
fn jordan_type_examples() {
    assert_eq!(unipotent_jordan_type(&upper(3, &[]), 5).unwrap(), vec![1, 1, 1]);
    assert_eq!(unipotent_jordan_type(&upper(3, &[((0, 1), 1), ((1, 2), 2)]), 3).unwrap(), vec![3]);
    assert_eq!(unipotent_jordan_type(&upper(3, &[((0, 2), 1)]), 2).unwrap(), vec![2, 1]);
    assert_eq!(unipotent_jordan_type(&upper(4, &[((0, 1), 1), ((2, 3), 1)]), 2).unwrap(), vec![2, 2]);
    let bad = vec![vec![1, 0], vec![1, 1]];
    assert!(unipotent_jordan_type(&bad, 3).is_err());
    let diag = vec![vec![2, 0], vec![0, 1]];
    assert!(unipotent_jordan_type(&diag, 3).is_err());
}

#[test]
fn jordan_type_class_sizes_in_u() {
    // over F_p, U_3 splits as 1 + (p^2 - 1)... counted by rank of u - I
    for p in [2u64, 3, 5] {
        let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
        for_each_unitriangular(3, p, |u| *counts.entry(unipotent_type_of(u, p).unwrap()).or_default() += 1);
        assert_eq!(counts[&vec![1, 1, 1]], 1);
        assert_eq!(counts[&vec![3]], (p - 1) * (p - 1) * p);
        assert_eq!(counts[&vec![2, 1]], p * p * p - 1 - (p - 1) * (p - 1) * p);
    }
}

#[test]
fn partitions_and_compositions() {
    assert_eq!(partitions(4).len(), 5);
    assert_eq!(partitions(3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
    assert_eq!(compositions(4).len(), 8);
}

#[test]
fn gg_sum_examples() {
    let chi = UnipotentClassFunction::from_pairs(2, 5, &[(&[1, 1], 4), (&[2], -1)]).unwrap();
    let r = gg_sum(&chi, Budget::SMOKE).unwrap();
    assert_eq!(r.sum_value, BigRational::from_integer(1.into()));
    assert_eq!(r.expected, Some(1));

    for p in [2u64, 3, 5, 7] {
        let triv = UnipotentClassFunction::trivial(2, p).unwrap();
        let r = gg_sum(&triv, Budget::SMOKE).unwrap();
        assert_eq!(r.sum_value, BigRational::from_integer(0.into()));
        assert_eq!(r.expected, None);
    }

    let chi = UnipotentClassFunction::from_pairs(3, 2, &[(&[1, 1, 1], 3), (&[2, 1], -1), (&[3], 1)]).unwrap();
    let r = gg_sum(&chi, Budget::SMOKE).unwrap();
    assert_eq!(r.sum_value, BigRational::from_integer(1.into()));
    assert_eq!(r.weighted_class_sizes[&vec![2, 1]], -3);
    assert_eq!(r.weighted_class_sizes[&vec![3]], 2);
}

#[test]
fn gg_sum_matches_float_oracle() {
    for (n, p) in [(2usize, 3u64), (3, 2), (3, 3), (3, 5), (4, 2)] {
        let values = partitions(n).into_iter().enumerate().map(|(i, k)| (k, 3 * i as i64 - 2)).collect::<BTreeMap<_, _>>();
        let mut values = values;
        values.insert(vec![1; n], 7);
        let chi = UnipotentClassFunction::new(n, p, values).unwrap();
        let exact = gg_sum(&chi, Budget::SMOKE).unwrap().sum_value.to_f64().unwrap();
        assert!((exact - gg_float(&chi, &vec![1; n - 1])).abs() < 1e-9, "n={n} p={p}");
    }
}

#[test]
fn gg_sum_budget() {
    let chi = UnipotentClassFunction::trivial(4, 7).unwrap();
    assert!(matches!(gg_sum(&chi, Budget(1000)), Err(Error::ResourceExceeded { .. })));
}

#[test]
fn cuspidal_gg_sum_is_one_for_every_twist() {
    for (n, p) in [(2usize, 2u64), (2, 3), (2, 5), (2, 7), (3, 2), (3, 3), (3, 5)] {
        let chi = formula_cuspidal(n, p).unwrap();
        let twists: Vec<Vec<u64>> = if n == 2 {
            (1..p).map(|a| vec![a]).collect()
        } else {
            (1..p).flat_map(|a| (1..p).map(move |b| vec![a, b])).collect()
        };
        for a in twists {
            let r = gg_sum_twisted(&chi, &a, Budget::SMOKE).unwrap();
            assert_eq!(r.sum_value, BigRational::from_integer(1.into()), "n={n} p={p} a={a:?}");
        }
    }
}

#[test]
fn cuspidal_dim_examples() {
    assert_eq!(cuspidal_dim(2, 5).unwrap(), 4.into());
    assert_eq!(cuspidal_dim(3, 2).unwrap(), 3.into());
    assert_eq!(cuspidal_dim(2, 2).unwrap(), 1.into());
    assert_eq!(cuspidal_dim(3, 3).unwrap(), 16.into());
    assert!(cuspidal_dim(2, 4).is_err());
}

#[test]
fn table_gl2_f2_is_s3() {
    let t = character_table_oracle(2, 2, Budget::SMOKE).unwrap();
    assert_eq!(t.group_order, 6);
    assert_eq!(t.classes.len(), 3);
    assert_eq!(t.degrees(), vec![1, 1, 2]);
    assert!(t.orthogonality_holds());
    let cusp = cuspidal_indices(&t, Budget::SMOKE).unwrap();
    assert_eq!(cusp.len(), 1);
    assert_eq!(t.degrees()[cusp[0]], 1);
}

#[test]
fn table_gl2_f3() {
    let t = character_table_oracle(2, 3, Budget::SMOKE).unwrap();
    assert_eq!(t.group_order, 48);
    assert_eq!(t.classes.len(), 8);
    assert!(t.orthogonality_holds());
    let cusp = cuspidal_indices(&t, Budget::SMOKE).unwrap();
    assert_eq!(cusp.len(), 3);
    assert!(cusp.iter().all(|&i| t.degrees()[i] == 2));
    for i in 0..t.chars.len() {
        let norm = t.inner_times_order(i, i);
        assert_eq!(norm.as_integer(), Some(48));
    }
}

#[test]
fn table_gl3_f2() {
    let t = character_table_oracle(3, 2, Budget::SMOKE).unwrap();
    assert_eq!(t.group_order, 168);
    let mut d = t.degrees();
    d.sort_unstable();
    assert_eq!(d, vec![1, 3, 3, 6, 7, 8]);
    assert!(t.orthogonality_holds());
    let cusp = cuspidal_indices(&t, Budget::SMOKE).unwrap();
    assert_eq!(cusp.len(), 2);
}

#[test]
fn gl2_cuspidal_count() {
    for p in [2u64, 3, 5, 7] {
        let t = character_table_oracle(2, p, Budget::SMOKE).unwrap();
        assert_eq!(t.classes.len() as u64, p * p - 1);
        assert!(t.orthogonality_holds(), "p={p}");
        let cusp = cuspidal_indices(&t, Budget::SMOKE).unwrap();
        assert_eq!(cusp.len() as u64, (p * p - p) / 2, "p={p}");
        for &i in &cusp {
            assert_eq!(t.degrees()[i], p as i128 - 1);
        }
    }
}

#[test]
fn cuspidal_unipotent_char_matches_table() {
    let c = cuspidal_unipotent_char(2, 3, Budget::SMOKE).unwrap();
    assert_eq!(c.values, [(vec![1, 1], 2), (vec![2], -1)].into_iter().collect());
    let c = cuspidal_unipotent_char(3, 2, Budget::SMOKE).unwrap();
    assert_eq!(c.values, [(vec![1, 1, 1], 3), (vec![2, 1], -1), (vec![3], 1)].into_iter().collect());
    for (n, p) in [(2usize, 5u64), (2, 7), (3, 3)] {
        let c = cuspidal_unipotent_char(n, p, Budget::SMOKE).unwrap();
        assert_eq!(BigInt::from(c.dim), cuspidal_dim(n, p).unwrap());
    }
    assert!(cuspidal_unipotent_char(4, 2, Budget::SMOKE).is_err());
}

#[test]
fn parabolic_examples() {
    let r = parabolic_dim_count(3, &[2, 1], 2, &[1, 1]).unwrap();
    assert_eq!(r.dim_count, 7.into());
    assert_eq!(r.power_display, 4.into());
    assert!(!r.power_display_exact);
    assert_eq!(parabolic_dim_count(2, &[1, 1], 3, &[1, 1]).unwrap().dim_count, 4.into());
    assert_eq!(parabolic_dim_count(3, &[3], 5, &[6]).unwrap().dim_count, 6.into());
    assert!(parabolic_dim_count(3, &[2, 2], 2, &[1, 1]).is_err());
    assert!(parabolic_dim_count(3, &[3, 0], 2, &[1, 1]).is_err());
    assert_eq!(gl_order(3, 2), 168.into());
}

#[test]
fn flag_count_matches_orbits() {
    for (n, p) in [(2usize, 2u64), (2, 3), (2, 5), (3, 2), (3, 3)] {
        for comp in compositions(n) {
            let brute = flag_count_by_orbits(n, &comp, p, Budget::SMOKE).unwrap();
            assert_eq!(BigInt::from(brute), flag_count(n, &comp, p).unwrap(), "n={n} p={p} {comp:?}");
        }
    }
}

#[test]
fn flag_count_ratio_tends_to_one() {
    let ratios: Vec<f64> = [2u64, 3, 5, 7, 11, 101]
        .iter()
        .map(|&p| parabolic_dim_count(3, &[2, 1], p, &[1, 1]).unwrap().ratio)
        .collect();
    assert!(ratios.iter().all(|&r| r >= 1.0));
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    assert!(ratios.last().unwrap() - 1.0 < 0.02);
}

proptest! {
    #[test]
    fn jordan_type_is_conjugation_invariant(e01 in 0u64..5, e02 in 0u64..5, e12 in 0u64..5, t in 1u64..5, s in 0u64..5) {
        let p = 5;
        let u = upper(3, &[((0, 1), e01), ((0, 2), e02), ((1, 2), e12)]);
        // conjugate by diag(t,1,1) and by I + s E_{01}
        let g = upper(3, &[((0, 1), s)]);
        let g_inv = upper(3, &[((0, 1), (p - s) % p)]);
        let d = vec![vec![t, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let t_inv = crate::exactalg::arith::mod_pow(t, p - 2, p);
        let d_inv = vec![vec![t_inv, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let conj = mat_mul_mod(&mat_mul_mod(&mat_mul_mod(&mat_mul_mod(&d, &g, p), &u, p), &g_inv, p), &d_inv, p);
        prop_assert_eq!(unipotent_jordan_type(&u, p).unwrap(), unipotent_jordan_type(&conj, p).unwrap());
    }

    #[test]
    fn jordan_type_sums_to_n(entries in proptest::collection::vec(0u64..3, 6)) {
        let mut u = upper(4, &[]);
        let mut k = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                u[i][j] = entries[k];
                k += 1;
            }
        }
        let ty = unipotent_jordan_type(&u, 3).unwrap();
        prop_assert_eq!(ty.iter().sum::<usize>(), 4);
        prop_assert!(ty.windows(2).all(|w| w[0] >= w[1]));
    }
}
