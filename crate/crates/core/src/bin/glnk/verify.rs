//! Invariant suites behind `glnk verify`.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use gln_kloosterman::bruhat::{SpecialWeyl, WeylElement};
use gln_kloosterman::exactalg::{rat, PhaseSum, RationalPhase};
use gln_kloosterman::ffchar;
use gln_kloosterman::groups;
use gln_kloosterman::kloosterman::{self, GridHeight, KloostermanQuery, Method, SupportForm};
use gln_kloosterman::latcount::{self, CensusConfig};
use gln_kloosterman::{Budget, Result};

use crate::report::{Record, Status};
use crate::Size;

fn record(suite: &str, anchor: &str, params: Value, f: impl FnOnce() -> Result<(Status, Value)>) -> Record {
    let command = format!("verify {suite}");
    match f() {
        Ok((status, payload)) => Record::new(&command, params, anchor, status, payload),
        Err(e) => Record::from_error(&command, params, anchor, &e),
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

pub fn run(suite: &str, size: Size, budget: Budget) -> Vec<Record> {
    match suite {
        "groups" => groups_suite(size, budget),
        "kloosterman" => kloosterman_suite(size, budget),
        "ffchar" => ffchar_suite(size, budget),
        "latcount" => latcount_suite(size, budget),
        _ => unreachable!("suite names come from clap"),
    }
}

fn groups_suite(size: Size, budget: Budget) -> Vec<Record> {
    let mut out = Vec::new();
    let sl_cases: Vec<(usize, u64)> = match size {
        Size::Smoke => (2..=5).map(|q| (2, q)).chain([(3, 2)]).collect(),
        Size::Desk => (2..=8).map(|q| (2, q)).chain([(3, 2), (3, 3)]).collect(),
        Size::Extended => (2..=12).map(|q| (2, q)).chain([(3, 2), (3, 3), (3, 4)]).collect(),
    };
    for (n, q) in sl_cases {
        out.push(record("groups", "indices", json!({ "n": n, "q": q, "check": "index_sl" }), || {
            budget.check("matrices mod q", (q as u128).pow((n * n) as u32))?;
            let formula = groups::index_sl(n, q);
            let count = groups::sl_order_exhaustive(n, q);
            Ok((pass_if(formula == count.into()), json!({ "formula": formula.to_string(), "exhaustive": count })))
        }));
    }
    let (ns, qmax) = match size {
        Size::Smoke => (2..=3, 3),
        _ => (2..=4, 5),
    };
    for n in ns {
        for q in 1..=qmax {
            out.push(record("groups", "indices", json!({ "n": n, "q": q, "check": "unipotent_index" }), || {
                let formula = groups::unipotent_index(n, q);
                let direct = groups::unipotent_index_direct(n, q)?;
                Ok((pass_if(formula == direct.into()), json!({ "formula": formula.to_string(), "direct": direct })))
            }));
        }
    }
    out
}

fn weyl(n: usize, which: SpecialWeyl) -> Result<WeylElement> {
    WeylElement::special(n, which)
}

/// `Σ_{d mod c, (d,c)=1} e((md + n d̄)/c)` by direct summation.
fn classical_sum(m: i64, nn: i64, c: i64) -> PhaseSum {
    let mut s = PhaseSum::new();
    for d in 0..c {
        if num_integer::gcd(d, c) != 1 {
            continue;
        }
        let dbar = (0..c).find(|e| (d * e) % c == 1 % c).expect("unit");
        s.add_term(RationalPhase::new(&rat(m * d + nn * dbar, c)), 1);
    }
    s
}

fn kloosterman_suite(size: Size, budget: Budget) -> Vec<Record> {
    let mut out = Vec::new();
    let suite = "kloosterman";

    let (ns, qs): (Vec<usize>, Vec<u64>) = match size {
        Size::Smoke => (vec![2, 3], vec![1, 2, 3]),
        _ => (vec![2, 3, 4], vec![1, 2, 3, 5, 6]),
    };
    for &n in &ns {
        for &q in &qs {
            out.push(record(suite, "trivial-weyl", json!({ "n": n, "q": q }), || {
                let id = weyl(n, SpecialWeyl::Identity)?;
                let nq = groups::unipotent_index(n, q);
                let ones = vec![1u64; n - 1];
                let s = kloosterman::kloosterman_sum(&KloostermanQuery::plain(q, id.clone(), ones.clone())?, Method::Exact, budget)?;
                let mut m2 = vec![1i64; n - 1];
                m2[0] = 2;
                let mixed = KloostermanQuery::plain(q, id.clone(), ones)?.with_characters(m2, vec![1; n - 1])?;
                let s_mixed = kloosterman::kloosterman_sum(&mixed, Method::Exact, budget)?;
                let mut c2 = vec![1u64; n - 1];
                c2[n - 2] = 2;
                let s_c = kloosterman::kloosterman_sum(&KloostermanQuery::plain(q, id, c2)?, Method::Exact, budget)?;
                let value = s.value.exact_integer();
                let ok = value.map(BigInt::from) == Some(nq.clone())
                    && s_mixed.value.exact_integer() == Some(0)
                    && s_c.value.exact_integer() == Some(0);
                Ok((pass_if(ok), json!({ "value": value.map(|v| v.to_string()), "expected": nq.to_string(),
                    "m_ne_n": s_mixed.value.exact_integer().map(|v| v.to_string()),
                    "c_ne_one": s_c.value.exact_integer().map(|v| v.to_string()) })))
            }));
        }
    }

    let (cmax, mmax) = match size {
        Size::Smoke => (12i64, 2i64),
        _ => (50, 4),
    };
    out.push(record(suite, "classical-n2", json!({ "c_max": cmax, "mn_max": mmax }), || {
        let wl = weyl(2, SpecialWeyl::WLong)?;
        let mut mismatches = Vec::new();
        let mut checked = 0;
        for c in 1..=cmax {
            for m in 1..=mmax {
                for nn in 1..=mmax {
                    let query = KloostermanQuery::new(1, wl.clone(), vec![m], vec![nn], vec![1, 1], vec![c as u64])?;
                    let s = kloosterman::kloosterman_sum(&query, Method::Exact, budget)?;
                    checked += 1;
                    if !s.value.value_eq(&classical_sum(m, nn, c)) {
                        mismatches.push(json!([m, nn, c]));
                    }
                }
            }
        }
        Ok((pass_if(mismatches.is_empty()), json!({ "checked": checked, "mismatches": mismatches })))
    }));

    let div_qs: Vec<u64> = match size {
        Size::Smoke => vec![2],
        Size::Desk => vec![2, 3],
        Size::Extended => vec![2, 3],
    };
    for q in div_qs {
        let cmax = match (size, q) {
            (Size::Smoke, _) => q.pow(3),
            (Size::Desk, 3) => q.pow(3),
            _ => q.pow(4),
        };
        let shapes: Vec<(&str, WeylElement)> = match (weyl(3, SpecialWeyl::WStar), weyl(3, SpecialWeyl::VoronoiW1), weyl(3, SpecialWeyl::WLong), WeylElement::from_block_type(&[1, 2])) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => vec![("wstar", a), ("w1", b), ("wl", c), ("1,2", d)],
            _ => Vec::new(),
        };
        for (name, w) in shapes {
            out.push(record(suite, "divisibility", json!({ "n": 3, "q": q, "w": name, "c_max": cmax }), || {
                let mut nonempty = 0;
                let mut counterexamples = Vec::new();
                for c1 in 1..=cmax {
                    for c2 in 1..=cmax {
                        let c = vec![c1, c2];
                        let d = kloosterman::divisibility_check(3, q, &w, &c)?;
                        let set = kloosterman::enumerate(&KloostermanQuery::plain(q, w.clone(), c.clone())?, Method::Exact, budget)?;
                        if !set.is_empty() {
                            nonempty += 1;
                            if d.vanishes {
                                counterexamples.push(json!(c));
                            }
                        }
                    }
                }
                Ok((pass_if(counterexamples.is_empty()), json!({ "nonempty_sets": nonempty, "counterexamples": counterexamples })))
            }));
        }
    }

    let cab_cases: Vec<(u64, u32, u32)> = match size {
        Size::Smoke => vec![(2, 0, 0)],
        Size::Desk => [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(a, b)| (2, a, b)).collect(),
        Size::Extended => [2u64, 3]
            .iter()
            .flat_map(|&p| [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(a, b)| (p, a, b)))
            .collect(),
    };
    for (p, a, b) in cab_cases {
        out.push(record(suite, "wstar-count", json!({ "n": 3, "p": p, "alpha": a, "beta": b }), || {
            let cab = kloosterman::cab_count_and_bound(3, p, a, b, budget)?;
            let set = kloosterman::enumerate_set_wstar(3, p, a, b, budget)?;
            let grid = kloosterman::enumerate_set_oracle(&set.query, GridHeight::Proven, budget)?;
            let agree = grid.rep_set() == set.rep_set();
            let ok = agree && cab.within_bound && cab.exponent_identity;
            Ok((pass_if(ok), json!({ "count": cab.count, "grid_count": grid.len(), "bound": cab.bound.to_string(),
                "exponent": cab.exponent, "exponent_identity": cab.exponent_identity })))
        }));
    }

    let smax: u64 = match size {
        Size::Smoke => 16,
        _ => 64,
    };
    out.push(record(suite, "wstar-support", json!({ "n": 3, "q": 2, "c_max": smax }), || {
        let ws = weyl(3, SpecialWeyl::WStar)?;
        let mut violations = Vec::new();
        let mut chain_failures = Vec::new();
        let mut in_support = 0;
        for c1 in 1..=smax {
            for c2 in 1..=smax {
                let query = KloostermanQuery::plain(2, ws.clone(), vec![c1, c2])?;
                let form = kloosterman::wstar_support_check(3, 2, &query.c)?;
                if form == SupportForm::Vanishes {
                    let s = kloosterman::kloosterman_sum(&query, Method::Exact, budget)?;
                    if s.value.exact_integer() != Some(0) {
                        let v = s.value.eval(12);
                        violations.push(json!({ "c": [c1, c2], "abs": v.re.hypot(v.im), "set_size": s.set_size }));
                    }
                } else {
                    in_support += 1;
                    let r = kloosterman::support_bound_check(&query, budget)?;
                    let chain_ok = r.abs_within_set_size && r.chain.as_ref().is_none_or(|c| c.holds);
                    if !chain_ok {
                        chain_failures.push(json!([c1, c2]));
                    }
                }
            }
        }
        let ok = violations.is_empty() && chain_failures.is_empty();
        Ok((pass_if(ok), json!({ "in_support": in_support, "violations": violations, "chain_failures": chain_failures })))
    }));

    let crt_qs: Vec<u64> = match size {
        Size::Smoke => vec![2],
        _ => vec![2, 3],
    };
    let cpmax = match size {
        Size::Smoke => 3,
        _ => 5,
    };
    for q in crt_qs {
        for n in [2usize, 3] {
            out.push(record(suite, "crt", json!({ "n": n, "q": q, "c_prime_max": cpmax }), || {
                let w = weyl(n, SpecialWeyl::WLong)?;
                let mut checked = 0;
                let mut count_law_applicable = 0;
                let mut failures = Vec::new();
                let coprime: Vec<u64> = (1..=cpmax).filter(|&x| num_integer::gcd(x, q) == 1).collect();
                let cps: Vec<Vec<u64>> = if n == 2 {
                    coprime.iter().map(|&x| vec![x]).collect()
                } else {
                    coprime.iter().flat_map(|&a| coprime.iter().map(move |&b| vec![a, b])).collect()
                };
                for cp in cps {
                    let r = kloosterman::crt_factor_check(q, &w, &vec![1; n - 1], &vec![1; n - 1], &vec![1; n], &cp, budget)?;
                    let counts = kloosterman::crt_count_check(q, &w, &cp.iter().map(|&x| x * q.pow(n as u32)).collect::<Vec<_>>(), budget)?;
                    checked += 1;
                    count_law_applicable += usize::from(counts.applicable);
                    if !r.equal || !counts.holds {
                        failures.push(json!(cp));
                    }
                }
                Ok((pass_if(failures.is_empty()), json!({ "checked": checked, "count_law_applicable": count_law_applicable, "failures": failures })))
            }));
        }
    }
    out
}

fn ffchar_suite(size: Size, budget: Budget) -> Vec<Record> {
    let mut out = Vec::new();
    let suite = "ffchar";
    let pairs: Vec<(usize, u64)> = match size {
        Size::Smoke => vec![(2, 2), (2, 3), (3, 2)],
        _ => vec![(2, 2), (2, 3), (2, 5), (2, 7), (3, 2), (3, 3)],
    };
    let one = BigRational::from_integer(1.into());
    for (n, p) in pairs {
        out.push(record(suite, "gelfand-graev", json!({ "n": n, "p": p }), || {
            let chi = ffchar::cuspidal_unipotent_char(n, p, budget)?;
            let dim_ok = ffchar::cuspidal_dim(n, p)? == chi.dim.into();
            let mut twists: Vec<Vec<u64>> = vec![vec![]];
            for _ in 0..n - 1 {
                twists = twists.into_iter().flat_map(|t| (1..p).map(move |a| [t.clone(), vec![a]].concat())).collect();
            }
            let mut bad = Vec::new();
            for t in &twists {
                if ffchar::gg_sum_twisted(&chi, t, budget)?.sum_value != one {
                    bad.push(json!(t));
                }
            }
            Ok((pass_if(dim_ok && bad.is_empty()), json!({ "character": chi, "twists": twists.len(), "twists_not_one": bad, "dim_matches": dim_ok })))
        }));
    }
    let tables: Vec<(usize, u64)> = match size {
        Size::Smoke => vec![(2, 2), (2, 3)],
        _ => vec![(2, 2), (2, 3), (2, 5), (2, 7), (3, 2)],
    };
    for (n, p) in tables {
        out.push(record(suite, "character-table", json!({ "n": n, "p": p }), || {
            let t = ffchar::character_table_oracle(n, p, budget)?;
            let cusp = ffchar::cuspidal_indices(&t, budget)?;
            let orth = t.orthogonality_holds();
            let count_ok = n != 2 || cusp.len() as u64 == (p * p - p) / 2;
            Ok((pass_if(orth && count_ok), json!({ "classes": t.classes.len(), "degrees": t.degrees(),
                "cuspidal": cusp.len(), "orthogonality": orth, "modulus_prime": t.modulus_prime })))
        }));
    }
    let ps: Vec<u64> = match size {
        Size::Smoke => vec![2],
        _ => vec![2, 3],
    };
    for p in ps {
        for comp in ffchar::compositions(3) {
            out.push(record(suite, "parabolic-dim", json!({ "n": 3, "p": p, "parts": comp }), || {
                let dims = vec![1; comp.len()];
                let r = ffchar::parabolic_dim_count(3, &comp, p, &dims)?;
                let brute = ffchar::flag_count_by_orbits(3, &comp, p, budget)?;
                Ok((pass_if(r.flag_count == brute.into()), json!({ "report": r, "orbits": brute })))
            }));
        }
    }
    out
}

fn latcount_suite(size: Size, budget: Budget) -> Vec<Record> {
    let mut out = Vec::new();
    let suite = "latcount";
    let (qmax, tmax) = match size {
        Size::Smoke => (5u64, 40u64),
        _ => (7, 200),
    };
    out.push(record(suite, "ball-count", json!({ "n": 2, "q_max": qmax, "T_max": tmax, "ratio_limit": 10 }), || {
        let mut worst = 0f64;
        for q in 1..=qmax {
            for t in (5..=tmax).step_by(5) {
                let r = latcount::count_ball(2, q, t, budget)?;
                worst = worst.max(latcount::ball_ratio(&r));
            }
        }
        Ok((pass_if(worst <= 10.0), json!({ "max_ratio": worst })))
    }));
    let qmax = match size {
        Size::Smoke => 5,
        Size::Desk => 9,
        Size::Extended => 13,
    };
    for q in 2..=qmax {
        out.push(record(suite, "optimal-lift", json!({ "n": 2, "q": q, "epsilon": 0.2 }), || {
            let r = latcount::lifting_census(2, q, CensusConfig::default(), budget)?;
            let status = if r.failure_count == 0 { Status::Pass } else { Status::Warn };
            Ok((status, json!({ "examined": r.examined, "total": r.total, "max_norm": r.max_norm,
                "threshold": r.threshold, "failure_fraction": r.failure_fraction() })))
        }));
    }
    out
}
