//! `glnk`: command-line front end. Every command prints one JSON record per
//! line; experiment grids are written as CSV.

mod experiment;
mod report;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use gln_kloosterman::bruhat::{bruhat_decompose, SpecialWeyl, WeylElement};
use gln_kloosterman::exactalg::{fmt_rat, parse_rat, ExactMatrix};
use gln_kloosterman::ffchar::{self, UnipotentClassFunction};
use gln_kloosterman::groups::{self, CongruenceSpec};
use gln_kloosterman::kloosterman::{self, KloostermanQuery, Method, SupportForm};
use gln_kloosterman::latcount::{self, BallNorm};
use gln_kloosterman::{Budget, Error};

use report::{Outcome, Record, Status};

#[derive(Parser)]
#[command(name = "glnk", version, about = "Exact Kloosterman sums, Gelfand-Graev averages and lattice counts")]
struct Cli {
    /// Candidate-count ceiling for every enumeration.
    #[arg(long, global = true, env = "GLNK_BUDGET")]
    budget: Option<u128>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Groups,
    Kloosterman,
    Ffchar,
    Latcount,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Size {
    Smoke,
    Desk,
    Extended,
}

impl Size {
    fn budget(self) -> Budget {
        match self {
            Size::Smoke => Budget::SMOKE,
            Size::Desk => Budget::DESK,
            Size::Extended => Budget::EXTENDED,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ExperimentKind {
    BallGrid,
    LiftCensus,
    CabGrowth,
    GgTable,
}

#[derive(Subcommand)]
enum Command {
    /// Run invariant suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(value_enum, default_value = "smoke")]
        size: Size,
    },
    /// Evaluate one Kloosterman sum.
    Kloosterman {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        /// id, wstar, wl, w1, or a block type such as 1,2.
        #[arg(long)]
        w: String,
        #[arg(long)]
        c: String,
        #[arg(long = "M")]
        m: Option<String>,
        #[arg(long = "N")]
        nv: Option<String>,
        /// Signs of the torus twist, e.g. 1,-1,1.
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long, default_value = "exact")]
        backend: String,
        /// Uniform grid height for the grid backend.
        #[arg(long)]
        height: Option<u64>,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
    /// Bruhat decomposition of a rational matrix given as rows `a,b;c,d`.
    Bruhat {
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        /// Also test membership in the conjugated principal congruence subgroup of level q.
        #[arg(long)]
        q: Option<u64>,
    },
    /// Group and unipotent indices, optionally checked by exhaustion.
    Indices {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Experiment grids written as CSV.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Comma-separated levels.
        #[arg(long)]
        q: Option<String>,
        /// Comma-separated norm bounds.
        #[arg(long = "T")]
        t: Option<String>,
        /// Comma-separated primes.
        #[arg(long)]
        p: Option<String>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// CSV output path; stdout when absent.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Gelfand-Graev average of a unipotent class function.
    Ggsum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u64,
        /// Values as `1,1=4;2=-1`; the certified cuspidal values when absent.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        /// Coefficients of the additive character on the simple roots.
        #[arg(long)]
        twist: Option<String>,
    },
    /// Smallest lift of a class in SL_n(Z/qZ), given as rows `a,b;c,d`.
    Lift {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    /// Exact count of Gamma(q) in a norm ball.
    CountBall {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u64,
        #[arg(long = "T")]
        t: u64,
        #[arg(long, value_enum, default_value = "max")]
        norm: NormArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Max,
    Frobenius,
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<T>().map_err(|_| Error::Invalid(format!("cannot parse {x:?} in {s:?}"))))
        .collect()
}

fn parse_matrix(s: &str) -> Result<ExactMatrix, Error> {
    let rows = s
        .split(';')
        .map(|r| r.split(',').map(|x| parse_rat(x.trim())).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    ExactMatrix::from_rows(rows)
}

fn parse_weyl(n: usize, s: &str) -> Result<WeylElement, Error> {
    if s.contains(',') || s.chars().all(|c| c.is_ascii_digit()) {
        let d: Vec<usize> = parse_list(s)?;
        let w = WeylElement::from_block_type(&d)?;
        if w.n() != n {
            return Err(Error::Invalid(format!("block type {s} does not sum to n = {n}")));
        }
        return Ok(w);
    }
    WeylElement::special(n, SpecialWeyl::parse(s)?)
}

fn cmd_kloosterman(
    n: usize,
    q: u64,
    w: &str,
    c: &str,
    m: Option<&str>,
    nv: Option<&str>,
    v: Option<&str>,
    backend: &str,
    height: Option<u64>,
    precision: u32,
    budget: Budget,
) -> Outcome {
    let w_arg = w;
    let w = parse_weyl(n, w)?;
    let ones = vec![1i64; n.saturating_sub(1)];
    let m = m.map(parse_list).transpose()?.unwrap_or_else(|| ones.clone());
    let nv = nv.map(parse_list).transpose()?.unwrap_or(ones);
    let v = v.map(parse_list).transpose()?.unwrap_or_else(|| vec![1i8; n]);
    let c: Vec<u64> = parse_list(c)?;
    let query = KloostermanQuery::new(q, w.clone(), m, nv, v, c)?;
    let method = Method::parse(backend, height)?;
    let params = json!({
        "n": n, "q": q, "w": w_arg, "c": query.c, "M": query.m, "N": query.nv, "v": query.v,
        "backend": method.name(), "height": height, "precision": precision,
    });
    let sum = kloosterman::kloosterman_sum(&query, method, budget)?;
    let value = sum.value.eval(precision);
    let divisibility = if sum.block_shaped { Some(kloosterman::divisibility_check(n, q, &w, &query.c)?) } else { None };
    let support = if n >= 3 && w.is_special(SpecialWeyl::WStar) { Some(kloosterman::wstar_support_check(n, q, &query.c)?) } else { None };
    let exact = sum.value.exact_integer();
    let is_zero = exact == Some(0);

    let mut status = if sum.flags.is_empty() && sum.complete { Status::Pass } else { Status::Warn };
    let mut reasons = Vec::new();
    if !sum.block_shaped {
        reasons.push("w is not block shaped".to_string());
    } else if !sum.compatible {
        reasons.push("characters are incompatible".to_string());
    }
    if let Some(d) = &divisibility {
        if d.vanishes {
            reasons.push("divisibility".to_string());
            if sum.set_size != 0 {
                status = Status::Fail;
                reasons.push("nonempty set despite the divisibility law".to_string());
            }
        }
    }
    if support == Some(SupportForm::Vanishes) && is_squarefree(q) {
        if is_zero {
            reasons.push("support".to_string());
        } else {
            status = Status::Fail;
            reasons.push("nonzero sum outside the support families".to_string());
        }
    }
    if value.re.hypot(value.im) > sum.set_size as f64 + value.abs_error {
        status = Status::Fail;
        reasons.push("value exceeds the set size".to_string());
    }
    let payload = json!({
        "set_size": sum.set_size,
        "block_shaped": sum.block_shaped,
        "compatible": sum.compatible,
        "divisibility": divisibility,
        "support": support,
        "phases": sum.value,
        "exact_integer": exact.map(|x| x.to_string()),
        "value": value,
        "complete": sum.complete,
        "flags": sum.flags,
        "reason": reasons,
    });
    Ok(vec![Record::new("kloosterman", params, "kloosterman-sum", status, payload)])
}

fn is_squarefree(q: u64) -> bool {
    gln_kloosterman::exactalg::arith::is_squarefree(q)
}

fn cmd_bruhat(matrix: &str, q: Option<u64>) -> Outcome {
    let g = parse_matrix(matrix)?;
    let data = bruhat_decompose(&g)?;
    let recomposed = data.recompose() == g;
    let (xh, yh) = data.canonical();
    let membership = match q {
        Some(q) => Some(groups::is_member(&g, &CongruenceSpec::natural(g.n(), q)?)?),
        None => None,
    };
    let status = if recomposed { Status::Pass } else { Status::Fail };
    let payload = json!({
        "decomposition": data,
        "w_name": data.w.name(),
        "c_integral": data.c_integral(),
        "x_hat": xh,
        "y_hat": yh,
        "recomposes": recomposed,
        "member": membership,
    });
    let rows: Vec<Vec<String>> = g.rows().iter().map(|r| r.iter().map(fmt_rat).collect()).collect();
    Ok(vec![Record::new("bruhat", json!({ "matrix": rows, "q": q }), "bruhat", status, payload)])
}

fn cmd_indices(n: usize, q: u64, exhaustive: bool, budget: Budget) -> Outcome {
    let v = groups::index_sl(n, q);
    let nq = groups::unipotent_index(n, q);
    let mut status = Status::Pass;
    let mut payload = json!({ "index_sl": v.to_string(), "unipotent_index": nq.to_string() });
    if exhaustive {
        budget.check("matrices mod q", (q as u128).pow((n * n) as u32))?;
        let count = groups::sl_order_exhaustive(n, q);
        let direct = groups::unipotent_index_direct(n, q)?;
        let ok = v == count.into() && nq == direct.into();
        if !ok {
            status = Status::Fail;
        }
        payload["exhaustive_sl"] = json!(count.to_string());
        payload["direct_unipotent_index"] = json!(direct.to_string());
    }
    Ok(vec![Record::new("indices", json!({ "n": n, "q": q, "exhaustive": exhaustive }), "indices", status, payload)])
}

fn parse_values(n: usize, p: u64, s: &str) -> Result<UnipotentClassFunction, Error> {
    let mut values = std::collections::BTreeMap::new();
    for part in s.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected partition=value, got {part:?}")))?;
        let mut key: Vec<usize> = parse_list(k)?;
        key.sort_unstable_by(|a, b| b.cmp(a));
        let v: i64 = v.trim().parse().map_err(|_| Error::Invalid(format!("bad value {v:?}")))?;
        values.insert(key, v);
    }
    UnipotentClassFunction::new(n, p, values)
}

fn cmd_ggsum(n: usize, p: u64, values: Option<&str>, twist: Option<&str>, budget: Budget) -> Outcome {
    let (chi, certified) = match values {
        Some(s) => (parse_values(n, p, s)?, false),
        None => (ffchar::cuspidal_unipotent_char(n, p, budget)?, true),
    };
    let twist: Vec<u64> = match twist {
        Some(t) => parse_list(t)?,
        None => vec![1; n.saturating_sub(1)],
    };
    if twist.iter().any(|&a| a % p == 0) {
        return Err(Error::Invalid("twist coefficients must be nonzero mod p".into()).into());
    }
    let report = ffchar::gg_sum_twisted(&chi, &twist, budget)?;
    let one = num_rational::BigRational::from_integer(1.into());
    let status = match report.expected {
        Some(_) if report.sum_value != one => Status::Fail,
        _ => Status::Pass,
    };
    let dim_ok = ffchar::cuspidal_dim(n, p)? == chi.dim.into();
    let payload = json!({ "report": report, "certified_by_table": certified, "dim_matches_formula": dim_ok });
    Ok(vec![Record::new(
        "ggsum",
        json!({ "n": n, "p": p, "values": values, "twist": twist }),
        "gelfand-graev",
        status,
        payload,
    )])
}

fn cmd_lift(q: u64, matrix: &str) -> Outcome {
    let g = parse_matrix(matrix)?;
    let ints = g.to_i64().ok_or_else(|| Error::Invalid("matrix entries must be integers".into()))?;
    let (lift, norm) = latcount::smallest_lift(&ints, q)?;
    let below = if norm > 1 { latcount::lift_within(&ints, q, norm - 1)? } else { None };
    let n = ints.len();
    let threshold = (q as f64).powf(1.0 + 1.0 / n as f64);
    let status = if below.is_none() { Status::Pass } else { Status::Fail };
    let payload = json!({
        "lift": lift,
        "norm": norm,
        "minimal_verified": below.is_none(),
        "threshold_eps0": threshold,
    });
    Ok(vec![Record::new("lift", json!({ "q": q, "matrix": ints }), "optimal-lift", status, payload)])
}

fn cmd_count_ball(n: usize, q: u64, t: u64, norm: NormArg, budget: Budget) -> Outcome {
    let norm = match norm {
        NormArg::Max => BallNorm::Max,
        NormArg::Frobenius => BallNorm::Frobenius,
    };
    let r = latcount::count_ball_with_norm(n, q, t, norm, budget)?;
    let pred = latcount::predicted_ball_bound(n, q, t, 0.0);
    let payload = json!({ "report": r, "prediction": pred });
    Ok(vec![Record::new("count-ball", json!({ "n": n, "q": q, "T": t, "norm": norm }), "ball-count", Status::Pass, payload)])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let explicit = cli.budget.map(Budget);
    let budget = explicit.unwrap_or_default();
    let (name, result) = match &cli.command {
        Command::Verify { suite, size } => {
            let b = explicit.unwrap_or(size.budget());
            let suites: Vec<&str> = match suite {
                Suite::Groups => vec!["groups"],
                Suite::Kloosterman => vec!["kloosterman"],
                Suite::Ffchar => vec!["ffchar"],
                Suite::Latcount => vec!["latcount"],
                Suite::All => vec!["groups", "kloosterman", "ffchar", "latcount"],
            };
            ("verify", Ok(suites.into_iter().flat_map(|s| verify::run(s, *size, b)).collect()))
        }
        Command::Kloosterman { n, q, w, c, m, nv, v, backend, height, precision } => (
            "kloosterman",
            cmd_kloosterman(
                *n, *q, w, c, m.as_deref(), nv.as_deref(), v.as_deref(), backend, *height, *precision, budget,
            ),
        ),
        Command::Bruhat { matrix, q } => ("bruhat", cmd_bruhat(matrix, *q)),
        Command::Indices { n, q, exhaustive } => ("indices", cmd_indices(*n, *q, *exhaustive, budget)),
        Command::Experiment { kind, n, q, t, p, epsilon, seed, out } => (
            "experiment",
            experiment::run(
                *kind,
                experiment::Grid { n: *n, q: q.clone(), t: t.clone(), p: p.clone(), epsilon: *epsilon, seed: *seed },
                out.as_deref(),
                budget,
            ),
        ),
        Command::Ggsum { n, p, values, twist } => ("ggsum", cmd_ggsum(*n, *p, values.as_deref(), twist.as_deref(), budget)),
        Command::Lift { q, matrix } => ("lift", cmd_lift(*q, matrix)),
        Command::CountBall { n, q, t, norm } => ("count-ball", cmd_count_ball(*n, *q, *t, *norm, budget)),
    };
    report::emit(name, result)
}
