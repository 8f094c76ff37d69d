//! Experiment grids: one CSV row per grid point, in lexicographic order.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::json;

use gln_kloosterman::ffchar;
use gln_kloosterman::kloosterman;
use gln_kloosterman::latcount::{self, CensusConfig};
use gln_kloosterman::{Budget, Error};

use crate::report::{CliError, Outcome, Record, Status};
use crate::{parse_list, ExperimentKind};

pub struct Grid {
    pub n: usize,
    pub q: Option<String>,
    pub t: Option<String>,
    pub p: Option<String>,
    pub epsilon: f64,
    pub seed: u64,
}

fn list_or<T: std::str::FromStr + Clone>(s: &Option<String>, default: &[T]) -> Result<Vec<T>, Error> {
    match s {
        Some(s) => parse_list(s),
        None => Ok(default.to_vec()),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("cannot write CSV: {e}"))
}

pub fn run(kind: ExperimentKind, grid: Grid, out: Option<&Path>, budget: Budget) -> Outcome {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", p.display())))?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let (name, (status, rows), seed) = match kind {
        ExperimentKind::BallGrid => ("ball-grid", ball_grid(&grid, &mut w, budget)?, None),
        ExperimentKind::LiftCensus => ("lift-census", lift_census(&grid, &mut w, budget)?, Some(grid.seed)),
        ExperimentKind::CabGrowth => ("cab-growth", cab_growth(&grid, &mut w, budget)?, None),
        ExperimentKind::GgTable => ("gg-table", gg_table(&grid, &mut w, budget)?, None),
    };
    w.flush().map_err(|e| Error::Invalid(e.to_string()))?;
    match out {
        Some(path) => {
            let mut r = Record::new(
                "experiment",
                json!({ "kind": name, "n": grid.n, "q": grid.q, "T": grid.t, "p": grid.p, "epsilon": grid.epsilon }),
                name,
                status,
                json!({ "path": path.display().to_string(), "rows": rows }),
            );
            if let Some(s) = seed {
                r = r.with_seed(s);
            }
            Ok(vec![r])
        }
        None => Ok(Vec::new()),
    }
}

type Rows = (Status, usize);

/// Writes rows as they are produced so a resource error leaves the finished part on disk.
fn write_row<W: Write>(w: &mut csv::Writer<W>, row: &[String]) -> Result<(), Error> {
    w.write_record(row).map_err(csv_err)?;
    w.flush().map_err(|e| Error::Invalid(e.to_string()))
}

fn fail_partial(e: Error) -> CliError {
    CliError { error: e, partial: Vec::new() }
}

fn ball_grid<W: Write>(g: &Grid, w: &mut csv::Writer<W>, budget: Budget) -> Result<Rows, CliError> {
    let qs: Vec<u64> = list_or(&g.q, &[1, 2, 3, 5])?;
    let ts: Vec<u64> = list_or(&g.t, &[5, 10, 20, 40])?;
    write_row(w, &["n", "q", "T", "count", "main_term", "secondary_term", "ratio", "ratio_decimal", "upper_shape", "lower_shape"].map(String::from))?;
    let mut rows = 0;
    for &q in &qs {
        for &t in &ts {
            let r = latcount::count_ball(g.n, q, t, budget).map_err(fail_partial)?;
            let pred = latcount::predicted_ball_bound(g.n, q, t, 0.0);
            write_row(w, &[
                g.n.to_string(),
                q.to_string(),
                t.to_string(),
                r.count.to_string(),
                gln_kloosterman::exactalg::fmt_rat(&r.main_term),
                r.secondary_term.to_string(),
                gln_kloosterman::exactalg::fmt_rat(&r.ratio),
                format!("{:.6}", r.ratio_decimal),
                gln_kloosterman::exactalg::fmt_rat(&pred.upper_shape),
                gln_kloosterman::exactalg::fmt_rat(&pred.lower_shape),
            ])?;
            rows += 1;
        }
    }
    Ok((Status::Pass, rows))
}

fn lift_census<W: Write>(g: &Grid, w: &mut csv::Writer<W>, budget: Budget) -> Result<Rows, CliError> {
    let qs: Vec<u64> = list_or(&g.q, &(2..=13).collect::<Vec<_>>())?;
    write_row(w, &["n", "q", "epsilon", "total", "examined", "sampled", "seed", "threshold", "max_norm", "failure_count", "failure_fraction"].map(String::from))?;
    let cfg = CensusConfig { epsilon: g.epsilon, seed: g.seed, ..CensusConfig::default() };
    let mut status = Status::Pass;
    let mut rows = 0;
    for &q in &qs {
        let r = latcount::lifting_census(g.n, q, cfg, budget).map_err(fail_partial)?;
        if r.failure_count > 0 {
            status = Status::Warn;
        }
        write_row(w, &[
            g.n.to_string(),
            q.to_string(),
            g.epsilon.to_string(),
            r.total.to_string(),
            r.examined.to_string(),
            r.sampled.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            format!("{:.6}", r.threshold),
            r.max_norm.to_string(),
            r.failure_count.to_string(),
            format!("{:.6}", r.failure_fraction()),
        ])?;
        rows += 1;
    }
    Ok((status, rows))
}

fn cab_growth<W: Write>(g: &Grid, w: &mut csv::Writer<W>, budget: Budget) -> Result<Rows, CliError> {
    let ps: Vec<u64> = list_or(&g.p, &[2])?;
    let n = if g.n < 3 { 3 } else { g.n };
    write_row(w, &["n", "p", "alpha", "beta", "count", "bound", "exponent", "within_bound", "count_over_p_exponent"].map(String::from))?;
    let mut status = Status::Pass;
    let mut rows = 0;
    for &p in &ps {
        for alpha in 0..=1 {
            for beta in 0..=1 {
                let r = kloosterman::cab_count_and_bound(n, p, alpha, beta, budget).map_err(fail_partial)?;
                if !r.within_bound {
                    status = Status::Fail;
                }
                let scaled = r.count as f64 / (p as f64).powi(r.exponent as i32);
                write_row(w, &[
                    n.to_string(),
                    p.to_string(),
                    alpha.to_string(),
                    beta.to_string(),
                    r.count.to_string(),
                    r.bound.to_string(),
                    r.exponent.to_string(),
                    r.within_bound.to_string(),
                    format!("{scaled:.6}"),
                ])?;
                rows += 1;
            }
        }
    }
    Ok((status, rows))
}

fn gg_table<W: Write>(g: &Grid, w: &mut csv::Writer<W>, budget: Budget) -> Result<Rows, CliError> {
    let ps: Vec<u64> = list_or(&g.p, &[2, 3, 5])?;
    write_row(w, &["n", "p", "dim", "cuspidal_dim", "certified", "sum_value"].map(String::from))?;
    let mut status = Status::Pass;
    let mut rows = 0;
    for n in [2usize, 3] {
        for &p in &ps {
            let (chi, certified) = match ffchar::cuspidal_unipotent_char(n, p, budget) {
                Ok(c) => (c, true),
                // table too large to certify: fall back to the uncertified values
                Err(Error::ResourceExceeded { .. }) => {
                    let p_i = p as i64;
                    let pairs: Vec<(&[usize], i64)> = if n == 2 {
                        vec![(&[1, 1], p_i - 1), (&[2], -1)]
                    } else {
                        vec![(&[1, 1, 1], (p_i - 1) * (p_i * p_i - 1)), (&[2, 1], -(p_i - 1)), (&[3], 1)]
                    };
                    (ffchar::UnipotentClassFunction::from_pairs(n, p, &pairs)?, false)
                }
                Err(e) => return Err(e.into()),
            };
            let r = ffchar::gg_sum(&chi, budget).map_err(fail_partial)?;
            if r.sum_value != num_rational::BigRational::from_integer(1.into()) {
                status = Status::Fail;
            }
            write_row(w, &[
                n.to_string(),
                p.to_string(),
                chi.dim.to_string(),
                ffchar::cuspidal_dim(n, p)?.to_string(),
                certified.to_string(),
                r.sum_value.to_string(),
            ])?;
            rows += 1;
        }
    }
    Ok((status, rows))
}
