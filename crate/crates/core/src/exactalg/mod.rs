//! Exact arithmetic: rationals, matrices, unipotent normal forms and
//! exponential sums.

pub mod arith;
pub mod cyclotomic;
pub mod matrix;
pub mod normal_form;
pub mod phase;

pub use cyclotomic::Cyclotomic;
pub use matrix::{fmt_rat, frac, int, parse_rat, rat, ExactMatrix, Rational};
pub use normal_form::{unipotent_normal_form_left, unipotent_normal_form_right};
pub use phase::{PhaseSum, PhaseValue, RationalPhase};

/// Serialize through `Display`, for big integers in reports.
pub fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}
