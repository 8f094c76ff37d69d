//! Exact arithmetic for Kloosterman sums of principal congruence subgroups
//! of `SL_n(Z)`, finite-field Gelfand-Graev averages and the lattice
//! counting problems attached to them.

pub mod error;
pub mod bruhat;
pub mod exactalg;
pub mod groups;
pub mod kloosterman;
pub mod ffchar;
pub mod latcount;

pub use error::{Error, Result};

/// Ceiling on the number of candidates an enumeration may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Budget(pub u128);

impl Budget {
    pub const SMOKE: Budget = Budget(1_000_000);
    pub const DESK: Budget = Budget(100_000_000);
    pub const EXTENDED: Budget = Budget(1_000_000_000);

    pub fn check(&self, what: &str, needed: u128) -> Result<()> {
        if needed > self.0 {
            Err(Error::ResourceExceeded {
                what: what.to_string(),
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DESK
    }
}
