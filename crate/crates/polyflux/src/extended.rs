//! Extended reals: finite values plus a +∞ tag.
//!
//! Legendre transforms of polygonal functions are finite only on a closed
//! interval. Carrying the infinity as an explicit tag (rather than a large
//! float) lets minimizers exclude infeasible points exactly.

use serde::{Deserialize, Serialize};

/// A real number or +∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The finite value, or `f64::INFINITY` for the +∞ tag.
    ///
    /// Convenient for comparisons inside minimization loops; the tag itself
    /// remains the source of truth for feasibility.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// The finite value; panics on +∞.
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => panic!("expected finite value for {what}, got +inf"),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::Finite(v)
    }
}
