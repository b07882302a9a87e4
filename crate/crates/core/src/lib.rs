//! Simulation and exact analytics for the time-inhomogeneous coin-turning walk.
//!
//! A coin is turned over at step `n` with probability `p_n`; the walk steps
//! `+1` on heads and `-1` on tails. The crate is organised as:
//!
//! * [`schedule`]: turning-probability sequences and their regime classification.
//! * [`exact`]: correlations, head probabilities, martingale coefficients,
//!   the cumulative martingale variance and its time-change, exact `Var(S_n)`.
//! * [`simulate`]: seeded walks and ensembles, rescaled paths, exact small-`n`
//!   distributions by enumeration and by dynamic programming.
//! * [`zigzag`]: the continuum zigzag process driven by a Poisson point process
//!   of intensity `c/x`.
//! * [`stats`]: special functions and goodness-of-fit statistics.
//! * [`verify`]: the pinned-seed verification suite.

pub mod exact;
pub mod rng;
pub mod schedule;
pub mod simulate;
pub mod stats;
pub mod verify;
pub mod zigzag;

pub use schedule::Schedule;

use serde::{Deserialize, Serialize};

/// Sign of a single step, `Y_n ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Sign::Plus),
            "-1" | "-" | "minus" => Ok(Sign::Minus),
            other => Err(format!("invalid sign `{other}` (expected +1 or -1)")),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Minus => f.write_str("-1"),
            Sign::Plus => f.write_str("+1"),
        }
    }
}
