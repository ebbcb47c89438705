//! Numerical realizations of skyscraper dynamics over irrational rotations,
//! Birkhoff-average pathologies, density-of-states truncations, and
//! Lyapunov-exponent asymmetries for ergodic Schrodinger operators on
//! infinite measure spaces.
//!
//! Exact arithmetic (big integers, rationals, quadratic surds) is used
//! wherever the combinatorics permit; everything else carries certified
//! directed-rounding brackets.

pub mod error;
pub mod birkhoff;
pub mod cli;
pub mod dos;
pub mod dynamics;
pub mod lyapunov;
pub mod numerics;
pub mod operator;

pub use error::{Error, Result};
