//! Exact-arithmetic construction of an absolutely normal number whose
//! discrepancy in every integer base is `O(N^-1/2)`, together with the
//! sweeps that check each step of the argument numerically.

pub mod arith;
pub mod bounds;
pub mod counting;
pub mod construction;
pub mod error;
pub mod schedule;
pub mod verification;

pub use error::{Error, Result};
