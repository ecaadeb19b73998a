//! Exact-rational calculus on hyperfinite grids.
//!
//! Real numbers are monads of bounded rationals judged at an
//! [`ObservationContext`]; functions live on the grid `[0,1]_ε`; derivatives
//! are difference quotients and integrals are exact grid sums.

pub mod calculus;
pub mod elem;
pub mod error;
pub mod exact;
pub mod expr;
pub mod grid;
pub mod gridfn;

pub use error::{Error, Jump, Result};
pub use exact::{ExtendedReal, ObservationContext, Rational};
pub use grid::{GridMap, GridPoint, GridSpec};
pub use gridfn::{GridFunction, SamplingPlan};
