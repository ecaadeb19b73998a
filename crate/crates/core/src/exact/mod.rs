//! Exact rationals, the observation context that stands in for "finite", and
//! real numbers as monads of bounded rationals.

mod context;
mod rational;
mod real;

pub use context::{indiscernible, is_bounded, is_infinitesimal, ObservationContext};
pub use rational::{signum, ArithOp, Rational};
pub use real::{real_from_rational, ExtendedReal};
