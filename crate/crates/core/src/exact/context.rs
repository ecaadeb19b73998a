use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::{Error, Result};

/// The observation scale at which indiscernibility is judged.
///
/// `h` fixes the infinitesimal threshold: a rational is infinitesimal when
/// its magnitude is at most `1/h`. `k` fixes the finiteness cutoff: a
/// rational is bounded when its magnitude is at most `k`. Both boundaries are
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationContext {
    h: u64,
    k: u64,
}

impl ObservationContext {
    pub const DEFAULT_H: u64 = 1_000_000;
    pub const DEFAULT_K: u64 = 1_000_000_000_000;

    pub fn new(h: u64, k: u64) -> Result<Self> {
        if h < 2 || k < 2 {
            return Err(Error::domain(format!(
                "observation context needs H >= 2 and K >= 2, got H = {h}, K = {k}"
            )));
        }
        if k < h {
            return Err(Error::domain(format!(
                "observation context needs K >= H, got H = {h}, K = {k}"
            )));
        }
        Ok(ObservationContext { h, k })
    }

    /// Context with the given `h` and the default `k` (raised to `h` if needed).
    pub fn with_h(h: u64) -> Result<Self> {
        Self::new(h, Self::DEFAULT_K.max(h))
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `1/H`.
    pub fn infinitesimal(&self) -> Rational {
        Rational::unit_fraction(self.h)
    }

    /// `K`.
    pub fn bound(&self) -> Rational {
        Rational::from(self.k)
    }

    pub fn is_infinitesimal(&self, q: &Rational) -> bool {
        q.abs() * Rational::from(self.h) <= Rational::one()
    }

    pub fn is_bounded(&self, q: &Rational) -> bool {
        q.abs() <= self.bound()
    }

    /// `p ≐ q` at this context. The bounded branch applies when either side
    /// is bounded, which keeps the relation symmetric at the cutoff `K`.
    pub fn indiscernible(&self, p: &Rational, q: &Rational) -> bool {
        let k = self.bound();
        if p.abs() <= k || q.abs() <= k {
            return self.is_infinitesimal(&(p - q));
        }
        let neg_k = -&k;
        (p > &k && q > &k) || (p < &neg_k && q < &neg_k)
    }
}

impl Default for ObservationContext {
    fn default() -> Self {
        ObservationContext {
            h: Self::DEFAULT_H,
            k: Self::DEFAULT_K,
        }
    }
}

pub fn is_infinitesimal(q: &Rational, ctx: &ObservationContext) -> bool {
    ctx.is_infinitesimal(q)
}

pub fn is_bounded(q: &Rational, ctx: &ObservationContext) -> bool {
    ctx.is_bounded(q)
}

pub fn indiscernible(p: &Rational, q: &Rational, ctx: &ObservationContext) -> bool {
    ctx.indiscernible(p, q)
}
