use std::fmt;

use serde::Serialize;

use super::{ObservationContext, Rational};

/// A real number as a monad: a bounded representative judged at a fixed
/// context, or one of the two infinities.
///
/// Equality is indiscernibility at the shared context and is therefore a
/// tolerance relation, not an equivalence: `a == b` and `b == c` only give
/// `|a - c| <= 2/H`. Values observed at different contexts never compare
/// equal.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtendedReal {
    Finite {
        representative: Rational,
        context: ObservationContext,
    },
    PlusInfinity,
    MinusInfinity,
}

impl ExtendedReal {
    /// The monad of `q`, or an infinity when `q` exceeds the context's bound.
    pub fn from_rational(q: Rational, ctx: ObservationContext) -> Self {
        let k = ctx.bound();
        if q > k {
            ExtendedReal::PlusInfinity
        } else if q < -k {
            ExtendedReal::MinusInfinity
        } else {
            ExtendedReal::Finite {
                representative: q,
                context: ctx,
            }
        }
    }

    pub fn representative(&self) -> Option<&Rational> {
        match self {
            ExtendedReal::Finite { representative, .. } => Some(representative),
            _ => None,
        }
    }

    pub fn context(&self) -> Option<ObservationContext> {
        match self {
            ExtendedReal::Finite { context, .. } => Some(*context),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite { .. })
    }

    /// Whether the representative of a finite real is indiscernible from `q`.
    pub fn contains(&self, q: &Rational) -> bool {
        match self {
            ExtendedReal::Finite {
                representative,
                context,
            } => context.indiscernible(representative, q),
            ExtendedReal::PlusInfinity | ExtendedReal::MinusInfinity => false,
        }
    }
}

pub fn real_from_rational(q: Rational, ctx: ObservationContext) -> ExtendedReal {
    ExtendedReal::from_rational(q, ctx)
}

impl PartialEq for ExtendedReal {
    fn eq(&self, other: &Self) -> bool {
        use ExtendedReal::*;
        match (self, other) {
            (PlusInfinity, PlusInfinity) | (MinusInfinity, MinusInfinity) => true,
            (
                Finite {
                    representative: p,
                    context: c1,
                },
                Finite {
                    representative: q,
                    context: c2,
                },
            ) => c1 == c2 && c1.indiscernible(p, q),
            _ => false,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite { representative, .. } => write!(f, "[{representative}]"),
            ExtendedReal::PlusInfinity => f.write_str("+inf"),
            ExtendedReal::MinusInfinity => f.write_str("-inf"),
        }
    }
}
