use std::fmt;
use std::sync::Arc;

use crate::exact::Rational;

type ModulusFn = dyn Fn(&Rational) -> Rational + Send + Sync;

/// A modulus of continuity `ω`: whenever `|x − y| <= d`, `|f(x) − f(y)| <= ω(d)`.
///
/// Every modulus built here is nondecreasing in `d`, which the combinators
/// rely on.
#[derive(Clone)]
pub struct Modulus {
    eval: Arc<ModulusFn>,
    description: Arc<str>,
}

impl Modulus {
    pub fn zero() -> Self {
        Modulus {
            eval: Arc::new(|_| Rational::zero()),
            description: "0".into(),
        }
    }

    /// `ω(d) = L·d`.
    pub fn lipschitz(constant: Rational) -> Self {
        let description = format!("{constant}*d");
        Modulus {
            eval: Arc::new(move |d| &constant * d),
            description: description.into(),
        }
    }

    /// An arbitrary nondecreasing bound supplied by the caller.
    pub fn from_fn(
        description: impl Into<String>,
        f: impl Fn(&Rational) -> Rational + Send + Sync + 'static,
    ) -> Self {
        Modulus {
            eval: Arc::new(f),
            description: description.into().into(),
        }
    }

    /// `ω(d)`.
    pub fn at(&self, gap: &Rational) -> Rational {
        (self.eval)(&gap.abs())
    }

    /// `ω(1/m)`.
    pub fn at_denominator(&self, m: u64) -> Rational {
        self.at(&Rational::unit_fraction(m))
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Modulus of `f + g`.
    pub fn add(&self, other: &Modulus) -> Modulus {
        let (a, b) = (self.clone(), other.clone());
        Modulus {
            description: format!("({}) + ({})", a.description, b.description).into(),
            eval: Arc::new(move |d| a.at(d) + b.at(d)),
        }
    }

    /// Modulus of `c·f`.
    pub fn scale(&self, c: &Rational) -> Modulus {
        let a = self.clone();
        let c = c.abs();
        Modulus {
            description: format!("{c}*({})", a.description).into(),
            eval: Arc::new(move |d| &c * a.at(d)),
        }
    }

    /// Modulus of `f·g` from the moduli and sup-bounds of both factors:
    /// `|fg(x) − fg(y)| <= |f(x)|·ω_g + |g(y)|·ω_f`.
    pub fn product(
        &self,
        self_bound: &Rational,
        other: &Modulus,
        other_bound: &Rational,
    ) -> Modulus {
        self.scale(other_bound).add(&other.scale(self_bound))
    }

    /// Modulus of `outer ∘ inner`: `ω_outer(ω_inner(d))`.
    pub fn compose(outer: &Modulus, inner: &Modulus) -> Modulus {
        let (o, i) = (outer.clone(), inner.clone());
        Modulus {
            description: format!("({})∘({})", o.description, i.description).into(),
            eval: Arc::new(move |d| o.at(&i.at(d))),
        }
    }

    /// `d ↦ ω(d + shift)`, the modulus after precomposing with a map that
    /// moves points by at most `shift`.
    pub fn widened(&self, shift: Rational) -> Modulus {
        let a = self.clone();
        Modulus {
            description: format!("({})(d + {shift})", a.description).into(),
            eval: Arc::new(move |d| a.at(&(d + &shift))),
        }
    }
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Modulus({})", self.description)
    }
}

/// A sup-norm bound together with a modulus of continuity, both valid on the
/// whole grid.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub bound: Rational,
    pub modulus: Modulus,
}

impl Certificate {
    pub fn new(bound: Rational, modulus: Modulus) -> Self {
        Certificate {
            bound: bound.abs(),
            modulus,
        }
    }

    pub fn constant(value: &Rational) -> Self {
        Certificate::new(value.abs(), Modulus::zero())
    }

    pub fn add(&self, other: &Certificate) -> Certificate {
        Certificate::new(&self.bound + &other.bound, self.modulus.add(&other.modulus))
    }

    pub fn scale(&self, c: &Rational) -> Certificate {
        Certificate::new(&self.bound * c.abs(), self.modulus.scale(c))
    }

    pub fn product(&self, other: &Certificate) -> Certificate {
        Certificate::new(
            &self.bound * &other.bound,
            self.modulus
                .product(&self.bound, &other.modulus, &other.bound),
        )
    }
}
