//! Interval enclosures of a function and its first two derivatives over the
//! whole domain, used to derive certificates for compiled expressions.

use crate::exact::Rational;

/// A closed interval `[lo, hi]` of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(a: Rational, b: Rational) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn point(q: Rational) -> Self {
        Interval {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn zero() -> Self {
        Interval::point(Rational::zero())
    }

    /// `max |q|` over the interval.
    pub fn magnitude(&self) -> Rational {
        Rational::max_of(self.lo.abs(), self.hi.abs())
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn scale(&self, c: &Rational) -> Interval {
        Interval::new(&self.lo * c, &self.hi * c)
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Interval { lo, hi }
    }

    /// `self / other`, or `None` when `other` may vanish.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if other.contains_zero() {
            return None;
        }
        let inverse = Interval::new(
            other.lo.recip().expect("nonzero"),
            other.hi.recip().expect("nonzero"),
        );
        Some(self.mul(&inverse))
    }

    pub fn pow(&self, n: u32) -> Interval {
        if n == 0 {
            return Interval::point(Rational::one());
        }
        let (a, b) = (self.lo.pow(n), self.hi.pow(n));
        if n % 2 == 1 || !self.lo.is_negative() {
            Interval::new(a, b)
        } else if !self.hi.is_positive() {
            Interval::new(b, a)
        } else {
            Interval {
                lo: Rational::zero(),
                hi: Rational::max_of(a, b),
            }
        }
    }
}

/// Enclosures of `f`, `f′` and `f″` over the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet {
    pub value: Interval,
    pub d1: Interval,
    pub d2: Interval,
}

impl Jet {
    pub fn constant(q: Rational) -> Jet {
        Jet {
            value: Interval::point(q),
            d1: Interval::zero(),
            d2: Interval::zero(),
        }
    }

    /// The affine variable `a + (b − a)t` for `t ∈ [0, 1]`.
    pub fn variable(a: &Rational, b: &Rational) -> Jet {
        Jet {
            value: Interval::new(a.clone(), b.clone()),
            d1: Interval::point(b - a),
            d2: Interval::zero(),
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            value: self.value.neg(),
            d1: self.d1.neg(),
            d2: self.d2.neg(),
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet {
            value: self.value.add(&other.value),
            d1: self.d1.add(&other.d1),
            d2: self.d2.add(&other.d2),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let cross = self.d1.mul(&other.d1);
        Jet {
            value: self.value.mul(&other.value),
            d1: self.d1.mul(&other.value).add(&self.value.mul(&other.d1)),
            d2: self
                .d2
                .mul(&other.value)
                .add(&cross.add(&cross))
                .add(&self.value.mul(&other.d2)),
        }
    }

    pub fn div(&self, other: &Jet) -> Option<Jet> {
        // q = f/g, q′ = (f′ − q g′)/g, q″ = (f″ − 2q′g′ − q g″)/g
        let g = &other.value;
        let q = self.value.div(g)?;
        let q1 = self.d1.sub(&q.mul(&other.d1)).div(g)?;
        let twice = q1.mul(&other.d1).scale(&Rational::from(2));
        let q2 = self.d2.sub(&twice).sub(&q.mul(&other.d2)).div(g)?;
        Some(Jet {
            value: q,
            d1: q1,
            d2: q2,
        })
    }

    pub fn pow(&self, n: u32) -> Jet {
        match n {
            0 => Jet::constant(Rational::one()),
            1 => self.clone(),
            _ => {
                let nn = Rational::from(n);
                let below = self.value.pow(n - 1).scale(&nn);
                let two_below = self.value.pow(n - 2).scale(&(&nn * Rational::from(n - 1)));
                Jet {
                    value: self.value.pow(n),
                    d1: below.mul(&self.d1),
                    d2: two_below.mul(&self.d1.pow(2)).add(&below.mul(&self.d2)),
                }
            }
        }
    }

    /// `S_N(u) = Σ_{i<=N} uⁱ/i!` composed with `self`, using
    /// `S_N′ = S_{N−1}` and `|S_k(u)| <= S_k(|u|)`.
    pub fn exp_series(&self, n: u64, enclose: impl Fn(i64) -> Interval) -> Jet {
        let s0 = enclose(n as i64);
        let s1 = enclose(n as i64 - 1);
        let s2 = enclose(n as i64 - 2);
        Jet {
            value: s0,
            d1: s1.mul(&self.d1),
            d2: s2.mul(&self.d1.pow(2)).add(&s1.mul(&self.d2)),
        }
    }
}
