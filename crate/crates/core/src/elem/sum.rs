use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExtendedReal, ObservationContext, Rational};

/// Most terms a countable sum will add before giving up, whatever the cap.
pub const MAX_SUM_TERMS: u128 = 1 << 16;

/// Running state of a series: the exact partial sum of terms `0..=term_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesState {
    pub partial_sum: Rational,
    pub term_index: u128,
    pub last_term: Rational,
}

impl SeriesState {
    /// State after the first term.
    pub fn start(first: Rational) -> Self {
        SeriesState {
            partial_sum: first.clone(),
            term_index: 0,
            last_term: first,
        }
    }

    /// Adds the terms up to and including `index`.
    pub fn extend_to(
        &mut self,
        index: u128,
        terms: &impl Fn(u128) -> Result<Rational>,
    ) -> Result<()> {
        if index <= self.term_index {
            return Ok(());
        }
        let chunk = (self.term_index + 1..=index)
            .map(|i| {
                let t = terms(i)?;
                if t.is_negative() {
                    return Err(Error::domain(format!(
                        "countable sums need nonnegative terms; term {i} is {t}"
                    )));
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        self.last_term = chunk
            .last()
            .cloned()
            .unwrap_or_else(|| self.last_term.clone());
        self.partial_sum += &sum_balanced(&chunk);
        self.term_index = index;
        Ok(())
    }
}

/// Exact sum by pairwise splitting, which keeps intermediate denominators
/// small for slowly varying terms.
pub fn sum_balanced(terms: &[Rational]) -> Rational {
    match terms.len() {
        0 => Rational::zero(),
        1 => terms[0].clone(),
        n => {
            let (left, right) = terms.split_at(n / 2);
            sum_balanced(left) + sum_balanced(right)
        }
    }
}

/// Result of [`countable_sum`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CountableSum {
    /// The partial sums stabilized, or exceeded `K`.
    Value { value: ExtendedReal, probe: u128 },
    /// Neither happened before the cap.
    Unstable {
        last_probe: u128,
        partial_sum: Rational,
        /// The term budget, not the caller's cap, ended the search.
        budget_exhausted: bool,
    },
}

impl CountableSum {
    pub fn value(&self) -> Option<&ExtendedReal> {
        match self {
            CountableSum::Value { value, .. } => Some(value),
            CountableSum::Unstable { .. } => None,
        }
    }
}

/// `Σ_{i∈FN} bᵢ` for nonnegative terms, by probing the partial sums
/// `S(m) = Σ_{i<=m} bᵢ` at `m = 2, 4, 8, …`.
///
/// A probe whose partial sum exceeds `K` gives `+∞`. Two consecutive
/// doublings that each move the partial sum by at most `1/(4H)` give the
/// finite value at the last probe. Otherwise the search stops at `cap` (or at
/// [`MAX_SUM_TERMS`]) and reports the sum as unstable.
pub fn countable_sum(
    terms: impl Fn(u128) -> Result<Rational>,
    ctx: &ObservationContext,
    cap: u128,
) -> Result<CountableSum> {
    if cap == 0 {
        return Err(Error::domain("countable sum needs a positive cap"));
    }
    let limit = cap.min(MAX_SUM_TERMS);
    let first = terms(0)?;
    if first.is_negative() {
        return Err(Error::domain(format!(
            "countable sums need nonnegative terms; term 0 is {first}"
        )));
    }
    let mut state = SeriesState::start(first);
    let k = ctx.bound();
    let quarter = Rational::new(1u8, 4 * ctx.h() as u128)?;
    let mut previous: Option<Rational> = None;
    let mut settled = 0;
    let mut m = 2u128;
    while m <= limit {
        state.extend_to(m, &terms)?;
        if state.partial_sum > k {
            return Ok(CountableSum::Value {
                value: ExtendedReal::PlusInfinity,
                probe: m,
            });
        }
        if let Some(prev) = &previous {
            if &state.partial_sum - prev <= quarter {
                settled += 1;
            } else {
                settled = 0;
            }
        }
        if settled >= 2 {
            return Ok(CountableSum::Value {
                value: ExtendedReal::from_rational(state.partial_sum, *ctx),
                probe: m,
            });
        }
        previous = Some(state.partial_sum.clone());
        m = match m.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    Ok(CountableSum::Unstable {
        last_probe: state.term_index,
        partial_sum: state.partial_sum,
        budget_exhausted: cap > MAX_SUM_TERMS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ObservationContext {
        ObservationContext::default()
    }

    #[test]
    fn zeros_sum_to_exactly_zero() {
        let s = countable_sum(|_| Ok(Rational::zero()), &ctx(), 1 << 20).unwrap();
        assert_eq!(s.value().unwrap().representative(), Some(&Rational::zero()));
    }

    #[test]
    fn halves_sum_to_two() {
        let s = countable_sum(
            |i| Ok(Rational::one() / Rational::from(2u8).pow(i as u32)),
            &ctx(),
            1 << 20,
        )
        .unwrap();
        let v = s.value().unwrap().representative().unwrap().clone();
        // closed form of the partial sum: 2 − 2^-m
        assert!((v - Rational::from(2)).abs() <= ctx().infinitesimal());
    }

    #[test]
    fn negative_terms_are_rejected() {
        let err = countable_sum(
            |i| {
                Ok(if i == 3 {
                    Rational::from(-1)
                } else {
                    Rational::zero()
                })
            },
            &ctx(),
            64,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn large_terms_diverge_to_infinity() {
        let small = ObservationContext::new(10, 100).unwrap();
        let s = countable_sum(|_| Ok(Rational::from(30)), &small, 1 << 10).unwrap();
        assert_eq!(
            s,
            CountableSum::Value {
                value: ExtendedReal::PlusInfinity,
                probe: 4
            }
        );
    }

    #[test]
    fn harmonic_series_is_never_finite() {
        let s = countable_sum(|i| Rational::new(1u8, i + 1), &ctx(), 1 << 12).unwrap();
        match s {
            CountableSum::Unstable {
                last_probe,
                budget_exhausted,
                ..
            } => {
                assert_eq!(last_probe, 1 << 12);
                assert!(!budget_exhausted);
            }
            other => panic!("harmonic series reported {other:?}"),
        }
    }

    #[test]
    fn balanced_sum_matches_sequential_sum() {
        let terms: Vec<Rational> = (1..200).map(|i| Rational::ratio(i % 7 - 3, i)).collect();
        let sequential: Rational = terms.iter().sum();
        assert_eq!(sum_balanced(&terms), sequential);
    }
}
