//! Elementary functions built from exact rational series: polynomials, the
//! truncated exponential `exp(q, τ) = Σ_{i<=τ} qⁱ/i!`, the logarithm found by
//! searching that exponential, and countable sums of nonnegative terms.

mod series;
mod sum;

pub use series::{
    exp_approx, exp_series, log_approx, tail_terms, ExpMode, TruncationPolicy, FULL_TAU_LIMIT,
    MAX_SERIES_TERMS,
};
pub use sum::{countable_sum, sum_balanced, CountableSum, SeriesState, MAX_SUM_TERMS};

use crate::error::{Error, Result};
use crate::exact::{ExtendedReal, Rational};

/// `Σ pᵢ·xⁱ` by Horner's rule; coefficients are listed from the constant term up.
pub fn poly_eval(coefficients: &[Rational], x: &Rational) -> Rational {
    coefficients
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, p| acc * x + p)
}

/// `e^x` on extended reals: the truncated series at the representative.
pub fn exp_real(x: &ExtendedReal, tau: u64, policy: TruncationPolicy) -> Result<ExtendedReal> {
    match x {
        ExtendedReal::Finite {
            representative,
            context,
        } => Ok(ExtendedReal::from_rational(
            exp_approx(representative, tau, policy)?,
            *context,
        )),
        ExtendedReal::PlusInfinity => Ok(ExtendedReal::PlusInfinity),
        ExtendedReal::MinusInfinity => Err(Error::domain(
            "exp(-inf) has no context to carry its value 0; wrap 0 explicitly",
        )),
    }
}

/// `log x` on extended reals. The representative must be positive and not
/// infinitesimal.
pub fn log_real(x: &ExtendedReal, tau: u64, policy: TruncationPolicy) -> Result<ExtendedReal> {
    match x {
        ExtendedReal::Finite {
            representative,
            context,
        } => {
            if !representative.is_positive() || context.is_infinitesimal(representative) {
                return Err(Error::domain(format!(
                    "log needs a positive, non-infinitesimal argument, got {representative} at H = {}",
                    context.h()
                )));
            }
            Ok(ExtendedReal::from_rational(
                log_approx(representative, tau, policy)?,
                *context,
            ))
        }
        ExtendedReal::PlusInfinity => Ok(ExtendedReal::PlusInfinity),
        ExtendedReal::MinusInfinity => Err(Error::domain("log(-inf) is undefined")),
    }
}
