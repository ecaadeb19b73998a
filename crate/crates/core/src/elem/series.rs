use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;

/// Largest `τ` summed term by term in [`ExpMode::Full`].
pub const FULL_TAU_LIMIT: u64 = 1 << 14;

/// Most terms any single truncated exponential may use.
pub const MAX_SERIES_TERMS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpMode {
    /// Sum all `τ + 1` terms.
    Full,
    /// Stop once the remaining terms provably sum to less than `1/(τ·2^guard)`.
    Tail,
}

/// How far `exp(q, τ)` is actually summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub mode: ExpMode,
    pub guard: u32,
}

impl TruncationPolicy {
    pub fn full() -> Self {
        TruncationPolicy {
            mode: ExpMode::Full,
            guard: 0,
        }
    }

    pub fn tail(guard: u32) -> Self {
        TruncationPolicy {
            mode: ExpMode::Tail,
            guard,
        }
    }

    /// Index of the last term summed for arguments with `|q| <= bound`.
    pub fn terms_for(&self, bound: &Rational, tau: u64) -> Result<u64> {
        match self.mode {
            ExpMode::Full => {
                if tau > FULL_TAU_LIMIT {
                    return Err(Error::resource(format!(
                        "full exponential series with tau = {tau} exceeds {FULL_TAU_LIMIT} terms; use the tail-bounded mode"
                    )));
                }
                Ok(tau)
            }
            ExpMode::Tail => {
                let c = bound.abs().ceil();
                let c = c.to_u64().ok_or_else(|| {
                    Error::resource(format!("exponential argument bound {bound} is too large"))
                })?;
                tail_terms(c, tau, self.guard)
            }
        }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::tail(64)
    }
}

/// Smallest `n <= τ` such that for `|q| <= c` the terms past `n` sum to less
/// than `1/(τ·2^guard)`.
///
/// Once `n + 1 >= 2c` consecutive terms shrink by at least half, so the tail
/// is at most `2·cⁿ⁺¹/(n+1)!`.
pub fn tail_terms(c: u64, tau: u64, guard: u32) -> Result<u64> {
    if c == 0 {
        return Ok(0);
    }
    let scale = (BigUint::from(2u8) * BigUint::from(tau)) << guard as usize;
    let c_big = BigUint::from(c);
    let mut power = c_big.clone(); // c^(n+1)
    let mut factorial = BigUint::one(); // (n+1)!
    let mut n = 0u64;
    loop {
        if n >= tau {
            return Ok(tau);
        }
        if n > MAX_SERIES_TERMS {
            return Err(Error::resource(format!(
                "exponential series for |q| <= {c} needs more than {MAX_SERIES_TERMS} terms"
            )));
        }
        if n + 1 >= 2 * c && &scale * &power < factorial {
            return Ok(n);
        }
        n += 1;
        power *= &c_big;
        factorial *= BigUint::from(n + 1);
    }
}

/// `Σ_{i=0}^{n} qⁱ/i!` exactly, by Horner's rule on a common denominator so
/// factorials are built up once and reduction happens only at the end.
pub fn exp_series(q: &Rational, n: u64) -> Rational {
    if q.is_zero() || n == 0 {
        return Rational::one();
    }
    let a = q.numerator();
    let b = q.denominator();
    // P_n = 1; P_{k-1} = 1 + (q/k)·P_k
    let mut numer = BigInt::one();
    let mut denom = BigInt::one();
    for k in (1..=n).rev() {
        let kb = b * BigInt::from(k);
        let next_denom = &kb * &denom;
        numer = &next_denom + a * &numer;
        denom = next_denom;
    }
    Rational::new(numer, denom).expect("denominator is a product of positive factors")
}

/// `exp(q, τ) = Σ_{i=0}^{τ} qⁱ/i!`, summed according to `policy`.
pub fn exp_approx(q: &Rational, tau: u64, policy: TruncationPolicy) -> Result<Rational> {
    if tau == 0 {
        return Err(Error::domain("exp(q, tau) needs tau >= 1"));
    }
    let n = policy.terms_for(q, tau)?;
    Ok(exp_series(q, n))
}

/// `log(q, τ) = k*/τ` with `k*` the largest integer, `|k| <= τ²`, such that
/// `exp(k/τ, τ) <= q`.
///
/// For `q >= 1` the search runs over `k >= 0`, where the truncated series is
/// increasing; `q < 1` is answered as `−log(1/q, τ)`. The search gallops up
/// from `k = 0` and then bisects, so it never evaluates the series far above
/// the answer.
pub fn log_approx(q: &Rational, tau: u64, policy: TruncationPolicy) -> Result<Rational> {
    if !q.is_positive() {
        return Err(Error::domain(format!(
            "log is defined for x > 0 only, got {q}"
        )));
    }
    if tau == 0 {
        return Err(Error::domain("log(q, tau) needs tau >= 1"));
    }
    if q < &Rational::one() {
        return Ok(-log_approx(&q.recip()?, tau, policy)?);
    }
    let k = log_index(q, tau, policy)?;
    Rational::new(k, tau)
}

/// The index `k*` of [`log_approx`] for `q >= 1`.
pub(crate) fn log_index(q: &Rational, tau: u64, policy: TruncationPolicy) -> Result<u128> {
    let max_k = tau as u128 * tau as u128;
    let below = |k: u128| -> Result<bool> {
        let arg = Rational::new(k, tau)?;
        Ok(&exp_approx(&arg, tau, policy)? <= q)
    };
    let mut lo = 0u128; // exp(0) = 1 <= q
    let mut hi = 1u128;
    loop {
        if hi >= max_k {
            if below(max_k)? {
                return Err(Error::Range(format!(
                    "log({q}, {tau}) reaches the end of the search range |k| <= tau^2"
                )));
            }
            hi = max_k;
            break;
        }
        if !below(hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
