use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::derivative::{difference_quotient_function, exclusion_band};
use super::{RealFunctionRepr, Verdict};
use crate::error::{Error, Result};
use crate::exact::{ObservationContext, Rational};
use crate::grid::GridPoint;

/// How far [`ConvergentSequence::validate`] searches for a settled tail.
const SEARCH_LIMIT: u64 = 1 << 12;
/// Length of a tail that counts as settled.
const TAIL: u64 = 64;
/// Terms visited by [`limit_quotient`].
const PROBE_LIMIT: u64 = 256;

type Rule = dyn Fn(u64) -> Rational + Send + Sync;

/// A sequence of rationals with a declared limit.
#[derive(Clone)]
pub struct ConvergentSequence {
    rule: Arc<Rule>,
    declared_limit: Rational,
    context: ObservationContext,
}

impl fmt::Debug for ConvergentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvergentSequence")
            .field("declared_limit", &self.declared_limit)
            .field("context", &self.context)
            .finish()
    }
}

impl ConvergentSequence {
    pub fn new(
        rule: impl Fn(u64) -> Rational + Send + Sync + 'static,
        declared_limit: Rational,
        context: ObservationContext,
    ) -> Self {
        ConvergentSequence {
            rule: Arc::new(rule),
            declared_limit,
            context,
        }
    }

    /// `tᵢ = 2⁻ⁱ`, converging to 0.
    pub fn dyadic(context: ObservationContext) -> Self {
        Self::new(
            |i| {
                Rational::new(1u8, num_bigint::BigInt::from(2u8).pow(i as u32))
                    .expect("power of two")
            },
            Rational::zero(),
            context,
        )
    }

    pub fn term(&self, index: u64) -> Rational {
        (self.rule)(index)
    }

    pub fn declared_limit(&self) -> &Rational {
        &self.declared_limit
    }

    pub fn context(&self) -> &ObservationContext {
        &self.context
    }

    /// For every `q ∈ {1/2, 1/4, …}` down to `1/H`, some run of consecutive
    /// terms within the first few thousand stays within `q` of the limit.
    pub fn validate(&self) -> Result<()> {
        let terms: Vec<Rational> = (0..SEARCH_LIMIT + TAIL)
            .map(|i| (self.term(i) - &self.declared_limit).abs())
            .collect();
        let h = Rational::from(self.context.h());
        let mut q = Rational::ratio(1, 2);
        while &q * &h >= Rational::one() {
            let mut run = 0;
            let settled = terms.iter().any(|d| {
                run = if d <= &q { run + 1 } else { 0 };
                run >= TAIL
            });
            if !settled {
                return Err(Error::domain(format!(
                    "sequence does not settle within {q} of its declared limit {} in its first {} terms",
                    self.declared_limit,
                    SEARCH_LIMIT + TAIL
                )));
            }
            q = q / Rational::from(2);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProbe {
    pub index: u64,
    pub t: Rational,
    /// `(f(κ(x + t)) − f(x)) / (κ(x + t) − x)`.
    pub quotient: Rational,
    pub gap: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub x: Rational,
    /// `Δf/Δx(x)`.
    pub target: Rational,
    pub probes: Vec<LimitProbe>,
    /// Terms outside the band `max(4ε, 1/H²) <= |t| <= 1/H`.
    pub excluded: u64,
    pub max_gap: Rational,
    pub tolerance: Rational,
    pub verdict: Verdict,
}

/// Quotients of `f` along `x + tᵢ` for a sequence `tᵢ → 0`, compared with
/// `Δf/Δx(x)` at tolerance `2/H`.
///
/// Each quotient divides by the grid step `κ(x + t) − x` that `f` actually
/// sees. Terms outside the band `max(4ε, 1/H²) <= |t| <= 1/H` are counted as
/// excluded and not evaluated. The verdict passes when at least one term is
/// in the band and every such term is within tolerance.
pub fn limit_quotient(
    repr: &RealFunctionRepr,
    x: &GridPoint,
    seq: &ConvergentSequence,
) -> Result<LimitReport> {
    if !seq.declared_limit.is_zero() {
        return Err(Error::domain(format!(
            "limit quotients need a sequence tending to 0, not {}",
            seq.declared_limit
        )));
    }
    seq.validate()?;
    let f = repr.function();
    let spec = f.spec();
    let ctx = &seq.context;
    let (lo, hi) = exclusion_band(spec, ctx)?;
    let tau = Rational::from(spec.tau());
    let (lower, upper) = (Rational::from(lo) / &tau, Rational::from(hi) / &tau);
    let target = difference_quotient_function(f).evaluate(x)?;
    let fx = f.evaluate(x)?;
    let base = x.value();
    let tolerance = Rational::new(2u8, ctx.h())?;

    let mut probes = Vec::new();
    let mut excluded = 0;
    let mut max_gap = Rational::zero();
    let mut within = true;
    for index in 0..PROBE_LIMIT {
        let t = seq.term(index);
        let size = t.abs();
        if size < lower || size > upper {
            excluded += 1;
            continue;
        }
        let moved = &base + &t;
        let y = spec
            .round(&moved)
            .map_err(|_| Error::domain(format!("x + t = {base} + {t} = {moved} leaves [0, 1]")))?;
        let quotient = (f.evaluate(&y)? - &fx) / (y.value() - &base);
        let gap = (&quotient - &target).abs();
        within &= gap <= tolerance;
        if gap > max_gap {
            max_gap = gap.clone();
        }
        probes.push(LimitProbe {
            index,
            t,
            quotient,
            gap,
        });
    }
    let verdict = if within && !probes.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LimitReport {
        x: base,
        target,
        probes,
        excluded,
        max_gap,
        tolerance,
        verdict,
    })
}
