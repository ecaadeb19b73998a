use std::sync::Arc;

use rayon::prelude::*;

use super::{CheckReport, RealFunctionRepr};
use crate::elem::sum_balanced;
use crate::error::Result;
use crate::exact::{ObservationContext, Rational};
use crate::gridfn::{Certificate, Coverage, GridFunction, Modulus};

/// Terms per chunk in parallel prefix sums.
const CHUNK: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    Serial,
    /// Chunk totals in parallel, then each chunk's running sums in parallel.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMode {
    /// Tabulates every prefix sum; needs `τ <= 2²⁴`.
    Materialized(Summation),
    /// Sums `f(0) + … + f(u)` afresh at every evaluation; any `τ`.
    Streaming,
}

/// Inclusive prefix sums `values[0] + … + values[i]`.
///
/// Rational addition is exact, so both summation orders give identical
/// results.
pub fn prefix_sums(values: &[Rational], summation: Summation) -> Vec<Rational> {
    match summation {
        Summation::Serial => {
            let mut acc = Rational::zero();
            values
                .iter()
                .map(|v| {
                    acc += v;
                    acc.clone()
                })
                .collect()
        }
        Summation::Parallel => {
            let totals: Vec<Rational> = values.par_chunks(CHUNK).map(sum_balanced).collect();
            let mut offsets = Vec::with_capacity(totals.len());
            let mut acc = Rational::zero();
            for t in &totals {
                offsets.push(acc.clone());
                acc += t;
            }
            values
                .par_chunks(CHUNK)
                .zip(offsets.into_par_iter())
                .flat_map_iter(|(chunk, mut acc)| {
                    chunk
                        .iter()
                        .map(|v| {
                            acc += v;
                            acc.clone()
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    }
}

pub fn integral(repr: &RealFunctionRepr) -> Result<RealFunctionRepr> {
    integral_with(repr, IntegralMode::Materialized(Summation::Parallel))
}

/// The indefinite integral `u ↦ Σ_{0<=x<=u} f(x)·ε`, both ends included.
///
/// Its difference quotient at `u` is `f(u⁺)`, so it inherits `f`'s
/// continuity certificate as its quotient certificate.
pub fn integral_with(repr: &RealFunctionRepr, mode: IntegralMode) -> Result<RealFunctionRepr> {
    let f = repr.function().clone();
    let spec = f.spec();
    let eps = spec.epsilon();
    let name = format!("integral of {}", f.name());
    let (g, bound) = match mode {
        IntegralMode::Materialized(summation) => {
            let values = f.materialize()?;
            let bound = values
                .iter()
                .map(Rational::abs)
                .max()
                .unwrap_or_else(Rational::zero);
            let table: Arc<Vec<Rational>> = Arc::new(
                prefix_sums(&values, summation)
                    .into_iter()
                    .map(|p| p * &eps)
                    .collect(),
            );
            let g = GridFunction::new(spec, name, move |x| Ok(table[x.index() as usize].clone()));
            (g, Some(bound))
        }
        IntegralMode::Streaming => {
            let h = f.clone();
            let eps = eps.clone();
            let g = GridFunction::new(spec, name, move |x| {
                let count = x.index() + 1;
                let width = CHUNK as u64;
                let parts: Vec<Rational> = (0..count.div_ceil(width))
                    .into_par_iter()
                    .map(|c| -> Result<Rational> {
                        let terms = (c * width..count.min((c + 1) * width))
                            .map(|i| h.evaluate_index(i))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(sum_balanced(&terms))
                    })
                    .collect::<Result<_>>()?;
                Ok(sum_balanced(&parts) * &eps)
            });
            (g, f.continuity().map(|c| c.bound.clone()))
        }
    };
    let g = match bound {
        // |I(u) − I(v)| <= sup|f|·|u − v| and |I| <= sup|f|·(1 + ε)
        Some(b) => g.with_continuity(Certificate::new(
            &b * (Rational::one() + &eps),
            Modulus::lipschitz(b),
        )),
        None => g,
    };
    let g = match f.continuity() {
        Some(cert) => g.with_quotient(cert.clone()),
        None => g,
    };
    Ok(RealFunctionRepr::new(g))
}

/// Checks that the integral's difference quotient is `f(u⁺)` exactly at every
/// `u < 1`, and that `f(u⁺) ≐ f(u)` at `ctx`.
///
/// Any failure of the exact identity is a hard violation; the report's
/// `max_gap` is the largest `|f(u⁺) − f(u)|`, judged against `1/H`.
pub fn ftc_check(repr: &RealFunctionRepr, ctx: &ObservationContext) -> Result<CheckReport> {
    let f = repr.function();
    let spec = f.spec();
    let tau = spec.tau();
    let big = integral(repr)?;
    let big = big.function();
    let values = f.materialize()?;
    let rows: Vec<(bool, Rational)> = (0..tau)
        .into_par_iter()
        .map(|u| -> Result<(bool, Rational)> {
            let next = &values[(u + 1) as usize];
            let exact = big.difference_quotient(&spec.point(u)?)? == *next;
            Ok((exact, (next - &values[u as usize]).abs()))
        })
        .collect::<Result<_>>()?;
    let mut report = CheckReport::new("ftc", f.name(), vec![tau], *ctx);
    report.coverage = Coverage::Exhaustive;
    let tolerance = report.tolerance.clone();
    let mut identity_violations = 0u64;
    let mut first_broken = None;
    for (u, (exact, gap)) in rows.into_iter().enumerate() {
        let at = Rational::new(u as u64, tau)?;
        if !exact {
            identity_violations += 1;
            first_broken.get_or_insert_with(|| at.clone());
        }
        report.observe(&at, gap, &tolerance);
    }
    report.note("exact_identity_violations", identity_violations);
    if identity_violations > 0 {
        report.violations += identity_violations;
        report.witness = first_broken;
    }
    Ok(report.conclude())
}
