//! Derivatives and integrals on the grid, and the checks that compare them
//! with their continuum counterparts at an observation context.
//!
//! Every check returns a [`CheckReport`]; failures are report entries, not
//! errors. Errors are reserved for inputs the check cannot run on.

mod derivative;
mod integral;
mod limit;
mod report;

pub use derivative::{
    derivative, derivative_with, difference_quotient_function, exclusion_band,
    grid_independence_check, secant_check, secant_deviation, Derivative,
};
pub use integral::{ftc_check, integral, integral_with, prefix_sums, IntegralMode, Summation};
pub use limit::{limit_quotient, ConvergentSequence, LimitProbe, LimitReport};
pub use report::{CheckReport, Verdict, REPORT_SCHEMA};

use crate::error::Result;
use crate::exact::{ObservationContext, Rational};
use crate::grid::{GridPoint, GridSpec};
use crate::gridfn::{continuity_check, GridFunction, SamplingPlan};

/// A real function given by a grid function `f` on `[0,1]_ε`: its value at
/// `s ∈ [0, 1]` is `f(κ(s))`.
#[derive(Debug, Clone)]
pub struct RealFunctionRepr {
    f: GridFunction,
}

impl RealFunctionRepr {
    pub fn new(f: GridFunction) -> Self {
        RealFunctionRepr { f }
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn spec(&self) -> GridSpec {
        self.f.spec()
    }

    /// `κ_ε(s)`.
    pub fn round(&self, s: &Rational) -> Result<GridPoint> {
        self.f.spec().round(s)
    }

    /// `f(κ_ε(s))`.
    pub fn at(&self, s: &Rational) -> Result<Rational> {
        self.f.evaluate(&self.round(s)?)
    }
}

impl From<GridFunction> for RealFunctionRepr {
    fn from(f: GridFunction) -> Self {
        RealFunctionRepr::new(f)
    }
}

/// Continuity of `f` as a report, for callers that only need the verdict.
pub fn continuity_report(
    f: &GridFunction,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<CheckReport> {
    let outcome = continuity_check(f, ctx, plan)?;
    let mut report = CheckReport::new("continuity", f.name(), vec![f.spec().tau()], *ctx);
    report.note("outcome", outcome.label());
    match &outcome {
        crate::gridfn::Continuity::Certified => {
            let cert = f
                .continuity()
                .expect("certified functions carry a certificate");
            let h = ctx.h() as u128;
            report.max_gap = cert.modulus.at(&Rational::new(1u8, h * h)?);
            report.note("modulus", cert.modulus.description());
        }
        crate::gridfn::Continuity::SampledOk { samples } => {
            report.coverage = plan.indices(f.spec()).coverage;
            report.samples = *samples as u64;
        }
        crate::gridfn::Continuity::Refuted { x, y, fx, fy } => {
            report.coverage = plan.indices(f.spec()).coverage;
            report.violations = 1;
            report.max_gap = (fy - fx).abs();
            report.witness = Some(x.clone());
            report.note("neighbour", y);
        }
    }
    Ok(report.conclude())
}
