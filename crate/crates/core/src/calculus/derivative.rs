use rayon::prelude::*;

use super::{CheckReport, RealFunctionRepr};
use crate::error::{Error, Jump, Result};
use crate::exact::{ObservationContext, Rational};
use crate::grid::{GridMap, GridPoint, GridSpec};
use crate::gridfn::{
    continuity_check, fn_indiscernible, transport, Continuity, Coverage, GridFunction, SamplingPlan,
};

/// `x ↦ Δf/Δx(x)` on `[0,1]_ε⁻`, continued to the right endpoint by its
/// value at `1 − ε`. Carries `f`'s quotient certificate as its own.
pub fn difference_quotient_function(f: &GridFunction) -> GridFunction {
    let g = f.clone();
    let last = f.spec().tau() - 1;
    let dq = GridFunction::new(f.spec(), format!("d/dx ({})", f.name()), move |x| {
        let spec = x.spec();
        g.difference_quotient(&spec.point(x.index().min(last))?)
    });
    match f.quotient() {
        Some(cert) => dq.with_continuity(cert.clone()),
        None => dq,
    }
}

/// A derivative together with the continuity verdict that admitted it.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub repr: RealFunctionRepr,
    pub continuity: Continuity,
}

pub fn derivative(repr: &RealFunctionRepr, ctx: &ObservationContext) -> Result<Derivative> {
    derivative_with(repr, ctx, &SamplingPlan::default())
}

/// The derivative of `repr`, provided its difference quotient is continuous
/// at `ctx` (certified, or not refuted on the points of `plan`).
pub fn derivative_with(
    repr: &RealFunctionRepr,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<Derivative> {
    let dq = difference_quotient_function(repr.function());
    let continuity = continuity_check(&dq, ctx, plan)?;
    if let Continuity::Refuted { x, y, fx, fy } = continuity {
        return Err(Error::NotDifferentiable(Box::new(Jump {
            left: x,
            right: y,
            left_value: fx,
            right_value: fy,
        })));
    }
    Ok(Derivative {
        repr: RealFunctionRepr::new(dq),
        continuity,
    })
}

/// `(f(x) − f(a))/(x − a) − Δf/Δx(a)`, exactly.
pub fn secant_deviation(f: &GridFunction, a: &GridPoint, x: &GridPoint) -> Result<Rational> {
    if a == x {
        return Err(Error::domain(format!(
            "secant through {a} needs a second point"
        )));
    }
    let run = x.value() - a.value();
    let secant = (f.evaluate(x)? - f.evaluate(a)?) / run;
    Ok(secant - f.difference_quotient(a)?)
}

/// Step counts `[lo, hi]` of the band `max(4ε, 1/H²) <= x − a <= 1/H`.
pub fn exclusion_band(spec: GridSpec, ctx: &ObservationContext) -> Result<(u64, u64)> {
    let tau = spec.tau() as u128;
    let h = ctx.h() as u128;
    // 1/H² in steps is τ/H², rounded up
    let fine = tau.div_ceil(h * h);
    let lo = fine.max(4);
    let hi = tau / h;
    if lo > hi {
        return Err(Error::domain(format!(
            "band max(4/{tau}, 1/{h}^2) <= x - a <= 1/{h} contains no grid step"
        )));
    }
    Ok((lo as u64, hi as u64))
}

/// Compares every secant slope over the band with `Δf/Δx(a)`.
///
/// The tolerance for a pair is `ω(x − a)` from `f`'s quotient certificate, or
/// `1/H` without one. With exhaustive coverage every pair in the band is
/// visited and the deviation is also checked against the exact bound
/// `max_{a<=u<x} |Δf/Δx(u) − Δf/Δx(a)|`; otherwise the sampled points `a`
/// are paired with dyadic step counts across the band.
pub fn secant_check(
    f: &GridFunction,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<CheckReport> {
    let spec = f.spec();
    let tau = spec.tau();
    let (lo, hi) = exclusion_band(spec, ctx)?;
    let sample = plan.indices(spec);
    let modulus = f.quotient().map(|c| c.modulus.clone());
    let tolerance_at = |steps: u64| -> Rational {
        let gap = Rational::new(steps, tau).expect("tau is positive");
        match &modulus {
            Some(m) => m.at(&gap),
            None => ctx.infinitesimal(),
        }
    };
    let mut report = CheckReport::new("secant", f.name(), vec![tau], *ctx);
    report.coverage = sample.coverage;
    report.tolerance = tolerance_at(hi);
    report.note("band_steps", format!("{lo}..={hi}"));
    report.note(
        "tolerance_rule",
        modulus.as_ref().map_or("1/H".to_string(), |m| {
            format!("omega(x-a) = {}", m.description())
        }),
    );

    // (a, deviation, tolerance, sup bound) for every visited pair
    type Pair = (u64, Rational, Rational, Option<Rational>);
    let pairs: Vec<Vec<Pair>> = match sample.coverage {
        Coverage::Exhaustive => {
            let values = f.materialize()?;
            let t = Rational::from(tau);
            let dq: Vec<Rational> = (0..tau as usize)
                .into_par_iter()
                .map(|i| (&values[i + 1] - &values[i]) * &t)
                .collect();
            (0..tau)
                .into_par_iter()
                .map(|a| {
                    let mut out = Vec::new();
                    let base = &dq[a as usize];
                    let mut sup = Rational::zero();
                    for k in 1..=hi {
                        let x = a + k;
                        if x > tau {
                            break;
                        }
                        let spread = (&dq[(x - 1) as usize] - base).abs();
                        if spread > sup {
                            sup = spread;
                        }
                        if k < lo {
                            continue;
                        }
                        let secant =
                            (&values[x as usize] - &values[a as usize]) * &t / Rational::from(k);
                        out.push((a, secant - base, tolerance_at(k), Some(sup.clone())));
                    }
                    out
                })
                .collect()
        }
        Coverage::Sampled => {
            let mut steps = Vec::new();
            let mut k = lo;
            while k < hi {
                steps.push(k);
                k = k.saturating_mul(2);
            }
            steps.push(hi);
            sample
                .indices
                .par_iter()
                .filter(|&&a| a < tau)
                .map(|&a| -> Result<Vec<Pair>> {
                    let pa = spec.point(a)?;
                    let mut out = Vec::new();
                    for &k in &steps {
                        let Some(px) = pa.offset(k) else { break };
                        out.push((a, secant_deviation(f, &pa, &px)?, tolerance_at(k), None));
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
    };

    let mut sup_violations = 0u64;
    for (a, deviation, tolerance, sup) in pairs.into_iter().flatten() {
        let magnitude = deviation.abs();
        if let Some(sup) = sup {
            if magnitude > sup {
                sup_violations += 1;
            }
        }
        report.observe(&Rational::new(a, tau)?, magnitude, &tolerance);
    }
    report.violations += sup_violations;
    report.note("sup_bound_violations", sup_violations);
    Ok(report.conclude())
}

/// Derivatives from two representations of one real function agree: at
/// sampled real points `a`, `Δf₁/Δx(α₁(a))` is compared with
/// `Δf₂/Δx(α₂(a))` where `αᵢ` rounds onto grid `i`, with tolerance `2/H`.
///
/// The representations are first compared on the second grid; if they are
/// not indiscernible the report fails without comparing derivatives.
pub fn grid_independence_check(
    f1: &RealFunctionRepr,
    f2: &RealFunctionRepr,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<CheckReport> {
    let (a, b) = (f1.spec(), f2.spec());
    let name = format!("{} | {}", f1.function().name(), f2.function().name());
    let mut report = CheckReport::new("grid-independence", &name, vec![a.tau(), b.tau()], *ctx);

    let moved = transport(
        f1.function(),
        &GridMap::rounding(a, b),
        &GridMap::rounding(b, a),
    )?;
    let same = fn_indiscernible(&moved, f2.function(), ctx, plan)?;
    report.note("precondition_max_gap", &same.max_gap);
    if !same.holds {
        report.coverage = same.coverage;
        report.samples = same.samples as u64;
        report.max_gap = same.max_gap;
        report.violations = 1;
        report.witness = same.witness;
        report.note("precondition", "representations are not indiscernible");
        return Ok(report.conclude());
    }

    // real points come from a grid finer than both
    let fine = match a.tau().checked_mul(b.tau()) {
        Some(t) => t,
        None => a.tau().max(b.tau()).saturating_mul(1 << 10),
    };
    let fine = GridSpec::new(fine)?;
    let sample = plan.indices(fine);
    let (d1, d2) = (
        difference_quotient_function(f1.function()),
        difference_quotient_function(f2.function()),
    );
    let (to_a, to_b) = (GridMap::rounding(fine, a), GridMap::rounding(fine, b));
    let gaps: Vec<(u64, Rational)> = sample
        .indices
        .par_iter()
        .map(|&i| {
            let s = fine.point(i)?;
            let gap = d1.evaluate(&to_a.apply(&s)?)? - d2.evaluate(&to_b.apply(&s)?)?;
            Ok((i, gap.abs()))
        })
        .collect::<Result<_>>()?;
    report.coverage = sample.coverage;
    report.tolerance = Rational::new(2u8, ctx.h())?;
    report.note("sample_grid", fine.tau());
    let tolerance = report.tolerance.clone();
    for (i, gap) in gaps {
        report.observe(&Rational::new(i, fine.tau())?, gap, &tolerance);
    }
    Ok(report.conclude())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elem::TruncationPolicy;
    use crate::expr::{compile, parse};

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn build(text: &str, tau: u64) -> GridFunction {
        compile(
            &parse(text).unwrap(),
            GridSpec::new(tau).unwrap(),
            TruncationPolicy::default(),
        )
        .unwrap()
    }

    #[test]
    fn derivative_of_square_is_two_x_plus_epsilon() {
        let f = build("x^2", 1_000_000);
        let d = derivative(&f.clone().into(), &ObservationContext::default()).unwrap();
        assert_eq!(d.continuity, Continuity::Certified);
        let at_half = d.repr.at(&r("1/2")).unwrap();
        assert_eq!(at_half, r("1000001/1000000"));
        assert!(ObservationContext::default().indiscernible(&at_half, &Rational::one()));
        // right endpoint repeats the last quotient
        let spec = f.spec();
        assert_eq!(
            d.repr.function().evaluate(&spec.endpoint()).unwrap(),
            d.repr.function().evaluate_index(spec.tau() - 1).unwrap()
        );
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let spec = GridSpec::new(1000).unwrap();
        let f = GridFunction::constant(spec, r("7/3"));
        let d = derivative(&f.into(), &ObservationContext::new(100, 1000).unwrap()).unwrap();
        for x in spec.points() {
            assert_eq!(d.repr.function().evaluate(&x).unwrap(), Rational::zero());
        }
    }

    #[test]
    fn step_is_not_differentiable() {
        let spec = GridSpec::new(1_000_000).unwrap();
        let step = GridFunction::step(spec, r("1/2"));
        let err = derivative(&step.into(), &ObservationContext::default()).unwrap_err();
        match err {
            Error::NotDifferentiable(jump) => {
                // the quotient at u looks at [u, u + ε]
                assert!(jump.left <= r("1/2") && r("1/2") <= jump.right + spec.epsilon());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn secant_examples() {
        let tau = 1_000_000u64;
        let f = build("x^2", tau);
        let spec = f.spec();
        let a = spec.point(123_456).unwrap();
        let x = spec.point(654_321).unwrap();
        // (x² − a²)/(x − a) − (2a + ε) = x − a − ε
        assert_eq!(
            secant_deviation(&f, &a, &x).unwrap(),
            x.value() - a.value() - spec.epsilon()
        );
        let lin = build("3*x - 1/2", tau);
        assert_eq!(secant_deviation(&lin, &a, &x).unwrap(), Rational::zero());
        assert!(secant_deviation(&f, &a, &a).is_err());
        // a = κ(1/4), x = a + 1/H at τ = H²
        let h = 1000u64;
        let fine = build("x^2", h * h);
        let a = fine.spec().round(&r("1/4")).unwrap();
        let x = a.offset(h).unwrap();
        let deviation = secant_deviation(&fine, &a, &x).unwrap();
        assert_eq!(
            deviation,
            Rational::unit_fraction(h) - Rational::unit_fraction(h * h)
        );
        assert!(deviation <= Rational::unit_fraction(h));
    }

    #[test]
    fn exclusion_band_steps() {
        let ctx = ObservationContext::new(64, 1 << 20).unwrap();
        assert_eq!(
            exclusion_band(GridSpec::new(1 << 12).unwrap(), &ctx).unwrap(),
            (4, 64)
        );
        let ctx = ObservationContext::new(1000, 1 << 20).unwrap();
        assert_eq!(
            exclusion_band(GridSpec::new(1_000_000).unwrap(), &ctx).unwrap(),
            (4, 1000)
        );
        assert!(exclusion_band(GridSpec::new(100).unwrap(), &ctx).is_err());
    }

    #[test]
    fn secant_check_passes_for_square_and_fails_without_continuity() {
        let ctx = ObservationContext::new(64, 1 << 20).unwrap();
        let report = secant_check(&build("x^2", 1 << 10), &ctx, &SamplingPlan::default()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.coverage, Coverage::Exhaustive);
        let spec = GridSpec::new(1 << 10).unwrap();
        let step = GridFunction::step(spec, r("1/2"));
        let report = secant_check(&step, &ctx, &SamplingPlan::default()).unwrap();
        assert!(!report.passed());
        assert_eq!(report.notes["sup_bound_violations"], "0");
    }

    #[test]
    fn grid_independence_examples() {
        let ctx = ObservationContext::new(1000, 1_000_000).unwrap();
        let plan = SamplingPlan::light(2000, 7);
        let f1 = RealFunctionRepr::new(build("x^2", 10_000));
        let f2 = RealFunctionRepr::new(build("x^2", 30_000));
        let report = grid_independence_check(&f1, &f2, &ctx, &plan).unwrap();
        assert!(report.passed());
        assert!(report.max_gap < r("4/10000"));
        assert!(report.samples >= 1000);
        let same = grid_independence_check(&f1, &f1, &ctx, &plan).unwrap();
        assert_eq!(same.max_gap, Rational::zero());
        let step =
            RealFunctionRepr::new(GridFunction::step(GridSpec::new(30_000).unwrap(), r("1/2")));
        let broken = grid_independence_check(&f1, &step, &ctx, &plan).unwrap();
        assert!(!broken.passed());
        assert!(broken.notes.contains_key("precondition"));
    }
}
