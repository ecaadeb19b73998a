//! Rational-valued functions on a grid.
//!
//! A [`GridFunction`] is an evaluation rule, not a table: grids with `τ = 10¹²`
//! are routine and are only ever visited pointwise. Functions may carry a
//! [`Certificate`] for their values and another for their difference
//! quotients; both are propagated through the arithmetic combinators.

mod modulus;
mod sampling;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;

pub use modulus::{Certificate, Modulus};
pub use sampling::{Coverage, Sample, SamplingPlan};

use crate::error::{Error, Result};
use crate::exact::{ObservationContext, Rational};
use crate::grid::{GridMap, GridPoint, GridSpec};

/// Largest grid that may be tabulated in memory.
pub const MATERIALIZE_LIMIT: u64 = 1 << 24;

type Rule = dyn Fn(GridPoint) -> Result<Rational> + Send + Sync;

/// Write-once memo table. Concurrent callers may compute the same entry
/// twice; the first stored value wins and later ones must agree with it.
#[derive(Default)]
struct MemoCache {
    table: RwLock<HashMap<u64, Rational>>,
}

impl MemoCache {
    fn get(&self, index: u64) -> Option<Rational> {
        self.table
            .read()
            .expect("memo lock poisoned")
            .get(&index)
            .cloned()
    }

    fn insert(&self, index: u64, value: Rational) -> Rational {
        let mut table = self.table.write().expect("memo lock poisoned");
        let stored = table.entry(index).or_insert_with(|| value.clone());
        debug_assert_eq!(*stored, value, "nondeterministic rule at index {index}");
        stored.clone()
    }

    fn len(&self) -> usize {
        self.table.read().expect("memo lock poisoned").len()
    }
}

/// A deterministic rule `GridPoint -> Rational` on one grid.
#[derive(Clone)]
pub struct GridFunction {
    spec: GridSpec,
    name: Arc<str>,
    rule: Arc<Rule>,
    continuity: Option<Certificate>,
    quotient: Option<Certificate>,
    cache: Option<Arc<MemoCache>>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("name", &self.name)
            .field("spec", &self.spec)
            .field("continuity", &self.continuity)
            .field("quotient", &self.quotient)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl GridFunction {
    /// A function given by its rule on grid points.
    pub fn new(
        spec: GridSpec,
        name: impl Into<String>,
        rule: impl Fn(GridPoint) -> Result<Rational> + Send + Sync + 'static,
    ) -> Self {
        GridFunction {
            spec,
            name: name.into().into(),
            rule: Arc::new(rule),
            continuity: None,
            quotient: None,
            cache: None,
        }
    }

    /// A function given by a rule on the rational value `n/τ` of each point.
    pub fn from_values(
        spec: GridSpec,
        name: impl Into<String>,
        rule: impl Fn(&Rational) -> Result<Rational> + Send + Sync + 'static,
    ) -> Self {
        Self::new(spec, name, move |x| rule(&x.value()))
    }

    pub fn constant(spec: GridSpec, value: Rational) -> Self {
        let cert = Certificate::constant(&value);
        Self::new(spec, format!("{value}"), move |_| Ok(value.clone()))
            .with_continuity(cert)
            .with_quotient(Certificate::constant(&Rational::zero()))
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self::new(spec, "x", |x| Ok(x.value()))
            .with_continuity(Certificate::new(
                Rational::one(),
                Modulus::lipschitz(Rational::one()),
            ))
            .with_quotient(Certificate::constant(&Rational::one()))
    }

    /// `0` below `at`, `1` from `at` on. No certificate.
    pub fn step(spec: GridSpec, at: Rational) -> Self {
        Self::from_values(spec, format!("step({at})"), move |x| {
            Ok(if x < &at {
                Rational::zero()
            } else {
                Rational::one()
            })
        })
    }

    pub fn with_continuity(mut self, cert: Certificate) -> Self {
        self.continuity = Some(cert);
        self
    }

    pub fn with_quotient(mut self, cert: Certificate) -> Self {
        self.quotient = Some(cert);
        self
    }

    pub fn without_certificates(mut self) -> Self {
        self.continuity = None;
        self.quotient = None;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into().into();
        self
    }

    /// Enables memoization of evaluated points.
    pub fn cached(mut self) -> Self {
        self.cache = Some(Arc::new(MemoCache::default()));
        self
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Certificate for the values of the function.
    pub fn continuity(&self) -> Option<&Certificate> {
        self.continuity.as_ref()
    }

    /// Certificate for the difference quotient `Δf/Δx`.
    pub fn quotient(&self) -> Option<&Certificate> {
        self.quotient.as_ref()
    }

    pub fn cached_points(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| c.len())
    }

    fn check_point(&self, x: &GridPoint) -> Result<()> {
        if x.spec() != self.spec {
            return Err(Error::domain(format!(
                "point {x} lies on {} but {} is defined on {}",
                x.spec(),
                self.name,
                self.spec
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &GridPoint) -> Result<Rational> {
        self.check_point(x)?;
        match &self.cache {
            Some(cache) => {
                if let Some(v) = cache.get(x.index()) {
                    return Ok(v);
                }
                let v = (self.rule)(*x)?;
                Ok(cache.insert(x.index(), v))
            }
            None => (self.rule)(*x),
        }
    }

    pub fn evaluate_index(&self, index: u64) -> Result<Rational> {
        self.evaluate(&self.spec.point(index)?)
    }

    /// `Δf(x) = f(x⁺) − f(x)`.
    pub fn difference(&self, x: &GridPoint) -> Result<Rational> {
        self.check_point(x)?;
        let next = x.successor()?;
        Ok(self.evaluate(&next)? - self.evaluate(x)?)
    }

    /// `Δf/Δx(x) = (f(x⁺) − f(x))/ε`.
    pub fn difference_quotient(&self, x: &GridPoint) -> Result<Rational> {
        Ok(self.difference(x)? * Rational::from(self.spec.tau()))
    }

    /// All values `f(0), f(ε), …, f(1)`, evaluated in parallel.
    pub fn materialize(&self) -> Result<Vec<Rational>> {
        if self.spec.tau() > MATERIALIZE_LIMIT {
            return Err(Error::resource(format!(
                "cannot tabulate {} on a grid with tau = {} > {MATERIALIZE_LIMIT}",
                self.name,
                self.spec.tau()
            )));
        }
        (0..=self.spec.tau())
            .into_par_iter()
            .map(|i| self.evaluate_index(i))
            .collect()
    }

    fn require_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::domain(format!(
                "{} is defined on {} but {} on {}",
                self.name, self.spec, other.name, other.spec
            )));
        }
        Ok(())
    }

    /// Pointwise `f + g`.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.require_same_grid(other)?;
        let (f, g) = (self.clone(), other.clone());
        Ok(GridFunction {
            continuity: both(&self.continuity, &other.continuity, Certificate::add),
            quotient: both(&self.quotient, &other.quotient, Certificate::add),
            ..GridFunction::new(
                self.spec,
                format!("({}) + ({})", self.name, other.name),
                move |x| Ok(f.evaluate(&x)? + g.evaluate(&x)?),
            )
        })
    }

    /// Pointwise `c·f`.
    pub fn scale(&self, c: &Rational) -> GridFunction {
        let f = self.clone();
        let k = c.clone();
        GridFunction {
            continuity: self.continuity.as_ref().map(|cert| cert.scale(c)),
            quotient: self.quotient.as_ref().map(|cert| cert.scale(c)),
            ..GridFunction::new(self.spec, format!("{c}*({})", self.name), move |x| {
                Ok(&k * f.evaluate(&x)?)
            })
        }
    }

    /// `a·f + b·g`.
    pub fn linear_combination(
        &self,
        a: &Rational,
        other: &GridFunction,
        b: &Rational,
    ) -> Result<GridFunction> {
        self.scale(a).add(&other.scale(b))
    }

    /// Pointwise `f·g`.
    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.require_same_grid(other)?;
        // Δ(fg)/Δx(u) = f(u⁺)·Δg/Δx(u) + g(u)·Δf/Δx(u)
        let quotient = match (
            &self.continuity,
            &other.continuity,
            &self.quotient,
            &other.quotient,
        ) {
            (Some(cf), Some(cg), Some(qf), Some(qg)) => Some(Certificate::new(
                &cf.bound * &qg.bound + &cg.bound * &qf.bound,
                qg.modulus
                    .scale(&cf.bound)
                    .add(&cf.modulus.scale(&qg.bound))
                    .add(&qf.modulus.scale(&cg.bound))
                    .add(&cg.modulus.scale(&qf.bound)),
            )),
            _ => None,
        };
        let (f, g) = (self.clone(), other.clone());
        Ok(GridFunction {
            continuity: both(&self.continuity, &other.continuity, Certificate::product),
            quotient,
            ..GridFunction::new(
                self.spec,
                format!("({})*({})", self.name, other.name),
                move |x| Ok(f.evaluate(&x)? * g.evaluate(&x)?),
            )
        })
    }
}

fn both(
    a: &Option<Certificate>,
    b: &Option<Certificate>,
    op: impl Fn(&Certificate, &Certificate) -> Certificate,
) -> Option<Certificate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(op(a, b)),
        _ => None,
    }
}

pub fn evaluate(f: &GridFunction, x: &GridPoint) -> Result<Rational> {
    f.evaluate(x)
}

pub fn difference(f: &GridFunction, x: &GridPoint) -> Result<Rational> {
    f.difference(x)
}

pub fn difference_quotient(f: &GridFunction, x: &GridPoint) -> Result<Rational> {
    f.difference_quotient(x)
}

/// Outcome of comparing two functions pointwise at `1/H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Indiscernibility {
    pub holds: bool,
    pub coverage: Coverage,
    pub samples: usize,
    pub max_gap: Rational,
    /// First visited point where the gap exceeds `1/H`.
    pub witness: Option<Rational>,
}

/// `F ≐ G` judged as `|f(x) − g(x)| <= 1/H` at every sampled point.
///
/// Exhaustive coverage decides the relation at this context; sampled
/// coverage can only refute it with certainty.
pub fn fn_indiscernible(
    f: &GridFunction,
    g: &GridFunction,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<Indiscernibility> {
    f.require_same_grid(g)?;
    let sample = plan.indices(f.spec);
    let gaps: Vec<(u64, Rational)> = sample
        .indices
        .par_iter()
        .map(|&i| Ok((i, (f.evaluate_index(i)? - g.evaluate_index(i)?).abs())))
        .collect::<Result<_>>()?;
    let tol = ctx.infinitesimal();
    let mut max_gap = Rational::zero();
    let mut witness = None;
    for (i, gap) in gaps {
        if witness.is_none() && gap > tol {
            witness = Some(Rational::new(i, f.spec.tau())?);
        }
        if gap > max_gap {
            max_gap = gap;
        }
    }
    Ok(Indiscernibility {
        holds: witness.is_none(),
        coverage: sample.coverage,
        samples: sample.indices.len(),
        max_gap,
        witness,
    })
}

/// Moves `f` from grid A to grid B: `y ↦ f(from_b(y))`.
///
/// `to_b` and `from_b` must be the canonical rounding maps A→B and B→A; the
/// values are not transformed.
pub fn transport(f: &GridFunction, to_b: &GridMap, from_b: &GridMap) -> Result<GridFunction> {
    if to_b.source() != f.spec || from_b.target() != f.spec || from_b.source() != to_b.target() {
        return Err(Error::domain(format!(
            "grid maps {} -> {} and {} -> {} do not form an equivalence with {}",
            to_b.source(),
            to_b.target(),
            from_b.source(),
            from_b.target(),
            f.spec
        )));
    }
    let target = to_b.target();
    if target == f.spec {
        return Ok(f.clone());
    }
    let g = f.clone();
    let back = *from_b;
    // κ moves points by less than the source step
    let continuity = f
        .continuity
        .as_ref()
        .map(|c| Certificate::new(c.bound.clone(), c.modulus.widened(f.spec.epsilon())));
    Ok(GridFunction {
        continuity,
        ..GridFunction::new(target, format!("({}) on {target}", f.name), move |y| {
            g.evaluate(&back.apply(&y)?)
        })
    })
}

/// Three-valued continuity verdict.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Continuity {
    /// A certificate shows `ω(1/H²) <= 1/H`.
    Certified,
    /// No certificate, and no sampled pair broke continuity.
    SampledOk { samples: usize },
    /// Two points at most `1/H²` apart whose values differ by more than `1/H`.
    Refuted {
        x: Rational,
        y: Rational,
        fx: Rational,
        fy: Rational,
    },
}

impl Continuity {
    pub fn is_refuted(&self) -> bool {
        matches!(self, Continuity::Refuted { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Continuity::Certified => "certified",
            Continuity::SampledOk { .. } => "sampled",
            Continuity::Refuted { .. } => "refuted",
        }
    }
}

/// Whether a certificate implies that inputs within `1/H²` of each other
/// have values within `1/H`.
pub fn certifies(cert: &Certificate, ctx: &ObservationContext) -> bool {
    let h = ctx.h() as u128;
    let fine = Rational::new(1u8, h * h).expect("H is positive");
    cert.modulus.at(&fine) <= ctx.infinitesimal()
}

/// Continuity of `f` at the context: certified from its certificate when
/// possible, otherwise searched for a counterexample among neighbours of the
/// sampled points.
pub fn continuity_check(
    f: &GridFunction,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<Continuity> {
    if let Some(cert) = &f.continuity {
        if certifies(cert, ctx) {
            return Ok(Continuity::Certified);
        }
    }
    refute_continuity(f, ctx, plan)
}

/// Sampling half of [`continuity_check`]: compares each sampled point with
/// its neighbours on both sides, one step away and at the largest step count
/// within `1/H²`.
pub fn refute_continuity(
    f: &GridFunction,
    ctx: &ObservationContext,
    plan: &SamplingPlan,
) -> Result<Continuity> {
    let spec = f.spec;
    let tau = spec.tau() as u128;
    let h = ctx.h() as u128;
    let mut offsets = Vec::new();
    // one step only counts when ε itself is infinitesimal
    if tau >= h {
        offsets.push(1u64);
    }
    let wide = (tau / (h * h)).min(u64::MAX as u128) as u64;
    if wide > 1 {
        offsets.push(wide);
    }
    let sample = plan.indices(spec);
    let tol = ctx.infinitesimal();
    let found = sample
        .indices
        .par_iter()
        .map(|&i| -> Result<Option<Continuity>> {
            let x = spec.point(i)?;
            let fx = f.evaluate(&x)?;
            for &k in &offsets {
                let left = i.checked_sub(k).map(|j| spec.point(j)).transpose()?;
                for (a, b) in [(left, Some(x)), (Some(x), x.offset(k))] {
                    let (Some(a), Some(b)) = (a, b) else { continue };
                    let fa = if a == x { fx.clone() } else { f.evaluate(&a)? };
                    let fb = if b == x { fx.clone() } else { f.evaluate(&b)? };
                    if (&fb - &fa).abs() > tol {
                        return Ok(Some(Continuity::Refuted {
                            x: a.value(),
                            y: b.value(),
                            fx: fa,
                            fy: fb,
                        }));
                    }
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found
        .into_iter()
        .flatten()
        .next()
        .unwrap_or(Continuity::SampledOk {
            samples: sample.indices.len(),
        }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn square(spec: GridSpec) -> GridFunction {
        let id = GridFunction::identity(spec);
        id.mul(&id).unwrap().with_name("x^2")
    }

    #[test]
    fn evaluate_examples() {
        let ten = GridSpec::new(10).unwrap();
        assert_eq!(square(ten).evaluate_index(3).unwrap(), r("9/100"));
        let one = GridFunction::constant(ten, Rational::one());
        assert!(ten
            .points()
            .all(|x| one.evaluate(&x).unwrap() == Rational::one()));
        let twenty = GridSpec::new(20).unwrap();
        assert!(square(ten).evaluate(&twenty.point(3).unwrap()).is_err());
    }

    #[test]
    fn difference_examples() {
        let ten = GridSpec::new(10).unwrap();
        let x3 = ten.point(3).unwrap();
        // oracle: (4/10)^2 - (3/10)^2
        let expected = r("4/10").pow(2) - r("3/10").pow(2);
        assert_eq!(square(ten).difference(&x3).unwrap(), expected);
        assert_eq!(expected, r("7/100"));
        let c = GridFunction::constant(ten, r("5/3"));
        assert_eq!(c.difference(&x3).unwrap(), Rational::zero());
        assert_eq!(
            GridFunction::identity(ten).difference(&x3).unwrap(),
            r("1/10")
        );
        assert!(square(ten).difference(&ten.endpoint()).is_err());
    }

    #[test]
    fn difference_quotient_examples() {
        let ten = GridSpec::new(10).unwrap();
        let x3 = ten.point(3).unwrap();
        let expected = (r("4/10").pow(2) - r("3/10").pow(2)) / r("1/10");
        assert_eq!(square(ten).difference_quotient(&x3).unwrap(), expected);
        assert_eq!(expected, r("2") * r("3/10") + ten.epsilon());
        assert_eq!(
            GridFunction::identity(ten)
                .difference_quotient(&x3)
                .unwrap(),
            Rational::one()
        );
        let c = GridFunction::constant(ten, r("2"));
        assert_eq!(c.difference_quotient(&x3).unwrap(), Rational::zero());
        assert!(c.difference_quotient(&ten.endpoint()).is_err());
    }

    #[test]
    fn fn_indiscernible_examples() {
        let spec = GridSpec::new(1000).unwrap();
        let ctx = ObservationContext::new(100, 10_000).unwrap();
        let plan = SamplingPlan::default();
        let f = square(spec);
        let same = fn_indiscernible(&f, &f, &ctx, &plan).unwrap();
        assert!(same.holds);
        assert_eq!(same.coverage, Coverage::Exhaustive);
        let nudge = Rational::unit_fraction(100 * 100 * 100);
        let g = f.add(&GridFunction::constant(spec, nudge.clone())).unwrap();
        let close = fn_indiscernible(&f, &g, &ctx, &plan).unwrap();
        assert!(close.holds);
        assert_eq!(close.max_gap, nudge);
        let far = f
            .add(&GridFunction::constant(spec, Rational::one()))
            .unwrap();
        let res = fn_indiscernible(&f, &far, &ctx, &plan).unwrap();
        assert!(!res.holds);
        assert_eq!(res.witness, Some(Rational::zero()));
        let other = square(GridSpec::new(999).unwrap());
        assert!(fn_indiscernible(&f, &other, &ctx, &plan).is_err());
    }

    #[test]
    fn identity_transport_is_exact() {
        let ten = GridSpec::new(10).unwrap();
        let f = square(ten);
        let id = GridMap::rounding(ten, ten);
        let g = transport(&f, &id, &id).unwrap();
        for x in ten.points() {
            assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn transport_between_grids_stays_close() {
        let a = GridSpec::new(10_000).unwrap();
        let b = GridSpec::new(30_000).unwrap();
        let f = square(a);
        let g = transport(&f, &GridMap::rounding(a, b), &GridMap::rounding(b, a)).unwrap();
        assert_eq!(g.spec(), b);
        // |κ_A(y) − y| < 1e-4 and x² is 2-Lipschitz on [0,1]
        let bound = r("3/10000");
        for y in (0..=30_000).step_by(7).map(|i| b.point(i).unwrap()) {
            assert!((g.evaluate(&y).unwrap() - y.value().pow(2)).abs() < bound);
        }
        assert!(transport(&f, &GridMap::rounding(b, a), &GridMap::rounding(a, b)).is_err());
    }

    #[test]
    fn continuity_examples() {
        let ctx = ObservationContext::new(1_000_000, 1_000_000_000_000).unwrap();
        let spec = GridSpec::new(1_000_000_000_000).unwrap();
        let plan = SamplingPlan::light(256, 1);
        // x² with ω(d) = 2d + d²
        let sq = GridFunction::from_values(spec, "x^2", |x| Ok(x * x)).with_continuity(
            Certificate::new(
                Rational::one(),
                Modulus::from_fn("2d + d^2", |d| Rational::from(2) * d + d * d),
            ),
        );
        assert_eq!(
            continuity_check(&sq, &ctx, &plan).unwrap(),
            Continuity::Certified
        );
        let step = GridFunction::step(spec, r("1/2"));
        match continuity_check(&step, &ctx, &plan).unwrap() {
            Continuity::Refuted { x, y, .. } => {
                assert!(x < r("1/2") && y >= r("1/2"));
                assert!(&y - &x <= ctx.infinitesimal());
            }
            other => panic!("step not refuted: {other:?}"),
        }
        let c = GridFunction::constant(spec, r("3"));
        assert_eq!(
            c.continuity().unwrap().modulus.at(&r("1")),
            Rational::zero()
        );
        assert_eq!(
            continuity_check(&c, &ctx, &plan).unwrap(),
            Continuity::Certified
        );
        let bare = sq.clone().without_certificates();
        assert!(matches!(
            continuity_check(&bare, &ctx, &plan).unwrap(),
            Continuity::SampledOk { .. }
        ));
    }

    #[test]
    fn memo_cache_is_consistent_under_parallel_use() {
        let spec = GridSpec::new(1 << 12).unwrap();
        let f = square(spec).cached();
        let first = f.materialize().unwrap();
        let second = f.materialize().unwrap();
        assert_eq!(first, second);
        assert_eq!(f.cached_points(), (1 << 12) + 1);
    }

    #[test]
    fn materialize_limit() {
        let spec = GridSpec::new(MATERIALIZE_LIMIT + 1).unwrap();
        let err = GridFunction::identity(spec).materialize().unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
