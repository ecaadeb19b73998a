use hypergrid_core::calculus::{derivative_with, RealFunctionRepr};
use hypergrid_core::elem::{countable_sum, exp_approx, CountableSum, TruncationPolicy};
use hypergrid_core::exact::indiscernible;
use hypergrid_core::expr::{compile, parse, BinOp, Expr};
use hypergrid_core::grid::quasi_identity_defect;
use hypergrid_core::gridfn::{fn_indiscernible, GridFunction};
use hypergrid_core::{GridSpec, ObservationContext, Rational, SamplingPlan};
use num_bigint::BigInt;
use proptest::prelude::*;

fn ctx(h: u64) -> ObservationContext {
    ObservationContext::new(h, h * h).unwrap()
}

prop_compose! {
    fn rational(max: i64)(n in -max..=max, d in 1..=max) -> Rational {
        Rational::ratio(n, d)
    }
}

prop_compose! {
    fn unit_point()(n in 0u64..=1_000_000, d in 1u64..=1_000_000) -> Rational {
        Rational::new(n.min(d), d).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    /// Field operations agree with cross-multiplied integer arithmetic.
    #[test]
    fn arithmetic_matches_integer_oracle(a in -1_000_000i64..=1_000_000, b in 1i64..=1_000_000,
                                         c in -1_000_000i64..=1_000_000, d in 1i64..=1_000_000) {
        let (p, q) = (Rational::ratio(a, b), Rational::ratio(c, d));
        let (a, b, c, d) = (BigInt::from(a), BigInt::from(b), BigInt::from(c), BigInt::from(d));
        let same = |r: &Rational, num: BigInt, den: BigInt| r.numerator() * &den == num * r.denominator();
        prop_assert!(same(&(&p + &q), &a * &d + &c * &b, &b * &d));
        prop_assert!(same(&(&p - &q), &a * &d - &c * &b, &b * &d));
        prop_assert!(same(&(&p * &q), &a * &c, &b * &d));
        if c != BigInt::from(0) {
            prop_assert!(same(&(&p / &q), &a * &d, &b * &c));
        }
        // lowest terms with positive denominator
        let sum = &p + &q;
        prop_assert!(sum.denominator() > &BigInt::from(0));
        prop_assert_eq!(num_integer::Integer::gcd(sum.numerator(), sum.denominator()) == BigInt::from(1), true);
    }
}

proptest! {
    #[test]
    fn order_is_total_and_transitive(p in rational(1000), q in rational(1000), r in rational(1000)) {
        let relations = [p < q, p == q, p > q];
        prop_assert_eq!(relations.iter().filter(|&&b| b).count(), 1);
        if p <= q && q <= r {
            prop_assert!(p <= r);
        }
    }

    #[test]
    fn indiscernibility_is_reflexive_and_symmetric(p in rational(10_000), q in rational(10_000), h in 2u64..10_000) {
        let c = ctx(h);
        prop_assert!(indiscernible(&p, &p, &c));
        prop_assert_eq!(indiscernible(&p, &q, &c), indiscernible(&q, &p, &c));
    }

    /// Chains of two ≐ steps stay within 2/H.
    #[test]
    fn indiscernibility_is_nearly_transitive(p in rational(1000), s in 0i64..=1000, t in 0i64..=1000, h in 2u64..1000) {
        let c = ctx(h);
        let q = &p + Rational::ratio(s, 1000 * h as i64);
        let r = &q - Rational::ratio(t, 1000 * h as i64);
        prop_assert!(indiscernible(&p, &q, &c) && indiscernible(&q, &r, &c));
        prop_assert!((&p - &r).abs() <= Rational::new(2u8, h).unwrap());
    }

    #[test]
    fn indiscernibility_survives_translation(p in rational(100), d in -1000i64..=1000, shift in rational(100), h in 2u64..1000) {
        let c = ctx(h);
        let q = &p + Rational::ratio(d, 1000 * h as i64);
        prop_assert!(indiscernible(&p, &q, &c));
        prop_assert!(indiscernible(&(&p + &shift), &(&q + &shift), &c));
    }

    #[test]
    fn rounding_defect_idempotence_monotonicity(s in unit_point(), t in unit_point(), tau in 2u64..100_000) {
        let spec = GridSpec::new(tau).unwrap();
        let d = quasi_identity_defect(&s, spec).unwrap();
        prop_assert!(!d.is_negative() && d < spec.epsilon());
        let k = spec.round(&s).unwrap();
        prop_assert_eq!(spec.round(&k.value()).unwrap(), k);
        if s <= t {
            prop_assert!(k <= spec.round(&t).unwrap());
        }
    }

    /// Δ is linear, obeys the discrete Leibniz rule and telescopes.
    #[test]
    fn difference_operator_laws(a in rational(50), b in rational(50), i in 0u64..63) {
        let spec = GridSpec::new(64).unwrap();
        let policy = TruncationPolicy::default();
        let f = compile(&parse("x^3 - x/2").unwrap(), spec, policy).unwrap();
        let g = compile(&parse("exp(x) + 1/3").unwrap(), spec, policy).unwrap();
        let x = spec.point(i).unwrap();
        let combo = f.linear_combination(&a, &g, &b).unwrap();
        prop_assert_eq!(combo.difference(&x).unwrap(), &a * f.difference(&x).unwrap() + &b * g.difference(&x).unwrap());
        let fg = f.mul(&g).unwrap();
        let next = x.successor().unwrap();
        let leibniz = f.evaluate(&next).unwrap() * g.difference(&x).unwrap() + g.evaluate(&x).unwrap() * f.difference(&x).unwrap();
        prop_assert_eq!(fg.difference(&x).unwrap(), leibniz);
        let total: Rational = (0..=i).map(|j| f.difference(&spec.point(j).unwrap()).unwrap()).sum();
        prop_assert_eq!(total, f.evaluate(&next).unwrap() - f.evaluate_index(0).unwrap());
    }

    #[test]
    fn exponential_addition_law(p in -2000i64..=2000, q in -2000i64..=2000) {
        let (p, q) = (Rational::ratio(p, 1000), Rational::ratio(q, 1000));
        let policy = TruncationPolicy::default();
        let lhs = exp_approx(&(&p + &q), 1000, policy).unwrap();
        let rhs = exp_approx(&p, 1000, policy).unwrap() * exp_approx(&q, 1000, policy).unwrap();
        prop_assert!(indiscernible(&lhs, &rhs, &ctx(100)));
    }

    /// Indiscernible arguments give indiscernible exponentials, and the
    /// resolution does not matter at the context.
    #[test]
    fn exponential_respects_indiscernibility(q in -2000i64..=2000, d in -100i64..=100, tau in 1000u64..5000) {
        let c = ctx(100);
        let policy = TruncationPolicy::default();
        let q = Rational::ratio(q, 1000);
        let nearby = &q + Rational::ratio(d, 1_000_000);
        let a = exp_approx(&q, tau, policy).unwrap();
        prop_assert!(indiscernible(&a, &exp_approx(&nearby, tau, policy).unwrap(), &c));
        prop_assert!(indiscernible(&a, &exp_approx(&q, 1000, policy).unwrap(), &c));
    }
}

proptest! {
    // each case compiles and differentiates three functions
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_is_linear(a in rational(20), b in rational(20)) {
        let spec = GridSpec::new(4096).unwrap();
        let c = ctx(64);
        let plan = SamplingPlan::light(256, 1);
        let policy = TruncationPolicy::default();
        let f = compile(&parse("x^2").unwrap(), spec, policy).unwrap();
        let g = compile(&parse("exp(x)").unwrap(), spec, policy).unwrap();
        let df = derivative_with(&f.clone().into(), &c, &plan).unwrap().repr;
        let dg = derivative_with(&g.clone().into(), &c, &plan).unwrap().repr;
        let combo: RealFunctionRepr = f.linear_combination(&a, &g, &b).unwrap().into();
        let lhs = derivative_with(&combo, &c, &plan).unwrap().repr;
        let rhs = df.function().linear_combination(&a, dg.function(), &b).unwrap();
        let report = fn_indiscernible(lhs.function(), &rhs, &c, &plan).unwrap();
        prop_assert!(report.holds);
        prop_assert_eq!(report.max_gap, Rational::zero());
    }
}

#[test]
fn geometric_series_match_closed_forms() {
    let c = ctx(1_000_000);
    for (num, den) in [(1i64, 2i64), (1, 3), (9, 10)] {
        let ratio = Rational::ratio(num, den);
        let r = ratio.clone();
        let sum = countable_sum(move |i| Ok(r.pow(i as u32)), &c, 1 << 16).unwrap();
        let closed = (Rational::one() - &ratio).recip().unwrap();
        let value = sum
            .value()
            .expect("geometric series settle")
            .representative()
            .unwrap()
            .clone();
        assert!((value - closed).abs() <= c.infinitesimal(), "ratio {ratio}");
    }
    let harmonic = countable_sum(|i| Rational::new(1u8, i + 1), &c, 1 << 16).unwrap();
    assert!(!matches!(harmonic, CountableSum::Value { ref value, .. } if value.is_finite()));
}

fn expression() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (-50i64..=50, 1i64..=9).prop_map(|(n, d)| Expr::Lit(Rational::ratio(n, d))),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::negate),
            (inner.clone(), inner.clone(), 0usize..4).prop_map(|(l, r, op)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][op];
                Expr::bin(op, l, r)
            }),
            (inner.clone(), 0u32..4).prop_map(|(b, n)| Expr::pow(b, n)),
            inner.clone().prop_map(Expr::exp),
            inner.prop_map(Expr::log),
        ]
    })
}

proptest! {
    #[test]
    fn printing_then_parsing_is_a_fixpoint(e in expression()) {
        let first = parse(&e.to_string()).unwrap();
        let again = parse(&first.to_string()).unwrap();
        prop_assert_eq!(again, first);
    }

    #[test]
    fn decimal_literals_are_exact(whole in 0u32..1000, frac in 0u32..1000) {
        let text = format!("{whole}.{frac:03}");
        let expected = Rational::ratio(whole as i64 * 1000 + frac as i64, 1000);
        prop_assert_eq!(parse(&text).unwrap(), Expr::Lit(expected.clone()));
        let spec = GridSpec::new(8).unwrap();
        let f = compile(&parse(&text).unwrap(), spec, TruncationPolicy::default()).unwrap();
        prop_assert_eq!(f.evaluate_index(3).unwrap(), expected);
    }
}

#[test]
fn constant_functions_are_indiscernible_only_when_close() {
    let spec = GridSpec::new(100).unwrap();
    let c = ctx(1000);
    let f = GridFunction::constant(spec, Rational::zero());
    let g = GridFunction::constant(spec, Rational::ratio(1, 1000));
    let h = GridFunction::constant(spec, Rational::ratio(2, 1000));
    assert!(
        fn_indiscernible(&f, &g, &c, &SamplingPlan::default())
            .unwrap()
            .holds
    );
    assert!(
        !fn_indiscernible(&f, &h, &c, &SamplingPlan::default())
            .unwrap()
            .holds
    );
}
