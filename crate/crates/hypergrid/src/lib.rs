//! Job configuration and execution behind the `hypergrid` command.
//!
//! A [`JobConfig`] describes one invocation. [`run`] executes it and returns
//! the exit status together with everything destined for stdout and stderr,
//! so the binary is a thin wrapper and tests can drive jobs in process.

use std::fmt::Write as _;

use hypergrid_core::calculus::{
    continuity_report, derivative_with, exclusion_band, ftc_check, grid_independence_check,
    integral_with, limit_quotient, secant_check, CheckReport, ConvergentSequence, IntegralMode,
    RealFunctionRepr, Verdict, REPORT_SCHEMA,
};
use hypergrid_core::elem::{countable_sum, CountableSum, ExpMode, TruncationPolicy};
use hypergrid_core::expr::{builtin, compile_on, parse, Domain, BUILTINS};
use hypergrid_core::gridfn::Coverage;
use hypergrid_core::{
    Error, GridFunction, GridSpec, ObservationContext, Rational, Result, SamplingPlan,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Environment variable that caps `τ` for every grid a job builds.
pub const MAX_TAU_VAR: &str = "HYPERGRID_MAX_TAU";

/// Digits after the point in decimal renderings.
const DECIMAL_DIGITS: usize = 12;

/// Longest exact rational printed in text output.
const LONG_RATIONAL: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Ftc,
    GridIndependence,
    Secant,
    Limit,
    Continuity,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Ftc => "ftc",
            CheckKind::GridIndependence => "grid-independence",
            CheckKind::Secant => "secant",
            CheckKind::Limit => "limit",
            CheckKind::Continuity => "continuity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Task {
    /// `f(κ(x))`.
    Eval {
        function: String,
        #[serde(default)]
        at: Rational,
    },
    /// `Δf/Δx(κ(x))`, once the difference quotient passes its continuity check.
    Diff {
        function: String,
        #[serde(default)]
        at: Rational,
    },
    /// `Σ_{0<=y<=κ(x)} f(y)·ε`.
    Integrate {
        function: String,
        #[serde(default)]
        at: Rational,
    },
    Check {
        check: CheckKind,
        function: String,
        /// Single point for `limit`; random points are drawn otherwise.
        #[serde(default)]
        at: Option<Rational>,
    },
    /// A named nonnegative series: `geometric:<r>`, `harmonic`,
    /// `inverse-squares` or `zeros`.
    Sum { series: String },
}

fn default_tau() -> u64 {
    1 << 16
}

fn default_h() -> u64 {
    ObservationContext::DEFAULT_H
}

fn default_k() -> u64 {
    ObservationContext::DEFAULT_K
}

fn default_seed() -> u64 {
    SamplingPlan::DEFAULT_SEED
}

fn default_samples() -> u64 {
    1 << 12
}

fn default_points() -> u64 {
    100
}

fn default_exp_mode() -> ExpMode {
    ExpMode::Tail
}

fn default_guard() -> u32 {
    64
}

fn default_sum_cap() -> u64 {
    1 << 16
}

/// One job, as given on the command line or in a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    #[serde(default = "default_tau")]
    pub tau: u64,
    /// Second grid for `grid-independence`; `3τ` when absent.
    #[serde(default)]
    pub tau2: Option<u64>,
    #[serde(rename = "H", default = "default_h")]
    pub h: u64,
    #[serde(rename = "K", default = "default_k")]
    pub k: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Quasi-random points per sampled check.
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Random points for `check limit` without `at`.
    #[serde(default = "default_points")]
    pub points: u64,
    #[serde(default = "default_exp_mode")]
    pub exp_mode: ExpMode,
    #[serde(default = "default_guard")]
    pub guard: u32,
    #[serde(default = "default_sum_cap")]
    pub sum_cap: u64,
    /// Functions are written in `x ∈ [a, b]` and run on `t ∈ [0, 1]`.
    #[serde(default)]
    pub domain: Option<[Rational; 2]>,
    /// Machine-readable output for `eval`, `diff`, `integrate` and `sum`.
    #[serde(default)]
    pub json: bool,
    #[serde(flatten)]
    pub task: Task,
}

impl JobConfig {
    pub fn new(task: Task) -> Self {
        JobConfig {
            tau: default_tau(),
            tau2: None,
            h: default_h(),
            k: default_k(),
            seed: default_seed(),
            samples: default_samples(),
            points: default_points(),
            exp_mode: default_exp_mode(),
            guard: default_guard(),
            sum_cap: default_sum_cap(),
            domain: None,
            json: false,
            task,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("invalid job file: {e}")))
    }

    pub fn context(&self) -> Result<ObservationContext> {
        ObservationContext::new(self.h, self.k)
    }

    pub fn policy(&self) -> TruncationPolicy {
        match self.exp_mode {
            ExpMode::Full => TruncationPolicy::full(),
            ExpMode::Tail => TruncationPolicy::tail(self.guard),
        }
    }

    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan::light(self.samples, self.seed)
    }

    pub fn domain(&self) -> Result<Domain> {
        match &self.domain {
            Some([a, b]) => Domain::new(a.clone(), b.clone()),
            None => Ok(Domain::unit()),
        }
    }

    /// The grid for `τ`, honouring [`MAX_TAU_VAR`].
    fn grid(&self, tau: u64) -> Result<GridSpec> {
        if let Ok(cap) = std::env::var(MAX_TAU_VAR) {
            let cap: u64 = cap.trim().parse().map_err(|_| {
                Error::Domain(format!("{MAX_TAU_VAR} must be an integer, not {cap:?}"))
            })?;
            if tau > cap {
                return Err(Error::Resource(format!(
                    "tau = {tau} exceeds {MAX_TAU_VAR} = {cap}"
                )));
            }
        }
        GridSpec::new(tau)
    }

    /// Builtin name or expression text, compiled on the grid `spec`.
    pub fn function(&self, text: &str, spec: GridSpec) -> Result<GridFunction> {
        let text = text.trim();
        let domain = self.domain()?;
        if BUILTINS.contains(&text) {
            if domain.is_unit() {
                return builtin(text, spec, self.policy());
            }
            if let Some(body) = builtin_expression(text) {
                return compile_on(&parse(body)?, spec, self.policy(), domain)
                    .map(|f| f.with_name(text));
            }
            return Err(Error::Domain(format!(
                "builtin '{text}' has no expression form for --domain"
            )));
        }
        compile_on(&parse(text)?, spec, self.policy(), domain)
    }

    /// `t = (x − a)/(b − a)` for a user point `x`.
    fn unit_point(&self, x: &Rational) -> Result<Rational> {
        let domain = self.domain()?;
        let t = (x - &domain.a) / domain.width();
        if t.is_negative() || t > Rational::one() {
            return Err(Error::Domain(format!(
                "point {x} lies outside [{}, {}]",
                domain.a, domain.b
            )));
        }
        Ok(t)
    }
}

fn builtin_expression(name: &str) -> Option<&'static str> {
    match name {
        "square" => Some("x^2"),
        "identity" => Some("x"),
        "const" => Some("1"),
        "exp" => Some("exp(x)"),
        "log" => Some("log(x)"),
        _ => None,
    }
}

/// Terms `bᵢ` of a named series.
pub fn named_series(name: &str) -> Result<Box<dyn Fn(u128) -> Result<Rational>>> {
    match name.trim() {
        "zeros" => Ok(Box::new(|_| Ok(Rational::zero()))),
        "harmonic" => Ok(Box::new(|i| Rational::new(1u8, i + 1))),
        "inverse-squares" => Ok(Box::new(|i| Rational::new(1u8, (i + 1) * (i + 1)))),
        other => {
            let ratio = other
                .strip_prefix("geometric:")
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "unknown series '{other}'; expected geometric:<r>, harmonic, inverse-squares or zeros"
                    ))
                })?
                .parse::<Rational>()?;
            if ratio.is_negative() {
                return Err(Error::Domain(format!(
                    "geometric ratio {ratio} must be nonnegative"
                )));
            }
            Ok(Box::new(move |i| {
                let exp = u32::try_from(i)
                    .map_err(|_| Error::Resource(format!("term index {i} is too large")))?;
                Ok(ratio.pow(exp))
            }))
        }
    }
}

/// Exit status and captured output of one job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs `job`: exit 0 when it succeeds or its check passes, 2 when a check
/// fails, 1 on invalid input or an engine error.
pub fn run(job: &JobConfig) -> Outcome {
    match execute(job) {
        Ok((stdout, passed)) => Outcome {
            code: if passed { 0 } else { 2 },
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

#[derive(Serialize)]
struct ValueReport<'a> {
    schema: u32,
    command: &'a str,
    function: &'a str,
    tau: u64,
    domain: [Rational; 2],
    at: Rational,
    /// `κ(x)` in the user's coordinates.
    grid_point: Rational,
    value: Rational,
    decimal: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    continuity: Option<&'static str>,
}

#[derive(Serialize)]
struct SumReport<'a> {
    schema: u32,
    command: &'a str,
    series: &'a str,
    cap: u64,
    context: ObservationContext,
    result: CountableSum,
}

fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn execute(job: &JobConfig) -> Result<(String, bool)> {
    let ctx = job.context()?;
    match &job.task {
        Task::Eval { function, at } => {
            value_command(job, "eval", function, at, |f, _| Ok((f, None)))
        }
        Task::Diff { function, at } => value_command(job, "diff", function, at, |f, width| {
            let d = derivative_with(&f.into(), &ctx, &job.plan())?;
            let scale = width.recip()?;
            Ok((d.repr.function().scale(&scale), Some(d.continuity.label())))
        }),
        Task::Integrate { function, at } => {
            value_command(job, "integrate", function, at, |f, width| {
                let i = integral_with(&f.into(), IntegralMode::Streaming)?;
                Ok((i.function().scale(width), None))
            })
        }
        Task::Check {
            check,
            function,
            at,
        } => {
            let report = run_check(job, *check, function, at.as_ref(), &ctx)?;
            Ok((to_json(&report), report.passed()))
        }
        Task::Sum { series } => {
            let result = countable_sum(named_series(series)?, &ctx, job.sum_cap as u128)?;
            let text = if job.json {
                to_json(&SumReport {
                    schema: REPORT_SCHEMA,
                    command: "sum",
                    series,
                    cap: job.sum_cap,
                    context: ctx,
                    result,
                })
            } else {
                describe_sum(&result)
            };
            Ok((text, true))
        }
    }
}

/// Evaluates a function derived from the compiled one at the user point.
fn value_command(
    job: &JobConfig,
    command: &str,
    function: &str,
    at: &Rational,
    derive: impl Fn(GridFunction, &Rational) -> Result<(GridFunction, Option<&'static str>)>,
) -> Result<(String, bool)> {
    let spec = job.grid(job.tau)?;
    let domain = job.domain()?;
    let f = job.function(function, spec)?;
    let name = f.name().to_string();
    let point = spec.round(&job.unit_point(at)?)?;
    let (g, continuity) = derive(f, &domain.width())?;
    let value = g.evaluate(&point)?;
    let text = if job.json {
        to_json(&ValueReport {
            schema: REPORT_SCHEMA,
            command,
            function: &name,
            tau: spec.tau(),
            domain: [domain.a.clone(), domain.b.clone()],
            at: at.clone(),
            grid_point: domain.map(&point.value()),
            decimal: value.to_decimal(DECIMAL_DIGITS),
            value,
            continuity,
        })
    } else {
        format!("{value}\n{}\n", value.to_decimal(DECIMAL_DIGITS))
    };
    Ok((text, true))
}

fn describe_sum(result: &CountableSum) -> String {
    match result {
        CountableSum::Value { value, probe } => match value.representative() {
            Some(q) => {
                let exact = q.to_string();
                let exact = if exact.len() > LONG_RATIONAL {
                    format!("({} digits in the exact value; see --json)", exact.len())
                } else {
                    exact
                };
                format!(
                    "{exact}\n{}\n(settled after {probe} terms)\n",
                    q.to_decimal(DECIMAL_DIGITS)
                )
            }
            None => format!("{value:?}\n(after {probe} terms)\n"),
        },
        CountableSum::Unstable {
            last_probe,
            partial_sum,
            budget_exhausted,
        } => {
            let mut text = format!(
                "unstable: partial sum {} after {last_probe} terms",
                partial_sum.to_decimal(DECIMAL_DIGITS)
            );
            if *budget_exhausted {
                text.push_str(" (term budget exhausted)");
            }
            text.push('\n');
            text
        }
    }
}

fn run_check(
    job: &JobConfig,
    check: CheckKind,
    function: &str,
    at: Option<&Rational>,
    ctx: &ObservationContext,
) -> Result<CheckReport> {
    let spec = job.grid(job.tau)?;
    let f = job.function(function, spec)?;
    let plan = job.plan();
    let mut report = match check {
        CheckKind::Ftc => ftc_check(&f.into(), ctx)?,
        CheckKind::Continuity => continuity_report(&f, ctx, &plan)?,
        CheckKind::Secant => secant_check(&f, ctx, &plan)?,
        CheckKind::GridIndependence => {
            let tau2 = match job.tau2 {
                Some(t) => t,
                None => job.tau.checked_mul(3).ok_or_else(|| {
                    Error::Resource(format!("3 * tau = 3 * {} overflows", job.tau))
                })?,
            };
            let g = job.function(function, job.grid(tau2)?)?;
            grid_independence_check(&f.into(), &g.into(), ctx, &plan)?
        }
        CheckKind::Limit => limit_check(job, f.into(), at, ctx)?,
    };
    report.note("seed", job.seed);
    if check != CheckKind::Ftc {
        report.note("samples_requested", job.samples);
    }
    Ok(report)
}

/// Limit quotients along `tᵢ = 2⁻ⁱ` at `at`, or at `job.points` random grid
/// points with room for every step in the band to the right.
fn limit_check(
    job: &JobConfig,
    f: RealFunctionRepr,
    at: Option<&Rational>,
    ctx: &ObservationContext,
) -> Result<CheckReport> {
    let spec = f.spec();
    let points = match at {
        Some(x) => vec![spec.round(&job.unit_point(x)?)?],
        None => {
            let (_, hi) = exclusion_band(spec, ctx)?;
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            (0..job.points)
                .map(|_| spec.point(rng.gen_range(0..=spec.tau() - hi)))
                .collect::<Result<_>>()?
        }
    };
    let seq = ConvergentSequence::dyadic(*ctx);
    let mut report = CheckReport::new("limit", f.function().name(), vec![spec.tau()], *ctx);
    report.coverage = Coverage::Sampled;
    report.tolerance = Rational::new(2u8, ctx.h())?;
    let mut excluded = 0;
    let mut empty = 0;
    for x in &points {
        let r = limit_quotient(&f, x, &seq)?;
        excluded += r.excluded;
        if r.probes.is_empty() {
            empty += 1;
        }
        report.samples += r.probes.len() as u64;
        let failing = r.probes.iter().filter(|p| p.gap > r.tolerance).count() as u64;
        if r.verdict == Verdict::Fail {
            report.violations += failing.max(1);
            report.witness.get_or_insert_with(|| r.x.clone());
        }
        if r.max_gap > report.max_gap {
            report.max_gap = r.max_gap;
        }
    }
    report.verdict = if report.violations == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.note("points", points.len());
    report.note("sequence", "2^-i");
    report.note("excluded_terms", excluded);
    report.note("points_without_probes", empty);
    Ok(report)
}

/// Text of the `--help` footer listing the accepted function names.
pub fn builtins_help() -> String {
    let mut text = String::from("builtin functions:");
    for name in BUILTINS {
        let _ = write!(text, " {name}");
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn diff_of_square_at_a_half() {
        let mut job = JobConfig::new(Task::Diff {
            function: "x^2".into(),
            at: r("1/2"),
        });
        job.tau = 1_000_000;
        let out = run(&job);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(out.stdout, "1000001/1000000\n1.000001000000\n");
    }

    #[test]
    fn log_of_zero_is_an_error() {
        let mut job = JobConfig::new(Task::Eval {
            function: "log(0)".into(),
            at: Rational::zero(),
        });
        job.tau = 100;
        let out = run(&job);
        assert_eq!(out.code, 1);
        assert!(
            out.stderr.contains("log of non-positive value 0"),
            "{}",
            out.stderr
        );
    }

    #[test]
    fn domain_rescales_values() {
        // x^2 on [0, 2]: f(1) = 1, f'(1) ≈ 2, ∫_0^1 x^2 ≈ 1/3
        let job = |task| {
            let mut job = JobConfig::new(task);
            job.tau = 1000;
            job.h = 100;
            job.k = 10_000;
            job.domain = Some([r("0"), r("2")]);
            job.json = true;
            job
        };
        let value = |task| {
            let out = run(&job(task));
            assert_eq!(out.code, 0, "{}", out.stderr);
            let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
            r(v["value"].as_str().unwrap())
        };
        let f = || "x^2".to_string();
        assert_eq!(
            value(Task::Eval {
                function: f(),
                at: r("1")
            }),
            r("1")
        );
        // (κ(1) + 2/1000)^2 - 1 over 2/1000, with κ(1) = 1
        assert_eq!(
            value(Task::Diff {
                function: f(),
                at: r("1")
            }),
            r("2") + r("2/1000")
        );
        let area = value(Task::Integrate {
            function: f(),
            at: r("1"),
        });
        assert!((area - r("1/3")).abs() < r("1/100"));
        let out = run(&job(Task::Eval {
            function: f(),
            at: r("3"),
        }));
        assert_eq!(out.code, 1);
        assert!(
            out.stderr.contains("point 3 lies outside [0, 2]"),
            "{}",
            out.stderr
        );
    }

    #[test]
    fn builtins_are_accepted_as_function_text() {
        let mut job = JobConfig::new(Task::Eval {
            function: "square".into(),
            at: r("1/2"),
        });
        job.tau = 10;
        assert_eq!(run(&job).stdout, "1/4\n0.250000000000\n");
        job.domain = Some([r("-1"), r("1")]);
        job.task = Task::Eval {
            function: "square".into(),
            at: r("-1"),
        };
        assert_eq!(run(&job).stdout, "1\n1.000000000000\n");
    }

    #[test]
    fn named_series_sums() {
        let sum = |series: &str| {
            let mut job = JobConfig::new(Task::Sum {
                series: series.into(),
            });
            job.h = 1000;
            job.json = true;
            let out = run(&job);
            assert_eq!(out.code, 0, "{}", out.stderr);
            serde_json::from_str::<serde_json::Value>(&out.stdout).unwrap()
        };
        assert_eq!(sum("zeros")["result"]["outcome"], "value");
        assert_eq!(sum("harmonic")["result"]["outcome"], "unstable");
        assert_eq!(sum("geometric:1/2")["result"]["outcome"], "value");
        let bad = run(&JobConfig::new(Task::Sum {
            series: "fibonacci".into(),
        }));
        assert_eq!(bad.code, 1);
        assert!(run(&JobConfig::new(Task::Sum {
            series: "geometric:-1/2".into()
        }))
        .stderr
        .contains("-1/2"));
    }

    #[test]
    fn failing_checks_exit_with_two() {
        let mut job = JobConfig::new(Task::Check {
            check: CheckKind::Continuity,
            function: "step".into(),
            at: None,
        });
        job.tau = 1 << 12;
        job.h = 64;
        job.k = 1 << 20;
        let out = run(&job);
        assert_eq!(out.code, 2, "{}", out.stderr);
        let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(report["verdict"], "fail");
        assert_eq!(report["schema"], 1);
    }

    #[test]
    fn limit_check_at_one_point() {
        let mut job = JobConfig::new(Task::Check {
            check: CheckKind::Limit,
            function: "x^2".into(),
            at: Some(r("1/3")),
        });
        job.tau = 1_000_000;
        job.h = 1000;
        let out = run(&job);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(report["samples"], 8);
        assert_eq!(report["notes"]["points"], "1");
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let mut job = JobConfig::new(Task::Eval {
            function: "x".into(),
            at: Rational::zero(),
        });
        job.h = 10;
        job.k = 5;
        assert_eq!(run(&job).code, 1);
        job.k = 100;
        job.tau = 1;
        assert_eq!(run(&job).code, 1);
        job.tau = 10;
        job.domain = Some([r("1"), r("1")]);
        assert!(run(&job).stderr.contains("[1, 1]"));
        assert!(JobConfig::from_json("{\"command\": \"eval\"}").is_err());
    }

    #[test]
    fn job_files_use_defaults() {
        let job = JobConfig::from_json(
            r#"{"command": "check", "check": "ftc", "function": "x^2", "tau": 65536, "H": 1000}"#,
        )
        .unwrap();
        assert_eq!(job.k, ObservationContext::DEFAULT_K);
        assert_eq!(job.seed, SamplingPlan::DEFAULT_SEED);
        assert_eq!(
            job.task,
            Task::Check {
                check: CheckKind::Ftc,
                function: "x^2".into(),
                at: None
            }
        );
    }

    proptest! {
        #[test]
        fn job_configs_round_trip_through_json(tau in 2u64..1 << 20, h in 2u64..1000, seed: u64,
                                               n in -100i64..100, d in 1i64..100, tail: bool) {
            let mut job = JobConfig::new(Task::Diff { function: "x*exp(x)".into(), at: Rational::ratio(n, d) });
            job.tau = tau;
            job.h = h;
            job.seed = seed;
            job.exp_mode = if tail { ExpMode::Tail } else { ExpMode::Full };
            job.domain = Some([Rational::ratio(n, d), Rational::ratio(n + 1, d)]);
            let text = serde_json::to_string(&job).unwrap();
            prop_assert_eq!(JobConfig::from_json(&text).unwrap(), job);
        }
    }
}
