use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypergrid::{builtins_help, run, CheckKind, JobConfig, Task};
use hypergrid_core::elem::ExpMode;
use hypergrid_core::{ObservationContext, Rational, SamplingPlan};

/// Exact grid calculus: values, difference quotients, integrals and checks.
#[derive(Parser)]
#[command(name = "hypergrid", version, after_help = builtins_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Value f(κ(x)) at --at.
    Eval(FunctionArg),
    /// Derivative Δf/Δx at --at, after checking the quotient is continuous.
    Diff(FunctionArg),
    /// Indefinite integral from the left end of the domain up to --at.
    Integrate(FunctionArg),
    /// Run a check and print its JSON report.
    Check {
        #[arg(value_enum)]
        kind: CheckArg,
        #[command(flatten)]
        function: FunctionArg,
    },
    /// Countable sum of a named series: geometric:<r>, harmonic, inverse-squares, zeros.
    Sum { series: String },
    /// Run the job described by a JSON file.
    Job { path: PathBuf },
}

#[derive(Args)]
struct FunctionArg {
    /// Expression in x, or a builtin name.
    #[arg(allow_hyphen_values = true, required_unless_present = "file")]
    function: Option<String>,
    /// Read the expression from a file instead.
    #[arg(long, conflicts_with = "function")]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct Options {
    /// Grid resolution τ; the grid is {0, 1/τ, …, 1}.
    #[arg(long, global = true, default_value_t = 1 << 16)]
    tau: u64,
    /// Second grid for grid-independence [default: 3τ].
    #[arg(long, global = true)]
    tau2: Option<u64>,
    /// Infinitesimal scale: |q| <= 1/H counts as infinitesimal.
    #[arg(long = "H", global = true, default_value_t = ObservationContext::DEFAULT_H)]
    h: u64,
    /// Bound scale: |q| <= K counts as bounded.
    #[arg(long = "K", global = true, default_value_t = ObservationContext::DEFAULT_K)]
    k: u64,
    /// Point of evaluation (rational such as 1/3 or 0.25).
    #[arg(long, global = true, allow_hyphen_values = true)]
    at: Option<Rational>,
    #[arg(long, global = true, default_value_t = SamplingPlan::DEFAULT_SEED)]
    seed: u64,
    /// Quasi-random points per sampled check.
    #[arg(long, global = true, default_value_t = 1 << 12)]
    samples: u64,
    /// Random points for `check limit` without --at.
    #[arg(long, global = true, default_value_t = 100)]
    points: u64,
    #[arg(long, global = true, value_enum, default_value_t = ExpModeArg::Tail)]
    exp_mode: ExpModeArg,
    /// Extra binary digits of accuracy for tail-bounded exponentials.
    #[arg(long, global = true, default_value_t = 64)]
    guard: u32,
    /// Most terms a countable sum may examine.
    #[arg(long, global = true, default_value_t = 1 << 16)]
    sum_cap: u64,
    /// Work on [A, B] instead of [0, 1].
    #[arg(long, global = true, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    domain: Option<Vec<Rational>>,
    /// JSON output for eval, diff, integrate and sum.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Ftc,
    GridIndependence,
    Secant,
    Limit,
    Continuity,
}

impl From<CheckArg> for CheckKind {
    fn from(arg: CheckArg) -> Self {
        match arg {
            CheckArg::Ftc => CheckKind::Ftc,
            CheckArg::GridIndependence => CheckKind::GridIndependence,
            CheckArg::Secant => CheckKind::Secant,
            CheckArg::Limit => CheckKind::Limit,
            CheckArg::Continuity => CheckKind::Continuity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpModeArg {
    Full,
    Tail,
}

fn function_text(arg: FunctionArg) -> Result<String, String> {
    match (arg.function, arg.file) {
        (Some(text), _) => Ok(text),
        (None, Some(path)) => std::fs::read_to_string(&path)
            .map(|s| s.trim().to_string())
            .map_err(|e| format!("cannot read {}: {e}", path.display())),
        (None, None) => Err("no function given".into()),
    }
}

fn job(cli: Cli) -> Result<JobConfig, String> {
    let o = cli.options;
    let at = o.at.clone();
    let task = match cli.command {
        Command::Eval(f) => Task::Eval {
            function: function_text(f)?,
            at: at.unwrap_or_default(),
        },
        Command::Diff(f) => Task::Diff {
            function: function_text(f)?,
            at: at.unwrap_or_default(),
        },
        Command::Integrate(f) => Task::Integrate {
            function: function_text(f)?,
            at: at.unwrap_or_default(),
        },
        Command::Check { kind, function } => Task::Check {
            check: kind.into(),
            function: function_text(function)?,
            at,
        },
        Command::Sum { series } => Task::Sum { series },
        Command::Job { path } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            return JobConfig::from_json(&text).map_err(|e| e.to_string());
        }
    };
    let mut job = JobConfig::new(task);
    job.tau = o.tau;
    job.tau2 = o.tau2;
    job.h = o.h;
    job.k = o.k;
    job.seed = o.seed;
    job.samples = o.samples;
    job.points = o.points;
    job.exp_mode = match o.exp_mode {
        ExpModeArg::Full => ExpMode::Full,
        ExpModeArg::Tail => ExpMode::Tail,
    };
    job.guard = o.guard;
    job.sum_cap = o.sum_cap;
    job.domain = o.domain.map(|d| [d[0].clone(), d[1].clone()]);
    job.json = o.json;
    Ok(job)
}

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let job = match job(cli) {
        Ok(job) => job,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    let outcome = run(&job);
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
