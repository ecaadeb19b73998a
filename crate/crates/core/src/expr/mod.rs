//! A small expression language in one variable, compiled to grid functions.
//!
//! ```
//! use hypergrid_core::expr::{compile, parse};
//! use hypergrid_core::elem::TruncationPolicy;
//! use hypergrid_core::{GridSpec, Rational};
//!
//! let f = compile(&parse("x^2 + 1/3").unwrap(), GridSpec::new(10).unwrap(), TruncationPolicy::default()).unwrap();
//! assert_eq!(f.evaluate_index(3).unwrap(), "127/300".parse::<Rational>().unwrap());
//! ```

mod ast;
mod compile;
mod jet;
mod parser;

pub use ast::{BinOp, Expr};
pub use compile::{compile, compile_on, Domain};
pub use jet::{Interval, Jet};
pub use parser::parse;

use crate::elem::TruncationPolicy;
use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::grid::GridSpec;
use crate::gridfn::GridFunction;

/// Functions with both certificates, used throughout the calculus checks.
pub const CERTIFIED_SUITE: [&str; 4] = ["x^2", "x^3 - x/2", "exp(x)", "x*exp(x)"];

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 6] = ["square", "identity", "const", "exp", "log", "step"];

/// A named function: `square` is `x²`, `const` is `1`, `step` jumps from 0
/// to 1 at `1/2`.
pub fn builtin(name: &str, spec: GridSpec, policy: TruncationPolicy) -> Result<GridFunction> {
    let from_text = |text: &str| compile(&parse(text)?, spec, policy).map(|f| f.with_name(name));
    match name {
        "square" => from_text("x^2"),
        "identity" => Ok(GridFunction::identity(spec).with_name(name)),
        "const" => Ok(GridFunction::constant(spec, Rational::one()).with_name(name)),
        "exp" => from_text("exp(x)"),
        "log" => from_text("log(x)"),
        "step" => Ok(GridFunction::step(spec, Rational::ratio(1, 2)).with_name(name)),
        other => Err(Error::domain(format!(
            "unknown builtin '{other}'; expected one of {}",
            BUILTINS.join(", ")
        ))),
    }
}
