use std::fmt;

use crate::error::{Error, Result};
use crate::exact::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn level(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => ADDITIVE,
            BinOp::Mul | BinOp::Div => MULTIPLICATIVE,
        }
    }
}

/// An expression in one variable `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Rational),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `base ^ n` with a constant exponent.
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    pub fn lit(q: impl Into<Rational>) -> Expr {
        Expr::Lit(q.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn pow(base: Expr, n: u32) -> Expr {
        Expr::Pow(Box::new(base), n)
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::Exp(Box::new(e))
    }

    pub fn log(e: Expr) -> Expr {
        Expr::Log(Box::new(e))
    }

    pub fn mentions_x(&self) -> bool {
        match self {
            Expr::Lit(_) => false,
            Expr::Var => true,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Exp(e) | Expr::Log(e) => e.mentions_x(),
            Expr::Bin(_, l, r) => l.mentions_x() || r.mentions_x(),
        }
    }

    pub fn contains_log(&self) -> bool {
        match self {
            Expr::Lit(_) | Expr::Var => false,
            Expr::Log(_) => true,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Exp(e) => e.contains_log(),
            Expr::Bin(_, l, r) => l.contains_log() || r.contains_log(),
        }
    }

    /// Value of an expression built from literals and field operations only.
    pub fn eval_constant(&self) -> Result<Rational> {
        match self {
            Expr::Lit(q) => Ok(q.clone()),
            Expr::Var => Err(Error::domain("expression depends on x")),
            Expr::Neg(e) => Ok(-e.eval_constant()?),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval_constant()?, r.eval_constant()?);
                match op {
                    BinOp::Add => Ok(l + r),
                    BinOp::Sub => Ok(l - r),
                    BinOp::Mul => Ok(l * r),
                    BinOp::Div => l.checked_div(&r),
                }
            }
            Expr::Pow(b, n) => Ok(b.eval_constant()?.pow(*n)),
            Expr::Exp(_) | Expr::Log(_) => {
                Err(Error::domain("exp and log are not constant-folded"))
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Lit(q) => {
                if !q.is_integer() {
                    MULTIPLICATIVE
                } else if q.is_negative() {
                    UNARY
                } else {
                    ATOM
                }
            }
            Expr::Var | Expr::Exp(_) | Expr::Log(_) => ATOM,
            Expr::Neg(_) => UNARY,
            Expr::Bin(op, _, _) => op.level(),
            Expr::Pow(_, _) => POWER,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Lit(q) => write!(f, "{q}"),
            Expr::Var => f.write_str("x"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_at(f, UNARY)
            }
            Expr::Bin(op, l, r) => {
                l.write_at(f, op.level())?;
                write!(f, " {} ", op.symbol())?;
                r.write_at(f, op.level() + 1)
            }
            Expr::Pow(b, n) => {
                b.write_at(f, ATOM)?;
                write!(f, "^{n}")
            }
            Expr::Exp(e) => {
                f.write_str("exp(")?;
                e.write_at(f, 0)?;
                f.write_str(")")
            }
            Expr::Log(e) => {
                f.write_str("log(")?;
                e.write_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

const ADDITIVE: u8 = 1;
const MULTIPLICATIVE: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

/// Prints with the fewest parentheses that parse back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
