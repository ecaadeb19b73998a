use std::sync::Arc;

use super::ast::{BinOp, Expr};
use super::jet::{Interval, Jet};
use crate::elem::{exp_approx, exp_series, log_approx, TruncationPolicy};
use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::grid::GridSpec;
use crate::gridfn::{Certificate, GridFunction, Modulus};

/// The affine change of variable `x = a + (b − a)·t` that lets an
/// expression on `[a, b]` live on the grid `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub a: Rational,
    pub b: Rational,
}

impl Domain {
    pub fn unit() -> Self {
        Domain {
            a: Rational::zero(),
            b: Rational::one(),
        }
    }

    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a >= b {
            return Err(Error::domain(format!("domain [{a}, {b}] is empty")));
        }
        Ok(Domain { a, b })
    }

    pub fn is_unit(&self) -> bool {
        self.a.is_zero() && self.b == Rational::one()
    }

    pub fn width(&self) -> Rational {
        &self.b - &self.a
    }

    /// `a + (b − a)·t`.
    pub fn map(&self, t: &Rational) -> Rational {
        &self.a + self.width() * t
    }
}

/// An expression with the number of series terms of every `exp` fixed.
#[derive(Debug)]
enum Node {
    Lit(Rational),
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    /// `terms` is `None` when the argument range is unknown; the count is
    /// then chosen per point.
    Exp {
        arg: Box<Node>,
        terms: Option<u64>,
    },
    Log(Box<Node>),
}

struct Lowering {
    tau: u64,
    policy: TruncationPolicy,
    domain: Domain,
}

impl Lowering {
    /// Lowers `e` and returns its jet over the domain when every node below
    /// admits one.
    fn lower(&self, e: &Expr) -> Result<(Node, Option<Jet>)> {
        Ok(match e {
            Expr::Lit(q) => (Node::Lit(q.clone()), Some(Jet::constant(q.clone()))),
            Expr::Var => (
                Node::Var,
                Some(Jet::variable(&self.domain.a, &self.domain.b)),
            ),
            Expr::Neg(inner) => {
                let (node, jet) = self.lower(inner)?;
                (Node::Neg(Box::new(node)), jet.map(|j| j.neg()))
            }
            Expr::Bin(op, l, r) => {
                let (ln, lj) = self.lower(l)?;
                let (rn, rj) = self.lower(r)?;
                let jet = match (lj, rj) {
                    (Some(lj), Some(rj)) => match op {
                        BinOp::Add => Some(lj.add(&rj)),
                        BinOp::Sub => Some(lj.sub(&rj)),
                        BinOp::Mul => Some(lj.mul(&rj)),
                        BinOp::Div => lj.div(&rj),
                    },
                    _ => None,
                };
                (Node::Bin(*op, Box::new(ln), Box::new(rn)), jet)
            }
            Expr::Pow(base, n) => {
                let (node, jet) = self.lower(base)?;
                (Node::Pow(Box::new(node), *n), jet.map(|j| j.pow(*n)))
            }
            Expr::Exp(arg) => {
                let (node, jet) = self.lower(arg)?;
                match jet {
                    Some(jet) => {
                        let reach = jet.value.magnitude();
                        let terms = self.policy.terms_for(&reach, self.tau)?;
                        let nonnegative = !jet.value.lo.is_negative();
                        let enclose = |k: i64| -> Interval {
                            if k < 0 {
                                return Interval::zero();
                            }
                            let top = exp_series(&reach, k as u64);
                            if nonnegative {
                                Interval::new(Rational::one(), top)
                            } else {
                                Interval::new(-&top, top)
                            }
                        };
                        let out = jet.exp_series(terms, enclose);
                        (
                            Node::Exp {
                                arg: Box::new(node),
                                terms: Some(terms),
                            },
                            Some(out),
                        )
                    }
                    None => (
                        Node::Exp {
                            arg: Box::new(node),
                            terms: None,
                        },
                        None,
                    ),
                }
            }
            Expr::Log(arg) => {
                let (node, _) = self.lower(arg)?;
                (Node::Log(Box::new(node)), None)
            }
        })
    }
}

/// Per-point failure, turned into [`Error::Evaluation`] by the caller.
enum Failure {
    Message(String),
    Engine(Error),
}

fn eval(
    node: &Node,
    x: &Rational,
    tau: u64,
    policy: TruncationPolicy,
) -> std::result::Result<Rational, Failure> {
    Ok(match node {
        Node::Lit(q) => q.clone(),
        Node::Var => x.clone(),
        Node::Neg(e) => -eval(e, x, tau, policy)?,
        Node::Bin(op, l, r) => {
            let l = eval(l, x, tau, policy)?;
            let r = eval(r, x, tau, policy)?;
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r.is_zero() {
                        return Err(Failure::Message(format!("division of {l} by zero")));
                    }
                    l / r
                }
            }
        }
        Node::Pow(b, n) => eval(b, x, tau, policy)?.pow(*n),
        Node::Exp { arg, terms } => {
            let q = eval(arg, x, tau, policy)?;
            match terms {
                Some(n) => exp_series(&q, *n),
                None => exp_approx(&q, tau, policy).map_err(Failure::Engine)?,
            }
        }
        Node::Log(arg) => {
            let q = eval(arg, x, tau, policy)?;
            if !q.is_positive() {
                return Err(Failure::Message(format!("log of non-positive value {q}")));
            }
            log_approx(&q, tau, policy).map_err(Failure::Engine)?
        }
    })
}

/// Compiles `e` into a grid function on `[0, 1]_ε` with `exp` and `log`
/// evaluated at resolution `τ`.
///
/// When no `log` occurs and no divisor can vanish, the function carries a
/// Lipschitz certificate from a bound on `f′` and a quotient certificate
/// from a bound on `f″`.
pub fn compile(e: &Expr, spec: GridSpec, policy: TruncationPolicy) -> Result<GridFunction> {
    compile_on(e, spec, policy, Domain::unit())
}

/// [`compile`] for an expression on `[a, b]`: the grid function is
/// `t ↦ e(a + (b − a)t)`.
pub fn compile_on(
    e: &Expr,
    spec: GridSpec,
    policy: TruncationPolicy,
    domain: Domain,
) -> Result<GridFunction> {
    let tau = spec.tau();
    let lowering = Lowering {
        tau,
        policy,
        domain: domain.clone(),
    };
    let (node, jet) = lowering.lower(e)?;
    let node = Arc::new(node);
    let name = if domain.is_unit() {
        e.to_string()
    } else {
        format!("{e} on [{}, {}]", domain.a, domain.b)
    };
    let f = GridFunction::new(spec, name, move |point| {
        let t = point.value();
        let x = if domain.is_unit() {
            t.clone()
        } else {
            domain.map(&t)
        };
        eval(&node, &x, tau, policy).map_err(|failure| match failure {
            Failure::Message(message) => Error::Evaluation { point: t, message },
            Failure::Engine(Error::Domain(message)) => Error::Evaluation { point: t, message },
            Failure::Engine(other) => other,
        })
    });
    Ok(match jet {
        Some(jet) => {
            let slope = jet.d1.magnitude();
            let curvature = jet.d2.magnitude();
            f.with_continuity(Certificate::new(
                jet.value.magnitude(),
                Modulus::lipschitz(slope.clone()),
            ))
            .with_quotient(Certificate::new(slope, Modulus::lipschitz(curvature)))
        }
        None => f,
    })
}
