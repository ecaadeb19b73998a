use num_traits::ToPrimitive;

use super::ast::{BinOp, Expr};
use crate::error::{Error, Result};
use crate::exact::Rational;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(Rational),
    Ident(String),
    Sym(char),
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(q) => format!("number {q}"),
            Token::Ident(name) => format!("'{name}'"),
            Token::Sym(c) => format!("'{c}'"),
            Token::End => "end of input".to_string(),
        }
    }
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        column,
        message: message.into(),
    }
}

/// Splits `text` into tokens tagged with their 1-based column.
fn lex(text: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let literal: String = chars[start..i].iter().collect();
            let value = literal
                .parse::<Rational>()
                .map_err(|_| syntax(column, format!("malformed number '{literal}'")))?;
            tokens.push((Token::Number(value), column));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push((Token::Ident(chars[start..i].iter().collect()), column));
        } else if "+-*/^()".contains(c) {
            tokens.push((Token::Sym(c), column));
            i += 1;
        } else {
            return Err(syntax(column, format!("unexpected character '{c}'")));
        }
    }
    tokens.push((Token::End, chars.len() + 1));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn column(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == &Token::Sym(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(
                self.column(),
                format!("expected '{c}' but found {}", self.peek().describe()),
            ))
        }
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Token::Sym('+') => BinOp::Add,
                Token::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Sym('*') => BinOp::Mul,
                Token::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = fold_division(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Lit(q) => Expr::Lit(-q),
                e => Expr::negate(e),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let column = self.column();
        // right-associative; the exponent may itself be a signed power
        let exponent = self.unary()?;
        if exponent.mentions_x() {
            return Err(syntax(
                column,
                format!("exponent '{exponent}' is not constant"),
            ));
        }
        let value = exponent.eval_constant().map_err(|e| {
            syntax(
                column,
                format!("exponent '{exponent}' is not constant: {e}"),
            )
        })?;
        let n = (value.is_integer() && !value.is_negative())
            .then(|| value.numerator().to_u32())
            .flatten()
            .ok_or_else(|| {
                syntax(
                    column,
                    format!("exponent must be a nonnegative integer below 2^32, got {value}"),
                )
            })?;
        Ok(Expr::pow(base, n))
    }

    fn atom(&mut self) -> Result<Expr> {
        let column = self.column();
        match self.advance() {
            Token::Number(q) => Ok(Expr::Lit(q)),
            Token::Sym('(') => {
                let inner = self.additive()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "exp" | "log" => {
                    self.expect('(')?;
                    let arg = self.additive()?;
                    self.expect(')')?;
                    Ok(if name == "exp" {
                        Expr::exp(arg)
                    } else {
                        Expr::log(arg)
                    })
                }
                _ => Err(syntax(
                    column,
                    format!("unknown identifier '{name}'; expected x, exp or log"),
                )),
            },
            other => Err(syntax(column, format!("unexpected {}", other.describe()))),
        }
    }
}

/// Quotients of two literals become one literal, so `1/3` is a constant.
fn fold_division(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    match (op, lhs, rhs) {
        (BinOp::Div, Expr::Lit(a), Expr::Lit(b)) if !b.is_zero() => Expr::Lit(a / b),
        (op, lhs, rhs) => Expr::bin(op, lhs, rhs),
    }
}

/// Parses an expression in `x`.
///
/// Precedence from loosest to tightest: `+ -`, `* /`, unary `-`, `^`, atoms.
/// Binary operators associate to the left except `^`. Decimal literals are
/// read exactly.
pub fn parse(text: &str) -> Result<Expr> {
    let mut parser = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let expr = parser.additive()?;
    match parser.peek() {
        Token::End => Ok(expr),
        other => Err(syntax(
            parser.column(),
            format!(
                "unexpected {} after a complete expression",
                other.describe()
            ),
        )),
    }
}
