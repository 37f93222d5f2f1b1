//! A small arithmetic language for user-supplied conical functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := integer | var | 'min' '(' expr ',' expr ')' | '(' expr ')' | '-' factor
//! var    := 'a' digit+ | 'a' | 'b' | 'c'
//! ```
//!
//! Rational literals `p/q` parse as a quotient of integers.

use num_bigint::BigInt;
use num_traits::Zero;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Q),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Min(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn eval_exact(&self, v: &[Q]) -> Result<Q> {
        Ok(match self {
            Expr::Num(x) => x.clone(),
            Expr::Var(i) => v
                .get(*i)
                .cloned()
                .ok_or(Error::DimensionMismatch { expected: i + 1, found: v.len() })?,
            Expr::Neg(e) => -e.eval_exact(v)?,
            Expr::Add(a, b) => a.eval_exact(v)? + b.eval_exact(v)?,
            Expr::Sub(a, b) => a.eval_exact(v)? - b.eval_exact(v)?,
            Expr::Mul(a, b) => a.eval_exact(v)? * b.eval_exact(v)?,
            Expr::Div(a, b) => {
                let d = b.eval_exact(v)?;
                if d.is_zero() {
                    return Err(Error::InvalidInput(format!("division by zero in `{self}`")));
                }
                a.eval_exact(v)? / d
            }
            Expr::Min(a, b) => {
                let x = a.eval_exact(v)?;
                let y = b.eval_exact(v)?;
                if x <= y {
                    x
                } else {
                    y
                }
            }
        })
    }

    pub fn eval_f64(&self, v: &[f64]) -> f64 {
        match self {
            Expr::Num(x) => to_f64(x),
            Expr::Var(i) => v.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(e) => -e.eval_f64(v),
            Expr::Add(a, b) => a.eval_f64(v) + b.eval_f64(v),
            Expr::Sub(a, b) => a.eval_f64(v) - b.eval_f64(v),
            Expr::Mul(a, b) => a.eval_f64(v) * b.eval_f64(v),
            Expr::Div(a, b) => a.eval_f64(v) / b.eval_f64(v),
            Expr::Min(a, b) => a.eval_f64(v).min(b.eval_f64(v)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => {
                if x.denom() == &BigInt::from(1) {
                    write!(f, "{}", x.numer())
                } else {
                    write!(f, "({}/{})", x.numer(), x.denom())
                }
            }
            Expr::Var(i) => write!(f, "a{}", i + 1),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected character `{}`", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: String) -> Error {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        Error::Parse { line, column, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.error(format!("expected `{c}`, found `{x}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if op == '*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(self.factor()?.into()))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                Ok(Expr::Num(Q::from_integer(BigInt::from_str(&s).expect("digits"))))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "min" => {
                        self.expect('(')?;
                        let a = self.expr()?;
                        self.expect(',')?;
                        let b = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::Min(a.into(), b.into()))
                    }
                    "a" => Ok(Expr::Var(0)),
                    "b" => Ok(Expr::Var(1)),
                    "c" => Ok(Expr::Var(2)),
                    w if w.len() > 1 && w.starts_with('a') && w[1..].chars().all(|d| d.is_ascii_digit()) => {
                        let i: usize = w[1..].parse().map_err(|_| self.error(format!("bad variable `{w}`")))?;
                        if i == 0 {
                            self.pos = start;
                            return Err(self.error("variables are numbered from a1".into()));
                        }
                        Ok(Expr::Var(i - 1))
                    }
                    w => {
                        self.pos = start;
                        Err(self.error(format!("unknown identifier `{w}`")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected character `{c}`"))),
        }
    }
}
