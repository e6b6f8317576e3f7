//! Scalar expressions over `x1, …, xn` that the jet engine can differentiate.
//!
//! Grammar (usual precedence, `^` right associative and binding tighter than
//! unary minus):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers `x1…x9` (and the aliases `x`, `y`, `z`) are coordinates, `pi`
//! and `e` are constants, anything else is a named parameter that must be
//! bound before evaluation. Functions: `exp log sin cos sqrt pow`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::chart::ScalarField;
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// zero-based coordinate index
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: {}", self.offset, self.message)
    }
}

impl Expr {
    pub fn parse(src: &str) -> core::result::Result<Expr, ParseError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    /// Number of coordinates referenced (highest index + 1).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Param(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    pub fn eval_jet(&self, x: &[Jet], params: &BTreeMap<String, f64>) -> Result<Jet> {
        let like = &x[0];
        Ok(match self {
            Expr::Num(v) => like.constant_like(*v),
            Expr::Var(i) => x
                .get(*i)
                .cloned()
                .ok_or(Error::DimensionMismatch { expected: i + 1, got: x.len() })?,
            Expr::Param(p) => like.constant_like(
                *params
                    .get(p)
                    .ok_or_else(|| Error::Evaluation(format!("unbound parameter '{p}'")))?,
            ),
            Expr::Neg(a) => -a.eval_jet(x, params)?,
            Expr::Add(a, b) => a.eval_jet(x, params)? + b.eval_jet(x, params)?,
            Expr::Sub(a, b) => a.eval_jet(x, params)? - b.eval_jet(x, params)?,
            Expr::Mul(a, b) => a.eval_jet(x, params)? * b.eval_jet(x, params)?,
            Expr::Div(a, b) => {
                let d = b.eval_jet(x, params)?;
                if d.value() == 0.0 {
                    return Err(Error::Evaluation("division by zero".into()));
                }
                a.eval_jet(x, params)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval_jet(x, params)?;
                let e = b.eval_jet(x, params)?;
                let r = base.pow(&e);
                if !r.value().is_finite() {
                    return Err(Error::Evaluation("power undefined here".into()));
                }
                r
            }
            Expr::Call(f, a) => {
                let v = a.eval_jet(x, params)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Log => {
                        if v.value() <= 0.0 {
                            return Err(Error::Evaluation("log of non-positive value".into()));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v.value() <= 0.0 {
                            return Err(Error::Evaluation("sqrt needs a positive argument".into()));
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

type PResult<T> = core::result::Result<T, ParseError>;

impl Parser<'_> {
    fn error(&self, message: String) -> ParseError {
        ParseError { offset: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = core::str::from_utf8(&s[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError {
            offset: start,
            message: format!("malformed number '{text}'"),
        })
    }

    fn ident(&mut self) -> PResult<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut args = vec_of(self.expr()?);
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.error("expected ')'".into()));
            }
            return self.call(&name, start, args);
        }
        Ok(match name.as_str() {
            "pi" => Expr::Num(core::f64::consts::PI),
            "e" => Expr::Num(core::f64::consts::E),
            "x" => Expr::Var(0),
            "y" => Expr::Var(1),
            "z" => Expr::Var(2),
            _ => match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                Some(0) => {
                    return Err(ParseError {
                        offset: start,
                        message: "coordinates are numbered from x1".into(),
                    })
                }
                Some(k) => Expr::Var(k - 1),
                None => Expr::Param(name),
            },
        })
    }

    fn call(&self, name: &str, offset: usize, mut args: Vec<Expr>) -> PResult<Expr> {
        let arity_err = |want: usize| ParseError {
            offset,
            message: format!("{name} takes {want} argument(s), got {}", args.len()),
        };
        let func = match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "pow" => {
                if args.len() != 2 {
                    return Err(arity_err(2));
                }
                let e = args.pop().unwrap();
                let b = args.pop().unwrap();
                return Ok(Expr::Pow(Box::new(b), Box::new(e)));
            }
            _ => {
                return Err(ParseError {
                    offset,
                    message: format!("unsupported function '{name}'"),
                })
            }
        };
        if args.len() != 1 {
            return Err(arity_err(1));
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }
}

fn vec_of(e: Expr) -> Vec<Expr> {
    let mut v = Vec::with_capacity(2);
    v.push(e);
    v
}

/// An expression together with values for its parameters.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    pub expr: Expr,
    pub params: BTreeMap<String, f64>,
}

impl BoundExpr {
    pub fn new(expr: Expr) -> Self {
        Self { expr, params: BTreeMap::new() }
    }

    pub fn parse(src: &str) -> core::result::Result<Self, ParseError> {
        Expr::parse(src).map(Self::new)
    }

    pub fn bind(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn unbound(&self) -> Vec<String> {
        self.expr.params().into_iter().filter(|p| !self.params.contains_key(p)).collect()
    }
}

impl ScalarField for BoundExpr {
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        self.expr.eval_jet(x, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    fn at(src: &str, p: &[f64]) -> Jet {
        let s = JetSpace::new(p.len(), 2);
        BoundExpr::parse(src).unwrap().eval(&s.variables(p)).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2*3", &[0.0]).value(), 7.0);
        assert_eq!(at("2^3^2", &[0.0]).value(), 512.0);
        assert_eq!(at("-2^2", &[0.0]).value(), -4.0);
        assert_eq!(at("(1-2)-3", &[0.0]).value(), -4.0);
        assert_eq!(at("8/2/2", &[0.0]).value(), 2.0);
        assert!((at("1.5e-1*x1", &[2.0]).value() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn derivatives_of_parsed_tree() {
        let j = at("x1^2 - x2^2 + sin(x1)*exp(x2)", &[1.0, 0.5]);
        let want_x = 2.0 + libm::cos(1.0) * libm::exp(0.5);
        assert!((j.d1(0) - want_x).abs() < 1e-14);
        assert!((j.partial(&[0, 2]).unwrap() - (-2.0 + libm::sin(1.0) * libm::exp(0.5))).abs() < 1e-13);
        let neg = at("pow(x, 3)", &[-2.0]);
        assert_eq!(neg.value(), -8.0);
        assert_eq!(neg.d1(0), 12.0);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = Expr::parse("x1 +").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = Expr::parse("tan(x1)").unwrap_err();
        assert!(e.message.contains("unsupported"));
        assert_eq!(e.offset, 0);
        let e = Expr::parse("(x1").unwrap_err();
        assert_eq!(e.offset, 3);
        assert!(Expr::parse("x0").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn parameters_must_be_bound() {
        let b = BoundExpr::parse("a*x1 + b*x2").unwrap();
        assert_eq!(b.unbound(), ["a", "b"]);
        let s = JetSpace::new(2, 1);
        assert!(b.eval(&s.variables(&[1.0, 1.0])).is_err());
        let b = b.bind("a", 2.0).bind("b", 3.0);
        assert_eq!(b.eval(&s.variables(&[1.0, 1.0])).unwrap().value(), 5.0);
        assert_eq!(b.expr.arity(), 2);
    }
}
