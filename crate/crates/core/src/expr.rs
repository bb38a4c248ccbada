//! Tiny expression language for weights, test functions, and CLI inputs.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := '-'? term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?            // right-associative power
//! base   := number | 'e' | ident '(' expr ')' | 'r' | 'y1'..'y9' | '(' expr ')'
//! ident  := 'exp' | 'ln' | 'abs' | 'sqrt'
//! ```
//!
//! `r` is the radius `|y|`, `y1..y9` are coordinates, `e` is Euler's number.
//! Numbers are plain decimal literals (no exponent suffix — `e` is a
//! constant here, so write `2*10^3` style scaling instead of `2e3`).
//!
//! Evaluation happens in log domain: products, quotients, and powers never
//! leave log space, so expressions like `exp(r^2/2) / (1+r)^3` evaluate
//! cleanly far past the overflow range of plain doubles.

use crate::logscalar::LogScalar;
use std::str::FromStr;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Abs,
    Sqrt,
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Euler,
    Radius,
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, PartialEq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of a non-positive value")]
    LnOfNonPositive,
    #[error("sqrt of a negative value")]
    SqrtOfNegative,
    #[error("negative base with non-integer exponent")]
    NegativeBasePower,
    #[error("zero base with negative exponent")]
    ZeroToNegativePower,
    #[error("coordinate y{index} exceeds the point dimension {dim}")]
    CoordOutOfRange { index: usize, dim: usize },
    #[error("exponent overflows the log-domain range")]
    ExponentOverflow,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                let text = &src[start..i];
                let value = f64::from_str(text).map_err(|_| ParseError {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push((Token::Num(value), start));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((Token::Ident(src[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError { pos: i, msg: format!("unexpected character `{other}`") })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError { pos: self.here(), msg: format!("expected {what}") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let negated = if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut lhs = self.term()?;
        if negated {
            lhs = Expr::Neg(Box::new(lhs));
        }
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "e" => Ok(Expr::Euler),
                "r" => Ok(Expr::Radius),
                "exp" | "ln" | "abs" | "sqrt" => {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "ln" => Func::Ln,
                        "abs" => Func::Abs,
                        _ => Func::Sqrt,
                    };
                    self.expect(Token::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
                other if other.len() == 2 && other.starts_with('y') => {
                    match other[1..].parse::<usize>() {
                        Ok(k) if (1..=9).contains(&k) => Ok(Expr::Coord(k - 1)),
                        _ => Err(ParseError { pos, msg: format!("unknown identifier `{other}`") }),
                    }
                }
                other => Err(ParseError { pos, msg: format!("unknown identifier `{other}`") }),
            },
            _ => Err(ParseError { pos, msg: "expected a value".into() }),
        }
    }
}

/// Parses the expression grammar above.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0, end: src.len() };
    let e = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ParseError { pos: parser.here(), msg: "trailing input".into() });
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

impl Expr {
    /// Log-domain evaluation at a point `y ∈ ℝ^d`.
    pub fn eval_log(&self, y: &[f64]) -> Result<LogScalar, EvalError> {
        match self {
            Expr::Num(v) => Ok(LogScalar::from_real(*v)),
            Expr::Euler => Ok(LogScalar::from_log(1.0)),
            Expr::Radius => {
                let r2: f64 = y.iter().map(|c| c * c).sum();
                Ok(LogScalar::from_real(r2.sqrt()))
            }
            Expr::Coord(i) => match y.get(*i) {
                Some(c) => Ok(LogScalar::from_real(*c)),
                None => Err(EvalError::CoordOutOfRange { index: i + 1, dim: y.len() }),
            },
            Expr::Neg(a) => Ok(-a.eval_log(y)?),
            Expr::Add(a, b) => Ok(a.eval_log(y)? + b.eval_log(y)?),
            Expr::Sub(a, b) => Ok(a.eval_log(y)? - b.eval_log(y)?),
            Expr::Mul(a, b) => Ok(a.eval_log(y)? * b.eval_log(y)?),
            Expr::Div(a, b) => {
                let den = b.eval_log(y)?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval_log(y)? / den)
            }
            Expr::Pow(a, b) => {
                let base = a.eval_log(y)?;
                let exp = b.eval_log(y)?.to_real();
                if !exp.is_finite() {
                    return Err(EvalError::ExponentOverflow);
                }
                if base.is_zero() {
                    if exp > 0.0 {
                        return Ok(LogScalar::zero());
                    }
                    if exp == 0.0 {
                        return Ok(LogScalar::one());
                    }
                    return Err(EvalError::ZeroToNegativePower);
                }
                if base.sign() < 0 {
                    // Exponents ride through log-domain arithmetic, which
                    // cannot keep integrality exact; snap within 1e-9.
                    let snapped = exp.round();
                    if (exp - snapped).abs() <= 1e-9 * exp.abs().max(1.0)
                        && snapped.abs() < i32::MAX as f64
                    {
                        return Ok(base.powi(snapped as i32));
                    }
                    return Err(EvalError::NegativeBasePower);
                }
                Ok(base.powf(exp))
            }
            Expr::Call(f, a) => {
                let arg = a.eval_log(y)?;
                match f {
                    Func::Exp => {
                        let x = arg.to_real();
                        if !x.is_finite() {
                            return Err(EvalError::ExponentOverflow);
                        }
                        Ok(LogScalar::from_log(x))
                    }
                    Func::Ln => {
                        if arg.sign() <= 0 {
                            return Err(EvalError::LnOfNonPositive);
                        }
                        // ln of sign·e^logmag is just the log-magnitude.
                        Ok(LogScalar::from_real(arg.logmag()))
                    }
                    Func::Abs => Ok(arg.abs()),
                    Func::Sqrt => {
                        if arg.sign() < 0 {
                            return Err(EvalError::SqrtOfNegative);
                        }
                        Ok(arg.sqrt())
                    }
                }
            }
        }
    }

    /// Plain-double evaluation; overflow collapses to ±∞.
    pub fn eval(&self, y: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval_log(y)?.to_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval1(src: &str, y: &[f64]) -> f64 {
        parse_expr(src).unwrap().eval(y).unwrap()
    }

    #[test]
    fn golden_values() {
        assert_relative_eq!(
            eval1("exp(-r^2)", &[1.0]),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            eval1("(1+r)^2 * ln(e+r)", &[2.0]),
            9.0 * (std::f64::consts::E + 2.0).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(eval1("2^3^2", &[0.0]), 512.0, max_relative = 1e-15);
        assert_relative_eq!(eval1("1 - 2 - 3", &[0.0]), -4.0, max_relative = 1e-15);
        assert_relative_eq!(eval1("y1*y2 + y2^2", &[3.0, -2.0]), -2.0, max_relative = 1e-14);
        assert_relative_eq!(eval1("sqrt(abs(-9))", &[0.0]), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn log_domain_handles_gaussian_growth() {
        // e^{r²/2} at r = 40 overflows f64; the log value must be exact.
        let e = parse_expr("exp(r^2/2) / (1+r)^3").unwrap();
        let v = e.eval_log(&[40.0]).unwrap();
        assert!(v.is_finite());
        assert_relative_eq!(v.logmag(), 800.0 - 3.0 * 41.0f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn eval_errors() {
        let div = parse_expr("1/0").unwrap();
        assert_eq!(div.eval(&[0.0]).unwrap_err(), EvalError::DivisionByZero);

        let coord = parse_expr("y3").unwrap();
        assert_eq!(
            coord.eval(&[0.0, 0.0]).unwrap_err(),
            EvalError::CoordOutOfRange { index: 3, dim: 2 }
        );

        let ln = parse_expr("ln(0-1)").unwrap();
        assert_eq!(ln.eval(&[0.0]).unwrap_err(), EvalError::LnOfNonPositive);

        let pow = parse_expr("(0-2)^0.5").unwrap();
        assert_eq!(pow.eval(&[0.0]).unwrap_err(), EvalError::NegativeBasePower);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_expr("2*^3").unwrap_err();
        assert_eq!(err.pos, 2);
        let err = parse_expr("exp 3").unwrap_err();
        assert_eq!(err.pos, 4);
        let err = parse_expr("(1+2").unwrap_err();
        assert_eq!(err.pos, 4);
        let err = parse_expr("y12").unwrap_err();
        assert_eq!(err.pos, 0);
        assert!(parse_expr("2 + $").is_err());
    }

    #[test]
    fn negative_base_integer_power_is_signed() {
        assert_relative_eq!(eval1("(0-2)^3", &[0.0]), -8.0, max_relative = 1e-15);
        assert_relative_eq!(eval1("-r^2", &[3.0]), -9.0, max_relative = 1e-15);
    }
}
