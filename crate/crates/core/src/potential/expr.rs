//! A small expression language for potentials on the shift space.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | number | 'euler' | 'sym' '(' int ')'
//!         | 'eq' '(' expr ',' expr ')' | 'exp' '(' expr ')' | 'log' '(' expr ')'
//!         | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//! ```
//!
//! `sym(i)` is the symbol at coordinate `i` of the point (1-based symbol
//! value, as a real). `eq(a, b)` is `1.0` when `a == b` and `0.0` otherwise.

use std::fmt;

use thiserror::Error;

use crate::shift_space::Symbol;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: expected {expected}")]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {0}")]
    LogOfNonPositive(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("coordinate {index} requested but point has length {len}")]
    CoordinateOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Euler,
    Sym(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// One more than the largest coordinate referenced; `0` if none.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Euler => 0,
            Expr::Sym(i) => i + 1,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.depth(),
            Expr::Bin(_, a, b) | Expr::Eq(a, b) | Expr::Pow(a, b) => a.depth().max(b.depth()),
        }
    }

    /// Evaluates at a point given by its first `point.len()` coordinates.
    pub fn eval(&self, point: &[Symbol]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Euler => std::f64::consts::E,
            Expr::Sym(i) => match point.get(*i) {
                Some(&s) => f64::from(s),
                None => {
                    return Err(EvalError::CoordinateOutOfRange {
                        index: *i,
                        len: point.len(),
                    })
                }
            },
            Expr::Neg(e) => -e.eval(point)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        x / y
                    }
                }
            }
            Expr::Eq(a, b) => {
                if a.eval(point)? == b.eval(point)? {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Exp(e) => e.eval(point)?.exp(),
            Expr::Log(e) => {
                let x = e.eval(point)?;
                if x <= 0.0 {
                    return Err(EvalError::LogOfNonPositive(x));
                }
                x.ln()
            }
            Expr::Pow(a, b) => a.eval(point)?.powf(b.eval(point)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Euler => f.write_str("euler"),
            Expr::Sym(i) => write!(f, "sym({i})"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let c = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {c} {b})")
            }
            Expr::Eq(a, b) => write!(f, "eq({a}, {b})"),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Log(e) => write!(f, "log({e})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            expected: expected.to_string(),
        }
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

    fn expect(&mut self, c: u8) -> Result<(), SyntaxError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("'{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            _ => Err(self.error("number, identifier, '-' or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("digits"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| SyntaxError {
            offset: start,
            expected: "decimal literal".into(),
        })
    }

    fn integer(&mut self) -> Result<usize, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("non-negative integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| SyntaxError {
                offset: start,
                expected: "coordinate index".into(),
            })
    }

    fn call(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let unary = |p: &mut Self| -> Result<Box<Expr>, SyntaxError> {
            p.expect(b'(')?;
            let e = p.expr()?;
            p.expect(b')')?;
            Ok(Box::new(e))
        };
        let binary = |p: &mut Self| -> Result<(Box<Expr>, Box<Expr>), SyntaxError> {
            p.expect(b'(')?;
            let a = p.expr()?;
            p.expect(b',')?;
            let b = p.expr()?;
            p.expect(b')')?;
            Ok((Box::new(a), Box::new(b)))
        };
        match name {
            "euler" => Ok(Expr::Euler),
            "sym" => {
                self.expect(b'(')?;
                let i = self.integer()?;
                self.expect(b')')?;
                Ok(Expr::Sym(i))
            }
            "exp" => Ok(Expr::Exp(unary(self)?)),
            "log" => Ok(Expr::Log(unary(self)?)),
            "eq" => binary(self).map(|(a, b)| Expr::Eq(a, b)),
            "pow" => binary(self).map(|(a, b)| Expr::Pow(a, b)),
            _ => {
                self.pos = start;
                Err(self.error("one of euler, sym, eq, exp, log, pow"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_constant() {
        let e = parse("euler").unwrap();
        assert_eq!(e, Expr::Euler);
        assert_eq!(e.eval(&[]).unwrap(), std::f64::consts::E);
        assert_eq!(e.depth(), 0);
    }

    #[test]
    fn indicator_sum() {
        let e = parse("1.5 + 0.5*eq(sym(0),1)").unwrap();
        assert_eq!(
            e,
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Num(1.5)),
                Box::new(Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::Num(0.5)),
                    Box::new(Expr::Eq(Box::new(Expr::Sym(0)), Box::new(Expr::Num(1.0))))
                ))
            )
        );
        assert_eq!(e.depth(), 1);
        assert_eq!(e.eval(&[1]).unwrap(), 2.0);
        assert_eq!(e.eval(&[2]).unwrap(), 1.5);
    }

    #[test]
    fn unterminated_call_offset() {
        let err = parse("log(").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn other_syntax_errors() {
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("1 +").unwrap_err().offset, 3);
        assert_eq!(parse("foo(1)").unwrap_err().offset, 0);
        assert_eq!(parse("sym(x)").unwrap_err().offset, 4);
        assert_eq!(parse("pow(2 3)").unwrap_err().offset, 6);
        assert_eq!(parse("(1").unwrap_err().offset, 2);
        assert_eq!(parse("1 2").unwrap_err().offset, 2);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("8 - 2 - 1").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 5.0);
        let e = parse("2 + 3 * 4 / 2").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 8.0);
        let e = parse("--2").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 2.0);
        let e = parse(" pow( 2 , 1e1 ) ").unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 1024.0);
        let e = parse("exp(log(3))").unwrap();
        assert!((e.eval(&[]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn depth_is_max_coordinate_plus_one() {
        assert_eq!(parse("sym(0) + eq(sym(3), 2)").unwrap().depth(), 4);
        assert_eq!(parse("2").unwrap().depth(), 0);
    }

    #[test]
    fn evaluation_errors() {
        assert!(matches!(
            parse("log(0)").unwrap().eval(&[]),
            Err(EvalError::LogOfNonPositive(_))
        ));
        assert_eq!(
            parse("1/(sym(0)-1)").unwrap().eval(&[1]),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            parse("sym(2)").unwrap().eval(&[1]),
            Err(EvalError::CoordinateOutOfRange { index: 2, len: 1 })
        ));
        assert_eq!(
            parse("exp(1000)").unwrap().eval(&[]),
            Err(EvalError::NonFinite)
        );
    }

    #[test]
    fn display_reparses_to_same_value() {
        let e = parse("1.5 + 0.5*eq(sym(0),1) - pow(sym(1), -0.5)/exp(euler)").unwrap();
        let again = parse(&e.to_string()).unwrap();
        assert_eq!(e.eval(&[1, 2]).unwrap(), again.eval(&[1, 2]).unwrap());
    }
}
