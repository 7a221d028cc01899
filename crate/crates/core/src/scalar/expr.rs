//! Scalar expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | atom
//! atom   := integer | 'sqrt' '(' integer ')' | 'c' index | 's' index | '(' expr ')'
//! ```
//!
//! Whitespace is ignored between tokens. Printing goes through the `Display`
//! impl of [`ExactScalar`], which only emits this grammar.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{ExactScalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("scalar expression error at offset {offset}: {message}")]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, ch: u8) -> Result<(), ExprError> {
        if self.peek() == Some(ch) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", ch as char))
        }
    }

    fn digits(&mut self) -> Result<BigInt, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(text.parse().expect("digit run parses"))
    }

    fn expr(&mut self) -> Result<ExactScalar, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ExactScalar, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.unary()?;
                    acc = acc.checked_div(&rhs).map_err(|e| ExprError {
                        offset: at,
                        message: match e {
                            ScalarError::ZeroDivisor => "division by zero".into(),
                            other => other.to_string(),
                        },
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<ExactScalar, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn index(&mut self) -> Result<u32, ExprError> {
        let at = self.pos;
        let n = self.digits()?;
        match n.to_u32() {
            Some(i) if i >= 1 => Ok(i),
            _ => Err(ExprError {
                offset: at,
                message: "symbol index must be a positive 32-bit integer".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<ExactScalar, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(d) if d.is_ascii_digit() => {
                let n = self.digits()?;
                Ok(ExactScalar::rational(BigRational::from_integer(n)))
            }
            Some(b's') if self.src[self.pos..].starts_with(b"sqrt") => {
                self.pos += 4;
                self.expect(b'(')?;
                let at = self.pos;
                if self.peek() == Some(b'-') {
                    return self.err("sqrt argument must be a non-negative integer");
                }
                let k = self.digits()?;
                let k = k.to_u64().filter(|&k| k <= u32::MAX as u64).ok_or(ExprError {
                    offset: at,
                    message: "sqrt argument too large".into(),
                })?;
                self.expect(b')')?;
                Ok(ExactScalar::sqrt_int(k))
            }
            Some(b'c') => {
                self.pos += 1;
                Ok(ExactScalar::cos_sym(self.index()?))
            }
            Some(b's') => {
                self.pos += 1;
                Ok(ExactScalar::sin_sym(self.index()?))
            }
            Some(ch) => self.err(format!("unexpected character '{}'", ch as char)),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses one scalar expression.
pub fn parse_scalar(text: &str) -> Result<ExactScalar, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}
