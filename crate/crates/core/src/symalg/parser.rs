//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := "-"? factor (("*" | "/") factor)*     divisors must be scalar terms
//! factor := base ("^" uint)?
//! base   := number | ident | "(" expr ")"
//! number := digits ("." digits)?
//! ident  := letter (letter | digit | "_")*        reserved: hbar, i
//! ```
//!
//! Offsets in errors are byte offsets into the input.

use num_bigint::BigInt;
use num_traits::Zero;

use super::algebra::Algebra;
use super::poly::{Monomial, Poly};
use super::{coeff_i, Coeff, Rational, Symbol, HBAR, IMAG};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(Rational),
    Ident { name: String, offset: usize },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div { num: Box<Expr>, den: Box<Expr>, offset: usize },
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        let start = i;
        let tok = match ch {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part = &text[start..i];
                let mut value = Rational::from_integer(int_part.parse::<BigInt>().expect("digits"));
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(err(i, "expected digits after decimal point"));
                    }
                    let frac = &text[frac_start..i];
                    let num = frac.parse::<BigInt>().expect("digits");
                    let den = num_traits::pow(BigInt::from(10), frac.len());
                    value += Rational::new(num, den);
                }
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let c = text[start..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character `{c}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let negate = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let offset = self.offset();
                    lhs = Expr::Div { num: Box::new(lhs), den: Box::new(self.factor()?), offset };
                }
                _ => break,
            }
        }
        Ok(if negate { Expr::Neg(Box::new(lhs)) } else { lhs })
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let offset = self.offset();
            match self.toks.get(self.pos) {
                Some((Tok::Num(n), _)) if n.is_integer() => {
                    let e = n.to_integer().try_into().map_err(|_| err(offset, "exponent too large"))?;
                    self.pos += 1;
                    return Ok(Expr::Pow(Box::new(base), e));
                }
                _ => return Err(err(offset, "expected unsigned integer exponent")),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Num(n), _)) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Some((Tok::Ident(name), _)) => {
                self.pos += 1;
                Ok(Expr::Ident { name, offset })
            }
            Some((Tok::LParen, _)) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(err(self.offset(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(err(offset, "expected number, identifier or `(`")),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

impl Expr {
    /// Evaluates into a polynomial; commutative or ordered depending on the
    /// key type.
    pub fn evaluate<K: Monomial>(&self, alg: &Algebra) -> Result<Poly<K>> {
        Ok(match self {
            Expr::Number(n) => Poly::constant(Coeff::new(n.clone(), Rational::zero())),
            Expr::Ident { name, .. } if name == IMAG => Poly::constant(coeff_i()),
            Expr::Ident { name, .. } => {
                let s = Symbol::from(name.as_str());
                if name == HBAR || alg.is_scalar(&s) {
                    Poly::scalar_symbol(s)
                } else if alg.is_observable(&s) {
                    Poly::observable(s)
                } else {
                    return Err(Error::UnknownSymbol(name.clone()));
                }
            }
            Expr::Add(a, b) => &a.evaluate::<K>(alg)? + &b.evaluate::<K>(alg)?,
            Expr::Sub(a, b) => &a.evaluate::<K>(alg)? - &b.evaluate::<K>(alg)?,
            Expr::Neg(a) => -&a.evaluate::<K>(alg)?,
            Expr::Mul(a, b) => &a.evaluate::<K>(alg)? * &b.evaluate::<K>(alg)?,
            Expr::Div { num, den, offset } => {
                let d = den.evaluate::<K>(alg)?;
                let inv = d.scalar_inverse().ok_or_else(|| err(*offset, "division only by nonzero scalar terms"))?;
                &num.evaluate::<K>(alg)? * &inv
            }
            Expr::Pow(a, e) => a.evaluate::<K>(alg)?.pow(*e),
        })
    }

    /// Identifiers in order of appearance.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents(&self, out: &mut Vec<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Ident { name, .. } => out.push(name.clone()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Expr::Div { num, den, .. } => {
                num.collect_idents(out);
                den.collect_idents(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_idents(out),
        }
    }
}
