//! Expression grammar for function inputs: Gaussian-rational literals,
//! frame coordinates and `+ - * / ^`.

use std::fmt;

use fedosov_core::geometry::coordinate_jets;
use fedosov_core::{Frame, Jet, Scalar};
use num_bigint::BigInt;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Real coordinate `x_k`, 1-indexed.
    X(usize),
    Z(usize),
    Zb(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::X(k) => write!(f, "x{k}"),
            Symbol::Z(k) => write!(f, "z{k}"),
            Symbol::Zb(k) => write!(f, "zb{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    /// The imaginary unit.
    I,
    Var(Symbol),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, CliError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&ch) = chars.peek() {
        let pos = Pos { line, column };
        if ch == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if ch.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if ch.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|c| c.is_ascii_digit()) {
                s.push(d);
                chars.next();
                column += 1;
            }
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|c| c.is_ascii_alphanumeric()) {
                s.push(d);
                chars.next();
                column += 1;
            }
            out.push((Tok::Ident(s), pos));
            continue;
        }
        let tok = match ch {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => {
                return Err(CliError::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{ch}`"),
                })
            }
        };
        chars.next();
        column += 1;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column }));
    Ok(out)
}

fn symbol(name: &str) -> Option<Symbol> {
    let (kind, digits): (fn(usize) -> Symbol, &str) = if let Some(d) = name.strip_prefix("zb") {
        (Symbol::Zb, d)
    } else if let Some(d) = name.strip_prefix('z') {
        (Symbol::Z, d)
    } else {
        let d = name.strip_prefix('x')?;
        (Symbol::X, d)
    };
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(kind)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, message: String) -> Result<T, CliError> {
        let Pos { line, column } = self.toks[self.at].1;
        Err(CliError::Syntax {
            line,
            column,
            message,
        })
    }

    fn sum(&mut self) -> Result<Expr, CliError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => Expr::Add,
                Tok::Minus => Expr::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = op(Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr, CliError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => Expr::Mul,
                Tok::Slash => Expr::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = op(Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, CliError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CliError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let exp = match self.peek() {
            Tok::Int(v) => v.clone(),
            t => return self.fail(format!("expected an integer exponent, found {t}")),
        };
        let Ok(e) = i32::try_from(if negative { -exp } else { exp }) else {
            return self.fail("exponent out of range".into());
        };
        self.bump();
        Ok(Expr::Pow(Box::new(base), e))
    }

    fn primary(&mut self) -> Result<Expr, CliError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Ident(name) => {
                if name == "i" {
                    self.bump();
                    return Ok(Expr::I);
                }
                match symbol(&name) {
                    Some(s) => {
                        self.bump();
                        Ok(Expr::Var(s))
                    }
                    None => {
                        let Pos { line, column } = self.toks[self.at].1;
                        Err(CliError::UnknownSymbol { name, line, column })
                    }
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return self.fail(format!("expected `)`, found {}", self.peek()));
                }
                self.bump();
                Ok(e)
            }
            t => self.fail(format!("expected an operand, found {t}")),
        }
    }
}

/// Parse an expression. Precedence from tightest: `^`, unary `-`, `* /`,
/// `+ -`; binary operators associate to the left.
pub fn parse(src: &str) -> Result<Expr, CliError> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.fail(format!("unexpected {}", p.peek()));
    }
    Ok(e)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Int(_) | Expr::I | Expr::Var(_) => 5,
        }
    }

    pub fn symbols(&self, out: &mut Vec<Symbol>) {
        match self {
            Expr::Var(s) => out.push(*s),
            Expr::Int(_) | Expr::I => {}
            Expr::Neg(a) | Expr::Pow(a, _) => a.symbols(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
        }
    }

    /// Value of a closed expression.
    pub fn constant(&self) -> Result<Scalar, CliError> {
        Ok(match self {
            Expr::Int(v) => Scalar::from_bigint(v.clone()),
            Expr::I => Scalar::i(),
            Expr::Var(s) => return Err(CliError::Config(format!("`{s}` is not a constant"))),
            Expr::Neg(a) => -a.constant()?,
            Expr::Add(a, b) => a.constant()? + b.constant()?,
            Expr::Sub(a, b) => a.constant()? - b.constant()?,
            Expr::Mul(a, b) => a.constant()? * b.constant()?,
            Expr::Div(a, b) => {
                let d = b.constant()?;
                a.constant()?
                    .try_div(&d)
                    .map_err(|_| CliError::Singularity(b.to_string()))?
            }
            Expr::Pow(a, e) => a
                .constant()?
                .pow(*e)
                .map_err(|_| CliError::Singularity(self.to_string()))?,
        })
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::I => f.write_str("i"),
            Expr::Var(s) => write!(f, "{s}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, a.precedence() < p)
            }
            Expr::Pow(a, e) => {
                write_operand(f, a, a.precedence() <= p)?;
                write!(f, "^{e}")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = match self {
                    Expr::Add(..) => " + ",
                    Expr::Sub(..) => " - ",
                    Expr::Mul(..) => "*",
                    _ => "/",
                };
                write_operand(f, a, a.precedence() < p)?;
                f.write_str(op)?;
                write_operand(f, b, b.precedence() <= p)
            }
        }
    }
}

/// Frame position of a coordinate symbol.
fn slot(s: Symbol, frame: Frame, dim: usize) -> Result<usize, CliError> {
    let n = dim / 2;
    let (idx, ok) = match (s, frame) {
        (Symbol::X(k), Frame::Real) => (k - 1, k <= dim),
        (Symbol::Z(k), Frame::Complex) => (k - 1, k <= n),
        (Symbol::Zb(k), Frame::Complex) => (n + k - 1, k <= n),
        _ => (0, false),
    };
    if ok {
        Ok(idx)
    } else {
        Err(CliError::FrameSymbol {
            symbol: s.to_string(),
            frame: match frame {
                Frame::Real => format!("real frame x1..x{dim}"),
                Frame::Complex => format!("complex frame z1..z{n}, zb1..zb{n}"),
            },
        })
    }
}

/// Jet of `e` at the base point, truncated at `order`.
pub fn lower(e: &Expr, frame: Frame, base: &[Scalar], order: u32) -> Result<Jet, CliError> {
    let coords = coordinate_jets(base, order);
    lower_with(e, frame, &coords, order)
}

fn lower_with(e: &Expr, frame: Frame, x: &[Jet], order: u32) -> Result<Jet, CliError> {
    let d = x.len();
    let rec = |a: &Expr| lower_with(a, frame, x, order);
    Ok(match e {
        Expr::Int(v) => Jet::constant(d, order, Scalar::from_bigint(v.clone())),
        Expr::I => Jet::constant(d, order, Scalar::i()),
        Expr::Var(s) => x[slot(*s, frame, d)?].clone(),
        Expr::Neg(a) => rec(a)?.neg(),
        Expr::Add(a, b) => rec(a)?.add_truncated(&rec(b)?),
        Expr::Sub(a, b) => rec(a)?.sub_truncated(&rec(b)?),
        Expr::Mul(a, b) => rec(a)?.mul_truncated(&rec(b)?),
        Expr::Div(a, b) => {
            let inv = rec(b)?
                .invert()
                .map_err(|_| CliError::Singularity(b.to_string()))?;
            rec(a)?.mul_truncated(&inv)
        }
        Expr::Pow(a, k) => rec(a)?
            .pow(*k)
            .map_err(|_| CliError::Singularity(a.to_string()))?,
    })
}
