//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := unary (('*'|'/') unary)*
//! unary    := '-' unary | power
//! power    := base ('^' exponent)?
//! exponent := '-'? number | ident | '(' expr ')'
//! base     := number | ident | func '(' expr ')' | '(' expr ')'
//! number   := integer ('/' positive-integer)?
//! ```
//!
//! A rational literal is only formed when `/` directly follows the digits.
//! Exponents that do not fold to a rational are rewritten as `exp(e*log(b))`.

use rug::{Integer, Rational};

use super::{Expr, Func};
use crate::error::{Error, Result};

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
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let digits = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                let end = digits(i);
                let num: Integer = text[i..end].parse().unwrap();
                i = end;
                if i + 1 < bytes.len() && bytes[i] == b'/' && bytes[i + 1].is_ascii_digit() {
                    let dend = digits(i + 1);
                    let den: Integer = text[i + 1..dend].parse().unwrap();
                    if den == 0 {
                        return Err(Error::Syntax {
                            pos: i + 1,
                            msg: "zero denominator in rational literal".into(),
                        });
                    }
                    i = dend;
                    out.push((Tok::Num(Rational::from((num, den))), start));
                } else {
                    out.push((Tok::Num(Rational::from(num)), start));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((Tok::Ident(text[i..j].to_string()), start));
                i = j;
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!(
                        "unexpected character `{}`",
                        text[i..].chars().next().unwrap()
                    ),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    allowed: &'a dyn Fn(&str) -> bool,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{:?}", t),
        };
        Error::Syntax {
            pos: self.offset(),
            msg: format!("expected {}, found {}", what, found),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    acc = acc / self.unary()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Num(r) => Expr::constant(-r),
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("number after `^-`"));
                    }
                }
            }
            Tok::Num(r) => {
                self.bump();
                Expr::constant(r)
            }
            Tok::Ident(_) => self.identifier()?,
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                e
            }
            _ => return Err(self.unexpected("exponent")),
        };
        if *self.peek() == Tok::Caret {
            return Err(self.unexpected("operator (chained `^` needs parentheses)"));
        }
        Ok(base.pow_expr(&exponent))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Ident(name) => {
                if (self.allowed)(&name) {
                    Ok(Expr::var(&name))
                } else {
                    Err(Error::UnknownIdentifier { name, pos: at })
                }
            }
            _ => unreachable!(),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                Ok(Expr::constant(r))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let next_is_paren = matches!(self.toks.get(self.pos + 1), Some((Tok::LParen, _)));
                let func = match name.as_str() {
                    "sin" => Some(Some(Func::Sin)),
                    "cos" => Some(Some(Func::Cos)),
                    "exp" => Some(Some(Func::Exp)),
                    "log" => Some(Some(Func::Log)),
                    "sqrt" => Some(None),
                    _ => None,
                };
                match func {
                    Some(kind) if next_is_paren => {
                        self.bump();
                        self.bump();
                        let arg = self.expr()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(match kind {
                            Some(k) => Expr::apply(k, arg),
                            None => arg.sqrt(),
                        })
                    }
                    _ => self.identifier(),
                }
            }
            _ => Err(self.unexpected("number, identifier or `(`")),
        }
    }
}

/// Parses `text`, accepting exactly the identifiers in `vars`.
pub fn parse_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr> {
    parse_expr_with(text, &|name| vars.iter().any(|v| v.as_ref() == name))
}

/// Parses `text`, accepting identifiers for which `allowed` returns true.
pub fn parse_expr_with(text: &str, allowed: &dyn Fn(&str) -> bool) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        allowed,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(e)
}
