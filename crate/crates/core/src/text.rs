//! Infix polynomial syntax.
//!
//! ```text
//! system := '(' poly (',' poly)* ')' | poly (',' poly)*
//! poly   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor (['*'] factor)*
//! factor := atom ('^' uint)*
//! atom   := uint | '{' index '}' | var | '(' poly ')'
//! var    := 'x' | 'y' | 'z' | 'x' uint
//! ```
//!
//! Integers embed through the prime subfield; `{7}` or `{0x7}` is the field
//! element with that index. `x, y, z` are `x1, x2, x3`.

use std::sync::Arc;

use crate::gf::Field;
use crate::mpoly::{MultiPoly, PolyError, PolySystem};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(u64),
    Elem(String),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn err(pos: usize, msg: impl Into<String>) -> PolyError {
    PolyError::Parse { pos, msg: msg.into() }
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, PolyError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((i, Tok::Plus)),
            b'-' => out.push((i, Tok::Minus)),
            b'*' => out.push((i, Tok::Star)),
            b'^' => out.push((i, Tok::Caret)),
            b'(' => out.push((i, Tok::LParen)),
            b')' => out.push((i, Tok::RParen)),
            b',' => out.push((i, Tok::Comma)),
            b'{' => {
                let close = s[i..].find('}').ok_or_else(|| err(i, "unclosed '{'"))? + i;
                out.push((i, Tok::Elem(s[i + 1..close].trim().to_string())));
                i = close + 1;
                continue;
            }
            b'0'..=b'9' => {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let n = s[start..i].parse().map_err(|_| err(start, "integer too large"))?;
                out.push((start, Tok::Num(n)));
                continue;
            }
            b'x' => {
                i += 1;
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let idx = if i > ds {
                    let k: usize = s[ds..i].parse().map_err(|_| err(ds, "bad variable index"))?;
                    if k == 0 {
                        return Err(err(start, "variables are numbered from x1"));
                    }
                    k - 1
                } else {
                    0
                };
                out.push((start, Tok::Var(idx)));
                continue;
            }
            b'y' => out.push((i, Tok::Var(1))),
            b'z' => out.push((i, Tok::Var(2))),
            _ => return Err(err(i, format!("unexpected character {:?}", c as char))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    field: &'a Arc<Field>,
    nvars: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), PolyError> {
        let at = self.at();
        match self.bump() {
            Some(ref got) if *got == t => Ok(()),
            other => Err(err(at, format!("expected {t:?}, found {other:?}"))),
        }
    }

    fn poly(&mut self) -> Result<MultiPoly, PolyError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Plus) => {
                self.pos += 1;
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                negate = true;
            }
            _ => {}
        }
        let first = self.term()?;
        let mut acc = if negate { first.neg() } else { first };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, PolyError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?)?;
                }
                Some(Tok::Num(_) | Tok::Elem(_) | Tok::Var(_) | Tok::LParen) => {
                    acc = acc.mul(&self.factor()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<MultiPoly, PolyError> {
        let mut base = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let at = self.at();
            match self.bump() {
                Some(Tok::Num(e)) => {
                    let e = u32::try_from(e).map_err(|_| err(at, "exponent too large"))?;
                    base = base.pow(e);
                }
                other => return Err(err(at, format!("expected exponent, found {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly, PolyError> {
        let at = self.at();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(MultiPoly::constant(
                self.field,
                self.nvars,
                self.field.from_int((n % self.field.p() as u64) as i64),
            )),
            Some(Tok::Elem(s)) => {
                let e = self.field.parse_elem(&s).map_err(|e| err(at, e.to_string()))?;
                Ok(MultiPoly::constant(self.field, self.nvars, e))
            }
            Some(Tok::Var(i)) => {
                if i >= self.nvars {
                    return Err(err(at, format!("variable index {} exceeds arity {}", i + 1, self.nvars)));
                }
                Ok(MultiPoly::var(self.field, self.nvars, i))
            }
            Some(Tok::LParen) => {
                let p = self.poly()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            other => Err(err(at, format!("unexpected {other:?}"))),
        }
    }
}

/// Parses one polynomial in `nvars` variables. The result is reduced.
pub fn parse_poly(field: &Arc<Field>, nvars: usize, s: &str) -> Result<MultiPoly, PolyError> {
    let toks = lex(s)?;
    let mut p = Parser { toks, pos: 0, field, nvars, end: s.len() };
    let out = p.poly()?;
    if p.pos != p.toks.len() {
        return Err(err(p.at(), "trailing input"));
    }
    Ok(out)
}

/// Parses a system; the number of variables is the number of coordinates.
pub fn parse_system(field: &Arc<Field>, s: &str) -> Result<PolySystem, PolyError> {
    let toks = lex(s)?;
    // Count top-level commas to learn n before building polynomials.
    let mut depth = 0i32;
    let mut commas = 0;
    let wrapped = matches!(toks.first(), Some((_, Tok::LParen)))
        && matches!(toks.last(), Some((_, Tok::RParen)))
        && {
            let mut d = 0;
            toks.iter().enumerate().all(|(k, (_, t))| {
                match t {
                    Tok::LParen => d += 1,
                    Tok::RParen => d -= 1,
                    _ => {}
                }
                d > 0 || k + 1 == toks.len()
            })
        };
    let inner = if wrapped { &toks[1..toks.len() - 1] } else { &toks[..] };
    for (_, t) in inner {
        match t {
            Tok::LParen => depth += 1,
            Tok::RParen => depth -= 1,
            Tok::Comma if depth == 0 => commas += 1,
            _ => {}
        }
    }
    let n = commas + 1;
    let mut p = Parser { toks: inner.to_vec(), pos: 0, field, nvars: n, end: s.len() };
    let mut polys = Vec::with_capacity(n);
    loop {
        polys.push(p.poly()?);
        match p.peek() {
            Some(Tok::Comma) => p.pos += 1,
            None => break,
            Some(_) => return Err(err(p.at(), "expected ',' or end of system")),
        }
    }
    PolySystem::new(polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{build_field, FieldElem};

    #[test]
    fn parses_examples() {
        let f3 = build_field(3, 1, None).unwrap();
        let s = parse_system(&f3, "(x^2+y^2, x*y)").unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.polys()[0].coefficient_of(&[2, 0]), FieldElem::ONE);
        assert_eq!(s.polys()[1].coefficient_of(&[1, 1]), FieldElem::ONE);
        let t = parse_system(&f3, "(x3, x1 + x3^2, x2 + x1 x3)").unwrap();
        assert_eq!(t.polys()[2].coefficient_of(&[1, 0, 1]), FieldElem::ONE);
        let u = parse_poly(&f3, 2, "-(x - 2y)^2").unwrap();
        // -(x^2 - 4xy + 4y^2) = 2x^2 + xy + 2y^2 over F_3.
        assert_eq!(u.coefficient_of(&[2, 0]), f3.from_int(2));
        assert_eq!(u.coefficient_of(&[1, 1]), f3.from_int(1));
        assert_eq!(u.coefficient_of(&[0, 2]), f3.from_int(2));
    }

    #[test]
    fn rejects_bad_input() {
        let f3 = build_field(3, 1, None).unwrap();
        assert!(parse_system(&f3, "(x, z)").is_err());
        assert!(parse_system(&f3, "(x, y").is_err());
        assert!(parse_poly(&f3, 2, "x ^ y").is_err());
        assert!(parse_poly(&f3, 2, "x $ y").is_err());
    }

    #[test]
    fn display_roundtrip() {
        let f9 = build_field(3, 2, None).unwrap();
        let s = parse_system(&f9, "({0x5} x^2 y + 2, y^8 + {7} x)").unwrap();
        let again = parse_system(&f9, &s.to_string()).unwrap();
        assert_eq!(s, again);
    }
}
