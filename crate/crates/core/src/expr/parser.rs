//! Recursive-descent parser. Precedence from tightest: `^` (integer
//! literal exponent), unary `-`, `* /`, `+ -`; binary operators are left
//! associative.

use super::ast::{Expr, Func};
use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    text: String,
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push(Token { tok, offset: start, text: src[start..i].to_string() });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| err(start, ParseErrorKind::BadNumber(text.to_string())))?;
            out.push(Token { tok: Tok::Num(v), offset: start, text: text.to_string() });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            out.push(Token {
                tok: Tok::Ident(text.to_string()),
                offset: start,
                text: text.to_string(),
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(err(start, ParseErrorKind::UnexpectedChar(ch)));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            Some(t) => err(t.offset, ParseErrorKind::UnexpectedToken(t.text.clone())),
            None => err(self.end, ParseErrorKind::UnexpectedEnd),
        }
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
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

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let at = self.offset();
            let negative = if self.peek() == Some(&Tok::Minus) {
                self.pos += 1;
                true
            } else {
                false
            };
            let n = match self.bump() {
                Some(Token { tok: Tok::Num(v), .. })
                    if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 =>
                {
                    v as i32
                }
                Some(_) => return Err(err(at, ParseErrorKind::BadExponent)),
                None => return Err(err(self.end, ParseErrorKind::UnexpectedEnd)),
            };
            base = Expr::Pow(Box::new(base), if negative { -n } else { n });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.bump() else {
            return Err(err(self.end, ParseErrorKind::UnexpectedEnd));
        };
        match tok.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(err(tok.offset, ParseErrorKind::UnknownIdentifier(name)));
                };
                if self.peek() != Some(&Tok::LParen) {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    args.push(self.expr()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                }
                self.expect(Tok::RParen)?;
                if args.len() != func.arity() {
                    return Err(err(
                        tok.offset,
                        ParseErrorKind::Arity {
                            name: func.name().to_string(),
                            expected: func.arity(),
                            found: args.len(),
                        },
                    ));
                }
                Ok(Expr::Call(func, Box::new(args.pop().expect("arity checked"))))
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected())
            }
        }
    }
}

/// Parse `src` as an expression over the named variables.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end: src.len(), vars };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}
