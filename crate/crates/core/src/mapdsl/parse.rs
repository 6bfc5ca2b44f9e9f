use num_complex::Complex64 as C64;
use thiserror::Error;

use super::expr::{Expr, MAX_EXPONENT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("variable `{name}` at byte {pos} is out of range for m = {m}")]
    VariableOutOfRange { name: String, pos: usize, m: usize },
    #[error("exponent {value} at byte {pos} exceeds the bound |k| <= 64")]
    ExponentOutOfRange { value: i64, pos: usize },
    #[error("conjugate variable `{name}` at byte {pos} in a holomorphic expression")]
    Conjugate { name: String, pos: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Holomorphic,
    Field,
}

/// Parses a holomorphic expression in `z1..zm` (`z` abbreviates `z1`).
pub fn parse(text: &str, m: usize) -> Result<Expr, ParseError> {
    Parser::new(text, m, Mode::Holomorphic).run()
}

/// Parses a real-valued field expression in `z1..zm` and `zb1..zbm`, with `log` allowed.
pub fn parse_field(text: &str, m: usize) -> Result<Expr, ParseError> {
    Parser::new(text, m, Mode::Field).run()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    at: usize,
    m: usize,
    mode: Mode,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { pos, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 =
                src[start..i].parse().map_err(|_| syntax(start, format!("malformed number `{}`", &src[start..i])))?;
            if !v.is_finite() {
                return Err(syntax(start, "number out of range"));
            }
            let imag =
                i < b.len() && b[i] == b'i' && !b.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
            if imag {
                i += 1;
                out.push((Tok::Imag(v), start));
            } else {
                out.push((Tok::Num(v), start));
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^()".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(syntax(i, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, m: usize, mode: Mode) -> Self {
        Parser { src, toks: Vec::new(), at: 0, m, mode }
    }

    fn run(mut self) -> Result<Expr, ParseError> {
        self.toks = lex(self.src)?;
        let e = self.expr()?;
        match self.peek() {
            Tok::End => Ok(e),
            t => Err(syntax(self.pos(), format!("unexpected {}", describe(t)))),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{op}`, found {}", describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::neg(self.unary()?))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let neg = self.eat('-');
        let (tok, pos) = self.bump();
        let k = match tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => v as i64,
            t => return Err(syntax(pos, format!("integer exponent expected, found {}", describe(&t)))),
        };
        let k = if neg { -k } else { k };
        if paren {
            self.expect(')')?;
        }
        if k.abs() > MAX_EXPONENT as i64 {
            return Err(ParseError::ExponentOutOfRange { value: k, pos });
        }
        if *self.peek() == Tok::Op('^') {
            return Err(syntax(self.pos(), "chained exponents need parentheses"));
        }
        Ok(Expr::pow(base, k as i32))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::real(v)),
            Tok::Imag(v) => Ok(Expr::constant(C64::new(0.0, v))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return match (name.as_str(), self.mode) {
                        ("exp", _) => Ok(Expr::exp(arg)),
                        ("log", Mode::Field) => Ok(Expr::log(arg)),
                        _ => Err(ParseError::UnknownFunction { name, pos }),
                    };
                }
                self.variable(name, pos)
            }
            t => Err(syntax(pos, format!("unexpected {}", describe(&t)))),
        }
    }

    fn variable(&self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if name == "i" {
            return Ok(Expr::constant(C64::new(0.0, 1.0)));
        }
        let (conj, digits) = if let Some(rest) = name.strip_prefix("zb") {
            (true, rest)
        } else if let Some(rest) = name.strip_prefix('z') {
            (false, rest)
        } else {
            return Err(syntax(pos, format!("unknown identifier `{name}`")));
        };
        let index = if digits.is_empty() {
            1
        } else if digits.bytes().all(|c| c.is_ascii_digit()) {
            digits.parse::<usize>().unwrap_or(0)
        } else {
            return Err(syntax(pos, format!("unknown identifier `{name}`")));
        };
        if index == 0 || index > self.m {
            return Err(ParseError::VariableOutOfRange { name, pos, m: self.m });
        }
        if conj && self.mode == Mode::Holomorphic {
            return Err(ParseError::Conjugate { name, pos });
        }
        Ok(if conj { Expr::conj_var(index - 1) } else { Expr::var(index - 1) })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Imag(v) => format!("imaginary number {v}i"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}
