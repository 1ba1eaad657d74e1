//! Plain-text form of equation systems.
//!
//! One equation per line, `d<lhs>/dt = rhs`, terms in canonical order. Lines
//! starting with `#` are comments. Averages are written `<a' s12_1>`; a
//! trailing `a0` marks the time-zero field of a two-time average. The parser
//! accepts a wider grammar than the printer emits: decimals (read as exact
//! rationals), parentheses, `^n`, `/` by constants and implicit
//! multiplication, so hand-written equations can be compared after
//! expansion.

use std::fmt::{self, Write as _};

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::algebra::{Local, Word};
use super::generate::{Equation, EquationSystem};
use super::moments::{Average, MomentPoly};
use super::poly::{q, qi, Poly, Q};
use crate::error::{Error, Result};

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}/dt = {}", self.lhs, self.rhs)
    }
}

/// Serializes `sys`; [`parse_system`] reads it back unchanged.
pub fn to_text(sys: &EquationSystem) -> String {
    let mut s = String::new();
    let kind = if sys.two_time { "two-time" } else { "one-time" };
    let _ = writeln!(s, "# {kind} moment equations: {}", sys.len());
    for e in &sys.equations {
        let _ = writeln!(s, "{e}");
    }
    s
}

pub fn parse_system(text: &str) -> Result<EquationSystem> {
    let mut equations = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        equations.push(parse_equation(line).map_err(|reason| Error::Parse { line: k + 1, reason })?);
    }
    let two_time = equations.first().is_some_and(|e: &Equation| e.lhs.two_time);
    if let Some(e) = equations.iter().find(|e| e.lhs.two_time != two_time) {
        return Err(Error::Parse {
            line: 0,
            reason: format!("{} mixes one-time and two-time variables", e.lhs),
        });
    }
    Ok(EquationSystem { equations, two_time })
}

fn parse_equation(line: &str) -> std::result::Result<Equation, String> {
    let (lhs, rhs) = line.split_once('=').ok_or("missing `=`")?;
    let lhs = lhs.trim();
    let inner = lhs
        .strip_prefix('d')
        .and_then(|s| s.strip_suffix("/dt"))
        .ok_or_else(|| format!("left side `{lhs}` is not of the form d<...>/dt"))?;
    let lhs = match tokenize(inner)?.as_slice() {
        [Tok::Avg(a)] => a.clone(),
        _ => return Err(format!("left side `{inner}` is not a single average")),
    };
    Ok(Equation {
        lhs,
        rhs: parse_expr_str(rhs)?,
    })
}

/// Parses a right-hand side expression into canonical form.
pub fn parse_moment_poly(s: &str) -> Result<MomentPoly> {
    parse_expr_str(s).map_err(|reason| Error::Parse { line: 0, reason })
}

fn parse_expr_str(s: &str) -> std::result::Result<MomentPoly, String> {
    let toks = tokenize(s)?;
    let mut p = Parser { toks: &toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(format!("unexpected {:?}", toks[p.pos]));
    }
    Ok(e)
}

#[derive(Debug, Clone)]
enum Tok {
    Num(Q),
    Ident(String),
    Avg(Average),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push(match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::Open,
                    _ => Tok::Close,
                });
                i += 1;
            }
            '<' => {
                let end = chars[i..]
                    .iter()
                    .position(|&c| c == '>')
                    .ok_or("unterminated average")?;
                let body: String = chars[i + 1..i + end].iter().collect();
                out.push(Tok::Avg(parse_average(&body)?));
                i += end + 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                out.push(Tok::Num(parse_decimal(&lit)?));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            _ => return Err(format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

fn parse_decimal(lit: &str) -> std::result::Result<Q, String> {
    let (int, frac) = lit.split_once('.').unwrap_or((lit, ""));
    if int.is_empty() && frac.is_empty() || frac.contains('.') || int.len() + frac.len() > 17 {
        return Err(format!("bad number `{lit}`"));
    }
    let digits: i64 = format!("{int}{frac}")
        .parse()
        .map_err(|_| format!("bad number `{lit}`"))?;
    let r = Rational64::new(digits, 10i64.pow(frac.len() as u32));
    Ok(Q::new(r, Rational64::zero()))
}

fn parse_average(body: &str) -> std::result::Result<Average, String> {
    let mut w = Word::identity();
    let mut two_time = false;
    let items: Vec<&str> = body.split_whitespace().collect();
    for (k, item) in items.iter().enumerate() {
        if two_time {
            return Err(format!("`a0` must be last in <{body}>"));
        }
        match *item {
            "a'" if w.ann == 0 && w.atoms.is_empty() => w.cre += 1,
            "a" if w.atoms.is_empty() => w.ann += 1,
            "a0" if k + 1 == items.len() => two_time = true,
            s if s.starts_with('s') => {
                let (t, label) = s[1..]
                    .split_once('_')
                    .ok_or_else(|| format!("atom operator `{s}` lacks a label"))?;
                let b = t.as_bytes();
                let label: u32 = label.parse().map_err(|_| format!("bad atom label in `{s}`"))?;
                if b.len() != 2 || !b.iter().all(|d| (b'1'..=b'9').contains(d)) || label == 0 {
                    return Err(format!("bad atom operator `{s}`"));
                }
                if w.atoms.iter().any(|(l, _)| *l == label) {
                    return Err(format!("atom {label} appears twice in <{body}>"));
                }
                w.atoms.push((label, Local::new(b[0] - b'0', b[1] - b'0')));
            }
            s => return Err(format!("`{s}` out of normal order or unknown in <{body}>")),
        }
    }
    Ok(if two_time {
        Average::two_time(&w)
    } else {
        Average::one_time(&w)
    })
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self) -> std::result::Result<MomentPoly, String> {
        let mut acc = MomentPoly::zero();
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    1
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    -1
                }
                _ if first => 1,
                _ => return Ok(acc),
            };
            first = false;
            acc = acc.add(&self.term()?.scale(q(sign)));
        }
    }

    fn term(&mut self) -> std::result::Result<MomentPoly, String> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = constant_of(&self.power()?).ok_or("division by a non-constant")?;
                    if d.is_zero() {
                        return Err("division by zero".into());
                    }
                    acc = acc.scale(Q::one() / d);
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::Avg(_) | Tok::Open) => {
                    acc = acc.mul(&self.power()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> std::result::Result<MomentPoly, String> {
        let base = self.atom()?;
        if !matches!(self.peek(), Some(Tok::Caret)) {
            return Ok(base);
        }
        self.pos += 1;
        let n = match self.toks.get(self.pos) {
            Some(Tok::Num(n)) if n.im.is_zero() && n.re.is_integer() && *n.re.numer() >= 0 => *n.re.numer(),
            other => return Err(format!("exponent must be a non-negative integer, got {other:?}")),
        };
        self.pos += 1;
        let mut acc = MomentPoly::constant(q(1));
        for _ in 0..n {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> std::result::Result<MomentPoly, String> {
        let t = self.toks.get(self.pos).ok_or("unexpected end of expression")?;
        self.pos += 1;
        Ok(match t {
            Tok::Num(n) => MomentPoly::constant(*n),
            Tok::Ident(s) if s == "i" => MomentPoly::constant(qi(1)),
            Tok::Ident(s) => MomentPoly::from_poly(&Poly::symbol(s)),
            Tok::Avg(a) => MomentPoly::average(a.clone()),
            Tok::Open => {
                let e = self.expr()?;
                match self.toks.get(self.pos) {
                    Some(Tok::Close) => self.pos += 1,
                    _ => return Err("missing `)`".into()),
                }
                e
            }
            other => return Err(format!("unexpected {other:?}")),
        })
    }
}

fn constant_of(p: &MomentPoly) -> Option<Q> {
    match p.len() {
        0 => Some(Q::zero()),
        1 => {
            let (t, c) = p.terms().next()?;
            (t.mono.is_one() && t.factors.is_empty()).then_some(*c)
        }
        _ => None,
    }
}
