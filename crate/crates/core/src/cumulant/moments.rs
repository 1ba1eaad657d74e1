use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use super::algebra::{Local, Word};
use super::poly::{fmt_q, q, Monomial, Poly, Q};
use crate::error::{Error, Result};

/// Expectation value of a normal-ordered word.
///
/// Atoms are relabeled canonically (sorted by transition, labels 1, 2, …) so
/// that every exchange-symmetry class has a single representative. A
/// two-time average `⟨O(τ) a(0)⟩` stores `O` and sets `two_time`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Average {
    pub word: Word,
    pub two_time: bool,
}

fn canonical(w: &Word) -> Word {
    let mut locals: Vec<Local> = w.atoms.iter().map(|(_, s)| *s).collect();
    locals.sort();
    Word {
        cre: w.cre,
        ann: w.ann,
        atoms: locals.into_iter().enumerate().map(|(k, s)| (k as u32 + 1, s)).collect(),
    }
}

impl Average {
    pub fn one_time(w: &Word) -> Self {
        Average {
            word: canonical(w),
            two_time: false,
        }
    }

    /// `⟨w(τ) a(0)⟩`; for `w = 1` this is the one-time `⟨a⟩`.
    pub fn two_time(w: &Word) -> Self {
        if w.is_identity() {
            return Average::one_time(&Word::annihilate());
        }
        Average {
            word: canonical(w),
            two_time: true,
        }
    }

    /// Order counted with the time-zero factor.
    pub fn order(&self) -> usize {
        self.word.order() + self.two_time as usize
    }

    /// Complex conjugate, for one-time averages.
    pub fn conj(&self) -> Option<Average> {
        (!self.two_time).then(|| Average::one_time(&self.word.dagger()))
    }

    pub fn is_self_conjugate(&self) -> bool {
        self.conj().as_ref() == Some(self)
    }
}

impl fmt::Display for Average {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_time {
            write!(f, "<{} a0>", self.word)
        } else {
            write!(f, "<{}>", self.word)
        }
    }
}

/// Product of symbols and averages (the averages sorted).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub mono: Monomial,
    pub factors: Vec<Average>,
}

impl Term {
    pub fn new(mono: Monomial, mut factors: Vec<Average>) -> Self {
        factors.sort();
        Term { mono, factors }
    }

    /// Number of factors that are two-time averages.
    pub fn two_time_degree(&self) -> usize {
        self.factors.iter().filter(|a| a.two_time).count()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.mono.is_one() {
            parts.push(self.mono.to_string());
        }
        parts.extend(self.factors.iter().map(|a| a.to_string()));
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// Polynomial in averages and symbols with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MomentPoly(BTreeMap<Term, Q>);

impl MomentPoly {
    pub fn zero() -> Self {
        MomentPoly(BTreeMap::new())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &Q)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, t: Term, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(t) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &MomentPoly) -> MomentPoly {
        let mut out = self.clone();
        for (t, c) in &other.0 {
            out.add_term(t.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: Q) -> MomentPoly {
        let mut out = MomentPoly::zero();
        for (t, v) in &self.0 {
            out.add_term(t.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &MomentPoly) -> MomentPoly {
        let mut out = MomentPoly::zero();
        for (t1, c1) in &self.0 {
            for (t2, c2) in &other.0 {
                let mut f = t1.factors.clone();
                f.extend(t2.factors.iter().cloned());
                out.add_term(Term::new(t1.mono.mul(&t2.mono), f), c1 * c2);
            }
        }
        out
    }

    pub fn constant(c: Q) -> Self {
        let mut m = MomentPoly::zero();
        m.add_term(Term::new(Monomial::one(), Vec::new()), c);
        m
    }

    pub fn from_poly(p: &Poly) -> Self {
        let mut m = MomentPoly::zero();
        for (mono, c) in p.terms() {
            m.add_term(Term::new(mono.clone(), Vec::new()), *c);
        }
        m
    }

    pub fn average(a: Average) -> Self {
        let mut m = MomentPoly::zero();
        m.add_term(Term::new(Monomial::one(), vec![a]), q(1));
        m
    }

    /// Every average referenced by some term.
    pub fn averages(&self) -> Vec<Average> {
        let mut v: Vec<Average> = self.0.keys().flat_map(|t| t.factors.iter().cloned()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Terms grouped by their symbol-free part: the coefficient polynomial of
    /// each distinct product of averages.
    pub fn by_factors(&self) -> BTreeMap<Vec<Average>, Poly> {
        let mut out: BTreeMap<Vec<Average>, Poly> = BTreeMap::new();
        for (t, c) in &self.0 {
            let mut p = Poly::zero();
            p.add_term(t.mono.clone(), *c);
            let e = out.entry(t.factors.clone()).or_default();
            *e = &*e + &p;
        }
        out.retain(|_, p| !p.is_zero());
        out
    }
}

impl fmt::Display for MomentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (k, (t, c)) in self.0.iter().enumerate() {
            let coef = fmt_q(c);
            let body = t.to_string();
            let s = match (coef.as_str(), body.as_str()) {
                (_, "1") => coef,
                ("1", _) => body,
                ("-1", _) => format!("-{body}"),
                _ => format!("{coef}*{body}"),
            };
            if k == 0 {
                f.write_str(&s)?;
            } else if let Some(rest) = s.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {s}")?;
            }
        }
        Ok(())
    }
}

/// One element of a product being closed: an operator or the time-zero `a`.
#[derive(Clone)]
enum Piece {
    Op(Word),
    A0,
}

fn average_of(pieces: &[&Piece]) -> Option<Average> {
    let ops: Vec<Word> = pieces
        .iter()
        .filter_map(|p| match p {
            Piece::Op(w) => Some(w.clone()),
            Piece::A0 => None,
        })
        .collect();
    let w = Word::concat(&ops);
    if ops.len() < pieces.len() {
        Some(Average::two_time(&w))
    } else if w.is_identity() {
        None
    } else {
        Some(Average::one_time(&w))
    }
}

/// Second-order cumulant closure of `⟨w⟩` (or `⟨w(τ)a(0)⟩` when `two_time`).
///
/// Returns products of averages with integer weights. Averages of order ≤ 2
/// are kept; order 3 uses
/// `⟨xyz⟩ = ⟨xy⟩⟨z⟩ + ⟨xz⟩⟨y⟩ + ⟨yz⟩⟨x⟩ − 2⟨x⟩⟨y⟩⟨z⟩`.
pub fn close_word(w: &Word, two_time: bool) -> Result<Vec<(Vec<Average>, i64)>> {
    let mut pieces: Vec<Piece> = w.factors().into_iter().map(Piece::Op).collect();
    if two_time {
        pieces.push(Piece::A0);
    }
    let avg = |idx: &[usize]| -> Vec<Average> {
        let ps: Vec<&Piece> = idx.iter().map(|&i| &pieces[i]).collect();
        average_of(&ps).into_iter().collect()
    };
    match pieces.len() {
        0..=2 => {
            let all: Vec<usize> = (0..pieces.len()).collect();
            Ok(vec![(avg(&all), 1)])
        }
        3 => {
            let cat = |a: Vec<Average>, b: Vec<Average>| [a, b].concat();
            Ok(vec![
                (cat(avg(&[0, 1]), avg(&[2])), 1),
                (cat(avg(&[0, 2]), avg(&[1])), 1),
                (cat(avg(&[1, 2]), avg(&[0])), 1),
                ([avg(&[0]), avg(&[1]), avg(&[2])].concat(), -2),
            ])
        }
        order => Err(Error::ClosureOrder {
            order,
            average: if two_time {
                format!("<{w} a0>")
            } else {
                format!("<{w}>")
            },
        }),
    }
}
