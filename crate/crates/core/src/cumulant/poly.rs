use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::quantum::C64;

/// Exact complex rational coefficient.
pub type Q = Complex<Rational64>;

pub fn q(n: i64) -> Q {
    Q::new(Rational64::from_integer(n), Rational64::zero())
}

pub fn qi(n: i64) -> Q {
    Q::new(Rational64::zero(), Rational64::from_integer(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(Rational64::new(n, d), Rational64::zero())
}

pub fn q_to_c64(c: &Q) -> C64 {
    let f = |r: &Rational64| *r.numer() as f64 / *r.denom() as f64;
    C64::new(f(&c.re), f(&c.im))
}

/// A named model parameter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Product of symbols with positive integer powers, sorted by symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn symbol(s: Symbol) -> Self {
        Monomial(vec![(s, 1)])
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m: BTreeMap<Symbol, u32> = self.0.iter().cloned().collect();
        for (s, p) in &other.0 {
            *m.entry(s.clone()).or_insert(0) += p;
        }
        Monomial(m.into_iter().collect())
    }

    pub fn eval(&self, value: &dyn Fn(&Symbol) -> f64) -> f64 {
        self.0.iter().map(|(s, p)| value(s).powi(*p as i32)).product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (s, p)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *p == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{p}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in model symbols with exact complex rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly(BTreeMap<Monomial, Q>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(q(n))
    }

    pub fn symbol(name: &str) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::symbol(Symbol::new(name)), Q::one());
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
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

    pub fn scale(&self, c: Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, v)| (m.clone(), v * c)).collect())
    }

    pub fn conj(&self) -> Poly {
        Poly(self.0.iter().map(|(m, v)| (m.clone(), v.conj())).collect())
    }

    /// Symbols appearing anywhere in the polynomial.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut v: Vec<Symbol> = self.0.keys().flat_map(|m| m.0.iter().map(|(s, _)| s.clone())).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn eval(&self, value: &dyn Fn(&Symbol) -> f64) -> C64 {
        self.0.iter().map(|(m, c)| q_to_c64(c) * m.eval(value)).sum()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.0 {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(q(-1))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &rhs.0 {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

fn fmt_rational(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes a coefficient as `3`, `-1/2`, `2i`, `-i` or `(1/2+3i)`.
pub fn fmt_q(c: &Q) -> String {
    let im = |r: &Rational64| -> String {
        if r.is_one() {
            "i".into()
        } else if *r == -Rational64::one() {
            "-i".into()
        } else {
            format!("{}i", fmt_rational(r))
        }
    };
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_rational(&c.re),
        (true, false) => im(&c.im),
        (false, false) => {
            let s = im(&c.im);
            let s = if s.starts_with('-') { s } else { format!("+{s}") };
            format!("({}{})", fmt_rational(&c.re), s)
        }
    }
}

impl Poly {
    /// Single term with its own leading sign, e.g. `-1/2*N*g`.
    fn fmt_term(m: &Monomial, c: &Q) -> String {
        let coef = fmt_q(c);
        match (m.is_one(), coef.as_str()) {
            (true, _) => coef,
            (false, "1") => m.to_string(),
            (false, "-1") => format!("-{m}"),
            (false, _) => format!("{coef}*{m}"),
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (k, (m, c)) in self.0.iter().enumerate() {
            let t = Poly::fmt_term(m, c);
            if k == 0 {
                out.push_str(&t);
            } else if let Some(rest) = t.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&t);
            }
        }
        match self.0.len() {
            0 => f.write_str("0"),
            1 => f.write_str(&out),
            _ => write!(f, "({out})"),
        }
    }
}
