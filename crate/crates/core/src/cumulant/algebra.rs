use std::collections::BTreeMap;
use std::fmt;

use super::poly::{q, Poly};

/// Ground level; it is eliminated through `σ₁₁ = 1 − Σ_{k>1} σ_kk`.
pub const GROUND_LEVEL: u8 = 1;

/// Atomic transition operator `σ_{row,col} = |row⟩⟨col|` (1-based levels).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Local {
    pub row: u8,
    pub col: u8,
}

impl Local {
    pub fn new(row: u8, col: u8) -> Self {
        Local { row, col }
    }

    pub fn dagger(self) -> Self {
        Local::new(self.col, self.row)
    }
}

/// Normal-ordered monomial `a†^cre a^ann Π_label σ^(label)`.
///
/// Atom labels are unique and sorted; label 0 is reserved for the "generic
/// atom" of per-atom templates.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub cre: u32,
    pub ann: u32,
    pub atoms: Vec<(u32, Local)>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn create() -> Self {
        Word {
            cre: 1,
            ..Word::default()
        }
    }

    pub fn annihilate() -> Self {
        Word {
            ann: 1,
            ..Word::default()
        }
    }

    /// Raw `σ_ij` on `label`; may still contain the ground projector.
    pub fn sigma(label: u32, row: u8, col: u8) -> Self {
        Word {
            atoms: vec![(label, Local::new(row, col))],
            ..Word::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        self.cre == 0 && self.ann == 0 && self.atoms.is_empty()
    }

    /// Number of elementary factors.
    pub fn order(&self) -> usize {
        (self.cre + self.ann) as usize + self.atoms.len()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.atoms.iter().map(|(l, _)| *l).collect()
    }

    pub fn dagger(&self) -> Word {
        Word {
            cre: self.ann,
            ann: self.cre,
            atoms: self.atoms.iter().map(|(l, s)| (*l, s.dagger())).collect(),
        }
    }

    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> Word {
        let mut atoms: Vec<_> = self.atoms.iter().map(|(l, s)| (map(*l), *s)).collect();
        atoms.sort();
        Word { atoms, ..self.clone() }
    }

    /// Elementary factors in normal order: `a†`s, `a`s, then atoms.
    pub fn factors(&self) -> Vec<Word> {
        let mut v = Vec::with_capacity(self.order());
        v.extend((0..self.cre).map(|_| Word::create()));
        v.extend((0..self.ann).map(|_| Word::annihilate()));
        v.extend(self.atoms.iter().map(|(l, s)| Word::sigma(*l, s.row, s.col)));
        v
    }

    /// Product of factors that are already mutually normal ordered (a
    /// sub-sequence of [`Word::factors`]).
    pub fn concat(parts: &[Word]) -> Word {
        let mut w = Word::identity();
        for p in parts {
            w.cre += p.cre;
            w.ann += p.ann;
            w.atoms.extend(p.atoms.iter().copied());
        }
        w.atoms.sort();
        w
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        parts.extend((0..self.cre).map(|_| "a'".to_string()));
        parts.extend((0..self.ann).map(|_| "a".to_string()));
        for (l, s) in &self.atoms {
            parts.push(format!("s{}{}_{}", s.row, s.col, l));
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

fn factorial(k: u32) -> i64 {
    (1..=k as i64).product()
}

/// Operator algebra of one bosonic mode and identical `levels`-level atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Algebra {
    pub levels: u8,
}

impl Algebra {
    pub fn new(levels: u8) -> Self {
        assert!(levels >= 2, "atoms need at least two levels");
        Algebra { levels }
    }

    /// Eliminates ground projectors from a word with unique labels.
    pub fn reduce(&self, w: Word) -> Vec<(Word, i64)> {
        let Some(pos) = w
            .atoms
            .iter()
            .position(|(_, s)| s.row == GROUND_LEVEL && s.col == GROUND_LEVEL)
        else {
            return vec![(w, 1)];
        };
        let label = w.atoms[pos].0;
        let mut rest = w.clone();
        rest.atoms.remove(pos);
        let mut out = self.reduce(rest.clone());
        for k in (GROUND_LEVEL + 1)..=self.levels {
            let mut with = rest.clone();
            with.atoms.push((label, Local::new(k, k)));
            with.atoms.sort();
            out.extend(self.reduce(with).into_iter().map(|(w, c)| (w, -c)));
        }
        out
    }

    /// Normal-ordered product `x·y` as a list of words with integer weights.
    pub fn mul(&self, x: &Word, y: &Word) -> Vec<(Word, i64)> {
        // atoms: σ_ij σ_kl = δ_jk σ_il on a shared label
        let mut atoms: BTreeMap<u32, Local> = x.atoms.iter().copied().collect();
        for (l, s) in &y.atoms {
            match atoms.get(l) {
                Some(left) => {
                    if left.col != s.row {
                        return Vec::new();
                    }
                    atoms.insert(*l, Local::new(left.row, s.col));
                }
                None => {
                    atoms.insert(*l, *s);
                }
            }
        }
        let atoms: Vec<(u32, Local)> = atoms.into_iter().collect();
        // mode: a^n a†^m = Σ_k C(n,k) C(m,k) k! a†^(m−k) a^(n−k)
        let (n, m) = (x.ann, y.cre);
        let mut out = Vec::new();
        for k in 0..=n.min(m) {
            let c = binomial(n, k) * binomial(m, k) * factorial(k);
            let w = Word {
                cre: x.cre + m - k,
                ann: n - k + y.ann,
                atoms: atoms.clone(),
            };
            out.extend(self.reduce(w).into_iter().map(|(w, d)| (w, c * d)));
        }
        out
    }
}

/// Linear combination of normal-ordered words with polynomial coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpExpr(BTreeMap<Word, Poly>);

impl OpExpr {
    pub fn zero() -> Self {
        OpExpr(BTreeMap::new())
    }

    pub fn term(w: Word, c: Poly) -> Self {
        let mut e = OpExpr::zero();
        e.add_word(w, &c);
        e
    }

    /// A single (possibly ground-containing) word, reduced.
    pub fn word(alg: &Algebra, w: Word) -> Self {
        let mut e = OpExpr::zero();
        for (w, c) in alg.reduce(w) {
            e.add_word(w, &Poly::int(c));
        }
        e
    }

    pub fn a() -> Self {
        OpExpr::term(Word::annihilate(), Poly::int(1))
    }

    pub fn a_dag() -> Self {
        OpExpr::term(Word::create(), Poly::int(1))
    }

    pub fn sigma(alg: &Algebra, label: u32, row: u8, col: u8) -> Self {
        OpExpr::word(alg, Word::sigma(label, row, col))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Poly)> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_word(&mut self, w: Word, c: &Poly) {
        if c.is_zero() {
            return;
        }
        let sum = match self.0.get(&w) {
            Some(old) => old + c,
            None => c.clone(),
        };
        if sum.is_zero() {
            self.0.remove(&w);
        } else {
            self.0.insert(w, sum);
        }
    }

    pub fn add(&self, other: &OpExpr) -> OpExpr {
        let mut out = self.clone();
        for (w, c) in &other.0 {
            out.add_word(w.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &OpExpr) -> OpExpr {
        self.add(&other.scale(&Poly::int(-1)))
    }

    pub fn scale(&self, c: &Poly) -> OpExpr {
        let mut out = OpExpr::zero();
        for (w, v) in &self.0 {
            out.add_word(w.clone(), &(v * c));
        }
        out
    }

    pub fn mul(&self, alg: &Algebra, other: &OpExpr) -> OpExpr {
        let mut out = OpExpr::zero();
        for (w1, c1) in &self.0 {
            for (w2, c2) in &other.0 {
                let c = c1 * c2;
                for (w, k) in alg.mul(w1, w2) {
                    out.add_word(w, &c.scale(q(k)));
                }
            }
        }
        out
    }

    /// `[x, y] = xy − yx`
    pub fn commutator(alg: &Algebra, x: &OpExpr, y: &OpExpr) -> OpExpr {
        x.mul(alg, y).sub(&y.mul(alg, x))
    }

    /// Hermitian conjugate; symbols are taken to be real.
    pub fn dagger(&self) -> OpExpr {
        let mut out = OpExpr::zero();
        for (w, c) in &self.0 {
            out.add_word(w.dagger(), &c.conj());
        }
        out
    }

    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> OpExpr {
        let mut out = OpExpr::zero();
        for (w, c) in &self.0 {
            out.add_word(w.relabel(&map), c);
        }
        out
    }

    /// Whether every word acts on atoms only (no mode factors).
    pub fn is_atomic(&self) -> bool {
        self.0.keys().all(|w| w.cre == 0 && w.ann == 0)
    }
}

impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.0.iter().map(|(w, c)| format!("{c}*[{w}]")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Elementary factor for building products in arbitrary order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Create,
    Annihilate,
    Sigma { label: u32, row: u8, col: u8 },
}

/// Canonical (normal-ordered, reduced) form of a product of factors.
pub fn normal_order(alg: &Algebra, factors: &[Factor]) -> OpExpr {
    factors
        .iter()
        .fold(OpExpr::term(Word::identity(), Poly::int(1)), |acc, f| {
            let w = match *f {
                Factor::Create => Word::create(),
                Factor::Annihilate => Word::annihilate(),
                Factor::Sigma { label, row, col } => Word::sigma(label, row, col),
            };
            acc.mul(alg, &OpExpr::word(alg, w))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> Algebra {
        Algebra::new(3)
    }

    #[test]
    fn boson_commutator() {
        let e = normal_order(&alg(), &[Factor::Annihilate, Factor::Create]);
        let expected = OpExpr::term(
            Word {
                cre: 1,
                ann: 1,
                atoms: vec![],
            },
            Poly::int(1),
        )
        .add(&OpExpr::term(Word::identity(), Poly::int(1)));
        assert_eq!(e, expected);
        // [a, a†²] = 2a†
        let a = OpExpr::a();
        let ad2 = OpExpr::a_dag().mul(&alg(), &OpExpr::a_dag());
        let c = OpExpr::commutator(&alg(), &a, &ad2);
        assert_eq!(c, OpExpr::a_dag().scale(&Poly::int(2)));
    }

    #[test]
    fn projector_algebra() {
        let s = |row, col| Factor::Sigma { label: 1, row, col };
        let e = normal_order(&alg(), &[s(2, 1), s(1, 2)]);
        assert_eq!(e, OpExpr::sigma(&alg(), 1, 2, 2));
        assert!(normal_order(&alg(), &[s(2, 1), s(2, 1)]).is_zero());
        // σ₁₂σ₂₁ = σ₁₁ = 1 − σ₂₂ − σ₃₃
        let g = normal_order(&alg(), &[s(1, 2), s(2, 1)]);
        let expected = OpExpr::term(Word::identity(), Poly::int(1))
            .sub(&OpExpr::sigma(&alg(), 1, 2, 2))
            .sub(&OpExpr::sigma(&alg(), 1, 3, 3));
        assert_eq!(g, expected);
    }

    #[test]
    fn distinct_atoms_commute() {
        let x = [
            Factor::Sigma {
                label: 1,
                row: 1,
                col: 2,
            },
            Factor::Sigma {
                label: 2,
                row: 2,
                col: 1,
            },
        ];
        let y = [x[1], x[0]];
        assert_eq!(normal_order(&alg(), &x), normal_order(&alg(), &y));
        let w = Word {
            cre: 0,
            ann: 0,
            atoms: vec![(1, Local::new(1, 2)), (2, Local::new(2, 1))],
        };
        assert_eq!(normal_order(&alg(), &x), OpExpr::term(w, Poly::int(1)));
    }

    #[test]
    fn normal_order_is_idempotent() {
        let f = [
            Factor::Annihilate,
            Factor::Sigma {
                label: 1,
                row: 1,
                col: 2,
            },
            Factor::Create,
            Factor::Annihilate,
            Factor::Create,
            Factor::Sigma {
                label: 1,
                row: 2,
                col: 1,
            },
        ];
        let e = normal_order(&alg(), &f);
        let again = e.mul(&alg(), &OpExpr::term(Word::identity(), Poly::int(1)));
        assert_eq!(e, again);
        for (w, _) in e.terms() {
            let mut labels = w.labels();
            labels.dedup();
            assert_eq!(labels.len(), w.atoms.len());
            assert!(w.atoms.iter().all(|(_, s)| *s != Local::new(1, 1)));
        }
    }

    #[test]
    fn dagger_reverses() {
        let x = OpExpr::a_dag().mul(&alg(), &OpExpr::sigma(&alg(), 1, 1, 2));
        let d = x.dagger();
        let expected = OpExpr::sigma(&alg(), 1, 2, 1).mul(&alg(), &OpExpr::a());
        assert_eq!(d, expected);
    }
}
