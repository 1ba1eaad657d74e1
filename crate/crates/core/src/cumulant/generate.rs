use std::collections::{BTreeSet, HashSet, VecDeque};

use super::algebra::{OpExpr, Word};
use super::model::{half, imag, Dissipator, SymbolicModel};
use super::moments::{close_word, Average, MomentPoly, Term};
use super::poly::{q, Poly, Symbol};
use crate::error::{Error, Result};

/// Largest system [`generate_system`] will build before giving up.
pub const MOMENT_CAP: usize = 200;

/// Frame in which phase noise is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Rotating with the noisy pump phase: phase noise is a dephasing term.
    Instantaneous,
    /// Rotating at the mean pump frequency, for `⟨O(τ) a(0)⟩`: each variable
    /// is damped by `rate/2 · k²`, `k` its total phase charge including `a(0)`.
    Coherent,
}

fn lindblad_adjoint(alg: &super::algebra::Algebra, o: &OpExpr, j: &OpExpr, rate: &Poly) -> OpExpr {
    // rate/2 (2J†OJ − J†JO − OJ†J) = rate/2 (J†[O,J] + [J†,O]J)
    let jd = j.dagger();
    let a = jd.mul(alg, &OpExpr::commutator(alg, o, j));
    let b = OpExpr::commutator(alg, &jd, o).mul(alg, j);
    a.add(&b).scale(&(rate * &half()))
}

/// `d⟨op⟩/dt` as an operator expression: `i[H, op] + Σ D†[op]`.
///
/// Sums over atoms are split into the atoms carried by `op` and a fresh
/// representative standing for the remaining `N − m`.
pub fn adjoint_rhs(model: &SymbolicModel, op: &Word, frame: Frame) -> Result<OpExpr> {
    let alg = &model.algebra;
    let labels = op.labels();
    let fresh = labels.iter().max().map_or(1, |m| m + 1);
    let rest = &model.n_atoms - &Poly::int(labels.len() as i64);
    let collective = |mode: &OpExpr, atom: &OpExpr| -> OpExpr {
        let mut e = mode.clone();
        for &l in &labels {
            e = e.add(&atom.relabel(|_| l));
        }
        e.add(&atom.relabel(|_| fresh).scale(&rest))
    };
    let o = OpExpr::term(op.clone(), Poly::int(1));

    let h = collective(&model.h_mode, &model.h_atom);
    let mut rhs = OpExpr::commutator(alg, &h, &o).scale(&imag());
    for d in &model.dissipators {
        match d {
            Dissipator::Individual { rate, jump, .. } => {
                for &l in &labels {
                    rhs = rhs.add(&lindblad_adjoint(alg, &o, &jump.relabel(|_| l), rate));
                }
            }
            Dissipator::Collective { rate, mode, atom, .. } => {
                rhs = rhs.add(&lindblad_adjoint(alg, &o, &collective(mode, atom), rate));
            }
            Dissipator::PhaseNoise { rate, mode, atom, .. } => match frame {
                Frame::Instantaneous => {
                    rhs = rhs.add(&lindblad_adjoint(alg, &o, &collective(mode, atom), rate));
                }
                Frame::Coherent => {
                    let charge = |w: &Word| {
                        model.charge(mode, atom, w).ok_or_else(|| {
                            Error::InvalidInput(format!("`{w}` is not an eigen-operator of phase noise `{}`", d.name()))
                        })
                    };
                    let k = &charge(op)? + &charge(&Word::annihilate())?;
                    let damping = (&(&k * &k) * rate).scale(q(-1)).scale(super::poly::q_frac(1, 2));
                    rhs = rhs.add(&o.scale(&damping));
                }
            },
        }
    }
    Ok(rhs)
}

/// Second-order cumulant closure of every word in `e`.
pub fn cumulant_close(e: &OpExpr, two_time: bool) -> Result<MomentPoly> {
    let mut out = MomentPoly::zero();
    for (w, c) in e.terms() {
        for (factors, k) in close_word(w, two_time)? {
            for (mono, v) in c.terms() {
                out.add_term(Term::new(mono.clone(), factors.clone()), v * q(k));
            }
        }
    }
    Ok(out)
}

/// Closed right-hand side of `d⟨avg⟩/dt`.
pub fn moment_rhs(model: &SymbolicModel, avg: &Average) -> Result<MomentPoly> {
    let frame = if avg.two_time {
        Frame::Coherent
    } else {
        Frame::Instantaneous
    };
    cumulant_close(&adjoint_rhs(model, &avg.word, frame)?, avg.two_time)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Average,
    pub rhs: MomentPoly,
}

/// Closed set of moment equations.
///
/// For one-time systems every referenced average is a variable or the
/// conjugate of one. For two-time systems the variables are the two-time
/// averages; one-time averages are external constants.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSystem {
    pub equations: Vec<Equation>,
    pub two_time: bool,
}

/// Where a referenced average lives in a system's state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub index: usize,
    pub conj: bool,
}

impl EquationSystem {
    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Average> {
        self.equations.iter().map(|e| &e.lhs)
    }

    pub fn equation(&self, lhs: &Average) -> Option<&Equation> {
        self.equations.iter().find(|e| &e.lhs == lhs)
    }

    /// Index of `a` or of its conjugate.
    pub fn slot(&self, a: &Average) -> Option<Slot> {
        if let Some(i) = self.equations.iter().position(|e| &e.lhs == a) {
            return Some(Slot { index: i, conj: false });
        }
        let c = a.conj()?;
        self.equations
            .iter()
            .position(|e| e.lhs == c)
            .map(|i| Slot { index: i, conj: true })
    }

    /// Averages referenced on right-hand sides that are not in the system.
    pub fn missing(&self) -> Vec<Average> {
        let mut out = BTreeSet::new();
        for e in &self.equations {
            for a in e.rhs.averages() {
                if a.two_time == self.two_time && self.slot(&a).is_none() {
                    out.insert(a);
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn is_closed(&self) -> bool {
        self.missing().is_empty()
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut s = BTreeSet::new();
        for e in &self.equations {
            for (t, _) in e.rhs.terms() {
                for (sym, _) in t.mono.factors() {
                    s.insert(sym.clone());
                }
            }
        }
        s.into_iter().collect()
    }
}

fn generate(model: &SymbolicModel, seeds: &[Average], two_time: bool) -> Result<EquationSystem> {
    let mut queue: VecDeque<Average> = VecDeque::new();
    let mut seen: HashSet<Average> = HashSet::new();
    let mut mark = |a: &Average, queue: &mut VecDeque<Average>| {
        let known = seen.contains(a) || a.conj().is_some_and(|c| seen.contains(&c));
        if !known {
            seen.insert(a.clone());
            queue.push_back(a.clone());
        }
    };
    for s in seeds {
        if s.two_time != two_time {
            return Err(Error::InvalidInput(format!("seed {s} has the wrong time structure")));
        }
        mark(s, &mut queue);
    }
    let mut equations = Vec::new();
    while let Some(lhs) = queue.pop_front() {
        if equations.len() >= MOMENT_CAP {
            let mut runaway: Vec<String> = queue.iter().map(|a| a.to_string()).collect();
            runaway.insert(0, lhs.to_string());
            runaway.truncate(20);
            return Err(Error::NonTerminatingClosure {
                cap: MOMENT_CAP,
                runaway,
            });
        }
        let rhs = moment_rhs(model, &lhs)?;
        for a in rhs.averages() {
            if a.two_time == two_time {
                mark(&a, &mut queue);
            }
        }
        equations.push(Equation { lhs, rhs });
    }
    Ok(EquationSystem { equations, two_time })
}

/// Transitive closure of the moment equations starting from `seeds`.
pub fn generate_system(model: &SymbolicModel, seeds: &[Average]) -> Result<EquationSystem> {
    generate(model, seeds, false)
}

/// Two-time system for `⟨O(τ) a(0)⟩`, seeded with `⟨a†(τ) a(0)⟩`-like
/// averages. One-time averages on the right are left as constants.
pub fn generate_correlation_system(model: &SymbolicModel, seeds: &[Average]) -> Result<EquationSystem> {
    generate(model, seeds, true)
}

/// Default seeds of the laser model: `⟨a⟩`, `⟨a†a⟩`, `⟨σ₂₂⟩`.
pub fn laser_seeds() -> Vec<Average> {
    vec![
        Average::one_time(&Word::annihilate()),
        Average::one_time(&Word {
            cre: 1,
            ann: 1,
            atoms: vec![],
        }),
        Average::one_time(&Word::sigma(1, 2, 2)),
    ]
}

/// Seed of the spectrum correlation `⟨a†(τ) a(0)⟩`.
pub fn correlation_seeds() -> Vec<Average> {
    vec![Average::two_time(&Word::create())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_atom_closes_on_bloch_variables() {
        let m = SymbolicModel::two_level_atom();
        let sys = generate_system(&m, &[Average::one_time(&Word::sigma(1, 2, 2))]).unwrap();
        assert_eq!(sys.len(), 2);
        assert!(sys.is_closed());
        let s22 = sys.equation(&Average::one_time(&Word::sigma(1, 2, 2))).unwrap();
        // dσ₂₂/dt = −Γσ₂₂ + iΩσ₁₂ − iΩσ₂₁
        assert_eq!(
            s22.rhs.to_string(),
            "-Gamma*<s22_1> + i*Omega*<s12_1> - i*Omega*<s21_1>"
        );
    }

    #[test]
    fn laser_system_has_37_moments() {
        let m = SymbolicModel::v_level_laser(false);
        let sys = generate_system(&m, &laser_seeds()).unwrap();
        assert_eq!(sys.len(), 37);
        assert!(sys.is_closed());
        for e in &sys.equations {
            assert!(e.lhs.order() <= 2);
        }
    }

    #[test]
    fn correlation_system_has_ten_variables() {
        let m = SymbolicModel::v_level_laser(false);
        let sys = generate_correlation_system(&m, &correlation_seeds()).unwrap();
        assert_eq!(sys.len(), 10);
        assert!(sys.is_closed());
        for e in &sys.equations {
            for (t, _) in e.rhs.terms() {
                assert!(t.two_time_degree() <= 1, "nonlinear term in {}", e.lhs);
            }
        }
    }

    #[test]
    fn runaway_closure_is_reported() {
        // a Kerr-like term a†a†aa makes the hierarchy grow without a cap on order
        let alg = super::super::algebra::Algebra::new(2);
        let ad_a = OpExpr::a_dag().mul(&alg, &OpExpr::a());
        let kerr = ad_a.mul(&alg, &ad_a);
        let m = SymbolicModel::new(alg, kerr, OpExpr::zero()).unwrap();
        let r = generate_system(&m, &[Average::one_time(&Word::annihilate())]);
        assert!(matches!(
            r,
            Err(Error::ClosureOrder { .. }) | Err(Error::NonTerminatingClosure { .. })
        ));
    }
}
