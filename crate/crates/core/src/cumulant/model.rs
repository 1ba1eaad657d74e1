use super::algebra::{Algebra, OpExpr, Word};
use super::poly::{q_frac, qi, Poly, Symbol};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Symbol names used by the V-level laser model.
pub mod sym {
    pub const N: &str = "N";
    pub const G: &str = "g";
    pub const KAPPA: &str = "kappa";
    pub const DELTA_C: &str = "Delta_c";
    pub const DELTA2: &str = "Delta2";
    pub const DELTA3: &str = "Delta3";
    pub const OMEGA2: &str = "Omega2";
    pub const OMEGA3: &str = "Omega3";
    pub const GAMMA2: &str = "Gamma2";
    pub const GAMMA3: &str = "Gamma3";
    pub const NU2: &str = "nu2";
    pub const NU3: &str = "nu3";
    pub const GAMMA23: &str = "Gamma23";
}

/// Numeric value of a laser-model symbol.
pub fn param_value(p: &ModelParams, s: &Symbol) -> Option<f64> {
    Some(match s.name() {
        sym::N => p.n_atoms as f64,
        sym::G => p.g,
        sym::KAPPA => p.kappa,
        sym::DELTA_C => p.delta_c,
        sym::DELTA2 => p.delta2,
        sym::DELTA3 => p.delta3,
        sym::OMEGA2 => p.omega2,
        sym::OMEGA3 => p.omega3,
        sym::GAMMA2 => p.gamma2,
        sym::GAMMA3 => p.gamma3,
        sym::NU2 => p.nu2,
        sym::NU3 => p.nu3,
        sym::GAMMA23 => p.gamma23,
        _ => return None,
    })
}

/// Dissipative channel of a symmetric ensemble model.
///
/// Per-atom operators are templates on atom label 0.
#[derive(Debug, Clone)]
pub enum Dissipator {
    /// The same jump acts independently on every atom.
    Individual { name: String, rate: Poly, jump: OpExpr },
    /// A single jump `mode + Σⱼ atom(j)` for the whole system.
    Collective {
        name: String,
        rate: Poly,
        mode: OpExpr,
        atom: OpExpr,
    },
    /// Pump phase noise with Hermitian generator `mode + Σⱼ atom(j)`.
    ///
    /// Acts as a collective dephasing Lindblad term on one-time averages. In
    /// the coherent frame used for two-time correlations it instead damps each
    /// variable by `rate/2 · k²`, `k` being the phase charge of the variable.
    PhaseNoise {
        name: String,
        rate: Poly,
        mode: OpExpr,
        atom: OpExpr,
    },
}

impl Dissipator {
    pub fn name(&self) -> &str {
        match self {
            Dissipator::Individual { name, .. }
            | Dissipator::Collective { name, .. }
            | Dissipator::PhaseNoise { name, .. } => name,
        }
    }
}

/// N identical atoms coupled to one bosonic mode.
#[derive(Debug, Clone)]
pub struct SymbolicModel {
    pub algebra: Algebra,
    /// Atom number as a polynomial (normally the symbol `N`).
    pub n_atoms: Poly,
    /// Mode-only part of the Hamiltonian.
    pub h_mode: OpExpr,
    /// Per-atom Hamiltonian template (may include mode factors).
    pub h_atom: OpExpr,
    pub dissipators: Vec<Dissipator>,
}

impl SymbolicModel {
    pub fn new(algebra: Algebra, h_mode: OpExpr, h_atom: OpExpr) -> Result<Self> {
        let model = SymbolicModel {
            algebra,
            n_atoms: Poly::symbol(sym::N),
            h_mode,
            h_atom,
            dissipators: Vec::new(),
        };
        model.check()?;
        Ok(model)
    }

    pub fn with(mut self, d: Dissipator) -> Result<Self> {
        self.dissipators.push(d);
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(what.to_string()));
        let template_only = |e: &OpExpr| e.terms().all(|(w, _)| w.labels().iter().all(|l| *l == 0));
        if self.h_mode.terms().any(|(w, _)| !w.atoms.is_empty()) {
            return bad("mode Hamiltonian contains atomic operators");
        }
        if !template_only(&self.h_atom) {
            return bad("per-atom Hamiltonian must use atom label 0 only");
        }
        if self.h_mode.dagger() != self.h_mode || self.h_atom.dagger() != self.h_atom {
            return bad("Hamiltonian is not Hermitian");
        }
        for d in &self.dissipators {
            match d {
                Dissipator::Individual { jump, .. } => {
                    if !jump.is_atomic() || !template_only(jump) {
                        return bad("individual jumps must be atom-only templates on label 0");
                    }
                }
                Dissipator::Collective { mode, atom, .. } => {
                    if !atom.is_atomic() || !template_only(atom) {
                        return bad("collective atom part must be an atom-only template");
                    }
                    if mode.terms().any(|(w, _)| !w.atoms.is_empty()) {
                        return bad("collective mode part contains atomic operators");
                    }
                }
                Dissipator::PhaseNoise { mode, atom, .. } => {
                    if !atom.is_atomic() || !template_only(atom) {
                        return bad("phase-noise atom part must be an atom-only template");
                    }
                    if mode.dagger() != *mode || atom.dagger() != *atom {
                        return bad("phase-noise generator must be Hermitian");
                    }
                }
            }
        }
        Ok(())
    }

    /// The driven V-atom ensemble in a cavity.
    ///
    /// `H = −Δ_c a†a + Σⱼ [g(a†σ₁₂ʲ + aσ₂₁ʲ) + Σ_{i=2,3} −Δᵢσᵢᵢʲ + Ωᵢ(σᵢ₁ʲ + σ₁ᵢʲ)]`
    /// with cavity loss `a` at κ, individual decays `σ₁ᵢ` at Γᵢ, phase noise
    /// generated by `a†a + Σσ₂₂` at ν₂ and `Σσ₃₃` at ν₃, and optionally the
    /// repump `σ₃₂` at Γ₂₃.
    pub fn v_level_laser(repump: bool) -> Self {
        let alg = Algebra::new(3);
        let s = |i, j| OpExpr::sigma(&alg, 0, i, j);
        let p = Poly::symbol;
        let ad_a = OpExpr::a_dag().mul(&alg, &OpExpr::a());
        let h_mode = ad_a.scale(&(-&p(sym::DELTA_C)));
        let mut h_atom = OpExpr::a_dag()
            .mul(&alg, &s(1, 2))
            .add(&OpExpr::a().mul(&alg, &s(2, 1)))
            .scale(&p(sym::G));
        for (i, delta, omega) in [(2, sym::DELTA2, sym::OMEGA2), (3, sym::DELTA3, sym::OMEGA3)] {
            h_atom = h_atom
                .add(&s(i, i).scale(&(-&p(delta))))
                .add(&s(i, 1).add(&s(1, i)).scale(&p(omega)));
        }
        let mut m = SymbolicModel::new(alg, h_mode, h_atom).expect("valid laser model");
        let mut ds = vec![
            Dissipator::Collective {
                name: "cavity".into(),
                rate: p(sym::KAPPA),
                mode: OpExpr::a(),
                atom: OpExpr::zero(),
            },
            Dissipator::Individual {
                name: "decay2".into(),
                rate: p(sym::GAMMA2),
                jump: s(1, 2),
            },
            Dissipator::Individual {
                name: "decay3".into(),
                rate: p(sym::GAMMA3),
                jump: s(1, 3),
            },
            Dissipator::PhaseNoise {
                name: "pump2".into(),
                rate: p(sym::NU2),
                mode: ad_a,
                atom: s(2, 2),
            },
            Dissipator::PhaseNoise {
                name: "pump3".into(),
                rate: p(sym::NU3),
                mode: OpExpr::zero(),
                atom: s(3, 3),
            },
        ];
        if repump {
            ds.push(Dissipator::Individual {
                name: "repump".into(),
                rate: p(sym::GAMMA23),
                jump: s(3, 2),
            });
        }
        m.dissipators = ds;
        m.check().expect("valid laser model");
        m
    }

    /// A driven two-level atom without cavity: `H = −Δσ₂₂ + Ω(σ₂₁ + σ₁₂)`,
    /// decay `σ₁₂` at Γ.
    pub fn two_level_atom() -> Self {
        let alg = Algebra::new(2);
        let s = |i, j| OpExpr::sigma(&alg, 0, i, j);
        let h_atom = s(2, 2)
            .scale(&(-&Poly::symbol("Delta")))
            .add(&s(2, 1).add(&s(1, 2)).scale(&Poly::symbol("Omega")));
        SymbolicModel::new(alg, OpExpr::zero(), h_atom)
            .and_then(|m| {
                m.with(Dissipator::Individual {
                    name: "decay".into(),
                    rate: Poly::symbol("Gamma"),
                    jump: s(1, 2),
                })
            })
            .expect("valid two-level model")
    }

    /// Charge of a word under the phase-noise generator restricted to the
    /// word's atoms: `[G, w] = q·w`. `None` if `w` is not an eigen-operator.
    pub(crate) fn charge(&self, mode: &OpExpr, atom: &OpExpr, w: &Word) -> Option<Poly> {
        let alg = &self.algebra;
        let mut g = mode.clone();
        for l in w.labels() {
            g = g.add(&atom.relabel(|_| l));
        }
        let c = OpExpr::commutator(alg, &g, &OpExpr::term(w.clone(), Poly::int(1)));
        if c.is_zero() {
            return Some(Poly::zero());
        }
        let mut terms = c.terms();
        let (cw, cq) = terms.next()?;
        if terms.next().is_some() || cw != w || !cq.symbols().is_empty() {
            return None;
        }
        Some(cq.clone())
    }
}

pub(crate) fn half() -> Poly {
    Poly::constant(q_frac(1, 2))
}

pub(crate) fn imag() -> Poly {
    Poly::constant(qi(1))
}
