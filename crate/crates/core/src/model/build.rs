use super::ModelParams;
use crate::error::{Error, Result};
use crate::quantum::{
    annihilation, embed, liouvillian, transition, HilbertSpace, LindbladTerm, Operator, Superoperator, C64,
};

/// Level indices of the V-atom (0-indexed): ground, narrow, broad.
pub const GROUND: usize = 0;
pub const NARROW: usize = 1;
pub const BROAD: usize = 2;
pub const LEVELS: usize = 3;

/// A Hamiltonian with its dissipators.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    pub h: Operator,
    pub terms: Vec<LindbladTerm>,
}

impl MasterEquation {
    pub fn space(&self) -> &HilbertSpace {
        self.h.space()
    }

    pub fn liouvillian(&self) -> Result<Superoperator> {
        liouvillian(&self.h, &self.terms)
    }
}

/// `σ_ij = |i⟩⟨j|` of the atom at `site` (0-indexed levels).
pub fn sigma(space: &HilbertSpace, site: usize, i: usize, j: usize) -> Result<Operator> {
    embed(space, &transition(LEVELS, i, j), site)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Drive and detuning terms of one atom at `site`.
fn atom_hamiltonian(p: &ModelParams, space: &HilbertSpace, site: usize) -> Result<Operator> {
    let mut h = Operator::zero(space);
    for (level, delta, omega) in [(NARROW, p.delta2, p.omega2), (BROAD, p.delta3, p.omega3)] {
        h = &h + &sigma(space, site, level, level)?.scale(real(-delta));
        let drive = &sigma(space, site, level, GROUND)? + &sigma(space, site, GROUND, level)?;
        h = &h + &drive.scale(real(omega));
    }
    Ok(h)
}

fn atom_decay_terms(p: &ModelParams, space: &HilbertSpace, site: usize, terms: &mut Vec<LindbladTerm>) -> Result<()> {
    terms.push(LindbladTerm::new(
        format!("decay2[{site}]"),
        sigma(space, site, GROUND, NARROW)?,
        p.gamma2,
    )?);
    terms.push(LindbladTerm::new(
        format!("decay3[{site}]"),
        sigma(space, site, GROUND, BROAD)?,
        p.gamma3,
    )?);
    if p.gamma23 > 0.0 {
        terms.push(LindbladTerm::new(
            format!("repump[{site}]"),
            sigma(space, site, BROAD, NARROW)?,
            p.gamma23,
        )?);
    }
    Ok(())
}

/// One driven V-atom without a cavity.
///
/// `H = Σ_{i=2,3} −Δᵢσᵢᵢ + Ωᵢ(σᵢ₁ + σ₁ᵢ)`, decays `σ₁ᵢ` at `Γᵢ`, pump-linewidth
/// dephasing `σᵢᵢ` at `νᵢ` and the optional repump `σ₃₂` at `Γ₂₃`.
pub fn build_single_atom(p: &ModelParams) -> Result<MasterEquation> {
    p.validate()?;
    let space = HilbertSpace::new(vec![LEVELS])?;
    let h = atom_hamiltonian(p, &space, 0)?;
    let mut terms = Vec::new();
    atom_decay_terms(p, &space, 0, &mut terms)?;
    for (level, nu, name) in [(NARROW, p.nu2, "dephasing2"), (BROAD, p.nu3, "dephasing3")] {
        if nu > 0.0 {
            terms.push(LindbladTerm::new(name, sigma(&space, 0, level, level)?, nu)?);
        }
    }
    Ok(MasterEquation { h, terms })
}

/// Exact atom–cavity master equation for one or two atoms.
///
/// `H = −Δ_c a†a + g Σⱼ(a†σ₁₂ʲ + aσ₂₁ʲ) + Σⱼ H_atom(j)`. The cavity decays
/// through `a` at rate `κ`. The pump-linewidth dephasing is collective: jump
/// `a†a + Σⱼσ₂₂ʲ` at `ν₂` (the cavity shares the pump's rotating frame) and
/// `Σⱼσ₃₃ʲ` at `ν₃`.
pub fn build_atom_cavity_exact(p: &ModelParams, n_fock: usize) -> Result<MasterEquation> {
    p.validate()?;
    if p.n_atoms > 2 {
        return Err(Error::InvalidParameter {
            name: "n_atoms".into(),
            reason: format!("the exact model is limited to two atoms, got {}", p.n_atoms),
        });
    }
    let n = p.n_atoms as usize;
    let space = HilbertSpace::with_cavity(&vec![LEVELS; n], n_fock)?;
    let mode = space.fock_site().expect("cavity space");
    let a = embed(&space, &annihilation(n_fock), mode)?;
    let ad = a.dagger();
    let photons = &ad * &a;

    let mut h = photons.scale(real(-p.delta_c));
    let mut terms = vec![LindbladTerm::new("cavity", a.clone(), p.kappa)?];
    let mut s2 = Operator::zero(&space);
    let mut s3 = Operator::zero(&space);
    for site in 0..n {
        h = &h + &atom_hamiltonian(p, &space, site)?;
        let coupling = &(&ad * &sigma(&space, site, GROUND, NARROW)?) + &(&a * &sigma(&space, site, NARROW, GROUND)?);
        h = &h + &coupling.scale(real(p.g));
        atom_decay_terms(p, &space, site, &mut terms)?;
        s2 = &s2 + &sigma(&space, site, NARROW, NARROW)?;
        s3 = &s3 + &sigma(&space, site, BROAD, BROAD)?;
    }
    if p.nu2 > 0.0 {
        terms.push(LindbladTerm::new("dephasing2", &photons + &s2, p.nu2)?);
    }
    if p.nu3 > 0.0 {
        terms.push(LindbladTerm::new("dephasing3", s3, p.nu3)?);
    }
    Ok(MasterEquation { h, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets::sr88;

    #[test]
    fn single_atom_shape() {
        let p = sr88().params;
        let me = build_single_atom(&p).unwrap();
        assert_eq!(me.space().dim(), 3);
        assert_eq!(me.terms.len(), 2);
        assert!(me.h.is_hermitian(1e-12));
        let q = ModelParams {
            nu2: 0.1,
            nu3: 0.2,
            gamma23: 1e-4,
            ..p
        };
        assert_eq!(build_single_atom(&q).unwrap().terms.len(), 5);
        // no |3⟩ → |2⟩ channel
        for t in &build_single_atom(&q).unwrap().terms {
            assert!(t.jump.matrix()[(NARROW, BROAD)].norm() == 0.0);
        }
    }

    #[test]
    fn cavity_shape() {
        let p = sr88().params;
        let me = build_atom_cavity_exact(&p, 4).unwrap();
        assert_eq!(me.space().factors(), &[3, 4]);
        let two = ModelParams { n_atoms: 2, ..p };
        assert_eq!(build_atom_cavity_exact(&two, 3).unwrap().space().dim(), 27);
        let many = ModelParams { n_atoms: 3, ..p };
        assert!(build_atom_cavity_exact(&many, 3).is_err());
    }
}
