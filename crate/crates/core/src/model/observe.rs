use super::build::{build_atom_cavity_exact, build_single_atom, sigma, GROUND, LEVELS, NARROW};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::quantum::{annihilation, check_fock_tail, embed, expect, steady_state, DensityMatrix, C64};

/// Largest Fock dimension the automatic cutoff search will try.
pub const MAX_FOCK: usize = 30;
/// Highest-Fock-state population accepted as converged truncation.
pub const FOCK_TAIL_TOL: f64 = 1e-6;

/// Level populations of the atom at `site`.
pub fn populations(rho: &DensityMatrix, site: usize) -> [f64; LEVELS] {
    let p = rho.reduced_populations(site);
    [p[0], p[1], p[2]]
}

/// `⟨σ₂₂⟩ − ⟨σ₁₁⟩` of the atom at `site`.
pub fn inversion(rho: &DensityMatrix, site: usize) -> f64 {
    let p = populations(rho, site);
    p[NARROW] - p[GROUND]
}

pub fn single_atom_steady(p: &ModelParams) -> Result<DensityMatrix> {
    steady_state(&build_single_atom(p)?.liouvillian()?)
}

pub fn steady_inversion(p: &ModelParams) -> Result<f64> {
    Ok(inversion(&single_atom_steady(p)?, 0))
}

/// Steady state of the exact atom–cavity model with a few observables.
#[derive(Debug, Clone)]
pub struct CavitySteady {
    pub rho: DensityMatrix,
    pub n_fock: usize,
    /// `⟨a†a⟩`
    pub photons: f64,
    /// `⟨a⟩`
    pub field: C64,
    /// `⟨σ₂₂⟩` of the first atom.
    pub sigma22: f64,
    /// Population of the highest Fock state.
    pub tail: f64,
}

fn solve_cavity(p: &ModelParams, n_fock: usize) -> Result<CavitySteady> {
    let me = build_atom_cavity_exact(p, n_fock)?;
    let rho = steady_state(&me.liouvillian()?)?;
    let space = me.space().clone();
    let a = embed(&space, &annihilation(n_fock), space.fock_site().expect("cavity"))?;
    let photons = expect(&(&a.dagger() * &a), &rho)?.re;
    let field = expect(&a, &rho)?;
    let sigma22 = expect(&sigma(&space, 0, NARROW, NARROW)?, &rho)?.re;
    let tail = *rho
        .reduced_populations(space.fock_site().expect("cavity"))
        .last()
        .expect("nonempty");
    Ok(CavitySteady {
        rho,
        n_fock,
        photons,
        field,
        sigma22,
        tail,
    })
}

/// Exact steady state of one or two atoms in the cavity.
///
/// With `n_fock = None` the truncation grows until `⟨n⟩ + 5√⟨n⟩` lies below
/// the cutoff and the top Fock state holds less than [`FOCK_TAIL_TOL`].
/// An explicit cutoff is only checked against the tail tolerance.
pub fn atom_cavity_steady(p: &ModelParams, n_fock: Option<usize>) -> Result<CavitySteady> {
    if let Some(n) = n_fock {
        let s = solve_cavity(p, n)?;
        check_fock_tail(&s.rho, FOCK_TAIL_TOL)?;
        return Ok(s);
    }
    let mut n = 3;
    loop {
        let s = solve_cavity(p, n)?;
        let need = (s.photons + 5.0 * s.photons.sqrt()).ceil() as usize + 1;
        if need < n && s.tail < FOCK_TAIL_TOL {
            return Ok(s);
        }
        if n >= MAX_FOCK {
            return Err(Error::CutoffTooSmall {
                cutoff: n,
                tail: s.tail,
            });
        }
        n = (need + 1).max(n + 2).min(MAX_FOCK);
    }
}
