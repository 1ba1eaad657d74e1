//! Exact finite-dimensional Lindblad machinery.
//!
//! Dense complex matrices on a composed Hilbert space, Liouvillian
//! superoperators, steady states and time evolution. Everything approximate in
//! the crate is checked against this module on small systems.

mod evolve;
pub(crate) mod evolve_internal {
    pub(crate) use super::evolve::{join, split, RealLinear};
}
mod liouvillian;
mod operator;
mod space;
mod steady;

pub use evolve::{time_evolve, EvolveOptions};
pub use liouvillian::{liouvillian, LindbladTerm, Superoperator};
pub use operator::{expect, DensityMatrix, Operator};
pub use space::{embed, HilbertSpace};
pub use steady::{steady_state, SteadyOptions, SteadyState};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;

/// `|i⟩⟨j|` on a `dim`-dimensional factor (0-indexed levels).
pub fn transition(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Truncated annihilation operator on `n_fock` Fock states.
pub fn annihilation(n_fock: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Population of the highest retained Fock state.
///
/// Fails with [`Error::CutoffTooSmall`] when it exceeds `tol`, i.e. when the
/// truncation visibly distorts the state.
pub fn check_fock_tail(rho: &DensityMatrix, tol: f64) -> Result<f64> {
    let site = rho
        .space()
        .fock_site()
        .ok_or_else(|| Error::InvalidSpace("space has no cavity mode".into()))?;
    let pops = rho.reduced_populations(site);
    let tail = *pops.last().unwrap_or(&0.0);
    if tail > tol {
        return Err(Error::CutoffTooSmall {
            cutoff: pops.len(),
            tail,
        });
    }
    Ok(tail)
}
