use super::{CMatrix, HilbertSpace, Operator, C64};
use crate::error::{Error, Result};

/// Hamiltonians must be Hermitian to this relative Frobenius tolerance.
pub const HAMILTONIAN_TOL: f64 = 1e-12;

/// One dissipator `rate/2 · (2 J ρ J† − J†J ρ − ρ J†J)`.
#[derive(Debug, Clone)]
pub struct LindbladTerm {
    pub name: String,
    pub jump: Operator,
    pub rate: f64,
}

impl LindbladTerm {
    pub fn new(name: impl Into<String>, jump: Operator, rate: f64) -> Result<Self> {
        let name = name.into();
        if !(rate >= 0.0) {
            return Err(Error::NegativeRate { name, rate });
        }
        Ok(Self { name, jump, rate })
    }
}

/// Matrix `L` acting on column-stacked density matrices: `vec(ρ̇) = L vec(ρ)`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Hilbert-space dimension `d` (the superoperator is `d² × d²`).
    pub fn hilbert_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn from_matrix(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d2 = space.dim() * space.dim();
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                site: 0,
                expected: d2,
                got: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    /// `L(X)` for an arbitrary (not necessarily physical) matrix `X`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let d = self.hilbert_dim();
        let v = nalgebra::DVector::from_column_slice(x.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(d, d, out.as_slice())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(L·dt)`.
    pub fn propagator(&self, dt: f64) -> CMatrix {
        (&self.matrix * C64::new(dt, 0.0)).exp()
    }
}

/// Builds the Liouvillian of `ρ̇ = −i[H, ρ] + Σ rate/2 (2JρJ† − J†Jρ − ρJ†J)`.
pub fn liouvillian(h: &Operator, terms: &[LindbladTerm]) -> Result<Superoperator> {
    if !h.is_hermitian(HAMILTONIAN_TOL) {
        return Err(Error::NotHermitian {
            deviation: h.hermiticity_deviation(),
        });
    }
    for t in terms {
        h.check_same_space(&t.jump)?;
        if !(t.rate >= 0.0) {
            return Err(Error::NegativeRate {
                name: t.name.clone(),
                rate: t.rate,
            });
        }
    }
    let d = h.space().dim();
    let id = CMatrix::identity(d, d);
    let i = C64::new(0.0, 1.0);
    let hm = h.matrix();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * (-i);
    for t in terms {
        if t.rate == 0.0 {
            continue;
        }
        let j = t.jump.matrix();
        let jdj = j.adjoint() * j;
        let half = C64::new(0.5 * t.rate, 0.0);
        let term =
            j.conjugate().kronecker(j) * C64::new(2.0, 0.0) - id.kronecker(&jdj) - jdj.transpose().kronecker(&id);
        l += term * half;
    }
    Ok(Superoperator {
        space: h.space().clone(),
        matrix: l,
    })
}
