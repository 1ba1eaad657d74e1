use std::ops::{Add, Mul, Sub};

use nalgebra::SymmetricEigen;

use super::{CMatrix, HilbertSpace, C64};
use crate::error::{Error, Result};

/// Dense operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                site: 0,
                expected: d,
                got: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts(space: HilbertSpace, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    pub fn zero(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self::from_parts(space.clone(), CMatrix::zeros(d, d))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.space.clone(), self.matrix.adjoint())
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        Self::from_parts(self.space.clone(), self.matrix.map(|v| v * c))
    }

    /// ‖A − A†‖_F / max(‖A‖_F, 1e-300).
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.matrix.norm();
        (&self.matrix - self.matrix.adjoint()).norm() / n.max(1e-300)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.norm() == 0.0 || self.hermiticity_deviation() <= tol
    }

    pub(crate) fn check_same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.factors().to_vec(),
                right: other.space.factors().to_vec(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Self::from_parts(self.space.clone(), &self.matrix + &other.matrix))
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Self::from_parts(self.space.clone(), &self.matrix * &other.matrix))
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.try_add(rhs).expect("operators on different spaces")
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.check_same_space(rhs).expect("operators on different spaces");
        Operator::from_parts(self.space.clone(), &self.matrix - &rhs.matrix)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.try_mul(rhs).expect("operators on different spaces")
    }
}

/// A validated state: unit trace, Hermitian, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

pub(crate) const TRACE_TOL: f64 = 1e-10;
pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const EIGEN_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(space, matrix, 1.0)
    }

    /// Validates with all tolerances multiplied by `relax`.
    pub fn with_tolerance(space: HilbertSpace, matrix: CMatrix, relax: f64) -> Result<Self> {
        let op = Operator::new(space, matrix)?;
        let tr = op.matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL * relax {
            return Err(Error::InvalidInput(format!("density matrix trace {tr}")));
        }
        let herm = (&op.matrix - op.matrix.adjoint()).norm();
        if herm > HERMITIAN_TOL * relax {
            return Err(Error::InvalidInput(format!(
                "density matrix not Hermitian (deviation {herm:.3e})"
            )));
        }
        let rho = Self {
            space: op.space,
            matrix: op.matrix,
        };
        let min = rho.min_eigenvalue();
        if min < -EIGEN_TOL * relax {
            return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Hermitises and renormalises a matrix that is a state up to round-off.
    pub(crate) fn hermitize(matrix: CMatrix) -> CMatrix {
        let h = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace();
        h / tr
    }

    pub fn pure(space: HilbertSpace, amplitudes: &[C64]) -> Result<Self> {
        let d = space.dim();
        if amplitudes.len() != d {
            return Err(Error::DimensionMismatch {
                site: 0,
                expected: d,
                got: amplitudes.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        let n2 = v.norm_squared();
        if n2 == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        let m = &v * v.adjoint() / C64::new(n2, 0.0);
        Self::new(space, m)
    }

    /// `|k⟩⟨k|` for a computational basis index.
    pub fn basis(space: HilbertSpace, k: usize) -> Result<Self> {
        let mut amp = vec![C64::new(0.0, 0.0); space.dim()];
        *amp.get_mut(k)
            .ok_or_else(|| Error::InvalidInput(format!("basis index {k} out of range")))? = C64::new(1.0, 0.0);
        Self::pure(space, &amp)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Population of a computational-basis diagonal element.
    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    /// Marginal level populations of factor `site`.
    pub fn reduced_populations(&self, site: usize) -> Vec<f64> {
        let dims = self.space.factors();
        let d = dims[site];
        let inner: usize = dims[site + 1..].iter().product();
        let mut p = vec![0.0; d];
        for k in 0..self.space.dim() {
            p[(k / inner) % d] += self.matrix[(k, k)].re;
        }
        p
    }
}

/// `tr(op · ρ)`.
pub fn expect(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    if op.space != rho.space {
        return Err(Error::SpaceMismatch {
            left: op.space.factors().to_vec(),
            right: rho.space.factors().to_vec(),
        });
    }
    // tr(AB) = Σ_ij A_ij B_ji
    let a = &op.matrix;
    let b = &rho.matrix;
    let d = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(s)
}
