use serde::{Deserialize, Serialize};

use super::{CMatrix, Operator};
use crate::error::{Error, Result};

/// Ordered tensor product of local factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    factors: Vec<usize>,
    /// Index of the bosonic factor, if any.
    fock_site: Option<usize>,
}

impl HilbertSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpace("no factors".into()));
        }
        if let Some((site, &d)) = factors.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::InvalidSpace(format!("factor {site} has dimension {d} (< 2)")));
        }
        Ok(Self {
            factors,
            fock_site: None,
        })
    }

    /// Atoms of `levels` each, followed by one cavity mode with `n_fock` states.
    pub fn with_cavity(atom_levels: &[usize], n_fock: usize) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::InvalidSpace(format!("n_fock = {n_fock} (< 2)")));
        }
        let mut factors = atom_levels.to_vec();
        factors.push(n_fock);
        let mut s = Self::new(factors)?;
        s.fock_site = Some(atom_levels.len());
        Ok(s)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn fock_site(&self) -> Option<usize> {
        self.fock_site
    }

    pub fn n_fock(&self) -> Option<usize> {
        self.fock_site.map(|s| self.factors[s])
    }

    pub fn identity(&self) -> Operator {
        Operator::from_parts(self.clone(), CMatrix::identity(self.dim(), self.dim()))
    }
}

/// `I ⊗ … ⊗ local ⊗ … ⊗ I` with `local` acting on factor `site`.
pub fn embed(space: &HilbertSpace, local: &CMatrix, site: usize) -> Result<Operator> {
    let dims = space.factors();
    let expected = *dims.get(site).ok_or(Error::DimensionMismatch {
        site,
        expected: 0,
        got: local.nrows(),
    })?;
    if local.nrows() != expected || local.ncols() != expected {
        return Err(Error::DimensionMismatch {
            site,
            expected,
            got: local.nrows().max(local.ncols()),
        });
    }
    let mut out = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == site {
            local.clone()
        } else {
            CMatrix::identity(d, d)
        };
        out = out.kronecker(&factor);
    }
    Ok(Operator::from_parts(space.clone(), out))
}
