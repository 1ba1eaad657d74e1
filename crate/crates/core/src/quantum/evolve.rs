use nalgebra::DMatrix;

use super::{CMatrix, DensityMatrix, Superoperator};
use crate::error::{Error, Result};
use crate::ode::{check_grid, OdeSystem, Sdirk4, SolverOptions};

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

/// `vec(ρ)` split into real and imaginary halves.
pub(crate) struct RealLinear {
    jac: DMatrix<f64>,
}

impl RealLinear {
    pub(crate) fn new(l: &CMatrix) -> Self {
        let n = l.nrows();
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = l[(i, j)];
                jac[(i, j)] = v.re;
                jac[(i, j + n)] = -v.im;
                jac[(i + n, j)] = v.im;
                jac[(i + n, j + n)] = v.re;
            }
        }
        Self { jac }
    }
}

impl OdeSystem for RealLinear {
    fn dim(&self) -> usize {
        self.jac.nrows()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        for (i, d) in dy.iter_mut().enumerate() {
            *d = self.jac.row(i).iter().zip(y).map(|(a, b)| a * b).sum();
        }
    }

    fn jacobian(&self, _t: f64, _y: &[f64], jac: &mut DMatrix<f64>) {
        jac.copy_from(&self.jac);
    }

    fn constant_jacobian(&self) -> bool {
        true
    }
}

pub(crate) fn split(m: &CMatrix) -> Vec<f64> {
    let s = m.as_slice();
    s.iter().map(|v| v.re).chain(s.iter().map(|v| v.im)).collect()
}

pub(crate) fn join(d: usize, y: &[f64]) -> CMatrix {
    let n = d * d;
    CMatrix::from_fn(d, d, |i, j| {
        let k = i + j * d;
        super::C64::new(y[k], y[k + n])
    })
}

/// Integrates `ρ̇ = L ρ` and returns ρ at every time of `t_grid`.
pub fn time_evolve(l: &Superoperator, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    time_evolve_with(l, rho0, t_grid, EvolveOptions::default())
}

pub fn time_evolve_with(
    l: &Superoperator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    if l.space() != rho0.space() {
        return Err(Error::SpaceMismatch {
            left: l.space().factors().to_vec(),
            right: rho0.space().factors().to_vec(),
        });
    }
    check_grid(0.0, t_grid)?;
    let d = l.hilbert_dim();
    let raw = evolve_matrix(l, rho0.matrix(), t_grid, opts)?;
    raw.into_iter()
        .map(|m| DensityMatrix::with_tolerance(l.space().clone(), m, 10.0))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Integration {
            t: t_grid[0],
            reason: format!("state left the physical set ({e}); d = {d}"),
        })
}

/// Evolves an arbitrary matrix (e.g. a regression initial condition) under `L`.
pub(crate) fn evolve_matrix(
    l: &Superoperator,
    x0: &CMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<CMatrix>> {
    let d = l.hilbert_dim();
    let sys = RealLinear::new(l.matrix());
    let mut solver = Sdirk4::new(
        &sys,
        SolverOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            ..SolverOptions::default()
        },
    );
    let ys = solver.integrate_to(0.0, &split(x0), t_grid)?;
    Ok(ys.iter().map(|y| join(d, y)).collect())
}
