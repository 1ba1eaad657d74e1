//! Numeric evaluation of equation systems.
//!
//! Parameters are substituted once and terms sharing the same averages are
//! merged, so the right-hand side becomes a short product tape with common
//! sub-products computed once.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::generate::EquationSystem;
use super::model::param_value;
use super::moments::Average;
use super::poly::{Poly, Symbol};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::OdeSystem;
use crate::quantum::{CMatrix, C64};

/// Parameter lookup by symbol.
pub trait Symbols {
    fn value(&self, s: &Symbol) -> Option<f64>;
}

impl Symbols for ModelParams {
    fn value(&self, s: &Symbol) -> Option<f64> {
        param_value(self, s)
    }
}

impl<F: Fn(&Symbol) -> Option<f64>> Symbols for F {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self(s)
    }
}

fn coefficient(p: &Poly, vals: &dyn Symbols) -> Result<C64> {
    for s in p.symbols() {
        if vals.value(&s).is_none() {
            return Err(Error::MissingSymbol(s.name().to_string()));
        }
    }
    let c = p.eval(&|s| vals.value(s).unwrap_or(f64::NAN));
    if !c.is_finite() {
        return Err(Error::InvalidInput(format!("coefficient {p} is not finite")));
    }
    Ok(c)
}

/// Compiled right-hand side of a one-time system over complex moments.
///
/// Value layout: `[1, x₀.., x̄₀.., products..]`.
#[derive(Debug, Clone)]
pub struct CompiledRhs {
    n: usize,
    products: Vec<(u32, u32)>,
    rows: Vec<Vec<(u32, C64)>>,
}

impl CompiledRhs {
    pub fn new(sys: &EquationSystem, vals: &dyn Symbols) -> Result<Self> {
        if sys.two_time {
            return Err(Error::InvalidInput(
                "two-time systems compile to an affine system".into(),
            ));
        }
        let n = sys.len();
        let mut products = Vec::new();
        let mut memo: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut rows = Vec::with_capacity(n);
        for eq in &sys.equations {
            let mut row: Vec<(u32, C64)> = Vec::new();
            for (factors, poly) in eq.rhs.by_factors() {
                let c = coefficient(&poly, vals)?;
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut leaves = Vec::with_capacity(factors.len());
                for a in &factors {
                    let s = sys.slot(a).ok_or_else(|| Error::UnknownMoment(a.to_string()))?;
                    leaves.push(1 + s.index as u32 + if s.conj { n as u32 } else { 0 });
                }
                leaves.sort_unstable();
                let node = Self::product(&leaves, n, &mut products, &mut memo);
                match row.iter_mut().find(|(k, _)| *k == node) {
                    Some((_, v)) => *v += c,
                    None => row.push((node, c)),
                }
            }
            rows.push(row);
        }
        Ok(Self { n, products, rows })
    }

    fn product(leaves: &[u32], n: usize, products: &mut Vec<(u32, u32)>, memo: &mut HashMap<Vec<u32>, u32>) -> u32 {
        match leaves.len() {
            0 => 0,
            1 => leaves[0],
            k => {
                if let Some(&i) = memo.get(leaves) {
                    return i;
                }
                let head = Self::product(&leaves[..k - 1], n, products, memo);
                products.push((head, leaves[k - 1]));
                let i = (1 + 2 * n + products.len() - 1) as u32;
                memo.insert(leaves.to_vec(), i);
                i
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of distinct products on the tape.
    pub fn tape_len(&self) -> usize {
        self.products.len()
    }

    fn values(&self, x: &[C64]) -> Vec<C64> {
        let mut v = Vec::with_capacity(1 + 2 * self.n + self.products.len());
        v.push(C64::new(1.0, 0.0));
        v.extend_from_slice(x);
        v.extend(x.iter().map(|z| z.conj()));
        for &(a, b) in &self.products {
            let p = v[a as usize] * v[b as usize];
            v.push(p);
        }
        v
    }

    pub fn eval(&self, x: &[C64], dx: &mut [C64]) {
        let v = self.values(x);
        for (d, row) in dx.iter_mut().zip(&self.rows) {
            *d = row.iter().map(|&(k, c)| c * v[k as usize]).sum();
        }
    }

    /// Directional derivative along `(dx, conj dx)` treated as independent.
    fn directional(&self, v: &[C64], dx: &[C64], dxc: &[C64], out: &mut [C64]) {
        let n = self.n;
        let mut dv = Vec::with_capacity(v.len());
        dv.push(C64::new(0.0, 0.0));
        dv.extend_from_slice(dx);
        dv.extend_from_slice(dxc);
        for &(a, b) in &self.products {
            let (a, b) = (a as usize, b as usize);
            let d = dv[a] * v[b] + v[a] * dv[b];
            dv.push(d);
        }
        debug_assert_eq!(dv.len(), 1 + 2 * n + self.products.len());
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(k, c)| c * dv[k as usize]).sum();
        }
    }

    /// Real Jacobian in the interleaved `(re, im)` layout.
    pub fn real_jacobian(&self, x: &[C64], jac: &mut DMatrix<f64>) {
        let n = self.n;
        let v = self.values(x);
        let zero = C64::new(0.0, 0.0);
        let mut dx = vec![zero; n];
        let mut dxc = vec![zero; n];
        let mut col = vec![zero; n];
        for j in 0..n {
            for (part, unit) in [(0, C64::new(1.0, 0.0)), (1, C64::new(0.0, 1.0))] {
                dx[j] = unit;
                dxc[j] = unit.conj();
                self.directional(&v, &dx, &dxc, &mut col);
                for i in 0..n {
                    jac[(2 * i, 2 * j + part)] = col[i].re;
                    jac[(2 * i + 1, 2 * j + part)] = col[i].im;
                }
                dx[j] = zero;
                dxc[j] = zero;
            }
        }
    }
}

pub(crate) fn to_complex(y: &[f64]) -> Vec<C64> {
    y.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub(crate) fn to_real(x: &[C64]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

impl OdeSystem for CompiledRhs {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let x = to_complex(y);
        let mut dx = vec![C64::new(0.0, 0.0); self.n];
        self.eval(&x, &mut dx);
        for (k, z) in dx.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        self.real_jacobian(&to_complex(y), jac);
    }
}

/// Two-time system with one-time averages frozen: `dx/dτ = M x + b`.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub m: CMatrix,
    pub b: DVector<C64>,
}

impl AffineSystem {
    /// `frozen` supplies the one-time averages.
    pub fn new(sys: &EquationSystem, vals: &dyn Symbols, frozen: &dyn Fn(&Average) -> Option<C64>) -> Result<Self> {
        if !sys.two_time {
            return Err(Error::InvalidInput("expected a two-time system".into()));
        }
        let n = sys.len();
        let mut m = CMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (i, eq) in sys.equations.iter().enumerate() {
            for (factors, poly) in eq.rhs.by_factors() {
                let mut c = coefficient(&poly, vals)?;
                let mut var = None;
                for a in &factors {
                    if a.two_time {
                        if var.is_some() {
                            return Err(Error::InvalidInput(format!(
                                "equation for {} is not linear in the correlations",
                                eq.lhs
                            )));
                        }
                        let s = sys.slot(a).ok_or_else(|| Error::UnknownMoment(a.to_string()))?;
                        var = Some(s.index);
                    } else {
                        c *= frozen(a).ok_or_else(|| Error::UnknownMoment(a.to_string()))?;
                    }
                }
                match var {
                    Some(j) => m[(i, j)] += c,
                    None => b[i] += c,
                }
            }
        }
        Ok(Self { m, b })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Fixed point `−M⁻¹ b`.
    pub fn fixed_point(&self) -> Result<DVector<C64>> {
        let lu = self.m.clone().lu();
        let x = lu
            .solve(&(-&self.b))
            .ok_or_else(|| Error::Singular("correlation matrix".into()))?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulant::{generate_system, laser_seeds, Average, SymbolicModel, Word};

    fn params() -> ModelParams {
        let mut p = crate::model::preset("Sr88").unwrap().params;
        p.n_atoms = 1000;
        p.nu2 = p.gamma2;
        p.nu3 = p.gamma2;
        p
    }

    fn tree_walk(sys: &EquationSystem, p: &ModelParams, x: &[C64]) -> Vec<C64> {
        let val = |a: &Average| {
            let s = sys.slot(a).unwrap();
            if s.conj {
                x[s.index].conj()
            } else {
                x[s.index]
            }
        };
        sys.equations
            .iter()
            .map(|e| {
                e.rhs
                    .terms()
                    .map(|(t, c)| {
                        let mut v = crate::cumulant::poly::q_to_c64(c) * t.mono.eval(&|s| param_value(p, s).unwrap());
                        for a in &t.factors {
                            v *= val(a);
                        }
                        v
                    })
                    .sum()
            })
            .collect()
    }

    fn probe(n: usize) -> Vec<C64> {
        (0..n)
            .map(|k| C64::new(((k * 7 + 3) % 11) as f64 / 20.0, ((k * 5 + 1) % 13) as f64 / 30.0 - 0.2))
            .collect()
    }

    #[test]
    fn tape_matches_direct_evaluation() {
        let sys = generate_system(&SymbolicModel::v_level_laser(false), &laser_seeds()).unwrap();
        let p = params();
        let c = CompiledRhs::new(&sys, &p).unwrap();
        let x = probe(sys.len());
        let mut dx = vec![C64::new(0.0, 0.0); sys.len()];
        c.eval(&x, &mut dx);
        let want = tree_walk(&sys, &p, &x);
        for (a, b) in dx.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "{a} vs {b}");
        }
        // shared products are computed once
        let products: usize = sys
            .equations
            .iter()
            .flat_map(|e| e.rhs.terms())
            .map(|(t, _)| t.factors.len().saturating_sub(1))
            .sum();
        assert!(c.tape_len() < products, "{} of {products}", c.tape_len());
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let sys = generate_system(&SymbolicModel::v_level_laser(false), &laser_seeds()).unwrap();
        let c = CompiledRhs::new(&sys, &params()).unwrap();
        let y = to_real(&probe(sys.len()));
        let n = y.len();
        let mut ja = DMatrix::zeros(n, n);
        c.jacobian(0.0, &y, &mut ja);
        let (mut f1, mut f2) = (vec![0.0; n], vec![0.0; n]);
        let h = 1e-6;
        for j in 0..n {
            let mut yp = y.clone();
            yp[j] += h;
            c.rhs(0.0, &yp, &mut f1);
            yp[j] -= 2.0 * h;
            c.rhs(0.0, &yp, &mut f2);
            for i in 0..n {
                let fd = (f1[i] - f2[i]) / (2.0 * h);
                assert!((fd - ja[(i, j)]).abs() < 1e-6 * (1.0 + fd.abs()), "({i},{j})");
            }
        }
    }

    #[test]
    fn missing_symbol_is_reported() {
        let sys = generate_system(
            &SymbolicModel::two_level_atom(),
            &[Average::one_time(&Word::sigma(1, 2, 2))],
        )
        .unwrap();
        let r = CompiledRhs::new(&sys, &params());
        assert!(matches!(r, Err(Error::MissingSymbol(_))));
        let vals = |s: &Symbol| Some(if s.name() == "Gamma" { 1.0 } else { 0.5 });
        assert!(CompiledRhs::new(&sys, &vals).is_ok());
    }
}
