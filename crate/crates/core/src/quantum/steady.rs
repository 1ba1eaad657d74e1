use nalgebra::DVector;

use super::{CMatrix, DensityMatrix, Superoperator, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Shift of the inverse iteration relative to ‖L‖∞.
    pub shift_rel: f64,
    pub max_iter: usize,
    /// Required residual ‖L vec ρ‖ relative to ‖L‖∞.
    pub residual_rel: f64,
    /// The second-smallest |eigenvalue| must exceed this times ‖L‖∞.
    pub gap_rel: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            shift_rel: 1e-9,
            max_iter: 40,
            residual_rel: 1e-10,
            gap_rel: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// ‖L vec ρ‖₂ / ‖L‖∞.
    pub residual: f64,
    /// Estimate of the smallest |λ| among the non-stationary eigenvalues.
    pub gap: f64,
}

/// Unique stationary state of `L` by shifted inverse iteration.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with(l, SteadyOptions::default()).map(|s| s.rho)
}

fn trace_of(v: &DVector<C64>, d: usize) -> C64 {
    (0..d).map(|k| v[k * d + k]).sum()
}

pub fn steady_state_with(l: &Superoperator, opts: SteadyOptions) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let n = d * d;
    let scale = l.norm_inf();
    if scale == 0.0 {
        return Err(Error::DegenerateNullSpace {
            smallest: 0.0,
            second: 0.0,
        });
    }
    let shift = opts.shift_rel * scale;
    let mut m = l.matrix().clone();
    for k in 0..n {
        m[(k, k)] -= C64::new(shift, 0.0);
    }
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(Error::Singular("L − σI".into()));
    }

    let mut x = DVector::<C64>::zeros(n);
    for k in 0..d {
        x[k * d + k] = C64::new(1.0 / d as f64, 0.0);
    }
    let mut residual = f64::INFINITY;
    let mut rho = CMatrix::zeros(d, d);
    for _ in 0..opts.max_iter {
        let mut y = lu.solve(&x).ok_or_else(|| Error::Singular("L − σI".into()))?;
        let tr = trace_of(&y, d);
        if tr.norm() == 0.0 || !tr.is_finite() {
            return Err(Error::Singular("steady state has zero trace".into()));
        }
        y /= tr;
        rho = CMatrix::from_column_slice(d, d, y.as_slice());
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let t = rho.trace();
        rho /= t;
        let v = DVector::from_column_slice(rho.as_slice());
        residual = (l.matrix() * &v).norm() / scale;
        // A small residual alone is not enough when the gap is small: the
        // state error is roughly residual / gap. Iterate until it settles.
        let change = (&v - &x).norm();
        x = v;
        if residual < opts.residual_rel && change < 1e-14 * (d as f64) {
            break;
        }
    }
    if residual >= opts.residual_rel {
        return Err(Error::NotConverged { t: f64::NAN, residual });
    }

    // Power iteration of (L − σ)⁻¹ on the traceless subspace gives 1/|λ₂ − σ|.
    let mut z = DVector::<C64>::from_fn(n, |k, _| {
        let (i, j) = (k % d, k / d);
        let a = ((i * 7 + j * 13 + 3) % 11) as f64 / 11.0 - 0.5;
        let b = ((i * 5 + j * 3 + 1) % 7) as f64 / 7.0 - 0.5;
        C64::new(a, if i == j { 0.0 } else { b })
    });
    let tz = trace_of(&z, d);
    z -= &x * tz;
    let mut growth: f64 = 0.0;
    let mut zn = z.norm();
    if zn > 0.0 {
        z /= C64::new(zn, 0.0);
        for it in 0..30 {
            let mut w = lu.solve(&z).ok_or_else(|| Error::Singular("L − σI".into()))?;
            let tw = trace_of(&w, d);
            w -= &x * tw;
            zn = w.norm();
            if it >= 20 {
                growth = growth.max(zn);
            }
            if zn == 0.0 || !zn.is_finite() {
                break;
            }
            z = w / C64::new(zn, 0.0);
        }
    }
    let gap = if growth > 0.0 { 1.0 / growth } else { f64::INFINITY };
    if gap < opts.gap_rel * scale {
        return Err(Error::DegenerateNullSpace {
            smallest: residual * scale,
            second: gap,
        });
    }

    let space = l.space().clone();
    let rho = DensityMatrix::hermitize(rho);
    let rho = DensityMatrix::with_tolerance(space, rho, 100.0)?;
    Ok(SteadyState { rho, residual, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{embed, liouvillian, transition, HilbertSpace, LindbladTerm, Operator};

    fn two_level(delta: f64, omega: f64, gamma: f64) -> Superoperator {
        let s = HilbertSpace::new(vec![2]).unwrap();
        let h = Operator::new(
            s.clone(),
            transition(2, 1, 1) * C64::new(-delta, 0.0)
                + (transition(2, 1, 0) + transition(2, 0, 1)) * C64::new(omega, 0.0),
        )
        .unwrap();
        let j = embed(&s, &transition(2, 0, 1), 0).unwrap();
        liouvillian(&h, &[LindbladTerm::new("decay", j, gamma).unwrap()]).unwrap()
    }

    /// Optical Bloch steady state for H = −Δσ₂₂ + Ω(σ₂₁+σ₁₂), decay Γ.
    fn bloch_excited(delta: f64, omega: f64, gamma: f64) -> f64 {
        omega * omega / (gamma * gamma / 4.0 + delta * delta + 2.0 * omega * omega)
    }

    #[test]
    fn pure_decay_goes_to_ground() {
        let rho = steady_state(&two_level(0.0, 0.0, 1.0)).unwrap();
        assert!((rho.population(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_optical_bloch() {
        for &(d, o, g) in &[(0.0, 0.3, 1.0), (1.5, 0.7, 1.0), (-2.0, 0.1, 0.5), (0.0, 100.0, 1.0)] {
            let st = steady_state_with(&two_level(d, o, g), SteadyOptions::default()).unwrap();
            let p = st.rho.population(1);
            assert!((p - bloch_excited(d, o, g)).abs() < 1e-9, "{d} {o} {g}: {p}");
            assert!(st.residual < 1e-10);
        }
        let strong = steady_state(&two_level(0.0, 100.0, 1.0)).unwrap();
        assert!((strong.population(1) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn degenerate_null_space_is_reported() {
        // no dissipation: every diagonal state is stationary
        let s = HilbertSpace::new(vec![2]).unwrap();
        let h = Operator::new(s.clone(), transition(2, 1, 1)).unwrap();
        let l = liouvillian(&h, &[]).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::DegenerateNullSpace { .. })));
    }
}
