use rayon::prelude::*;

use super::build::{build_single_atom, sigma, GROUND, NARROW};
use super::observe::{inversion, single_atom_steady};
use super::{ModelParams, Param};
use crate::error::{Error, Result};
use crate::ode::{Control, Sdirk4, SolverOptions};
use crate::quantum::evolve_internal::{join, split, RealLinear};
use crate::quantum::{expect, DensityMatrix, Operator, Superoperator};

/// Parameters an inversion map may vary.
pub const SCANNABLE: [Param; 7] = [
    Param::Delta2,
    Param::Delta3,
    Param::Omega2,
    Param::Omega3,
    Param::Nu2,
    Param::Nu3,
    Param::Nu,
];

/// Steady inversion `⟨σ₂₂⟩ − ⟨σ₁₁⟩` over a two-parameter grid.
///
/// `out[i][j]` belongs to `axis1.1[i]` and `axis2.1[j]`. Every cell is an
/// independent steady-state solve.
pub fn inversion_scan(p: &ModelParams, axis1: (Param, &[f64]), axis2: (Param, &[f64])) -> Result<Vec<Vec<f64>>> {
    for (param, grid) in [axis1, axis2] {
        if grid.is_empty() {
            return Err(Error::InvalidGrid(format!("grid for `{param}` is empty")));
        }
        if !SCANNABLE.contains(&param) {
            return Err(Error::InvalidParameter {
                name: param.name().into(),
                reason: "not scannable in an inversion map".into(),
            });
        }
    }
    let (n1, n2) = (axis1.1.len(), axis2.1.len());
    let flat: Vec<f64> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n2, k % n2);
            let q = p
                .with(axis1.0, axis1.1[i])
                .and_then(|q| q.with(axis2.0, axis2.1[j]))
                .and_then(|q| single_atom_steady(&q))
                .map_err(|e| Error::ScanPoint {
                    i,
                    j,
                    source: Box::new(e),
                })?;
            Ok(inversion(&q, 0))
        })
        .collect::<Result<_>>()?;
    Ok(flat.chunks(n2).map(<[f64]>::to_vec).collect())
}

/// Relative precision of the bisection in [`t95`].
const T95_RTOL: f64 = 1e-3;

/// First time at which `⟨obs⟩(t) ≥ fraction · ⟨obs⟩(∞)`.
///
/// The solver's own adaptive steps form the search grid; the bracketing step
/// is then bisected to `T95_RTOL` relative precision.
pub fn time_to_fraction(
    l: &Superoperator,
    rho0: &DensityMatrix,
    obs: &Operator,
    target: f64,
    t_end: f64,
) -> Result<f64> {
    let d = l.hilbert_dim();
    let value = |y: &[f64]| -> f64 {
        let m = join(d, y);
        (obs.matrix() * m).trace().re
    };
    let sys = RealLinear::new(l.matrix());
    let opts = SolverOptions {
        rtol: 1e-9,
        atol: 1e-12,
        ..SolverOptions::default()
    };
    let y0 = split(rho0.matrix());
    if value(&y0) >= target {
        return Ok(0.0);
    }
    let mut prev = (0.0, y0.clone());
    let mut hit: Option<(f64, f64, Vec<f64>)> = None;
    {
        let mut solver = Sdirk4::new(&sys, opts);
        solver.integrate_with(0.0, &y0, t_end, |t, y, _| {
            if value(y) >= target {
                hit = Some((prev.0, t, prev.1.clone()));
                return Control::Stop;
            }
            prev = (t, y.to_vec());
            Control::Continue
        })?;
    }
    let (mut lo, mut hi, mut y_lo) = hit.ok_or_else(|| Error::NotConverged {
        t: t_end,
        residual: target - value(&prev.1),
    })?;
    while hi - lo > T95_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        let mut solver = Sdirk4::new(&sys, opts);
        let y_mid = solver.integrate_to(lo, &y_lo, &[mid])?.pop().expect("one output");
        if value(&y_mid) >= target {
            hi = mid;
        } else {
            lo = mid;
            y_lo = y_mid;
        }
    }
    Ok(hi)
}

/// Time for the inversion `⟨σ₂₂⟩ − ⟨σ₁₁⟩` to first reach 95 % of its steady
/// value, starting from `rho0`.
pub fn t95(p: &ModelParams, rho0: &DensityMatrix) -> Result<f64> {
    let me = build_single_atom(p)?;
    let l = me.liouvillian()?;
    let steady = inversion(&single_atom_steady(p)?, 0);
    if steady <= 0.0 {
        return Err(Error::NotInverted(steady));
    }
    let space = me.space();
    let obs = &sigma(space, 0, NARROW, NARROW)? - &sigma(space, 0, GROUND, GROUND)?;
    let slowest = [p.gamma2, p.gamma3]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t = time_to_fraction(&l, rho0, &obs, 0.95 * steady, 1e3 / slowest)?;
    debug_assert!(expect(&obs, rho0)?.re < 0.95 * steady || t == 0.0);
    Ok(t)
}

/// Repump rate that speeds the decay of |2⟩ up `m`-fold.
///
/// `Γ₂₃ = (M − 1)/M · Γ₂`. The estimate assumes the repumped population
/// returns much faster than Γ₂·M; a warning is logged once `Γ₂·M > Γ₃/10`.
pub fn repump_rate(m: f64, gamma2: f64, gamma3: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "M".into(),
            reason: format!("speed-up factor must be at least 1, got {m}"),
        });
    }
    if gamma2 * m > gamma3 / 10.0 {
        log::warn!(
            "repump speed-up M = {m} leaves the regime Gamma2*M << Gamma3 ({} vs {})",
            gamma2 * m,
            gamma3
        );
    }
    Ok((m - 1.0) / m * gamma2)
}
