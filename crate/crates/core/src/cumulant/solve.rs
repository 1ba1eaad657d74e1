//! Steady states of the moment equations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::algebra::Word;
use super::compile::{to_complex, to_real, CompiledRhs};
use super::generate::EquationSystem;
use super::moments::Average;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::{Control, OdeSystem, Sdirk4, SolverOptions};
use crate::quantum::C64;

/// Values of the variables of a one-time system.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    variables: Arc<[Average]>,
    pub values: Vec<C64>,
}

fn photons_avg() -> Average {
    Average::one_time(&Word {
        cre: 1,
        ann: 1,
        atoms: vec![],
    })
}

impl MomentState {
    /// All atoms in the ground state, cavity in vacuum.
    pub fn ground(sys: &EquationSystem) -> Self {
        Self {
            variables: sys.variables().cloned().collect(),
            values: vec![C64::new(0.0, 0.0); sys.len()],
        }
    }

    pub fn from_values(sys: &EquationSystem, values: Vec<C64>) -> Result<Self> {
        if values.len() != sys.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} variables",
                values.len(),
                sys.len()
            )));
        }
        Ok(Self {
            variables: sys.variables().cloned().collect(),
            values,
        })
    }

    /// Sets `⟨a†a⟩`, to start away from the dark cavity.
    pub fn with_photons(mut self, n: f64) -> Self {
        if let Some(k) = self.variables.iter().position(|a| *a == photons_avg()) {
            self.values[k] = C64::new(n, 0.0);
        }
        self
    }

    pub fn variables(&self) -> &[Average] {
        &self.variables
    }

    /// Value of `a` or of its stored conjugate.
    pub fn get(&self, a: &Average) -> Option<C64> {
        if let Some(k) = self.variables.iter().position(|v| v == a) {
            return Some(self.values[k]);
        }
        let c = a.conj()?;
        let k = self.variables.iter().position(|v| *v == c)?;
        Some(self.values[k].conj())
    }

    fn get_word(&self, w: &Word) -> f64 {
        self.get(&Average::one_time(w)).map_or(0.0, |z| z.re)
    }

    pub fn photons(&self) -> f64 {
        self.get(&photons_avg()).map_or(0.0, |z| z.re)
    }

    /// Coherent field amplitude `⟨a⟩`.
    pub fn field(&self) -> C64 {
        self.get(&Average::one_time(&Word::annihilate())).unwrap_or_default()
    }

    /// Population of level `k` (1-based) of a single atom.
    pub fn population(&self, k: u8) -> f64 {
        let levels = self
            .variables
            .iter()
            .flat_map(|a| a.word.atoms.iter().map(|(_, s)| s.row.max(s.col)))
            .max()
            .unwrap_or(1);
        if k == 1 {
            1.0 - (2..=levels).map(|j| self.get_word(&Word::sigma(1, j, j))).sum::<f64>()
        } else {
            self.get_word(&Word::sigma(1, k, k))
        }
    }

    /// `⟨σ₂₂⟩ − ⟨σ₁₁⟩` per atom.
    pub fn inversion(&self) -> f64 {
        self.population(2) - self.population(1)
    }

    /// `|⟨a⟩|² / ⟨a†a⟩`.
    pub fn coherent_fraction(&self) -> f64 {
        let n = self.photons();
        if n > 0.0 {
            self.field().norm_sqr() / n
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyMomentOptions {
    /// Length of the final stationarity check; `None` uses `10/Γ₂`.
    pub window: Option<f64>,
    /// Required `‖dx/dt‖∞ / (Γ₂ · max(1, ‖x‖∞))`.
    pub tol: f64,
    /// Integration time limit in units of the window.
    pub max_windows: usize,
    /// Tolerances while approaching the fixed point.
    pub solver: SolverOptions,
}

impl Default for SteadyMomentOptions {
    fn default() -> Self {
        Self {
            window: None,
            tol: 1e-9,
            max_windows: 100,
            solver: SolverOptions {
                rtol: 1e-6,
                atol: 1e-10,
                ..SolverOptions::default()
            },
        }
    }
}

fn residual(rhs: &CompiledRhs, y: &[f64], rate: f64) -> f64 {
    let mut f = vec![0.0; y.len()];
    rhs.rhs(0.0, y, &mut f);
    let fm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ym = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    fm / (rate * ym)
}

enum Polish {
    Stable(Vec<f64>),
    Unstable(Vec<f64>),
    Failed,
}

/// Eigenvalues with a bounded QR iteration count.
fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<C64>> {
    if !m.iter().all(|x| x.is_finite()) {
        return None;
    }
    // deflating at machine epsilon can stall on exactly decoupled blocks
    [1e-14, 1e-12].iter().find_map(|&eps| {
        let s = nalgebra::linalg::Schur::try_new(m.clone(), eps, 100 * m.nrows())?;
        Some(s.complex_eigenvalues().iter().copied().collect())
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Newton iteration on `f(y) = 0`, classifying the fixed point it reaches.
fn polish(rhs: &CompiledRhs, y: &[f64], rate: f64, tol: f64) -> Polish {
    let n = y.len();
    let mut y = y.to_vec();
    let mut r = residual(rhs, &y, rate);
    let mut jac = DMatrix::zeros(n, n);
    let mut f = vec![0.0; n];
    for _ in 0..30 {
        if r < tol {
            rhs.jacobian(0.0, &y, &mut jac);
            let stable = eigenvalues(&jac).is_some_and(|ev| ev.iter().all(|l| l.re < 1e-9 * rate));
            return if stable { Polish::Stable(y) } else { Polish::Unstable(y) };
        }
        rhs.rhs(0.0, &y, &mut f);
        rhs.jacobian(0.0, &y, &mut jac);
        let Some(step) = jac.clone().lu().solve(&(-DVector::from_column_slice(&f))) else {
            return Polish::Failed;
        };
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let rt = residual(rhs, &trial, rate);
            if rt.is_finite() && rt < r {
                y = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-3 {
                return Polish::Failed;
            }
        }
    }
    Polish::Failed
}

/// Most unstable eigenvalue (real part) of the Jacobian at `y` and the real
/// part of its eigenvector, by inverse iteration.
fn unstable_direction(rhs: &CompiledRhs, y: &[f64]) -> Option<(C64, Vec<f64>)> {
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    rhs.jacobian(0.0, y, &mut jac);
    let lambda = eigenvalues(&jac)?.into_iter().max_by(|a, b| a.re.total_cmp(&b.re))?;
    if lambda.re <= 0.0 {
        return None;
    }
    let shift = lambda * (1.0 + 1e-9) + C64::new(1e-12, 0.0);
    let mut m = jac.map(|x| C64::new(x, 0.0));
    for k in 0..n {
        m[(k, k)] -= shift;
    }
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |k, _| C64::new(1.0 + (k % 7) as f64 * 0.1, 0.0));
    for _ in 0..3 {
        v = lu.solve(&v)?;
        let nv = v.norm();
        if !nv.is_finite() || nv == 0.0 {
            return None;
        }
        v /= C64::new(nv, 0.0);
    }
    // fix the phase so the real part carries the mode
    let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let phase = big.conj() / big.norm();
    Some((lambda, v.iter().map(|z| (z * phase).re).collect()))
}

/// Pseudo-transient continuation: linearly implicit Euler steps with a
/// growing step size, which follow the slow dynamics while damping fast
/// rotations. Stops once the residual is below `target`.
fn pseudo_transient(rhs: &CompiledRhs, y: &[f64], rate: f64, dt0: f64, dt_cap: f64, target: f64) -> Vec<f64> {
    let n = y.len();
    let mut y = y.to_vec();
    let mut jac = DMatrix::zeros(n, n);
    let mut f = vec![0.0; n];
    let mut dt = dt0.min(dt_cap);
    for _ in 0..4000 {
        if residual(rhs, &y, rate) < target {
            break;
        }
        rhs.rhs(0.0, &y, &mut f);
        rhs.jacobian(0.0, &y, &mut jac);
        let mut m = -jac.clone() * dt;
        for k in 0..n {
            m[(k, k)] += 1.0;
        }
        let Some(d) = m.lu().solve(&(DVector::from_column_slice(&f) * dt)) else {
            dt *= 0.5;
            continue;
        };
        let change = max_abs(d.as_slice()) / max_abs(&y).max(1.0);
        if change > 0.05 || !change.is_finite() {
            dt *= 0.5;
            if dt < 1e-9 * dt0 {
                break;
            }
            continue;
        }
        for (a, b) in y.iter_mut().zip(d.iter()) {
            *a += b;
        }
        dt = (dt * 1.5).min(dt_cap);
    }
    y
}

enum Approach {
    Fixed(Vec<f64>),
    /// Only an unstable fixed point with an oscillatory unstable mode.
    Oscillating {
        period: f64,
    },
    Unresolved,
}

/// Fixed point reached from `y` by pseudo-transient continuation, stepping
/// off unstable fixed points along their unstable direction.
fn fast_steady(
    rhs: &CompiledRhs,
    y: &[f64],
    rate: f64,
    fast: f64,
    tol: f64,
    accept: &dyn Fn(&[f64]) -> bool,
    photons: Option<usize>,
) -> Approach {
    let mut y = y.to_vec();
    let mut cap = f64::INFINITY;
    let mut last = None;
    for _ in 0..4 {
        y = pseudo_transient(rhs, &y, rate, 0.1 / fast, cap, 1e-3);
        match polish(rhs, &y, rate, tol) {
            Polish::Stable(z) if accept(&z) => return Approach::Fixed(z),
            Polish::Stable(_) | Polish::Failed => return Approach::Unresolved,
            Polish::Unstable(z) => {
                let Some((lambda, mut v)) = unstable_direction(rhs, &z) else {
                    return Approach::Unresolved;
                };
                // back at the same unstable point: the dynamics leave it for good
                if last.as_ref().is_some_and(|w: &Vec<f64>| {
                    max_abs(&w.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6 * max_abs(&z).max(1.0)
                }) {
                    return if lambda.im.abs() > lambda.re {
                        Approach::Oscillating {
                            period: std::f64::consts::TAU / lambda.im.abs(),
                        }
                    } else {
                        Approach::Unresolved
                    };
                }
                if let Some(k) = photons {
                    if v[2 * k] < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                let size = 1e-3 * max_abs(&z).max(1.0) / max_abs(&v).max(1e-300);
                y = z.iter().zip(&v).map(|(a, b)| a + size * b).collect();
                cap = 0.3 / lambda.re;
                last = Some(z);
            }
        }
    }
    Approach::Unresolved
}

/// Dominant oscillation period of a sampled trace, if it keeps oscillating.
fn oscillation_period(ts: &[f64], xs: &[f64]) -> Option<f64> {
    if xs.len() < 8 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let amp = xs.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if amp <= 1e-6 * mean.abs().max(1e-12) {
        return None;
    }
    let mut crossings = Vec::new();
    for k in 1..xs.len() {
        if (xs[k - 1] - mean) * (xs[k] - mean) < 0.0 {
            crossings.push(ts[k]);
        }
    }
    if crossings.len() < 4 {
        return None;
    }
    // a decaying oscillation is not a limit cycle
    let half = xs.len() / 2;
    let amp_early = xs[..half].iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let amp_late = xs[half..].iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if amp_late < 0.5 * amp_early {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(2.0 * span / (crossings.len() - 1) as f64)
}

/// Integrates until the moments are stationary, then polishes the fixed
/// point with Newton's method.
pub fn integrate_to_steady(sys: &EquationSystem, p: &ModelParams, init: &MomentState) -> Result<MomentState> {
    integrate_to_steady_with(sys, p, init, SteadyMomentOptions::default())
}

pub fn integrate_to_steady_with(
    sys: &EquationSystem,
    p: &ModelParams,
    init: &MomentState,
    opts: SteadyMomentOptions,
) -> Result<MomentState> {
    p.validate()?;
    if init.values.len() != sys.len() {
        return Err(Error::InvalidInput("initial state does not match the system".into()));
    }
    for k in 1..=3 {
        let x = init.population(k);
        if !(-1e-9..=1.0 + 1e-9).contains(&x) {
            return Err(Error::InvalidInput(format!("initial population {k} is {x}")));
        }
    }
    if init.photons() < 0.0 {
        return Err(Error::InvalidInput("initial photon number is negative".into()));
    }
    let rhs = CompiledRhs::new(sys, p)?;
    let rate = p.gamma2;
    let window = opts.window.unwrap_or(10.0 / rate);
    let photons = init.variables.iter().position(|a| *a == photons_avg());
    let in_range = |y: &[f64]| {
        let s = MomentState {
            variables: init.variables.clone(),
            values: to_complex(y),
        };
        (1..=3).all(|k| (-1e-3..=1.0 + 1e-3).contains(&s.population(k))) && s.photons() > -1e-6
    };

    // Fast path; the full integration below is the fallback and the only
    // way to diagnose oscillating solutions.
    let y0 = to_real(&init.values);
    let fast = p.gamma3.max(rate);
    let mut t = 0.0;
    let fixed = match fast_steady(&rhs, &y0, rate, fast, opts.tol, &in_range, photons) {
        Approach::Fixed(z) => z,
        Approach::Oscillating { period } => return Err(Error::LimitCycle { period }),
        Approach::Unresolved => {
            let mut y = y0;
            let mut next = 10.0 / fast;
            let t_limit = window * opts.max_windows as f64;
            let mut trace_t = Vec::new();
            let mut trace_x = Vec::new();
            let mut solver = Sdirk4::new(&rhs, opts.solver);
            loop {
                let record = t + 4.0 * window >= t_limit;
                let (tt, yy) = solver.integrate_with(t, &y, next, |t, y, _| {
                    if let (true, Some(k)) = (record, photons) {
                        trace_t.push(t);
                        trace_x.push(y[2 * k]);
                    }
                    Control::Continue
                })?;
                t = tt;
                y = yy;
                if let Polish::Stable(z) = polish(&rhs, &y, rate, opts.tol) {
                    if in_range(&z) {
                        break z;
                    }
                }
                if t >= t_limit {
                    if let Some(period) = oscillation_period(&trace_t, &trace_x) {
                        return Err(Error::LimitCycle { period });
                    }
                    return Err(Error::NotConverged {
                        t,
                        residual: residual(&rhs, &y, rate),
                    });
                }
                next = (2.0 * t).min(t + window).min(t_limit);
            }
        }
    };

    // The fixed point must stay put over a full window.
    let mut check = Sdirk4::new(
        &rhs,
        SolverOptions {
            h0: Some(window / 100.0),
            ..opts.solver
        },
    );
    let (_, y_end) = check.integrate_with(0.0, &fixed, window, |_, _, _| Control::Continue)?;
    let drift = y_end.iter().zip(&fixed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = fixed.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if drift > 1e-6 * scale {
        return Err(Error::NotConverged {
            t: t + window,
            residual: drift / scale,
        });
    }
    let y = fixed;
    let state = MomentState {
        variables: init.variables.clone(),
        values: to_complex(&y),
    };
    for k in 1..=3 {
        let x = state.population(k);
        if !(-1e-6..=1.0 + 1e-6).contains(&x) {
            log::warn!("moment closure left the physical range: population {k} = {x:.3e}");
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub n: u64,
    pub photons: f64,
    pub inversion: f64,
    pub coherent_fraction: f64,
    /// Period of a self-sustained oscillation found instead of a steady
    /// state; the other fields are then NaN.
    pub limit_cycle: Option<f64>,
}

/// Steady photon number and inversion for each atom number, in parallel.
/// Points without a steady state are kept with `limit_cycle` set.
pub fn threshold_scan(sys: &EquationSystem, p: &ModelParams, n_grid: &[u64]) -> Result<Vec<ThresholdPoint>> {
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("atom numbers must increase".into()));
    }
    n_grid
        .par_iter()
        .map(|&n| {
            let q = ModelParams { n_atoms: n, ..*p };
            match integrate_to_steady(sys, &q, &MomentState::ground(sys)) {
                Ok(s) => Ok(ThresholdPoint {
                    n,
                    photons: s.photons(),
                    inversion: s.inversion(),
                    coherent_fraction: s.coherent_fraction(),
                    limit_cycle: None,
                }),
                Err(Error::LimitCycle { period }) => Ok(ThresholdPoint {
                    n,
                    photons: f64::NAN,
                    inversion: f64::NAN,
                    coherent_fraction: f64::NAN,
                    limit_cycle: Some(period),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Atom number of the steepest rise of `log n` against `log N`. The slope
/// is taken between neighbouring points and its maximum located by a
/// parabola through the largest slope and its two neighbours. Limit-cycle
/// points are skipped.
pub fn threshold_estimate(points: &[ThresholdPoint]) -> Option<f64> {
    let steady: Vec<&ThresholdPoint> = points
        .iter()
        .filter(|p| p.limit_cycle.is_none() && p.photons > 0.0)
        .collect();
    let slopes: Vec<(f64, f64)> = steady
        .windows(2)
        .map(|w| {
            let (x0, x1) = ((w[0].n as f64).ln(), (w[1].n as f64).ln());
            ((x0 + x1) / 2.0, (w[1].photons / w[0].photons).ln() / (x1 - x0))
        })
        .collect();
    let k = (0..slopes.len()).max_by(|&a, &b| slopes[a].1.total_cmp(&slopes[b].1))?;
    if k == 0 || k + 1 == slopes.len() {
        return Some(slopes[k].0.exp());
    }
    let ((x0, y0), (x1, y1), (x2, y2)) = (slopes[k - 1], slopes[k], slopes[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return Some(x1.exp());
    }
    // vertex of the parabola through the three points, kept inside them
    let x = (x0 + x1) / 2.0 - d01 / (2.0 * curv);
    Some(x.clamp(x0, x2).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulant::{generate_system, laser_seeds, SymbolicModel};

    fn system() -> EquationSystem {
        generate_system(&SymbolicModel::v_level_laser(false), &laser_seeds()).unwrap()
    }

    #[test]
    fn uncoupled_atoms_match_single_atom() {
        let sys = system();
        let mut p = crate::model::preset("Sr88").unwrap().params;
        p.g = 0.0;
        p.n_atoms = 10;
        let s = integrate_to_steady(&sys, &p, &MomentState::ground(&sys)).unwrap();
        assert!(s.photons().abs() < 1e-12);
        assert!(s.field().norm() < 1e-9);
        let exact = crate::model::single_atom_steady(&p).unwrap();
        let pops = crate::model::populations(&exact, 0);
        for k in 1..=3u8 {
            assert!((s.population(k) - pops[k as usize - 1]).abs() < 1e-6, "level {k}");
        }
    }

    #[test]
    fn oscillation_detector() {
        let ts: Vec<f64> = (0..400).map(|k| k as f64 * 0.1).collect();
        let sine: Vec<f64> = ts.iter().map(|t| 5.0 + (t * 2.0).sin()).collect();
        let p = oscillation_period(&ts, &sine).unwrap();
        assert!((p - std::f64::consts::PI).abs() < 0.1, "{p}");
        let damped: Vec<f64> = ts.iter().map(|t| 5.0 + (-t).exp() * (t * 2.0).sin()).collect();
        assert!(oscillation_period(&ts, &damped).is_none());
    }

    #[test]
    fn threshold_from_synthetic_curve() {
        let pts: Vec<ThresholdPoint> = [(10, 0.1), (100, 0.2), (1000, 50.0), (10000, 600.0)]
            .iter()
            .map(|&(n, photons)| ThresholdPoint {
                n,
                photons,
                inversion: 0.0,
                coherent_fraction: 0.0,
                limit_cycle: None,
            })
            .collect();
        let n = threshold_estimate(&pts).unwrap();
        assert!(n > 100.0 && n < 1000.0, "{n}");
        // a smooth sigmoid in log N peaks where it is steepest
        let pts: Vec<ThresholdPoint> = (0..30)
            .map(|k| {
                let x = 2.0 + 3.0 * k as f64 / 29.0;
                let n = 10f64.powf(x);
                ThresholdPoint {
                    n: n.round() as u64,
                    photons: 10f64.powf(3.0 * (1.0 + ((x - 3.7) * 4.0).tanh())),
                    inversion: 0.0,
                    coherent_fraction: 0.0,
                    limit_cycle: None,
                }
            })
            .collect();
        let n = threshold_estimate(&pts).unwrap();
        assert!((n.log10() - 3.7).abs() < 0.02, "{n}");
    }
}
