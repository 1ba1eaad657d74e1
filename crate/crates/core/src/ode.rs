//! Adaptive L-stable integrator for stiff systems.
//!
//! A five-stage singly diagonally implicit Runge–Kutta method of order 4 with
//! an embedded order-3 solution (γ = 1/4, stiffly accurate). All stages share
//! one LU factorisation of `I − hγJ`; the local error estimate is filtered
//! through the same factorisation so stiff components do not trigger spurious
//! rejections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)` over real state vectors.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Jacobian `∂f/∂y`. The default uses forward differences.
    fn jacobian(&self, t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.dim();
        let mut f0 = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut yp = y.to_vec();
        self.rhs(t, y, &mut f0);
        for j in 0..n {
            let h = f64::EPSILON.sqrt() * y[j].abs().max(1e-8);
            let old = yp[j];
            yp[j] = old + h;
            let h = yp[j] - old;
            self.rhs(t, &yp, &mut f1);
            yp[j] = old;
            for i in 0..n {
                jac[(i, j)] = (f1[i] - f0[i]) / h;
            }
        }
    }

    /// True when the Jacobian does not depend on `t` or `y` (linear systems).
    fn constant_jacobian(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` picks one from the RHS norm.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl SolverOptions {
    pub fn tight() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            ..Self::default()
        }
    }
}

/// What the step observer wants the driver to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobians: usize,
    pub factorizations: usize,
}

const GAMMA: f64 = 0.25;
const STAGES: usize = 5;
const C: [f64; STAGES] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
const A: [[f64; STAGES]; STAGES] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
const B: [f64; STAGES] = [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25];
const B_HAT: [f64; STAGES] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

/// Stiff integrator state. Reusable across calls; not shared between threads.
pub struct Sdirk4<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    opts: SolverOptions,
    n: usize,
    jac: DMatrix<f64>,
    jac_valid: bool,
    lu: Option<(f64, nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
    pub stats: Stats,
}

impl<'a, S: OdeSystem + ?Sized> Sdirk4<'a, S> {
    pub fn new(sys: &'a S, opts: SolverOptions) -> Self {
        let n = sys.dim();
        Self {
            sys,
            opts,
            n,
            jac: DMatrix::zeros(n, n),
            jac_valid: false,
            lu: None,
            stats: Stats::default(),
        }
    }

    fn weights(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .map(|v| 1.0 / (self.opts.atol + self.opts.rtol * v.abs()))
            .collect()
    }

    fn norm(w: &[f64], v: &[f64]) -> f64 {
        let s: f64 = v.iter().zip(w).map(|(x, w)| (x * w).powi(2)).sum();
        (s / v.len().max(1) as f64).sqrt()
    }

    fn refresh_jacobian(&mut self, t: f64, y: &[f64]) {
        if self.jac_valid && self.sys.constant_jacobian() {
            return;
        }
        self.sys.jacobian(t, y, &mut self.jac);
        self.stats.jacobians += 1;
        self.jac_valid = true;
        self.lu = None;
    }

    fn factor(&mut self, h: f64) -> Result<()> {
        if let Some((hh, _)) = &self.lu {
            if *hh == h {
                return Ok(());
            }
        }
        let mut m = &self.jac * (-h * GAMMA);
        for i in 0..self.n {
            m[(i, i)] += 1.0;
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular(format!("I - hγJ singular at h = {h:e}")));
        }
        self.lu = Some((h, lu));
        self.stats.factorizations += 1;
        Ok(())
    }

    fn solve(&self, rhs: &mut DVector<f64>) {
        let (_, lu) = self.lu.as_ref().expect("factorised before solve");
        lu.solve_mut(rhs);
    }

    /// One attempted step. Returns (y_new, scaled error) or None when Newton failed.
    fn attempt(&mut self, t: f64, y: &[f64], f0: &[f64], h: f64) -> Result<Option<(Vec<f64>, f64)>> {
        self.factor(h)?;
        let n = self.n;
        let w = self.weights(y);
        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        let mut fz = vec![0.0; n];
        for s in 0..STAGES {
            // base = y + h Σ_{j<s} a_sj k_j
            let mut base = y.to_vec();
            for (j, k) in ks.iter().enumerate() {
                let a = A[s][j] * h;
                if a != 0.0 {
                    for i in 0..n {
                        base[i] += a * k[i];
                    }
                }
            }
            let guess = if s == 0 { f0 } else { &ks[s - 1][..] };
            let mut z: Vec<f64> = base.iter().zip(guess).map(|(b, k)| b + h * GAMMA * k).collect();
            let ts = t + C[s] * h;
            let mut converged = false;
            let mut prev_norm = f64::INFINITY;
            for iter in 0..10 {
                self.sys.rhs(ts, &z, &mut fz);
                self.stats.rhs_evals += 1;
                let mut r = DVector::from_iterator(n, (0..n).map(|i| base[i] + h * GAMMA * fz[i] - z[i]));
                self.solve(&mut r);
                for i in 0..n {
                    z[i] += r[i];
                }
                if !z.iter().all(|v| v.is_finite()) {
                    return Ok(None);
                }
                let dn = Self::norm(&w, r.as_slice());
                if dn < 1e-3 || (iter > 0 && dn < 1e-1 && dn < 0.05 * prev_norm) {
                    converged = true;
                    break;
                }
                if iter > 1 && dn > 0.9 * prev_norm {
                    break;
                }
                prev_norm = dn;
            }
            if !converged {
                return Ok(None);
            }
            // k_s from the stage equation (avoids an extra RHS evaluation)
            let k: Vec<f64> = (0..n).map(|i| (z[i] - base[i]) / (h * GAMMA)).collect();
            ks.push(k);
        }
        let mut y_new = y.to_vec();
        let mut err = DVector::zeros(n);
        for (s, k) in ks.iter().enumerate() {
            for i in 0..n {
                y_new[i] += h * B[s] * k[i];
                err[i] += h * (B[s] - B_HAT[s]) * k[i];
            }
        }
        self.solve(&mut err);
        let w_new: Vec<f64> = y
            .iter()
            .zip(&y_new)
            .map(|(a, b)| 1.0 / (self.opts.atol + self.opts.rtol * a.abs().max(b.abs())))
            .collect();
        Ok(Some((y_new, Self::norm(&w_new, err.as_slice()))))
    }

    fn initial_step(&self, t: f64, y: &[f64], f0: &[f64], t_end: f64) -> f64 {
        if let Some(h) = self.opts.h0 {
            return h.min(t_end - t);
        }
        let w = self.weights(y);
        let d0 = Self::norm(&w, y).max(1e-5);
        let d1 = Self::norm(&w, f0).max(1e-5);
        (0.01 * d0 / d1).min(t_end - t).min(self.opts.h_max)
    }

    /// Integrates from `t0` towards `t_end`, calling `observer(t, y, f(t,y))`
    /// after every accepted step. Returns the final time and state.
    pub fn integrate_with<F>(&mut self, t0: f64, y0: &[f64], t_end: f64, mut observer: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnMut(f64, &[f64], &[f64]) -> Control,
    {
        let n = self.n;
        if y0.len() != n {
            return Err(Error::InvalidInput(format!(
                "state has length {}, system dimension is {n}",
                y0.len()
            )));
        }
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut f0 = vec![0.0; n];
        self.sys.rhs(t, &y, &mut f0);
        self.stats.rhs_evals += 1;
        if t_end <= t0 {
            return Ok((t, y));
        }
        let mut h = self.initial_step(t, &y, &f0, t_end);
        let mut steps = 0usize;
        let mut last_rejected = false;
        while t < t_end {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
            let mut h_try = h.min(self.opts.h_max);
            let remaining = t_end - t;
            if h_try >= remaining || (remaining - h_try) < 1e-12 * remaining.max(t.abs()) {
                h_try = remaining;
            }
            if h_try <= 1e-14 * t.abs().max(1e-300) || h_try < 1e-300 {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (h = {h_try:e})"),
                });
            }
            self.refresh_jacobian(t, &y);
            match self.attempt(t, &y, &f0, h_try)? {
                None => {
                    // Newton failure: fresh Jacobian, smaller step
                    self.jac_valid = self.sys.constant_jacobian();
                    self.stats.rejected += 1;
                    h = h_try * 0.25;
                    last_rejected = true;
                }
                Some((y_new, err)) => {
                    if err <= 1.0 {
                        let t_new = if h_try == remaining { t_end } else { t + h_try };
                        t = t_new;
                        y = y_new;
                        if !y.iter().all(|v| v.is_finite()) {
                            return Err(Error::NonFinite { t });
                        }
                        self.sys.rhs(t, &y, &mut f0);
                        self.stats.rhs_evals += 1;
                        self.stats.accepted += 1;
                        if !self.sys.constant_jacobian() {
                            self.jac_valid = false;
                        }
                        let mut fac = 0.9 * err.max(1e-10).powf(-0.25);
                        fac = fac.clamp(0.2, 5.0);
                        if last_rejected {
                            fac = fac.min(1.0);
                        }
                        // keep the factorisation when the change is marginal
                        h = if (0.9..=1.2).contains(&fac) && self.sys.constant_jacobian() {
                            h_try.max(h)
                        } else {
                            h_try * fac
                        };
                        last_rejected = false;
                        if observer(t, &y, &f0) == Control::Stop {
                            break;
                        }
                    } else {
                        self.stats.rejected += 1;
                        let fac = (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                        h = h_try * fac;
                        last_rejected = true;
                    }
                }
            }
        }
        Ok((t, y))
    }

    /// Integrates and records the state at each time of `t_out`
    /// (strictly increasing, first entry ≥ `t0`).
    pub fn integrate_to(&mut self, t0: f64, y0: &[f64], t_out: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_grid(t0, t_out)?;
        let mut out = Vec::with_capacity(t_out.len());
        let mut t = t0;
        let mut y = y0.to_vec();
        for &target in t_out {
            if target > t {
                let (tt, yy) = self.integrate_with(t, &y, target, |_, _, _| Control::Continue)?;
                t = tt;
                y = yy;
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

pub(crate) fn check_grid(t0: f64, t_out: &[f64]) -> Result<()> {
    if t_out.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if t_out[0] < t0 {
        return Err(Error::InvalidGrid(format!(
            "grid starts at {} before the initial time {t0}",
            t_out[0]
        )));
    }
    if t_out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}
