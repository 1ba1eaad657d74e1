use nalgebra::DVector;
use rayon::prelude::*;

use super::resolvent::Resolvent;
use super::{finish, SpectrumResult};
use crate::cumulant::{
    correlation_seeds, generate_correlation_system, generate_system, integrate_to_steady, laser_seeds, AffineSystem,
    Average, CompiledRhs, EquationSystem, MomentState, SymbolicModel, Word,
};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quantum::{CMatrix, C64};

/// One-time moment equations and the matching correlation equations.
#[derive(Debug, Clone)]
pub struct LaserEquations {
    pub moments: EquationSystem,
    pub correlations: EquationSystem,
}

impl LaserEquations {
    pub fn generate(repump: bool) -> Result<Self> {
        let model = SymbolicModel::v_level_laser(repump);
        Ok(Self {
            moments: generate_system(&model, &laser_seeds())?,
            correlations: generate_correlation_system(&model, &correlation_seeds())?,
        })
    }
}

/// Linear equations for `⟨O(τ) a(0)⟩` with the steady one-time moments
/// frozen in, and their initial values.
#[derive(Debug, Clone)]
pub struct CorrelationSystem {
    pub affine: AffineSystem,
    pub x0: DVector<C64>,
    pub x_inf: DVector<C64>,
    target: usize,
    delta2: f64,
    gamma2: f64,
}

/// Relative residual above which a steady state is rejected.
const STEADY_RESIDUAL: f64 = 1e-6;

pub fn build_correlation_system(
    eqs: &LaserEquations,
    p: &ModelParams,
    steady: &MomentState,
) -> Result<CorrelationSystem> {
    let rhs = CompiledRhs::new(&eqs.moments, p)?;
    if steady.values.len() != rhs.dim() {
        return Err(Error::InvalidInput("steady state belongs to another system".into()));
    }
    let mut f = vec![C64::new(0.0, 0.0); rhs.dim()];
    rhs.eval(&steady.values, &mut f);
    let size = steady.values.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let res = f.iter().fold(0.0f64, |m, z| m.max(z.norm())) / (p.gamma2 * size);
    if !(res < STEADY_RESIDUAL) {
        return Err(Error::NotConverged {
            t: f64::NAN,
            residual: res,
        });
    }

    let frozen = |a: &Average| steady.get(a);
    let affine = AffineSystem::new(&eqs.correlations, p, &frozen)?;
    let mut x0 = DVector::zeros(affine.dim());
    for (k, a) in eqs.correlations.variables().enumerate() {
        // ⟨O a⟩ at equal times; `a` is already rightmost in normal order
        let w = Word {
            ann: a.word.ann + 1,
            ..a.word.clone()
        };
        x0[k] = steady
            .get(&Average::one_time(&w))
            .ok_or_else(|| Error::UnknownMoment(format!("<{w}>")))?;
    }
    let x_inf = affine.fixed_point()?;
    let target = eqs
        .correlations
        .slot(&Average::two_time(&Word::create()))
        .ok_or_else(|| Error::UnknownMoment("<a' a0>".into()))?
        .index;
    Ok(CorrelationSystem {
        affine,
        x0,
        x_inf,
        target,
        delta2: p.delta2,
        gamma2: p.gamma2,
    })
}

impl CorrelationSystem {
    /// `g¹(0) = ⟨a†a⟩`.
    pub fn g1_zero(&self) -> C64 {
        self.x0[self.target]
    }

    /// Limit of `g¹(τ)`: the coherent part `|⟨a⟩|²`.
    pub fn g1_inf(&self) -> C64 {
        self.x_inf[self.target]
    }

    /// `g¹(τ)` on a uniform grid starting at 0, in the pump frame.
    pub fn correlation(&self, tau: &[f64]) -> Result<Vec<C64>> {
        if tau.len() < 2 || tau[0] != 0.0 {
            return Err(Error::InvalidGrid("τ grid must start at 0".into()));
        }
        let dt = tau[1] - tau[0];
        if !(dt > 0.0)
            || tau
                .windows(2)
                .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()))
        {
            return Err(Error::InvalidGrid("τ grid must be uniform and increasing".into()));
        }
        let prop: CMatrix = (&self.affine.m * C64::new(dt, 0.0)).exp();
        let mut y = &self.x0 - &self.x_inf;
        let mut out = Vec::with_capacity(tau.len());
        for _ in tau {
            out.push(y[self.target] + self.g1_inf());
            y = &prop * y;
        }
        let g0 = self.g1_zero().norm();
        let last = out[out.len() - 1] - self.g1_inf();
        let ratio = if g0 > 0.0 { last.norm() / g0 } else { 0.0 };
        if ratio > 1e-4 {
            return Err(Error::InsufficientDecay { ratio });
        }
        Ok(out)
    }

    /// Exact transform of the fluctuating part `g¹ − g¹(∞)`.
    pub fn resolvent(&self) -> Result<Resolvent> {
        let mut r = DVector::zeros(self.x0.len());
        r[self.target] = C64::new(1.0, 0.0);
        Resolvent::new(self.affine.m.clone(), &self.x0 - &self.x_inf, r, 0.0)
    }

    /// Spectrum around its dominant peak (±50 pole widths).
    pub fn spectrum(&self) -> Result<SpectrumResult> {
        let res = self.resolvent()?;
        let (l, _) = *res
            .strengths()?
            .first()
            .ok_or_else(|| Error::NoPeak("no decaying mode is excited".into()))?;
        let span = 100.0 * l.re.abs();
        let grid = res.adaptive_grid((l.im - span, l.im + span), 2001, 1e-3)?;
        self.finish(&res, grid)
    }

    /// Spectrum on a caller grid (offsets from ω₂ in units of Γ₂).
    pub fn spectrum_on(&self, omega: &[f64]) -> Result<SpectrumResult> {
        let res = self.resolvent()?;
        let grid = omega.iter().map(|w| w * self.gamma2 - self.delta2).collect();
        self.finish(&res, grid)
    }

    fn finish(&self, res: &Resolvent, grid: Vec<f64>) -> Result<SpectrumResult> {
        let g0 = self.g1_zero().norm();
        let coh = if g0 > 0.0 { self.g1_inf().norm() / g0 } else { 0.0 };
        finish(res, grid, self.delta2, self.gamma2, coh)
    }
}

/// Steady state and cavity spectrum of the N-atom laser.
#[derive(Debug, Clone)]
pub struct LaserSpectrum {
    pub steady: MomentState,
    pub spectrum: SpectrumResult,
}

pub fn laser_spectrum(eqs: &LaserEquations, p: &ModelParams) -> Result<LaserSpectrum> {
    let steady = integrate_to_steady(&eqs.moments, p, &MomentState::ground(&eqs.moments))?;
    let spectrum = build_correlation_system(eqs, p, &steady)?.spectrum()?;
    Ok(LaserSpectrum { steady, spectrum })
}

/// Linewidth and peak position at one atom number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: u64,
    pub photons: f64,
    /// In units of Γ₂.
    pub fwhm: f64,
    /// Offset from ω₂ in units of Γ₂.
    pub peak: f64,
    /// Set when the moments oscillate instead of settling; the other
    /// fields are then NaN.
    pub limit_cycle: Option<f64>,
}

/// Spectra over an atom-number grid, in parallel.
pub fn linewidth_sweep(eqs: &LaserEquations, p: &ModelParams, n_grid: &[u64]) -> Result<Vec<SweepPoint>> {
    n_grid
        .par_iter()
        .map(|&n| {
            let q = ModelParams { n_atoms: n, ..*p };
            match laser_spectrum(eqs, &q) {
                Ok(ls) => Ok(SweepPoint {
                    n,
                    photons: ls.steady.photons(),
                    fwhm: ls.spectrum.fwhm,
                    peak: ls.spectrum.peak,
                    limit_cycle: None,
                }),
                Err(Error::LimitCycle { period }) => Ok(SweepPoint {
                    n,
                    photons: f64::NAN,
                    fwhm: f64::NAN,
                    peak: f64::NAN,
                    limit_cycle: Some(period),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `dδ_p/dΔ_c` from a linear fit over cavity detunings (both in Γ₂).
pub fn pulling_coefficient(eqs: &LaserEquations, p: &ModelParams, delta_c: &[f64]) -> Result<f64> {
    if delta_c.len() < 2 {
        return Err(Error::InvalidGrid("pulling needs at least two cavity detunings".into()));
    }
    let peaks: Vec<f64> = delta_c
        .par_iter()
        .map(|&dc| {
            let q = ModelParams { delta_c: dc, ..*p };
            laser_spectrum(eqs, &q).map(|ls| ls.spectrum.peak)
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = delta_c.iter().map(|d| d / p.gamma2).collect();
    Ok(slope(&x, &peaks))
}
