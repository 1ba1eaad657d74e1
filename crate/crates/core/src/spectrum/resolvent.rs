use nalgebra::DVector;

use super::transform::{fwhm_peak, Peak};
use crate::error::{Error, Result};
use crate::quantum::{CMatrix, C64};

/// `S(ω) = 2 Re r·(iω − M)⁻¹ x` for a linear system `ẋ = Mx` whose
/// readout `r·x(τ)` is the correlation. This is the exact one-sided
/// transform of the sum of exponentials that solves the system.
#[derive(Debug, Clone)]
pub struct Resolvent {
    m: CMatrix,
    x: DVector<C64>,
    r: DVector<C64>,
    eps: f64,
    poles: Vec<C64>,
}

impl Resolvent {
    /// Poles with `Re λ ≥ −floor` (at least `1e-10‖M‖`) are dropped from
    /// the grid design; a stationary direction of `M` must not be excited
    /// by `x`.
    pub fn new(m: CMatrix, x: DVector<C64>, r: DVector<C64>, floor: f64) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || x.len() != n || r.len() != n {
            return Err(Error::InvalidInput("resolvent dimensions disagree".into()));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let ev = m
            .clone()
            .try_schur(f64::EPSILON, 200 * n.max(1))
            .and_then(|s| s.eigenvalues())
            .ok_or_else(|| Error::Singular("eigenvalues of the correlation matrix".into()))?;
        if let Some(l) = ev.iter().find(|l| l.re > 1e-9 * scale) {
            return Err(Error::InvalidInput(format!(
                "correlations grow: eigenvalue {:.4e}{:+.4e}i",
                l.re, l.im
            )));
        }
        let floor = floor.max(1e-10 * scale);
        let poles = if x.norm() * r.norm() > 1e-12 {
            ev.iter().copied().filter(|l| l.re < -floor).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            m,
            x,
            r,
            eps: 1e-13 * scale,
            poles,
        })
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    pub fn eval(&self, w: f64) -> Result<f64> {
        let mut a = -self.m.clone();
        for k in 0..a.nrows() {
            a[(k, k)] += C64::new(self.eps, w);
        }
        let y = a
            .lu()
            .solve(&self.x)
            .ok_or_else(|| Error::Singular(format!("resolvent at ω = {w:.6e}")))?;
        Ok(2.0 * self.r.dot(&y).re)
    }

    pub fn eval_grid(&self, omega: &[f64]) -> Result<Vec<f64>> {
        omega.iter().map(|&w| self.eval(w)).collect()
    }

    /// Poles with their spectral height `S(Im λ)`, strongest first.
    pub fn strengths(&self) -> Result<Vec<(C64, f64)>> {
        let mut out = Vec::with_capacity(self.poles.len());
        for &l in &self.poles {
            out.push((l, self.eval(l.im)?));
        }
        // ties (poles sharing a centre) go to the narrowest
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.re.total_cmp(&a.0.re)));
        Ok(out)
    }

    /// Grid resolving every visible pole: a coarse grid over `range` plus
    /// fine grids of ±10 pole widths around poles at least `rel` of the
    /// strongest.
    pub fn adaptive_grid(&self, range: (f64, f64), n_coarse: usize, rel: f64) -> Result<Vec<f64>> {
        let (lo, hi) = range;
        if !(hi > lo) || n_coarse < 2 {
            return Err(Error::InvalidGrid(format!("bad range [{lo}, {hi}]")));
        }
        let mut grid: Vec<f64> = (0..n_coarse)
            .map(|k| lo + (hi - lo) * k as f64 / (n_coarse - 1) as f64)
            .collect();
        let mut step = (hi - lo) / (n_coarse - 1) as f64;
        let st = self.strengths()?;
        let top = st.first().map_or(0.0, |s| s.1);
        for &(l, h) in &st {
            if h < rel * top || l.im < lo || l.im > hi {
                continue;
            }
            let w = 2.0 * l.re.abs();
            step = step.min(w / 20.0);
            grid.extend((0..=400).map(|k| l.im + w * (k as f64 / 20.0 - 10.0)));
        }
        grid.retain(|w| *w >= lo && *w <= hi);
        grid.sort_by(f64::total_cmp);
        // overlapping fine grids leave near-duplicates that look like a flat top
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-3 * step);
        Ok(grid)
    }

    /// Range covering the visible poles with `margin` widths on each side.
    pub fn visible_range(&self, rel: f64, margin: f64) -> Result<(f64, f64)> {
        let st = self.strengths()?;
        let top = st
            .first()
            .map(|s| s.1)
            .ok_or_else(|| Error::NoPeak("no decaying mode is excited".into()))?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(l, h) in &st {
            if h >= rel * top {
                let w = 2.0 * l.re.abs();
                lo = lo.min(l.im - margin * w);
                hi = hi.max(l.im + margin * w);
            }
        }
        Ok((lo, hi))
    }

    /// Dominant peak on a fine grid around the strongest pole, widening
    /// the window until both half-maximum crossings are inside.
    pub fn dominant_peak(&self) -> Result<Peak> {
        let st = self.strengths()?;
        let (l, _) = *st
            .first()
            .ok_or_else(|| Error::NoPeak("no decaying mode is excited".into()))?;
        let mut span = 10.0 * l.re.abs();
        for _ in 0..8 {
            let grid = self.adaptive_grid((l.im - span, l.im + span), 2001, 1e-3)?;
            let s = self.eval_grid(&grid)?;
            match fwhm_peak(&grid, &s) {
                Ok(p) => return Ok(p),
                Err(Error::NoPeak(_)) => span *= 4.0,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoPeak("half maximum not found around the strongest mode".into()))
    }

    /// Peak of the feature inside `[lo, hi]` after removing the straight
    /// background through the window edges.
    pub fn local_peak(&self, lo: f64, hi: f64, n: usize) -> Result<Peak> {
        if !(hi > lo) || n < 3 {
            return Err(Error::InvalidGrid(format!("bad window [{lo}, {hi}]")));
        }
        let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let s = self.eval_grid(&grid)?;
        let (s0, s1) = (s[0], s[n - 1]);
        let bg: Vec<f64> = grid
            .iter()
            .zip(&s)
            .map(|(w, v)| v - (s0 + (s1 - s0) * (w - lo) / (hi - lo)))
            .collect();
        fwhm_peak(&grid, &bg)
    }
}
