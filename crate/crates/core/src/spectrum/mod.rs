//! Cavity and single-atom emission spectra from two-time correlations.
//!
//! Frequencies inside the solvers are offsets from the pump frequency of
//! the narrow transition (the rotating frame). Results are reported as
//! offsets from the atomic transition frequency ω₂, in units of Γ₂.

mod correlation;
mod resolvent;
mod single_atom;
mod transform;

use std::fmt::Write as _;

pub use correlation::{
    build_correlation_system, laser_spectrum, linewidth_sweep, pulling_coefficient, CorrelationSystem, LaserEquations,
    LaserSpectrum, SweepPoint,
};
pub use resolvent::Resolvent;
pub use single_atom::{single_atom_feature, single_atom_resolvent, single_atom_spectrum};
pub use transform::{fft_spectrum, fwhm_peak, spectrum_from_correlation, Peak};

/// Normalized spectrum with its dominant peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Offset from ω₂ in units of Γ₂.
    pub omega: Vec<f64>,
    /// Peak-normalized power spectral density.
    pub s: Vec<f64>,
    pub fwhm: f64,
    /// Position of the dominant peak, offset from ω₂ in units of Γ₂.
    pub peak: f64,
    /// `|g¹(∞)| / g¹(0)`: weight of the coherent (delta) component that is
    /// removed before the transform.
    pub coherent_fraction: f64,
    /// Unnormalized height of the dominant peak.
    pub norm: f64,
    pub ambiguous: bool,
}

impl SpectrumResult {
    /// Two columns: ω offset in Γ₂, normalized S.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# omega_offset_gamma2 S_normalized\n");
        for (w, s) in self.omega.iter().zip(&self.s) {
            let _ = writeln!(out, "{w:.10e} {s:.10e}");
        }
        out
    }
}

/// Builds the reported result from a resolvent in frame frequencies.
pub(crate) fn finish(
    res: &Resolvent,
    grid: Vec<f64>,
    delta2: f64,
    gamma2: f64,
    coherent_fraction: f64,
) -> crate::Result<SpectrumResult> {
    let peak = res.dominant_peak()?;
    let s = res.eval_grid(&grid)?;
    let to_out = |w: f64| (w + delta2) / gamma2;
    Ok(SpectrumResult {
        omega: grid.iter().map(|&w| to_out(w)).collect(),
        s: s.iter().map(|v| v / peak.height).collect(),
        fwhm: peak.fwhm / gamma2,
        peak: to_out(peak.position),
        coherent_fraction,
        norm: peak.height,
        ambiguous: peak.ambiguous,
    })
}
