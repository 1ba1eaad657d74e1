use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Mechanical parameters of the moving atom.
///
/// Simulation units: time 1/Γ₃, length 1/k₃, momentum ħk₃, energy ħΓ₃.
/// The narrow-line pump runs along x, the broad-line pump along y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub mass_u: f64,
    /// Pump wavelengths of the narrow and broad transitions (m).
    pub lambda2: f64,
    pub lambda3: f64,
    /// Γ₃ in rad/s.
    pub gamma3_si: f64,
    /// Absolute angular frequency of the narrow transition (rad/s).
    pub omega2_abs: f64,
    /// Add photon recoil at spontaneous jumps.
    pub recoil: bool,
    /// Keep the atom at rest at its initial position.
    pub frozen: bool,
}

impl MotionParams {
    /// ⁸⁸Sr: 689 nm and 461 nm lines, Γ₃ = 2π·32 MHz.
    pub fn sr88() -> Self {
        Self {
            mass_u: 87.905_612,
            lambda2: 689.449e-9,
            lambda3: 460.862e-9,
            gamma3_si: 2.0 * PI * 32e6,
            omega2_abs: 2.0 * PI * 434.829e12,
            recoil: true,
            frozen: false,
        }
    }

    /// ¹⁷⁴Yb: 556 nm and 399 nm lines, Γ₃ = 2π·29.1 MHz.
    pub fn yb174() -> Self {
        Self {
            mass_u: 173.938_862,
            lambda2: 555.802e-9,
            lambda3: 398.911e-9,
            gamma3_si: 2.0 * PI * 29.1e6,
            omega2_abs: 2.0 * PI * 539.387e12,
            recoil: true,
            frozen: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass_u", self.mass_u),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("gamma3_si", self.gamma3_si),
            ("omega2_abs", self.omega2_abs),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Narrow-line wavenumber in units of k₃.
    pub fn k2(&self) -> f64 {
        self.lambda3 / self.lambda2
    }

    /// Mass in units of ħk₃²/Γ₃.
    pub fn mass(&self) -> f64 {
        let k3 = 2.0 * PI / self.lambda3;
        self.mass_u * ATOMIC_MASS * self.gamma3_si / (HBAR * k3 * k3)
    }

    /// Recoil frequency ħk₃²/2m of the broad line in units of Γ₃.
    pub fn recoil_frequency(&self) -> f64 {
        0.5 / self.mass()
    }
}

/// Doppler FWHM `(ω/c)·√(8 k_BT ln2 / m)` for thermal energy `kbt` (J),
/// angular frequency `omega` (rad/s) and mass `mass` (kg).
pub fn doppler_broadening(kbt: f64, omega: f64, mass: f64) -> Result<f64> {
    if !(kbt >= 0.0) || !(omega > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Doppler width needs T >= 0, ω > 0, m > 0 (got {kbt}, {omega}, {mass})"
        )));
    }
    Ok(omega / SPEED_OF_LIGHT * (8.0 * kbt * std::f64::consts::LN_2 / mass).sqrt())
}
