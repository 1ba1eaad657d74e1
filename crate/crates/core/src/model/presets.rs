use std::f64::consts::PI;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Named atomic species with the default lasing working point.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub units: UnitSystem,
    pub params: ModelParams,
}

/// Lasing working point shared by both species, in units of Γ₃.
fn working_point(gamma2: f64) -> ModelParams {
    ModelParams {
        gamma2,
        gamma3: 1.0,
        omega2: 0.5,
        omega3: 0.5,
        delta2: 5.0,
        delta3: -1.0,
        nu2: 0.0,
        nu3: 0.0,
        delta_c: 5.0,
        g: 2.0 * gamma2,
        kappa: 100.0 * gamma2,
        n_atoms: 1,
        gamma23: 0.0,
    }
}

/// ⁸⁸Sr: |2⟩ = ³P₁ (7.5 kHz), |3⟩ = ¹P₁ (32 MHz), Γ₃/Γ₂ = 4266.
pub fn sr88() -> Preset {
    let ratio = 4266.0;
    Preset {
        name: "Sr88",
        description:
            "88Sr, 3P1 (2pi x 7.5 kHz) lasing on 1S0-3P1, 1P1 (2pi x 32 MHz) as the broad level; Gamma3/Gamma2 = 4266",
        units: UnitSystem::new(1.0 / ratio, 2.0 * PI * 32e6).expect("valid preset units"),
        params: working_point(1.0 / ratio),
    }
}

/// ¹⁷⁴Yb: |2⟩ = ³P₁ (182 kHz), |3⟩ = ¹P₁ (29.1 MHz), Γ₃/Γ₂ = 160.
pub fn yb174() -> Preset {
    let ratio = 160.0;
    Preset {
        name: "Yb174",
        description:
            "174Yb, 3P1 (2pi x 182 kHz) lasing on 1S0-3P1, 1P1 (2pi x 29.1 MHz) as the broad level; Gamma3/Gamma2 = 160",
        units: UnitSystem::new(1.0 / ratio, 2.0 * PI * 29.1e6).expect("valid preset units"),
        params: working_point(1.0 / ratio),
    }
}

pub fn presets() -> Vec<Preset> {
    vec![sr88(), yb174()]
}

/// Looks a preset up by name, ignoring case.
pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::InvalidParameter {
            name: "preset".into(),
            reason: format!(
                "unknown preset `{name}` (known: {})",
                presets().iter().map(|p| p.name).collect::<Vec<_>>().join(", ")
            ),
        })
}
