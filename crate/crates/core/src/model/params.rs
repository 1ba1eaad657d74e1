use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and detunings of the driven V-atom ensemble and its cavity.
///
/// All frequencies are angular and share one unit; the presets use Γ₃ = 1.
/// Level |1⟩ is the ground state, |2⟩ the narrow (lasing) excited state and
/// |3⟩ the broad one. Detunings are drive minus transition frequency.
///
/// `kappa` is the rate of the cavity Lindblad term in the same `rate/2`
/// convention as every other term: the photon number decays as
/// `d⟨a†a⟩/dt = −κ⟨a†a⟩` and the field amplitude as `−κ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma2: f64,
    pub gamma3: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub delta_c: f64,
    pub g: f64,
    pub kappa: f64,
    pub n_atoms: u64,
    /// Incoherent |2⟩ → |3⟩ transfer rate.
    pub gamma23: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("omega2", self.omega2),
            ("omega3", self.omega3),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
            ("nu2", self.nu2),
            ("nu3", self.nu3),
            ("delta_c", self.delta_c),
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma23", self.gamma23),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("not finite ({v})"),
                });
            }
        }
        for (name, v) in [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("nu2", self.nu2),
            ("nu3", self.nu3),
            ("kappa", self.kappa),
            ("g", self.g),
            ("gamma23", self.gamma23),
        ] {
            if v < 0.0 {
                return Err(Error::NegativeRate {
                    name: name.into(),
                    rate: v,
                });
            }
        }
        if self.gamma3 <= self.gamma2 {
            return Err(Error::InvalidParameter {
                name: "gamma3".into(),
                reason: format!("must exceed gamma2 ({} <= {})", self.gamma3, self.gamma2),
            });
        }
        if self.n_atoms < 1 {
            return Err(Error::InvalidParameter {
                name: "n_atoms".into(),
                reason: "at least one atom required".into(),
            });
        }
        Ok(())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Delta2 => self.delta2,
            Param::Delta3 => self.delta3,
            Param::Omega2 => self.omega2,
            Param::Omega3 => self.omega3,
            Param::Nu2 => self.nu2,
            Param::Nu3 => self.nu3,
            Param::Nu => self.nu2,
            Param::DeltaC => self.delta_c,
            Param::G => self.g,
            Param::Kappa => self.kappa,
            Param::Gamma2 => self.gamma2,
            Param::Gamma3 => self.gamma3,
            Param::Gamma23 => self.gamma23,
            Param::N => self.n_atoms as f64,
        }
    }

    /// Sets one parameter. `Nu` sets both dephasing rates; `N` is rounded.
    pub fn set(&mut self, p: Param, v: f64) -> Result<()> {
        match p {
            Param::Delta2 => self.delta2 = v,
            Param::Delta3 => self.delta3 = v,
            Param::Omega2 => self.omega2 = v,
            Param::Omega3 => self.omega3 = v,
            Param::Nu2 => self.nu2 = v,
            Param::Nu3 => self.nu3 = v,
            Param::Nu => {
                self.nu2 = v;
                self.nu3 = v;
            }
            Param::DeltaC => self.delta_c = v,
            Param::G => self.g = v,
            Param::Kappa => self.kappa = v,
            Param::Gamma2 => self.gamma2 = v,
            Param::Gamma3 => self.gamma3 = v,
            Param::Gamma23 => self.gamma23 = v,
            Param::N => {
                if !(v >= 1.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "n_atoms".into(),
                        reason: format!("{v} is not a valid atom count"),
                    });
                }
                self.n_atoms = v.round() as u64;
            }
        }
        Ok(())
    }

    pub fn with(mut self, p: Param, v: f64) -> Result<Self> {
        self.set(p, v)?;
        Ok(self)
    }

    /// Same populations are expected after flipping every detuning.
    pub fn mirrored(&self) -> Self {
        Self {
            delta2: -self.delta2,
            delta3: -self.delta3,
            delta_c: -self.delta_c,
            ..*self
        }
    }
}

/// Scannable parameter names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    Delta2,
    Delta3,
    Omega2,
    Omega3,
    Nu2,
    Nu3,
    /// Both pump linewidths at once.
    Nu,
    DeltaC,
    G,
    Kappa,
    Gamma2,
    Gamma3,
    Gamma23,
    N,
}

impl Param {
    pub const ALL: [Param; 14] = [
        Param::Delta2,
        Param::Delta3,
        Param::Omega2,
        Param::Omega3,
        Param::Nu2,
        Param::Nu3,
        Param::Nu,
        Param::DeltaC,
        Param::G,
        Param::Kappa,
        Param::Gamma2,
        Param::Gamma3,
        Param::Gamma23,
        Param::N,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Delta2 => "delta2",
            Param::Delta3 => "delta3",
            Param::Omega2 => "omega2",
            Param::Omega3 => "omega3",
            Param::Nu2 => "nu2",
            Param::Nu3 => "nu3",
            Param::Nu => "nu",
            Param::DeltaC => "delta_c",
            Param::G => "g",
            Param::Kappa => "kappa",
            Param::Gamma2 => "gamma2",
            Param::Gamma3 => "gamma3",
            Param::Gamma23 => "gamma23",
            Param::N => "n_atoms",
        }
    }

    /// Whether the value is a frequency (and so carries a unit).
    pub fn is_frequency(self) -> bool {
        self != Param::N
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | ' ' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        let key = key
            .replace('δ', "delta")
            .replace('ω', "omega")
            .replace('ν', "nu")
            .replace('γ', "gamma")
            .replace('κ', "kappa");
        let p = match key.as_str() {
            "delta2" => Param::Delta2,
            "delta3" => Param::Delta3,
            "omega2" => Param::Omega2,
            "omega3" => Param::Omega3,
            "nu2" => Param::Nu2,
            "nu3" => Param::Nu3,
            "nu" => Param::Nu,
            "deltac" => Param::DeltaC,
            "g" => Param::G,
            "kappa" => Param::Kappa,
            "gamma2" => Param::Gamma2,
            "gamma3" => Param::Gamma3,
            "gamma23" => Param::Gamma23,
            "n" | "natoms" => Param::N,
            _ => {
                return Err(Error::InvalidParameter {
                    name: s.into(),
                    reason: "unknown parameter name".into(),
                })
            }
        };
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets::sr88;

    #[test]
    fn invariants_are_enforced() {
        let p = sr88().params;
        p.validate().unwrap();
        assert!(p.with(Param::Kappa, -1.0).unwrap().validate().is_err());
        assert!(p.with(Param::Gamma2, 2.0).unwrap().validate().is_err());
        assert!(p.with(Param::N, 0.0).is_err());
        let mut q = p;
        q.omega2 = f64::NAN;
        assert!(q.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
        }
        assert_eq!("Δ2".parse::<Param>().unwrap(), Param::Delta2);
        assert_eq!("Delta_c".parse::<Param>().unwrap(), Param::DeltaC);
        assert!("zeta".parse::<Param>().is_err());
    }

    #[test]
    fn nu_sets_both() {
        let p = sr88().params.with(Param::Nu, 0.3).unwrap();
        assert_eq!((p.nu2, p.nu3), (0.3, 0.3));
    }
}
