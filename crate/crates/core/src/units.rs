//! Frequency units.
//!
//! Internally every rate, detuning and Rabi frequency is expressed in units
//! of the broad-transition linewidth Γ₃ (ħ = 1, Γ₃ = 1). Values coming from
//! configs or going to reports carry a [`Unit`] tag and are converted here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    /// Narrow-transition linewidth.
    Gamma2,
    /// Broad-transition linewidth (the internal unit).
    Gamma3,
    /// Angular frequency in rad/s.
    AngularSi,
    /// Plain number (atom counts, ratios).
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Gamma2 => "Gamma2",
            Unit::Gamma3 => "Gamma3",
            Unit::AngularSi => "rad/s",
            Unit::Dimensionless => "",
        };
        f.write_str(s)
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Gamma2" | "G2" | "Γ2" | "Γ₂" => Ok(Unit::Gamma2),
            "Gamma3" | "G3" | "Γ3" | "Γ₃" => Ok(Unit::Gamma3),
            "rad/s" | "SI" => Ok(Unit::AngularSi),
            "" | "1" => Ok(Unit::Dimensionless),
            other => Err(Error::Unit(format!("unknown unit `{other}`"))),
        }
    }
}

/// Conversion table between the unit tags for one atomic species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Γ₂/Γ₃.
    pub gamma2_over_gamma3: f64,
    /// Γ₃ in rad/s.
    pub gamma3_si: f64,
}

impl UnitSystem {
    pub fn new(gamma2_over_gamma3: f64, gamma3_si: f64) -> Result<Self> {
        if !(gamma2_over_gamma3 > 0.0 && gamma3_si > 0.0) {
            return Err(Error::Unit("unit scales must be positive".into()));
        }
        Ok(Self {
            gamma2_over_gamma3,
            gamma3_si,
        })
    }

    fn scale(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Gamma2 => self.gamma2_over_gamma3,
            Unit::Gamma3 | Unit::Dimensionless => 1.0,
            Unit::AngularSi => 1.0 / self.gamma3_si,
        }
    }

    /// Converts `value` given in `unit` to internal Γ₃ units.
    pub fn to_internal(&self, value: f64, unit: Unit) -> f64 {
        value * self.scale(unit)
    }

    /// Converts an internal (Γ₃) value to `unit`.
    pub fn from_internal(&self, value: f64, unit: Unit) -> f64 {
        value / self.scale(unit)
    }
}

/// A number with a unit tag, e.g. `"0.5 Gamma3"` or `"50 Gamma2"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    pub fn internal(&self, units: &UnitSystem) -> f64 {
        units.to_internal(self.value, self.unit)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        // longest prefix that is a valid number; the remainder is the unit
        let split = s
            .char_indices()
            .map(|(i, c)| i + c.len_utf8())
            .rfind(|&i| s[..i].parse::<f64>().is_ok())
            .ok_or_else(|| Error::Unit(format!("cannot parse number in `{s}`")))?;
        let (num, unit) = s.split_at(split);
        let value: f64 = num.parse().expect("prefix parsed above");
        Ok(Self {
            value,
            unit: unit.parse()?,
        })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::Dimensionless => write!(f, "{}", self.value),
            u => write!(f, "{} {}", self.value, u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_quantities() {
        let q: Quantity = "0.5 Gamma3".parse().unwrap();
        assert_eq!(q, Quantity::new(0.5, Unit::Gamma3));
        let q: Quantity = "-50Gamma2".parse().unwrap();
        assert_eq!(q, Quantity::new(-50.0, Unit::Gamma2));
        let q: Quantity = "1e-3 Gamma2".parse().unwrap();
        assert_eq!(q, Quantity::new(1e-3, Unit::Gamma2));
        let q: Quantity = "12000".parse().unwrap();
        assert_eq!(q, Quantity::new(12000.0, Unit::Dimensionless));
        assert!("3 furlongs".parse::<Quantity>().is_err());
    }

    #[test]
    fn round_trips_units() {
        let us = UnitSystem::new(1.0 / 4266.0, 2.0 * std::f64::consts::PI * 32e6).unwrap();
        let x = us.to_internal(50.0, Unit::Gamma2);
        assert!((x - 50.0 / 4266.0).abs() < 1e-15);
        assert!((us.from_internal(x, Unit::Gamma2) - 50.0).abs() < 1e-12);
        let si = us.to_internal(us.gamma3_si, Unit::AngularSi);
        assert!((si - 1.0).abs() < 1e-15);
    }
}
