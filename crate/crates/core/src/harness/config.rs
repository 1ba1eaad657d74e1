use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{preset, ModelParams, Param, Preset};
use crate::units::{Quantity, Unit, UnitSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    InversionScan,
    T95,
    Threshold,
    PhotonScan,
    Spectrum,
    FwhmSweep,
    Cooling,
}

impl Kind {
    fn max_axes(self) -> usize {
        match self {
            Kind::Spectrum => 0,
            Kind::Cooling => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// A number given in the config: either a string with a unit suffix or a
/// bare number (atom counts, dimensionless values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn quantity(&self) -> Result<Quantity> {
        match self {
            Value::Int(i) => Ok(Quantity::new(*i as f64, Unit::Dimensionless)),
            Value::Float(x) => Ok(Quantity::new(*x, Unit::Dimensionless)),
            Value::Text(s) => s.parse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub param: String,
    /// Explicit grid; excludes `from`/`to`/`points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Logarithmic spacing between `from` and `to`.
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Fluorescence of one driven atom, no cavity.
    Atom,
    /// Cavity output of the N-atom laser.
    Laser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub source: Source,
    /// Pump-line feature window half width (atom source only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_half_width: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSpec {
    pub trajectories: usize,
    /// Run length in units of 1/Γ₃.
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Steps between samples.
    #[serde(default = "default_every")]
    pub every: usize,
    #[serde(default = "default_true")]
    pub recoil: bool,
    #[serde(default)]
    pub frozen: bool,
}

fn default_dt() -> f64 {
    0.05
}
fn default_every() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_preset() -> String {
    "Sr88".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Overrides of the preset, e.g. `delta2 = "5 Gamma3"`, `n_atoms = 50000`.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Parameters that follow another one, e.g. `delta_c = "delta2"`.
    #[serde(default)]
    pub tie: BTreeMap<String, String>,
    #[serde(default)]
    pub axis: Vec<AxisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooling: Option<CoolingSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn config_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            config_err(path, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    /// `key=value` override as given on the command line.
    pub fn set_param(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| config_err("--param", format!("expected key=value, got `{assignment}`")))?;
        let v = v.trim();
        let value = match v.parse::<i64>() {
            Ok(i) => Value::Int(i),
            Err(_) => Value::Text(v.to_string()),
        };
        self.params.insert(k.trim().to_string(), value);
        Ok(())
    }

    /// Canonical JSON used for hashing and embedded in the manifest.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }
}

pub fn hash_text(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// One resolved scan axis.
#[derive(Debug, Clone)]
pub struct Axis {
    pub param: Param,
    /// Internal values (Γ₃ units or counts).
    pub values: Vec<f64>,
    /// Unit used when writing the axis back out.
    pub unit: Unit,
}

impl Axis {
    pub fn column(&self) -> String {
        match self.unit {
            Unit::Dimensionless => self.param.name().to_string(),
            u => format!("{}_{}", self.param.name(), u),
        }
    }
}

/// A config with every unit and name resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub preset: Preset,
    pub units: UnitSystem,
    pub base: ModelParams,
    pub axes: Vec<Axis>,
    pub ties: Vec<(Param, Param)>,
}

fn resolve(param: Param, q: Quantity, units: &UnitSystem, path: &str) -> Result<f64> {
    match (param.is_frequency(), q.unit) {
        (true, Unit::Dimensionless) => Err(config_err(
            path,
            format!("`{}` needs a unit suffix such as \"{} Gamma2\"", param, q.value),
        )),
        (false, Unit::Dimensionless) => {
            if q.value < 0.0 || q.value.fract() != 0.0 {
                Err(config_err(
                    path,
                    format!("atom number must be a non-negative integer, got {}", q.value),
                ))
            } else {
                Ok(q.value)
            }
        }
        (false, u) => Err(config_err(
            path,
            format!("`{param}` is a count and takes no unit (got {u})"),
        )),
        (true, _) => Ok(q.internal(units)),
    }
}

fn parse_param(name: &str, path: &str) -> Result<Param> {
    Param::from_str(name).map_err(|_| config_err(path, format!("unknown parameter `{name}`")))
}

impl Plan {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let preset = preset(&config.preset).map_err(|e| config_err("preset", e.to_string()))?;
        let units = preset.units;
        let mut base = preset.params;
        for (name, v) in &config.params {
            let path = format!("params.{name}");
            let param = parse_param(name, &path)?;
            let q = v.quantity().map_err(|e| config_err(&path, e.to_string()))?;
            let x = resolve(param, q, &units, &path)?;
            base.set(param, x).map_err(|e| config_err(&path, e.to_string()))?;
        }

        let mut ties = Vec::new();
        for (target, source) in &config.tie {
            let path = format!("tie.{target}");
            ties.push((parse_param(target, &path)?, parse_param(source, &path)?));
        }

        let kind = config.kind;
        if config.axis.len() > kind.max_axes() {
            return Err(config_err(
                "axis",
                format!(
                    "`{kind}` takes at most {} axes, got {}",
                    kind.max_axes(),
                    config.axis.len()
                ),
            ));
        }
        let mut axes = Vec::new();
        for (k, a) in config.axis.iter().enumerate() {
            axes.push(resolve_axis(a, &units, &format!("axis[{k}]"))?);
        }
        match kind {
            Kind::Threshold | Kind::FwhmSweep => {
                let last = axes.last().map(|a| a.param);
                if last != Some(Param::N) {
                    return Err(config_err("axis", format!("`{kind}` needs n_atoms as its last axis")));
                }
                let n = &axes.last().expect("checked").values;
                if n.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("axis", "atom numbers must increase"));
                }
            }
            Kind::InversionScan | Kind::T95 | Kind::PhotonScan if axes.is_empty() => {
                return Err(config_err("axis", format!("`{kind}` needs at least one axis")));
            }
            Kind::Spectrum if config.spectrum.is_none() => {
                return Err(config_err("spectrum", "missing [spectrum] table"));
            }
            Kind::Cooling => {
                let c = config
                    .cooling
                    .as_ref()
                    .ok_or_else(|| config_err("cooling", "missing [cooling] table"))?;
                if c.trajectories < 2 {
                    return Err(config_err("cooling.trajectories", "need at least 2"));
                }
                if !(c.t_end > 0.0) || !(c.dt > 0.0) || c.every == 0 {
                    return Err(config_err("cooling", "t_end, dt and every must be positive"));
                }
                if c.dt > crate::motion::MAX_DT {
                    return Err(config_err("cooling.dt", format!("at most {}", crate::motion::MAX_DT)));
                }
            }
            _ => {}
        }
        if kind == Kind::InversionScan {
            for a in &axes {
                if !crate::model::SCANNABLE.contains(&a.param) {
                    return Err(config_err(
                        "axis",
                        format!("`{}` cannot be scanned in an inversion map", a.param),
                    ));
                }
            }
        }
        let plan = Self {
            config,
            preset,
            units,
            base,
            axes,
            ties,
        };
        // every grid point must form valid parameters
        for p in plan.grid() {
            p.params.validate().map_err(|e| config_err("params", e.to_string()))?;
        }
        Ok(plan)
    }

    /// Cartesian product of the axes, last axis fastest.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = vec![GridPoint {
            coords: vec![],
            params: self.base,
        }];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|g| {
                    axis.values.iter().map(move |&v| {
                        let mut q = g.params;
                        q.set(axis.param, v).expect("validated axis value");
                        let mut coords = g.coords.clone();
                        coords.push(v);
                        GridPoint { coords, params: q }
                    })
                })
                .collect();
        }
        for g in &mut out {
            for &(target, source) in &self.ties {
                let v = g.params.get(source);
                let _ = g.params.set(target, v);
            }
        }
        out
    }

    /// Axis coordinate in its display unit.
    pub fn display(&self, axis: usize, v: f64) -> f64 {
        self.units.from_internal(v, self.axes[axis].unit)
    }
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub coords: Vec<f64>,
    pub params: ModelParams,
}

fn resolve_axis(a: &AxisSpec, units: &UnitSystem, path: &str) -> Result<Axis> {
    let param = parse_param(&a.param, &format!("{path}.param"))?;
    let q = |v: &Value, p: &str| -> Result<Quantity> { v.quantity().map_err(|e| config_err(p, e.to_string())) };
    let (values, unit) = match (&a.values, &a.from, &a.to, a.points) {
        (Some(vals), None, None, None) => {
            if vals.is_empty() {
                return Err(config_err(format!("{path}.values"), "grid is empty"));
            }
            let mut out = Vec::new();
            let mut unit = None;
            for (k, v) in vals.iter().enumerate() {
                let p = format!("{path}.values[{k}]");
                let qq = q(v, &p)?;
                unit.get_or_insert(qq.unit);
                out.push(resolve(param, qq, units, &p)?);
            }
            (out, unit.expect("nonempty"))
        }
        (None, Some(from), Some(to), Some(points)) => {
            if points == 0 {
                return Err(config_err(format!("{path}.points"), "grid is empty"));
            }
            let (qa, qb) = (q(from, &format!("{path}.from"))?, q(to, &format!("{path}.to"))?);
            let lo = resolve(param, qa, units, &format!("{path}.from"))?;
            let hi = resolve(param, qb, units, &format!("{path}.to"))?;
            if a.log && !(lo > 0.0 && hi > 0.0) {
                return Err(config_err(path, "log grid needs positive bounds"));
            }
            let frac = |k: usize| {
                if points == 1 {
                    0.0
                } else {
                    k as f64 / (points - 1) as f64
                }
            };
            let mut vals: Vec<f64> = (0..points)
                .map(|k| {
                    if a.log {
                        (lo.ln() + (hi.ln() - lo.ln()) * frac(k)).exp()
                    } else {
                        lo + (hi - lo) * frac(k)
                    }
                })
                .collect();
            if param == Param::N {
                for v in &mut vals {
                    *v = v.round();
                }
                vals.dedup();
            }
            (vals, qa.unit)
        }
        _ => {
            return Err(config_err(
                path,
                "give either `values` or all of `from`, `to`, `points`",
            ))
        }
    };
    Ok(Axis { param, values, unit })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2A: &str = r#"
kind = "inversion_scan"
preset = "Sr88"

[[axis]]
param = "delta2"
from = "-10 Gamma3"
to = "10 Gamma3"
points = 5

[[axis]]
param = "delta3"
values = ["-1 Gamma3", "5 Gamma3"]
"#;

    #[test]
    fn parses_and_expands() {
        let plan = Plan::new(ExperimentConfig::from_toml(FIG2A).unwrap()).unwrap();
        let g = plan.grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[1].coords, vec![-10.0, 5.0]);
        assert_eq!(g[1].params.delta3, 5.0);
        assert_eq!(plan.axes[0].column(), "delta2_Gamma3");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml(FIG2A).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set_param("nu=1 Gamma2").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let empty = FIG2A.replace(r#"values = ["-1 Gamma3", "5 Gamma3"]"#, "values = []");
        let e = Plan::new(ExperimentConfig::from_toml(&empty).unwrap()).unwrap_err();
        assert!(e.to_string().contains("axis[1].values"), "{e}");

        let unitless = "kind = \"photon_scan\"\n[params]\ndelta2 = 5\n[[axis]]\nparam = \"n\"\nvalues = [10]\n";
        let e = Plan::new(ExperimentConfig::from_toml(unitless).unwrap()).unwrap_err();
        assert!(e.to_string().contains("params.delta2"), "{e}");

        assert!(ExperimentConfig::from_toml("kind = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"t95\"\nextra = 1").is_err());
        let bad_unit = FIG2A.replace("-10 Gamma3", "-10 MHz");
        assert!(Plan::new(ExperimentConfig::from_toml(&bad_unit).unwrap()).is_err());
    }

    #[test]
    fn ties_follow_the_axis() {
        let text = r#"
kind = "photon_scan"
[params]
n_atoms = 1000
[tie]
delta_c = "delta2"
[[axis]]
param = "delta2"
values = ["1 Gamma3", "3 Gamma3"]
"#;
        let plan = Plan::new(ExperimentConfig::from_toml(text).unwrap()).unwrap();
        for g in plan.grid() {
            assert_eq!(g.params.delta_c, g.params.delta2);
            assert_eq!(g.params.n_atoms, 1000);
        }
    }
}
