//! Scenario files: flat `[section]` blocks of `key = value` lines. Physical
//! values carry a unit suffix (`z0 = 0.25 mm`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::units::{self, Dimension};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render(.line, .field, .message))]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

fn render(line: &Option<usize>, field: &Option<String>, message: &str) -> String {
    let mut s = String::new();
    if let Some(l) = line {
        let _ = write!(s, "line {l}: ");
    }
    if let Some(f) = field {
        let _ = write!(s, "field `{f}`: ");
    }
    s + message
}

impl ConfigError {
    pub fn new(line: Option<usize>, field: Option<String>, message: impl Into<String>) -> Self {
        Self { line, field, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Quantity(Dimension),
    /// Unit-suffixed value whose dimension depends on another field.
    AnyQuantity,
    Integer,
    Number,
    Bool,
    Choice(&'static [&'static str]),
}

pub struct Field {
    pub section: &'static str,
    pub key: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
}

const fn f(section: &'static str, key: &'static str, kind: Kind, default: Option<&'static str>) -> Field {
    Field { section, key, kind, default }
}

use Dimension as D;
use Kind::*;

/// Every recognised field, in canonical order.
pub const SCHEMA: &[Field] = &[
    f("particle", "shape", Choice(&["cylinder", "point"]), Some("cylinder")),
    f("particle", "diameter", Quantity(D::Length), None),
    f("particle", "length", Quantity(D::Length), None),
    f("particle", "mass", Quantity(D::Mass), None),
    f("particle", "charge", Quantity(D::Charge), None),
    f("particle", "dipole", Quantity(D::Dipole), Some("0 C*m")),
    f("particle", "dipole_x", Quantity(D::Dipole), Some("0 C*m")),
    f("particle", "dipole_y", Quantity(D::Dipole), Some("0 C*m")),
    f("trap", "z0", Quantity(D::Length), None),
    f("trap", "U_dc", Quantity(D::Voltage), None),
    f("trap", "U_ac", Quantity(D::Voltage), None),
    f("trap", "drive_frequency", Quantity(D::AngularFrequency), None),
    f("trap", "k", Number, None),
    f("circuit", "C", Quantity(D::Capacitance), None),
    f("circuit", "C_c", Quantity(D::Capacitance), None),
    f("circuit", "C_g", Quantity(D::Capacitance), None),
    f("circuit", "C_J", Quantity(D::Capacitance), None),
    f("circuit", "C_sigma", Quantity(D::Capacitance), None),
    f("circuit", "R", Quantity(D::Resistance), None),
    f("circuit", "I_c", Quantity(D::Current), Some("0 A")),
    f("circuit", "flux", Quantity(D::Flux), Some("0 Wb")),
    f("circuit", "gate_voltage", Quantity(D::Voltage), Some("0 V")),
    f("circuit", "flux_rate", Quantity(D::Voltage), Some("0 V")),
    f("qubit", "N", Integer, None),
    f("qubit", "temperature", Quantity(D::Temperature), None),
    f("qubit", "dephasing_rate", Quantity(D::Rate), None),
    f("qubit", "frequency_model", Choice(&["secular", "stiffened"]), Some("secular")),
    f("schedule", "tau", Quantity(D::Time), None),
    f("schedule", "tau_periods", Number, None),
    f("schedule", "t1", Quantity(D::Time), None),
    f("schedule", "t2", Quantity(D::Time), None),
    f("schedule", "t3", Quantity(D::Time), None),
    f("schedule", "readout", Quantity(D::Time), None),
    f("initial", "x", Quantity(D::Length), Some("0 m")),
    f("initial", "y", Quantity(D::Length), Some("0 m")),
    f("initial", "z", Quantity(D::Length), Some("0 m")),
    f("initial", "vx", Quantity(D::Velocity), Some("0 m/s")),
    f("initial", "vy", Quantity(D::Velocity), Some("0 m/s")),
    f("initial", "vz", Quantity(D::Velocity), Some("0 m/s")),
    f("initial", "roll", Quantity(D::Angle), Some("0 rad")),
    f("initial", "pitch", Quantity(D::Angle), Some("0 rad")),
    f("initial", "yaw", Quantity(D::Angle), Some("0 rad")),
    f("initial", "Jx", Quantity(D::AngularMomentum), Some("0 J*s")),
    f("initial", "Jy", Quantity(D::AngularMomentum), Some("0 J*s")),
    f("initial", "Jz", Quantity(D::AngularMomentum), Some("0 J*s")),
    f("trajectory", "model", Choice(&["full", "secular", "averaged"]), Some("full")),
    f("trajectory", "duration", Quantity(D::Time), None),
    f("trajectory", "periods", Number, Some("10")),
    f("trajectory", "dt", Quantity(D::Time), None),
    f("trajectory", "steps_per_drive", Integer, Some("200")),
    f("trajectory", "steps_per_period", Integer, Some("2000")),
    f("trajectory", "samples", Integer, Some("2000")),
    f("cool", "duration", Quantity(D::Time), None),
    f("cool", "steps_per_period", Integer, Some("200")),
    f("cool", "sample_every", Integer, Some("100")),
    f("cool", "contraction", Bool, Some("false")),
    f("fringes", "sweep", Choice(&["bias", "tau", "charge_energy", "readout"]), Some("bias")),
    f("fringes", "from", AnyQuantity, None),
    f("fringes", "to", AnyQuantity, None),
    f("fringes", "points", Integer, Some("201")),
    f("fringes", "family", Choice(&["symmetric", "fixed"]), Some("symmetric")),
    f("fringes", "path_points", Integer, Some("0")),
    f("remote", "charge_energy_1", Quantity(D::Energy), None),
    f("remote", "charge_energy_2", Quantity(D::Energy), None),
    f("remote", "from", Quantity(D::Time), None),
    f("remote", "to", Quantity(D::Time), None),
    f("remote", "points", Integer, Some("201")),
    f("entangle", "outcomes", Choice(&["gg", "ge", "eg", "ee"]), Some("gg")),
    f("entangle", "kappa_2", Quantity(D::AngularFrequency), None),
    f("entangle", "drive_2", Quantity(D::Energy), None),
    f("entangle", "charge_energy_2", Quantity(D::Energy), None),
    f("entangle", "points", Integer, Some("101")),
    f("validate", "pairs", Integer, Some("50")),
    f("validate", "kappa_max", Number, Some("3")),
    f("validate", "nbar_max", Number, Some("5")),
    f("validate", "population_tolerance", Number, Some("1e-5")),
    f("validate", "boltzmann_cut", Number, Some("1e-8")),
    f("validate", "max_cutoff", Integer, Some("600")),
    f("validate", "mc_samples", Integer, Some("10000")),
    f("validate", "entropy_cases", Integer, Some("8")),
    f("validate", "entropy_tolerance", Number, Some("1e-6")),
];

pub fn field(section: &str, key: &str) -> Option<&'static Field> {
    SCHEMA.iter().find(|f| f.section == section && f.key == key)
}

fn known_section(section: &str) -> bool {
    SCHEMA.iter().any(|f| f.section == section)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// SI value.
    Quantity(f64, Dimension),
    Integer(i64),
    Number(f64),
    Bool(bool),
    Choice(String),
}

impl Value {
    fn canonical(&self) -> String {
        match self {
            Value::Quantity(v, d) => format!("{v:?} {}", d.si_unit()),
            Value::Integer(i) => i.to_string(),
            Value::Number(v) => format!("{v:?}"),
            Value::Bool(b) => b.to_string(),
            Value::Choice(s) => s.clone(),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
        return (b != 0.0).then(|| a / b).filter(|v| v.is_finite());
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    match kind {
        Quantity(_) | AnyQuantity => {
            let (num, unit) = match raw.split_once(char::is_whitespace) {
                Some((n, u)) => (n, u.trim()),
                None => (raw, ""),
            };
            let v = parse_number(num).filter(|_| !num.contains('/')).ok_or_else(|| format!("`{num}` is not a number"))?;
            if unit.is_empty() {
                return Err(match kind {
                    Quantity(d) => format!("missing unit; expected a {} in one of {}", d.name(), units::suffixes(d).join(", ")),
                    _ => "missing unit".into(),
                });
            }
            let (dim, factor) = units::lookup(unit).ok_or_else(|| format!("unknown unit `{unit}`"))?;
            if let Quantity(want) = kind {
                if dim != want {
                    return Err(format!("unit `{unit}` is a {}, expected a {}", dim.name(), want.name()));
                }
            }
            Ok(Value::Quantity(v * factor, dim))
        }
        Integer => raw.parse::<i64>().map(Value::Integer).map_err(|_| format!("`{raw}` is not an integer")),
        Number => parse_number(raw).map(Value::Number).ok_or_else(|| format!("`{raw}` is not a plain number")),
        Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("`{raw}` is not true or false")),
        },
        Choice(options) => options
            .iter()
            .find(|o| **o == raw)
            .map(|o| Value::Choice(o.to_string()))
            .ok_or_else(|| format!("`{raw}` is not one of {}", options.join(", "))),
    }
}

/// Parsed scenario: explicitly given fields only; defaults are applied by
/// the accessors.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    values: BTreeMap<(String, String), Value>,
    lines: BTreeMap<(String, String), usize>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Scenario::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(Some(n), None, "unterminated section header"))?
                    .trim();
                if !known_section(name) {
                    return Err(ConfigError::new(Some(n), None, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(Some(n), None, "expected `key = value`"))?;
            let key = key.trim();
            let sec = section
                .as_deref()
                .ok_or_else(|| ConfigError::new(Some(n), Some(key.into()), "field outside any section"))?;
            let name = format!("{sec}.{key}");
            let spec = field(sec, key).ok_or_else(|| ConfigError::new(Some(n), Some(name.clone()), "unknown key"))?;
            let value = parse_value(spec.kind, raw).map_err(|m| ConfigError::new(Some(n), Some(name.clone()), m))?;
            let id = (sec.to_string(), key.to_string());
            if out.values.contains_key(&id) {
                return Err(ConfigError::new(Some(n), Some(name), "duplicate key"));
            }
            out.values.insert(id.clone(), value);
            out.lines.insert(id, n);
        }
        Ok(out)
    }

    /// Canonical text: SCHEMA order, SI units, shortest round-trip numbers.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for spec in SCHEMA {
            let Some(v) = self.values.get(&(spec.section.to_string(), spec.key.to_string())) else {
                continue;
            };
            if spec.section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{}]", spec.section);
                current = spec.section;
            }
            let _ = writeln!(out, "{} = {}", spec.key, v.canonical());
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        Sha256::digest(self.serialize().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.values.keys().any(|(s, _)| s == section)
    }

    pub fn is_set(&self, section: &str, key: &str) -> bool {
        self.values.contains_key(&(section.to_string(), key.to_string()))
    }

    /// Overrides or adds a field; `raw` is parsed like a file value.
    pub fn set(&mut self, section: &str, key: &str, raw: &str) -> Result<(), ConfigError> {
        let name = format!("{section}.{key}");
        let spec = field(section, key).ok_or_else(|| ConfigError::new(None, Some(name.clone()), "unknown key"))?;
        let value = parse_value(spec.kind, raw).map_err(|m| ConfigError::new(None, Some(name), m))?;
        self.values.insert((section.to_string(), key.to_string()), value);
        Ok(())
    }

    pub fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.lines.get(&(section.to_string(), key.to_string())).copied()
    }

    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.line(section, key), Some(format!("{section}.{key}")), message)
    }

    fn get(&self, section: &str, key: &str) -> Result<Option<Value>, ConfigError> {
        let spec = field(section, key).expect("field is in the schema");
        if let Some(v) = self.values.get(&(section.to_string(), key.to_string())) {
            return Ok(Some(v.clone()));
        }
        Ok(spec.default.map(|d| parse_value(spec.kind, d).expect("schema default parses")))
    }

    fn require(&self, section: &str, key: &str) -> Result<Value, ConfigError> {
        self.get(section, key)?.ok_or_else(|| self.error(section, key, "required field is missing"))
    }

    pub fn opt_quantity(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        Ok(match self.get(section, key)? {
            Some(Value::Quantity(v, _)) => Some(v),
            _ => None,
        })
    }

    pub fn quantity(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        match self.require(section, key)? {
            Value::Quantity(v, _) => Ok(v),
            _ => unreachable!("schema kind"),
        }
    }

    /// Value and dimension of an [`Kind::AnyQuantity`] field.
    pub fn any_quantity(&self, section: &str, key: &str) -> Result<(f64, Dimension), ConfigError> {
        match self.require(section, key)? {
            Value::Quantity(v, d) => Ok((v, d)),
            _ => unreachable!("schema kind"),
        }
    }

    pub fn opt_number(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        Ok(match self.get(section, key)? {
            Some(Value::Number(v)) => Some(v),
            _ => None,
        })
    }

    pub fn number(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.opt_number(section, key)?.ok_or_else(|| self.error(section, key, "required field is missing"))
    }

    pub fn integer(&self, section: &str, key: &str) -> Result<i64, ConfigError> {
        match self.require(section, key)? {
            Value::Integer(v) => Ok(v),
            _ => unreachable!("schema kind"),
        }
    }

    /// Non-negative integer field as a count.
    pub fn count(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let v = self.integer(section, key)?;
        usize::try_from(v).map_err(|_| self.error(section, key, "must be non-negative"))
    }

    pub fn flag(&self, section: &str, key: &str) -> Result<bool, ConfigError> {
        match self.require(section, key)? {
            Value::Bool(b) => Ok(b),
            _ => unreachable!("schema kind"),
        }
    }

    pub fn choice(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        match self.require(section, key)? {
            Value::Choice(s) => Ok(s),
            _ => unreachable!("schema kind"),
        }
    }

    /// Explicit fields as `{section: {key: canonical text}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for ((s, k), v) in &self.values {
            let entry = map.entry(s.clone()).or_insert_with(|| serde_json::Value::Object(Default::default()));
            if let serde_json::Value::Object(m) = entry {
                m.insert(k.clone(), serde_json::Value::String(v.canonical()));
            }
        }
        serde_json::Value::Object(map)
    }
}
