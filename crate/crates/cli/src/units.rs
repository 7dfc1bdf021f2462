//! Unit suffixes accepted in scenario files and their SI factors.

use std::f64::consts::{PI, TAU};

use levem::constants::{AMU, ELEMENTARY_CHARGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Mass,
    Charge,
    Dipole,
    Voltage,
    AngularFrequency,
    Rate,
    Capacitance,
    Resistance,
    Current,
    Flux,
    Time,
    Temperature,
    Energy,
    Angle,
    Velocity,
    AngularMomentum,
}

impl Dimension {
    /// Unit written by the canonical serializer.
    pub fn si_unit(self) -> &'static str {
        use Dimension::*;
        match self {
            Length => "m",
            Mass => "kg",
            Charge => "C",
            Dipole => "C*m",
            Voltage => "V",
            AngularFrequency => "rad/s",
            Rate => "1/s",
            Capacitance => "F",
            Resistance => "Ohm",
            Current => "A",
            Flux => "Wb",
            Time => "s",
            Temperature => "K",
            Energy => "J",
            Angle => "rad",
            Velocity => "m/s",
            AngularMomentum => "J*s",
        }
    }

    pub fn name(self) -> &'static str {
        use Dimension::*;
        match self {
            Length => "length",
            Mass => "mass",
            Charge => "charge",
            Dipole => "dipole moment",
            Voltage => "voltage",
            AngularFrequency => "angular frequency",
            Rate => "rate",
            Capacitance => "capacitance",
            Resistance => "resistance",
            Current => "current",
            Flux => "magnetic flux",
            Time => "time",
            Temperature => "temperature",
            Energy => "energy",
            Angle => "angle",
            Velocity => "velocity",
            AngularMomentum => "angular momentum",
        }
    }
}

const EV: f64 = ELEMENTARY_CHARGE;

/// `(suffix, dimension, SI factor)`. Cyclic frequencies (Hz) are converted
/// to angular frequencies.
const UNITS: &[(&str, Dimension, f64)] = &[
    ("m", Dimension::Length, 1.0),
    ("mm", Dimension::Length, 1e-3),
    ("um", Dimension::Length, 1e-6),
    ("nm", Dimension::Length, 1e-9),
    ("A", Dimension::Current, 1.0),
    ("Angstrom", Dimension::Length, 1e-10),
    ("kg", Dimension::Mass, 1.0),
    ("g", Dimension::Mass, 1e-3),
    ("amu", Dimension::Mass, AMU),
    ("C", Dimension::Charge, 1.0),
    ("e", Dimension::Charge, ELEMENTARY_CHARGE),
    ("C*m", Dimension::Dipole, 1.0),
    ("e*Angstrom", Dimension::Dipole, ELEMENTARY_CHARGE * 1e-10),
    ("e*nm", Dimension::Dipole, ELEMENTARY_CHARGE * 1e-9),
    ("D", Dimension::Dipole, 3.335_640_951_981_52e-30),
    ("V", Dimension::Voltage, 1.0),
    ("mV", Dimension::Voltage, 1e-3),
    ("kV", Dimension::Voltage, 1e3),
    ("rad/s", Dimension::AngularFrequency, 1.0),
    ("Hz", Dimension::AngularFrequency, TAU),
    ("kHz", Dimension::AngularFrequency, TAU * 1e3),
    ("MHz", Dimension::AngularFrequency, TAU * 1e6),
    ("GHz", Dimension::AngularFrequency, TAU * 1e9),
    ("1/s", Dimension::Rate, 1.0),
    ("1/ms", Dimension::Rate, 1e3),
    ("1/us", Dimension::Rate, 1e6),
    ("F", Dimension::Capacitance, 1.0),
    ("pF", Dimension::Capacitance, 1e-12),
    ("fF", Dimension::Capacitance, 1e-15),
    ("aF", Dimension::Capacitance, 1e-18),
    ("Ohm", Dimension::Resistance, 1.0),
    ("kOhm", Dimension::Resistance, 1e3),
    ("MOhm", Dimension::Resistance, 1e6),
    ("GOhm", Dimension::Resistance, 1e9),
    ("mA", Dimension::Current, 1e-3),
    ("uA", Dimension::Current, 1e-6),
    ("nA", Dimension::Current, 1e-9),
    ("Wb", Dimension::Flux, 1.0),
    ("s", Dimension::Time, 1.0),
    ("ms", Dimension::Time, 1e-3),
    ("us", Dimension::Time, 1e-6),
    ("ns", Dimension::Time, 1e-9),
    ("ps", Dimension::Time, 1e-12),
    ("K", Dimension::Temperature, 1.0),
    ("mK", Dimension::Temperature, 1e-3),
    ("uK", Dimension::Temperature, 1e-6),
    ("J", Dimension::Energy, 1.0),
    ("eV", Dimension::Energy, EV),
    ("meV", Dimension::Energy, EV * 1e-3),
    ("ueV", Dimension::Energy, EV * 1e-6),
    ("rad", Dimension::Angle, 1.0),
    ("deg", Dimension::Angle, PI / 180.0),
    ("m/s", Dimension::Velocity, 1.0),
    ("mm/s", Dimension::Velocity, 1e-3),
    ("um/s", Dimension::Velocity, 1e-6),
    ("J*s", Dimension::AngularMomentum, 1.0),
];

pub fn lookup(suffix: &str) -> Option<(Dimension, f64)> {
    UNITS.iter().find(|u| u.0 == suffix).map(|u| (u.1, u.2))
}

/// Suffixes accepted for a dimension, for error messages.
pub fn suffixes(dim: Dimension) -> Vec<&'static str> {
    UNITS.iter().filter(|u| u.1 == dim).map(|u| u.0).collect()
}
