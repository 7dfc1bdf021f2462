//! Typed views of a [`Scenario`] for the engines.

use levem::interferometry::PulseSchedule;
use levem::params::{CircuitSpec, FrequencyModel, ModelSetup, ParticleSpec, TrapSpec};
use levem::trap::RigidBodyState;
use levem::{Circuit, Particle, QubitParams, Schedule, Setup, State, Trap};
use nalgebra::{UnitQuaternion, Vector3};

use crate::config::{ConfigError, Scenario};

fn engine(section: &str, e: levem::Error) -> ConfigError {
    ConfigError::new(None, Some(format!("[{section}]")), e.to_string())
}

pub fn particle(s: &Scenario) -> Result<Particle, ConfigError> {
    let shape = s.choice("particle", "shape")?;
    let charge = s.quantity("particle", "charge")?;
    let p = if shape == "point" {
        for key in ["dipole", "dipole_x", "dipole_y", "diameter", "length"] {
            if s.is_set("particle", key) {
                return Err(s.error("particle", key, "not used by a point particle"));
            }
        }
        ParticleSpec::point_charge(s.quantity("particle", "mass")?, charge)
    } else {
        let d = s.quantity("particle", "diameter")?;
        let l = s.quantity("particle", "length")?;
        let dipole = s.quantity("particle", "dipole")?;
        let base = match s.opt_quantity("particle", "mass")? {
            Some(m) => ParticleSpec::cylinder(d, l, m, charge, dipole),
            None => ParticleSpec::silicon_cylinder(d, l, charge, dipole),
        }
        .map_err(|e| engine("particle", e))?;
        let px = s.quantity("particle", "dipole_x")?;
        let py = s.quantity("particle", "dipole_y")?;
        ParticleSpec::new(base.mass, base.charge, Vector3::new(px, py, dipole), base.quadrupole_body, base.inertia)
    };
    p.map_err(|e| engine("particle", e))
}

pub fn trap(s: &Scenario) -> Result<Trap, ConfigError> {
    TrapSpec::new(
        s.quantity("trap", "z0")?,
        s.quantity("trap", "U_dc")?,
        s.quantity("trap", "U_ac")?,
        s.quantity("trap", "drive_frequency")?,
        s.number("trap", "k")?,
    )
    .map_err(|e| engine("trap", e))
}

pub fn circuit(s: &Scenario) -> Result<Circuit, ConfigError> {
    let c = CircuitSpec {
        endcap_capacitance: s.quantity("circuit", "C")?,
        coupling_capacitance: s.quantity("circuit", "C_c")?,
        gate_capacitance: s.quantity("circuit", "C_g")?,
        junction_capacitance: s.quantity("circuit", "C_J")?,
        resistance: s.quantity("circuit", "R")?,
        critical_current: s.quantity("circuit", "I_c")?,
        flux: s.quantity("circuit", "flux")?,
        gate_voltage: s.quantity("circuit", "gate_voltage")?,
        flux_rate: s.quantity("circuit", "flux_rate")?,
        total_capacitance_override: s.opt_quantity("circuit", "C_sigma")?,
    };
    c.validate().map_err(|e| engine("circuit", e))?;
    Ok(c)
}

pub fn setup(s: &Scenario) -> Result<Setup, ConfigError> {
    let frequency_model = match s.choice("qubit", "frequency_model")?.as_str() {
        "stiffened" => FrequencyModel::Stiffened,
        _ => FrequencyModel::Secular,
    };
    let setup = ModelSetup {
        particle: particle(s)?,
        trap: trap(s)?,
        circuit: circuit(s)?,
        occupation: s.integer("qubit", "N")?,
        temperature: s.quantity("qubit", "temperature")?,
        dephasing_rate: s.quantity("qubit", "dephasing_rate")?,
        frequency_model,
    };
    setup.validate().map_err(|e| engine("qubit", e))?;
    Ok(setup)
}

pub fn reduced(setup: &Setup) -> Result<QubitParams, ConfigError> {
    setup.reduce().map_err(|e| engine("qubit", e))
}

/// Pulse schedule: `tau` or `tau_periods` give the closed symmetric
/// schedule, otherwise explicit `t1`, `t2`, `t3`. `readout` moves `t3`.
pub fn schedule(s: &Scenario, omega: f64) -> Result<Schedule, ConfigError> {
    let tau = s.opt_quantity("schedule", "tau")?;
    let periods = s.opt_number("schedule", "tau_periods")?;
    let explicit = ["t1", "t2", "t3"].iter().filter(|k| s.is_set("schedule", k)).count();
    let fail = |key: &str, e: levem::Error| s.error("schedule", key, e.to_string());
    let base = match (tau, periods, explicit) {
        (Some(t), None, 0) => PulseSchedule::symmetric(t, omega).map_err(|e| fail("tau", e))?,
        (None, Some(p), 0) => {
            PulseSchedule::symmetric(p * std::f64::consts::TAU / omega, omega).map_err(|e| fail("tau_periods", e))?
        }
        (None, None, 3) => PulseSchedule::explicit(
            s.quantity("schedule", "t1")?,
            s.quantity("schedule", "t2")?,
            s.quantity("schedule", "t3")?,
        )
        .map_err(|e| fail("t1", e))?,
        _ => {
            return Err(ConfigError::new(
                None,
                Some("[schedule]".into()),
                "give exactly one of tau, tau_periods, or all of t1, t2, t3",
            ))
        }
    };
    match s.opt_quantity("schedule", "readout")? {
        Some(t3) => base.with_readout(t3).map_err(|e| fail("readout", e)),
        None => Ok(base),
    }
}

pub fn initial_state(s: &Scenario) -> Result<State, ConfigError> {
    let q = |k: &str| s.quantity("initial", k);
    let orientation = UnitQuaternion::from_euler_angles(q("roll")?, q("pitch")?, q("yaw")?);
    let mut state = RigidBodyState::at_rest(Vector3::new(q("x")?, q("y")?, q("z")?), orientation);
    state.velocity = Vector3::new(q("vx")?, q("vy")?, q("vz")?);
    state.angular_momentum = Vector3::new(q("Jx")?, q("Jy")?, q("Jz")?);
    Ok(state)
}
