//! Particle, trap and circuit specifications together with every derived
//! scalar of the reduced qubit-oscillator model.
//!
//! Frequencies are angular (rad/s) throughout. Energies are in joules.

use nalgebra::{Matrix3, Vector3};

use crate::constants::{AMU, ANGSTROM, BOLTZMANN, ELEMENTARY_CHARGE, HBAR, SILICON_DENSITY};
use crate::error::{invalid, Error, Result};
use crate::real::Real;

/// Largest accepted ratio between principal moments of inertia.
pub const MAX_INERTIA_SPREAD: f64 = 1e12;

/// Charged rigid body: monopole, body-frame dipole and quadrupole, and
/// principal moments of inertia.
///
/// The quadrupole convention is `Q = ∫ρ(x) (3 x⊗x − |x|² 1) d³x`; with it
/// the quadrupole energy in the trap is `−U/(4z₀²) e_z·Q e_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec<T: Real> {
    /// kg
    pub mass: T,
    /// C
    pub charge: T,
    /// C·m, body frame
    pub dipole_body: Vector3<T>,
    /// C·m², body frame, symmetric
    pub quadrupole_body: Matrix3<T>,
    /// kg·m², along the body axes
    pub inertia: Vector3<T>,
}

impl<T: Real> ParticleSpec<T> {
    pub fn new(
        mass: T,
        charge: T,
        dipole_body: Vector3<T>,
        quadrupole_body: Matrix3<T>,
        inertia: Vector3<T>,
    ) -> Result<Self> {
        let spec = Self { mass, charge, dipole_body, quadrupole_body, inertia };
        spec.validate()?;
        Ok(spec)
    }

    /// Point charge with an isotropic unit-scale inertia tensor; rotations
    /// are inert because the dipole and quadrupole vanish.
    pub fn point_charge(mass: T, charge: T) -> Result<Self> {
        Self::new(mass, charge, Vector3::zeros(), Matrix3::zeros(), Vector3::repeat(mass * T::lit(1e-18)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) {
            return Err(invalid("mass", "must be positive"));
        }
        if !self.charge.is_finite() {
            return Err(invalid("charge", "must be finite"));
        }
        if self.inertia.iter().any(|i| !(*i > T::zero())) {
            return Err(invalid("inertia", "principal moments must be positive"));
        }
        if self.quadrupole_body != self.quadrupole_body.transpose() {
            return Err(invalid("quadrupole", "must be symmetric"));
        }
        let max = self.inertia.max();
        let min = self.inertia.min();
        if max / min > T::lit(MAX_INERTIA_SPREAD) {
            return Err(invalid("inertia", "principal moments span more than 12 decades"));
        }
        Ok(())
    }

    /// Homogeneously surface-charged solid cylinder of the given mass. The
    /// symmetry axis is body axis 3; the dipole points along it.
    pub fn cylinder(diameter: T, length: T, mass: T, charge: T, dipole: T) -> Result<Self> {
        if !(diameter > T::zero()) || !(length > T::zero()) {
            return Err(invalid("cylinder", "diameter and length must be positive"));
        }
        let a = diameter / T::lit(2.0);
        let a2 = a * a;
        let l2 = length * length;
        let twelve = T::lit(12.0);
        let i_perp = mass * (T::lit(3.0) * a2 + l2) / twelve;
        let i_axial = mass * a2 / T::lit(2.0);

        // Surface charge split between the mantle and the two end caps.
        let mantle = T::two_pi() * a * length;
        let caps = T::two_pi() * a2;
        let q_mantle = charge * mantle / (mantle + caps);
        let q_caps = charge - q_mantle;
        let s_zz = q_mantle * l2 / twelve + q_caps * l2 / T::lit(4.0);
        let s_xx = q_mantle * a2 / T::lit(2.0) + q_caps * a2 / T::lit(4.0);
        let trace = s_xx + s_xx + s_zz;
        let three = T::lit(3.0);
        let quadrupole = Matrix3::from_diagonal(&Vector3::new(
            three * s_xx - trace,
            three * s_xx - trace,
            three * s_zz - trace,
        ));

        Self::new(
            mass,
            charge,
            Vector3::new(T::zero(), T::zero(), dipole),
            quadrupole,
            Vector3::new(i_perp, i_perp, i_axial),
        )
    }

    /// As [`ParticleSpec::cylinder`] with the silicon mass density.
    pub fn silicon_cylinder(diameter: T, length: T, charge: T, dipole: T) -> Result<Self> {
        let a = diameter / T::lit(2.0);
        let mass = T::lit(SILICON_DENSITY) * T::pi() * a * a * length;
        Self::cylinder(diameter, length, mass, charge, dipole)
    }
}

/// Hyperbolic Paul trap: ring at `U_dc + U_ac cos(Ω_ac t)` against the
/// floating endcaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapSpec<T: Real> {
    /// Half the endcap distance, m.
    pub z0: T,
    /// V
    pub u_dc: T,
    /// V
    pub u_ac: T,
    /// Ω_ac, rad/s
    pub drive_frequency: T,
    /// Geometry factor k of the endcap field near the centre.
    pub geometry_factor: T,
}

impl<T: Real> TrapSpec<T> {
    pub fn new(z0: T, u_dc: T, u_ac: T, drive_frequency: T, geometry_factor: T) -> Result<Self> {
        let spec = Self { z0, u_dc, u_ac, drive_frequency, geometry_factor };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z0 > T::zero()) {
            return Err(invalid("z0", "must be positive"));
        }
        if !(self.drive_frequency > T::zero()) {
            return Err(invalid("drive_frequency", "must be positive"));
        }
        let k = self.geometry_factor;
        if !(k > T::zero() && k <= T::lit(0.5)) {
            return Err(invalid("geometry_factor", "must satisfy 0 < k <= 1/2"));
        }
        if !self.u_dc.is_finite() || !self.u_ac.is_finite() {
            return Err(invalid("voltage", "must be finite"));
        }
        Ok(())
    }

    /// Ring potential `U_dc + U_ac cos(Ω_ac t)`.
    #[inline]
    pub fn ring_voltage(&self, t: T) -> T {
        self.u_dc + self.u_ac * (self.drive_frequency * t).cos()
    }

    /// Drive period 2π/Ω_ac.
    pub fn drive_period(&self) -> T {
        T::two_pi() / self.drive_frequency
    }

    /// Translational Mathieu parameter `2 q U_ac / (M z₀² Ω_ac²)`.
    pub fn mathieu_parameter(&self, particle: &ParticleSpec<T>) -> T {
        T::lit(2.0) * particle.charge * self.u_ac
            / (particle.mass * self.z0 * self.z0 * self.drive_frequency * self.drive_frequency)
    }
}

/// Capacitances and Josephson parameters of the Cooper-pair box circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec<T: Real> {
    /// Endcap capacitance C, F.
    pub endcap_capacitance: T,
    /// Coupling capacitance C_c, F.
    pub coupling_capacitance: T,
    /// Gate capacitance C_g, F.
    pub gate_capacitance: T,
    /// Junction capacitance C_J, F.
    pub junction_capacitance: T,
    /// Ω
    pub resistance: T,
    /// Junction critical current I_c, A.
    pub critical_current: T,
    /// External loop flux Φ, Wb.
    pub flux: T,
    /// Gate voltage U, V.
    pub gate_voltage: T,
    /// Flux rate Φ̇, V.
    pub flux_rate: T,
    /// Replaces the computed C_Σ when the breakdown is not known.
    pub total_capacitance_override: Option<T>,
}

impl<T: Real> CircuitSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let caps = [
            ("endcap_capacitance", self.endcap_capacitance),
            ("coupling_capacitance", self.coupling_capacitance),
            ("gate_capacitance", self.gate_capacitance),
            ("junction_capacitance", self.junction_capacitance),
        ];
        for (name, c) in caps {
            if !(c > T::zero()) {
                return Err(invalid(name, "capacitance must be positive"));
            }
        }
        if let Some(c) = self.total_capacitance_override {
            if !(c > T::zero()) {
                return Err(invalid("total_capacitance", "must be positive"));
            }
        }
        if !(self.resistance >= T::zero()) {
            return Err(invalid("resistance", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCircuit<T: Real> {
    /// C_eff = C C_c / (C_c + 2C), F.
    pub effective_capacitance: T,
    /// C_Σ, F.
    pub total_capacitance: T,
    /// Voltage-induced Cooper-pair number n_g.
    pub gate_charge: T,
    /// E_J, J.
    pub josephson_energy: T,
}

/// Reduced one-dimensional qubit-oscillator model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitOscillatorParams<T: Real> {
    /// ω, rad/s
    pub omega: T,
    /// κ, rad/s
    pub kappa: T,
    /// E_c, J
    pub charge_energy: T,
    /// V_ext, J
    pub drive: T,
    /// Cooper-pair offset N.
    pub occupation: i64,
    /// γ_d, 1/s
    pub dephasing_rate: T,
    /// K
    pub temperature: T,
}

impl<T: Real> QubitOscillatorParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > T::zero()) {
            return Err(invalid("omega", "must be positive"));
        }
        if !(self.dephasing_rate >= T::zero()) {
            return Err(invalid("dephasing_rate", "must be non-negative"));
        }
        if !(self.temperature >= T::zero()) {
            return Err(invalid("temperature", "must be non-negative"));
        }
        Ok(())
    }

    /// E_c/ħ, rad/s.
    #[inline]
    pub fn charge_rate(&self) -> T {
        self.charge_energy / T::lit(HBAR)
    }

    /// V_ext/ħ, rad/s.
    #[inline]
    pub fn drive_rate(&self) -> T {
        self.drive / T::lit(HBAR)
    }

    /// Dimensionless branch offset κ/ω.
    #[inline]
    pub fn coupling_ratio(&self) -> T {
        self.kappa / self.omega
    }

    /// Dimensionless drive offset V_ext/ħω.
    #[inline]
    pub fn drive_ratio(&self) -> T {
        self.drive_rate() / self.omega
    }

    /// Phase rate κ²/ω + 2κV_ext/ħω − E_c/ħ multiplying (τ − Δτ/2).
    pub fn fringe_rate(&self) -> T {
        self.kappa * self.kappa / self.omega
            + T::lit(2.0) * self.kappa * self.drive_rate() / self.omega
            - self.charge_rate()
    }

    /// Mean phonon number at the stored temperature.
    pub fn mean_phonon_number(&self) -> T {
        mean_phonon_number(self.omega, self.temperature)
    }

    /// `coth(ħω / 2k_BT)`, equal to 1 at zero temperature.
    pub fn thermal_coth(&self) -> T {
        thermal_coth(self.omega, self.temperature)
    }
}

/// Secular centre-of-mass frequencies `(ω_x, ω_y, ω_z)` at zero bias.
pub fn secular_frequencies<T: Real>(particle: &ParticleSpec<T>, trap: &TrapSpec<T>) -> (T, T, T) {
    let wz = particle.charge * trap.u_ac
        / (T::lit(2.0).sqrt() * particle.mass * trap.drive_frequency * trap.z0 * trap.z0);
    let wxy = wz / T::lit(2.0);
    (wxy, wxy, wz)
}

pub fn derived_circuit<T: Real>(circuit: &CircuitSpec<T>) -> DerivedCircuit<T> {
    let c = circuit.endcap_capacitance;
    let cc = circuit.coupling_capacitance;
    let cg = circuit.gate_capacitance;
    let effective = c * cc / (cc + T::lit(2.0) * c);
    let total = circuit
        .total_capacitance_override
        .unwrap_or(effective + cg + T::lit(2.0) * circuit.junction_capacitance);
    let e = T::lit(ELEMENTARY_CHARGE);
    let hbar = T::lit(HBAR);
    let gate_charge = cg * circuit.gate_voltage / (T::lit(2.0) * e)
        + (c + cg) * circuit.flux_rate / (T::lit(4.0) * e);
    let josephson_energy = hbar * circuit.critical_current * (e * circuit.flux / hbar).cos() / e;
    DerivedCircuit {
        effective_capacitance: effective,
        total_capacitance: total,
        gate_charge,
        josephson_energy,
    }
}

/// Oscillator frequency including the stiffening by the charge qubit,
/// `ω² = ω_z² + q²k²/(C_Σ M z₀²)`.
pub fn corrected_frequency<T: Real>(
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    derived: &DerivedCircuit<T>,
) -> T {
    let (_, _, wz) = secular_frequencies(particle, trap);
    let qk = particle.charge * trap.geometry_factor;
    (wz * wz + qk * qk / (derived.total_capacitance * particle.mass * trap.z0 * trap.z0)).sqrt()
}

/// Qubit-oscillator coupling `κ = 2ekq / (C_Σ z₀ √(2Mħω))`.
pub fn coupling_strength<T: Real>(
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    derived: &DerivedCircuit<T>,
    omega: T,
) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::Domain { op: "coupling_strength", reason: "omega must be positive".into() });
    }
    let e = T::lit(ELEMENTARY_CHARGE);
    let two = T::lit(2.0);
    Ok(two * e * trap.geometry_factor * particle.charge
        / (derived.total_capacitance * trap.z0 * (two * particle.mass * T::lit(HBAR) * omega).sqrt()))
}

/// Shift of the axial potential minimum `z_s` (m) and the charge energy
/// `E_c` (J) for a box holding N or N+1 Cooper pairs.
pub fn shift_and_charge_energy<T: Real>(
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    derived: &DerivedCircuit<T>,
    occupation: i64,
    omega: T,
) -> (T, T) {
    let e = T::lit(ELEMENTARY_CHARGE);
    let two = T::lit(2.0);
    let n = T::lit(occupation as f64);
    let c_sigma = derived.total_capacitance;
    let k = trap.geometry_factor;
    let q = particle.charge;
    let shift = two * e * k * n * q / (c_sigma * trap.z0 * particle.mass * omega * omega);
    let energy = two * e * e * (T::one() + two * n - k * q * shift / (e * trap.z0)) / c_sigma;
    (shift, energy)
}

/// Linear drive `V_ext = q U_dc z_s √(ħ / 2Mω z₀⁴)` (J).
pub fn external_drive<T: Real>(
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    shift: T,
    omega: T,
) -> T {
    let z0_2 = trap.z0 * trap.z0;
    particle.charge
        * trap.u_dc
        * shift
        * (T::lit(HBAR) / (T::lit(2.0) * particle.mass * omega * z0_2 * z0_2)).sqrt()
}

/// Bose-Einstein occupation `1/(exp(ħω/k_BT) − 1)`; zero at T = 0.
pub fn mean_phonon_number<T: Real>(omega: T, temperature: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    let x = T::lit(HBAR) * omega / (T::lit(BOLTZMANN) * temperature);
    T::one() / x.exp_m1()
}

/// `coth(ħω/2k_BT)`, regularised to 1 at T = 0.
pub fn thermal_coth<T: Real>(omega: T, temperature: T) -> T {
    if temperature <= T::zero() {
        return T::one();
    }
    let x = T::lit(HBAR) * omega / (T::lit(2.0) * T::lit(BOLTZMANN) * temperature);
    T::one() / x.tanh()
}

/// Which oscillator frequency the reduced model uses.
///
/// `Secular` takes ω = ω_z, which is what the quoted reference values
/// (ω ≈ 1.39·10⁵ rad/s, z_s ≈ 1.17 μm) correspond to. `Stiffened` adds the
/// qubit-induced stiffness from [`corrected_frequency`], a 0.9 % shift for
/// the reference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyModel {
    #[default]
    Secular,
    Stiffened,
}

/// Complete physical setup feeding the reduced model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSetup<T: Real> {
    pub particle: ParticleSpec<T>,
    pub trap: TrapSpec<T>,
    pub circuit: CircuitSpec<T>,
    pub occupation: i64,
    /// K
    pub temperature: T,
    /// 1/s
    pub dephasing_rate: T,
    pub frequency_model: FrequencyModel,
}

/// Every derived scalar of a [`ModelSetup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParameters<T: Real> {
    pub secular: (T, T, T),
    pub stiffened_omega: T,
    pub omega: T,
    pub kappa: T,
    pub shift: T,
    pub charge_energy: T,
    pub drive: T,
    pub mean_phonon_number: T,
    pub circuit: DerivedCircuit<T>,
}

impl<T: Real> ModelSetup<T> {
    pub fn validate(&self) -> Result<()> {
        self.particle.validate()?;
        self.trap.validate()?;
        self.circuit.validate()?;
        if !(self.temperature >= T::zero()) {
            return Err(invalid("temperature", "must be non-negative"));
        }
        if !(self.dephasing_rate >= T::zero()) {
            return Err(invalid("dephasing_rate", "must be non-negative"));
        }
        Ok(())
    }

    pub fn omega(&self, derived: &DerivedCircuit<T>) -> T {
        match self.frequency_model {
            FrequencyModel::Secular => secular_frequencies(&self.particle, &self.trap).2,
            FrequencyModel::Stiffened => corrected_frequency(&self.particle, &self.trap, derived),
        }
    }

    pub fn derive(&self) -> Result<DerivedParameters<T>> {
        self.validate()?;
        let circuit = derived_circuit(&self.circuit);
        let secular = secular_frequencies(&self.particle, &self.trap);
        let stiffened_omega = corrected_frequency(&self.particle, &self.trap, &circuit);
        let omega = self.omega(&circuit);
        let kappa = coupling_strength(&self.particle, &self.trap, &circuit, omega)?;
        let (shift, charge_energy) =
            shift_and_charge_energy(&self.particle, &self.trap, &circuit, self.occupation, omega);
        let drive = external_drive(&self.particle, &self.trap, shift, omega);
        Ok(DerivedParameters {
            secular,
            stiffened_omega,
            omega,
            kappa,
            shift,
            charge_energy,
            drive,
            mean_phonon_number: mean_phonon_number(omega, self.temperature),
            circuit,
        })
    }

    pub fn reduce(&self) -> Result<QubitOscillatorParams<T>> {
        let d = self.derive()?;
        let params = QubitOscillatorParams {
            omega: d.omega,
            kappa: d.kappa,
            charge_energy: d.charge_energy,
            drive: d.drive,
            occupation: self.occupation,
            dephasing_rate: self.dephasing_rate,
            temperature: self.temperature,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_bias(&self, u_dc: T) -> Self {
        let mut s = self.clone();
        s.trap.u_dc = u_dc;
        s
    }
}

/// Reference parameter set: silicon-sized cylinder (4.7 nm × 42 nm) of
/// 10⁶ amu carrying 200 e and a 200 eÅ dipole along its axis, in a
/// 0.5 mm trap driven at 1 kV and 2π·250 MHz, coupled with k = 0.4 to a
/// box of C_Σ = 4.4 fF at N = 10, T = 1 mK, γ_d = 10⁷ s⁻¹, R = 100 MΩ.
///
/// The individual capacitances are illustrative; only C_Σ (override) and
/// C (for the RC check) enter the results.
pub mod reference {
    use super::*;

    pub fn particle() -> ParticleSpec<f64> {
        ParticleSpec::cylinder(
            4.7e-9,
            42e-9,
            1e6 * AMU,
            200.0 * ELEMENTARY_CHARGE,
            200.0 * ELEMENTARY_CHARGE * ANGSTROM,
        )
        .expect("reference particle is valid")
    }

    pub fn trap(u_dc: f64) -> TrapSpec<f64> {
        TrapSpec::new(0.25e-3, u_dc, 1e3, std::f64::consts::TAU * 250e6, 0.4)
            .expect("reference trap is valid")
    }

    pub fn circuit() -> CircuitSpec<f64> {
        CircuitSpec {
            endcap_capacitance: 1e-15,
            coupling_capacitance: 1e-12,
            gate_capacitance: 0.1e-15,
            junction_capacitance: 1.7e-15,
            resistance: 100e6,
            critical_current: 0.0,
            flux: 0.0,
            gate_voltage: 0.0,
            flux_rate: 0.0,
            total_capacitance_override: Some(4.4e-15),
        }
    }

    pub fn setup(u_dc: f64) -> ModelSetup<f64> {
        ModelSetup {
            particle: particle(),
            trap: trap(u_dc),
            circuit: circuit(),
            occupation: 10,
            temperature: 1e-3,
            dephasing_rate: 1e7,
            frequency_model: FrequencyModel::Secular,
        }
    }
}
