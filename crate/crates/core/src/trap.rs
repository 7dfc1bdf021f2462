//! Classical ro-translational dynamics of a charged rigid body in an ideal
//! quadrupole Paul trap.
//!
//! Two force laws are provided: the exact time-dependent field of the
//! driven trap and the cycle-averaged effective potential of the secular
//! macromotion. Both are integrated with the same fixed-step
//! kick-drift-kick scheme, where the drift part advances the free
//! asymmetric rotor by a symmetric sequence of body-axis rotations.

use std::collections::VecDeque;

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::params::{ParticleSpec, TrapSpec};
use crate::real::Real;

/// Minimum number of integrator steps per drive period.
pub const STEPS_PER_DRIVE_MIN: f64 = 40.0;
/// Minimum number of integrator steps per secular period.
pub const STEPS_PER_SECULAR_MIN: f64 = 40.0;
/// Mathieu parameter above which the secular approximation is flagged.
pub const MATHIEU_WARNING: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState<T: Real> {
    /// m
    pub position: Vector3<T>,
    /// m/s
    pub velocity: Vector3<T>,
    /// Rotation taking body-frame vectors to the space frame.
    pub orientation: UnitQuaternion<T>,
    /// Space frame, kg·m²/s.
    pub angular_momentum: Vector3<T>,
}

impl<T: Real> RigidBodyState<T> {
    pub fn at_rest(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            orientation,
            angular_momentum: Vector3::zeros(),
        }
    }

    pub fn dipole(&self, particle: &ParticleSpec<T>) -> Vector3<T> {
        self.orientation * particle.dipole_body
    }

    pub fn quadrupole(&self, particle: &ParticleSpec<T>) -> Matrix3<T> {
        let r = self.orientation.to_rotation_matrix().into_inner();
        r * particle.quadrupole_body * r.transpose()
    }

    /// Principal axis `i` in the space frame.
    pub fn principal_axis(&self, i: usize) -> Vector3<T> {
        self.orientation * Vector3::ith(i, T::one())
    }

    pub fn inverse_inertia(&self, particle: &ParticleSpec<T>) -> Matrix3<T> {
        let r = self.orientation.to_rotation_matrix().into_inner();
        let inv = Matrix3::from_diagonal(&particle.inertia.map(|i| T::one() / i));
        r * inv * r.transpose()
    }

    pub fn angular_velocity(&self, particle: &ParticleSpec<T>) -> Vector3<T> {
        self.inverse_inertia(particle) * self.angular_momentum
    }

    pub fn kinetic_energy(&self, particle: &ParticleSpec<T>) -> T {
        let half = T::lit(0.5);
        half * particle.mass * self.velocity.norm_squared()
            + half * self.angular_momentum.dot(&self.angular_velocity(particle))
    }

    /// Applies a small space-frame rotation `exp(θ×)` to the orientation.
    pub fn rotated(&self, rotation_vector: Vector3<T>) -> Self {
        let mut s = *self;
        s.orientation = UnitQuaternion::from_scaled_axis(rotation_vector) * self.orientation;
        s
    }
}

/// `A v` with `A = 1 − 3 e_z⊗e_z`.
#[inline]
fn a_mul<T: Real>(v: &Vector3<T>) -> Vector3<T> {
    Vector3::new(v.x, v.y, -T::lit(2.0) * v.z)
}

#[inline]
fn a2_mul<T: Real>(v: &Vector3<T>) -> Vector3<T> {
    Vector3::new(v.x, v.y, T::lit(4.0) * v.z)
}

fn e_z<T: Real>() -> Vector3<T> {
    Vector3::z()
}

/// Exact potential energy in the driven trap at time `t`.
pub fn time_dependent_potential<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    t: T,
) -> T {
    static_quadrupole_energy(state, particle, trap) * trap.ring_voltage(t)
}

/// Energy per volt of ring potential.
fn static_quadrupole_energy<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> T {
    let r = state.position;
    let p = state.dipole(particle);
    let q = state.quadrupole(particle);
    let half = T::lit(0.5);
    let ar = a_mul(&r);
    (half * particle.charge * r.dot(&ar) + p.dot(&ar) - half * q[(2, 2)])
        / (T::lit(2.0) * trap.z0 * trap.z0)
}

/// Exact force and torque of the driven trap at time `t`.
pub fn exact_force_torque<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    t: T,
) -> (Vector3<T>, Vector3<T>) {
    let scale = -trap.ring_voltage(t) / (T::lit(2.0) * trap.z0 * trap.z0);
    let p = state.dipole(particle);
    let q = state.quadrupole(particle);
    let force = a_mul(&(state.position * particle.charge + p)) * scale;
    let torque = (p.cross(&a_mul(&state.position)) + e_z::<T>().cross(&(q * e_z::<T>()))) * scale;
    (force, torque)
}

/// Prefactor `U_ac² / (16 z₀⁴ Ω_ac²)` of the pseudo-potential terms.
fn pseudo_prefactor<T: Real>(trap: &TrapSpec<T>) -> T {
    let z0_2 = trap.z0 * trap.z0;
    trap.u_ac * trap.u_ac / (T::lit(16.0) * z0_2 * z0_2 * trap.drive_frequency * trap.drive_frequency)
}

/// Generalised rotational lever `p × A r + e_z × Q e_z`.
fn rotational_lever<T: Real>(r: &Vector3<T>, p: &Vector3<T>, q: &Matrix3<T>) -> Vector3<T> {
    p.cross(&a_mul(r)) + e_z::<T>().cross(&(q * e_z::<T>()))
}

/// Time-independent effective potential of the secular macromotion.
pub fn effective_potential<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> T {
    let r = state.position;
    let p = state.dipole(particle);
    let q = state.quadrupole(particle);
    let c = pseudo_prefactor(trap);

    let dc = trap.u_dc * static_quadrupole_energy(state, particle, trap);

    let w = rotational_lever(&r, &p, &q);
    let rotational = c * w.dot(&(state.inverse_inertia(particle) * w));

    let d = r * particle.charge + p;
    let translational = c / particle.mass * d.dot(&a2_mul(&d));

    dc + rotational + translational
}

/// Analytic force and torque of [`effective_potential`].
pub fn effective_force_torque<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> (Vector3<T>, Vector3<T>) {
    let two = T::lit(2.0);
    let r = state.position;
    let p = state.dipole(particle);
    let q = state.quadrupole(particle);
    let qc = particle.charge;
    let c = pseudo_prefactor(trap);
    let inv_i = state.inverse_inertia(particle);
    let ez = e_z::<T>();
    let qez = q * ez;

    let dc = -trap.u_dc / (two * trap.z0 * trap.z0);
    let w = rotational_lever(&r, &p, &q);
    let u = inv_i * w;
    let d = r * qc + p;
    let a2d = a2_mul(&d);

    let force = a_mul(&d) * dc
        - a_mul(&u.cross(&p)) * (two * c)
        - a2d * (two * c * qc / particle.mass);

    let rot_grad = (p.cross(&a_mul(&r).cross(&u)) + qez.cross(&u.cross(&ez)) - ez.cross(&(q * u.cross(&ez)))
        + u.cross(&w))
        * two;
    let torque = w * dc - rot_grad * c - p.cross(&a2d) * (two * c / particle.mass);
    (force, torque)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicromotionAmplitudes<T: Real> {
    /// m, peak of the `cos(Ω_ac t)` oscillation
    pub translation: Vector3<T>,
    /// rad, peak rotation vector
    pub rotation: Vector3<T>,
}

/// Peak micromotion amplitudes about the macromotion state.
pub fn micromotion_amplitudes<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> MicromotionAmplitudes<T> {
    let p = state.dipole(particle);
    let q = state.quadrupole(particle);
    let base = trap.u_ac / (T::lit(2.0) * trap.z0 * trap.z0 * trap.drive_frequency * trap.drive_frequency);
    let translation = a_mul(&(state.position * particle.charge + p)) * (base / particle.mass);
    let w = rotational_lever(&state.position, &p, &q);
    let rotation = state.inverse_inertia(particle) * w * base;
    MicromotionAmplitudes { translation, rotation }
}

/// Kinetic energy plus effective potential.
pub fn secular_energy<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> T {
    state.kinetic_energy(particle) + effective_potential(state, particle, trap)
}

/// Largest small-oscillation frequency of the secular dynamics about
/// `state`, from the mass-weighted stiffness of the effective potential
/// in the three translations and three space-frame rotations. Never below
/// ω_z.
pub fn max_secular_frequency<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> T {
    let h_r = trap.z0 * T::lit(1e-6);
    let h_a = T::lit(1e-6);
    let gen = |s: &RigidBodyState<T>| {
        let (f, t) = effective_force_torque(s, particle, trap);
        [f.x, f.y, f.z, t.x, t.y, t.z]
    };
    let mut k = Matrix6::<T>::zeros();
    for j in 0..6 {
        let delta = Vector3::ith(j % 3, T::one());
        let (plus, minus, h) = if j < 3 {
            let mut a = *state;
            let mut b = *state;
            a.position += delta * h_r;
            b.position -= delta * h_r;
            (a, b, h_r)
        } else {
            (state.rotated(delta * h_a), state.rotated(-delta * h_a), h_a)
        };
        let fp = gen(&plus);
        let fm = gen(&minus);
        for i in 0..6 {
            k[(i, j)] = -(fp[i] - fm[i]) / (T::lit(2.0) * h);
        }
    }
    let k = (k + k.transpose()) * T::lit(0.5);

    // M^{-1/2} K M^{-1/2} with M = diag(m, m, m, I_space).
    let inv_i = state.inverse_inertia(particle);
    let inv_sqrt_i = SymmetricEigen::new(inv_i);
    let inv_sqrt_i = inv_sqrt_i.eigenvectors
        * Matrix3::from_diagonal(&inv_sqrt_i.eigenvalues.map(|l| l.max(T::zero()).sqrt()))
        * inv_sqrt_i.eigenvectors.transpose();
    let mut w = Matrix6::<T>::zeros();
    let inv_sqrt_m = T::one() / particle.mass.sqrt();
    for i in 0..3 {
        w[(i, i)] = inv_sqrt_m;
    }
    w.fixed_view_mut::<3, 3>(3, 3).copy_from(&inv_sqrt_i);
    let dyn_matrix = w * k * w;
    let eig = SymmetricEigen::new((dyn_matrix + dyn_matrix.transpose()) * T::lit(0.5));
    let max_abs = eig.eigenvalues.iter().fold(T::zero(), |m, l| m.max(l.abs()));
    let (_, _, wz) = crate::params::secular_frequencies(particle, trap);
    max_abs.sqrt().max(wz.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityWarning {
    /// Mathieu parameter too large for the secular approximation.
    FastDriveViolated { mathieu_parameter: f64 },
    /// Curvature of the effective potential at the trap centre is negative
    /// along `axis` (0 = x, 1 = y, 2 = z).
    AntiConfining { axis: usize, curvature: f64 },
}

/// Flags parameter regimes where the effective potential is not trustworthy.
pub fn stability_warnings<T: Real>(particle: &ParticleSpec<T>, trap: &TrapSpec<T>) -> Vec<StabilityWarning> {
    let mut out = Vec::new();
    let mathieu = trap.mathieu_parameter(particle).abs();
    if mathieu > T::lit(MATHIEU_WARNING) {
        out.push(StabilityWarning::FastDriveViolated { mathieu_parameter: mathieu.as_f64() });
    }
    let q = particle.charge;
    let dc = trap.u_dc * q / (T::lit(2.0) * trap.z0 * trap.z0);
    let pseudo = T::lit(2.0) * pseudo_prefactor(trap) * q * q / particle.mass;
    let curvature = [dc + pseudo, dc + pseudo, -T::lit(2.0) * dc + T::lit(4.0) * pseudo];
    for (axis, c) in curvature.iter().enumerate() {
        if *c < T::zero() {
            out.push(StabilityWarning::AntiConfining { axis, curvature: c.as_f64() });
        }
    }
    out
}

/// Generalised force acting on the rigid body: `(force, torque)` at a
/// given state and time.
pub trait ForceLaw<T: Real> {
    fn force_torque(&self, state: &RigidBodyState<T>, t: T) -> (Vector3<T>, Vector3<T>);
}

/// Exact time-dependent Paul-trap field.
pub struct FullField<'a, T: Real> {
    pub particle: &'a ParticleSpec<T>,
    pub trap: &'a TrapSpec<T>,
}

impl<T: Real> ForceLaw<T> for FullField<'_, T> {
    fn force_torque(&self, state: &RigidBodyState<T>, t: T) -> (Vector3<T>, Vector3<T>) {
        exact_force_torque(state, self.particle, self.trap, t)
    }
}

/// Cycle-averaged secular field.
pub struct SecularField<'a, T: Real> {
    pub particle: &'a ParticleSpec<T>,
    pub trap: &'a TrapSpec<T>,
}

impl<T: Real> ForceLaw<T> for SecularField<'_, T> {
    fn force_torque(&self, state: &RigidBodyState<T>, _t: T) -> (Vector3<T>, Vector3<T>) {
        effective_force_torque(state, self.particle, self.trap)
    }
}

/// Sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<RigidBodyState<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&RigidBodyState<T>> {
        self.states.last()
    }
}

/// Free asymmetric-rotor drift with space-frame angular momentum held
/// fixed: symmetric composition of exact rotations about the body axes,
/// fastest axis in the middle.
pub fn free_rotor_drift<T: Real>(state: &mut RigidBodyState<T>, particle: &ParticleSpec<T>, dt: T) {
    if state.angular_momentum == Vector3::zeros() {
        return;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|a, b| particle.inertia[*b].partial_cmp(&particle.inertia[*a]).unwrap());
    let half = dt * T::lit(0.5);
    let sequence = [(order[0], half), (order[1], half), (order[2], dt), (order[1], half), (order[0], half)];
    for (axis, h) in sequence {
        let body_l = state.orientation.inverse() * state.angular_momentum;
        let angle = body_l[axis] * h / particle.inertia[axis];
        let rot = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(Vector3::ith(axis, T::one())), angle);
        state.orientation *= rot;
    }
    state.orientation.renormalize();
}

/// Integration settings shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T: Real> {
    /// Final time, s.
    pub t_end: T,
    /// Step, s.
    pub dt: T,
    /// Record every n-th step (the initial state is always recorded).
    pub sample_every: usize,
}

fn step_count<T: Real>(control: &StepControl<T>) -> Result<usize> {
    if !(control.dt > T::zero()) || !(control.t_end >= T::zero()) {
        return Err(Error::StepSize { dt: control.dt.as_f64(), max: f64::INFINITY, reason: "dt must be positive" });
    }
    if control.sample_every == 0 {
        return Err(Error::Rejected("sample_every must be at least 1".into()));
    }
    Ok((control.t_end / control.dt).round().to_usize().unwrap_or(0))
}

/// Half kick, drift, rotor drift, half kick. Returns the force evaluated at
/// the end of the step for reuse.
pub(crate) fn kdk_step<T: Real, F: ForceLaw<T>>(
    law: &F,
    particle: &ParticleSpec<T>,
    state: &mut RigidBodyState<T>,
    forces: (Vector3<T>, Vector3<T>),
    t: T,
    dt: T,
) -> (Vector3<T>, Vector3<T>) {
    let half = dt * T::lit(0.5);
    state.velocity += forces.0 * (half / particle.mass);
    state.angular_momentum += forces.1 * half;
    state.position += state.velocity * dt;
    free_rotor_drift(state, particle, dt);
    let next = law.force_torque(state, t + dt);
    state.velocity += next.0 * (half / particle.mass);
    state.angular_momentum += next.1 * half;
    next
}

/// Runs the fixed-step integrator and samples every `sample_every` steps.
pub fn integrate<T: Real, F: ForceLaw<T>>(
    law: &F,
    particle: &ParticleSpec<T>,
    state0: &RigidBodyState<T>,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    let steps = step_count(control)?;
    let mut times = vec![T::zero()];
    let mut states = vec![*state0];
    let mut state = *state0;
    let mut forces = law.force_torque(&state, T::zero());
    for k in 0..steps {
        let t = T::lit(k as f64) * control.dt;
        forces = kdk_step(law, particle, &mut state, forces, t, control.dt);
        if (k + 1) % control.sample_every == 0 {
            times.push(T::lit((k + 1) as f64) * control.dt);
            states.push(state);
        }
    }
    Ok(Trajectory { times, states })
}

/// Integrates the exact driven dynamics; `dt` must resolve the drive with
/// at least 40 steps per period.
pub fn integrate_full<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    particle.validate()?;
    trap.validate()?;
    let max = trap.drive_period() / T::lit(STEPS_PER_DRIVE_MIN);
    if control.dt > max {
        return Err(Error::StepSize {
            dt: control.dt.as_f64(),
            max: max.as_f64(),
            reason: "full dynamics needs dt <= 2π/(40 Ω_ac)",
        });
    }
    integrate(&FullField { particle, trap }, particle, state0, control)
}

pub(crate) fn check_secular_step<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    dt: T,
) -> Result<()> {
    let w = max_secular_frequency(state0, particle, trap);
    if w > T::zero() {
        let max = T::two_pi() / (T::lit(STEPS_PER_SECULAR_MIN) * w);
        if dt > max {
            return Err(Error::StepSize {
                dt: dt.as_f64(),
                max: max.as_f64(),
                reason: "secular dynamics needs dt <= 2π/(40 ω_max)",
            });
        }
    }
    Ok(())
}

/// Integrates the conservative secular dynamics in the effective potential.
pub fn integrate_secular<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    particle.validate()?;
    trap.validate()?;
    check_secular_step(state0, particle, trap, control.dt)?;
    integrate(&SecularField { particle, trap }, particle, state0, control)
}

/// Position of the full driven trajectory averaged with a boxcar of exactly
/// one drive period centred on each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPositions<T: Real> {
    pub times: Vec<T>,
    pub positions: Vec<Vector3<T>>,
}

/// Integrates the full dynamics with `steps_per_drive` steps per drive
/// period and returns cycle-averaged positions centred every
/// `sample_every_drive` drive periods, i.e. at `t = j·sample_every_drive·T`
/// for `j ≥ 1`.
pub fn integrate_full_cycle_averaged<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    t_end: T,
    steps_per_drive: usize,
    sample_every_drive: usize,
) -> Result<AveragedPositions<T>> {
    particle.validate()?;
    trap.validate()?;
    if (steps_per_drive as f64) < STEPS_PER_DRIVE_MIN || steps_per_drive % 2 != 0 {
        return Err(Error::StepSize {
            dt: trap.drive_period().as_f64() / steps_per_drive as f64,
            max: trap.drive_period().as_f64() / STEPS_PER_DRIVE_MIN,
            reason: "need an even number of at least 40 steps per drive period",
        });
    }
    if sample_every_drive == 0 {
        return Err(Error::Rejected("sample_every_drive must be at least 1".into()));
    }
    let dt = trap.drive_period() / T::lit(steps_per_drive as f64);
    let steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let law = FullField { particle, trap };
    let half_window = steps_per_drive / 2;
    let stride = steps_per_drive * sample_every_drive;
    let norm = T::one() / T::lit(steps_per_drive as f64);
    let half = T::lit(0.5);

    let mut window: VecDeque<Vector3<T>> = VecDeque::with_capacity(steps_per_drive + 1);
    let mut sum = Vector3::zeros();
    let mut state = *state0;
    let mut forces = law.force_torque(&state, T::zero());
    window.push_back(state.position);
    sum += state.position;

    let mut out = AveragedPositions { times: Vec::new(), positions: Vec::new() };
    for k in 0..steps {
        let t = T::lit(k as f64) * dt;
        forces = kdk_step(&law, particle, &mut state, forces, t, dt);
        window.push_back(state.position);
        sum += state.position;
        if window.len() > steps_per_drive + 1 {
            sum -= window.pop_front().unwrap();
        }
        let newest = k + 1;
        if window.len() == steps_per_drive + 1 && newest >= steps_per_drive {
            let centre = newest - half_window;
            if centre % stride == 0 {
                // Trapezoidal weights over exactly one period.
                let ends = (window.front().unwrap() + window.back().unwrap()) * half;
                let avg = (sum - ends) * norm;
                out.times.push(T::lit(centre as f64) * dt);
                out.positions.push(avg);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AMU, ELEMENTARY_CHARGE};
    use crate::params::{reference, secular_frequencies};
    use approx::assert_relative_eq;

    fn point() -> ParticleSpec<f64> {
        ParticleSpec::point_charge(1e6 * AMU, 200.0 * ELEMENTARY_CHARGE).unwrap()
    }

    #[test]
    fn empty_body_at_centre_has_no_energy() {
        let p = ParticleSpec::point_charge(1e-21, 1e-17).unwrap();
        let s = RigidBodyState::at_rest(Vector3::zeros(), UnitQuaternion::identity());
        let trap = reference::trap(3.0);
        for t in [0.0, 1e-9, 3.3e-9] {
            assert_eq!(time_dependent_potential(&s, &p, &trap, t), 0.0);
        }
    }

    #[test]
    fn transverse_point_charge_potential() {
        let p = point();
        let trap = reference::trap(2.0);
        let s = RigidBodyState::at_rest(Vector3::new(1e-6, 0.0, 0.0), UnitQuaternion::identity());
        let t = 1.3e-9;
        let expected = trap.ring_voltage(t) * p.charge * 1e-12 / (4.0 * trap.z0 * trap.z0);
        assert_relative_eq!(time_dependent_potential(&s, &p, &trap, t), expected, max_relative = 1e-14);
    }

    #[test]
    fn axial_force_sign() {
        let p = point();
        let trap = reference::trap(0.0);
        let z = 1e-6;
        let s = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, z), UnitQuaternion::identity());
        let (f, tq) = exact_force_torque(&s, &p, &trap, 0.0);
        let u = trap.ring_voltage(0.0);
        assert_relative_eq!(f.z, u * p.charge * z / (trap.z0 * trap.z0), max_relative = 1e-14);
        assert_eq!(f.x, 0.0);
        assert_eq!(tq, Vector3::zeros());
    }

    #[test]
    fn axially_symmetric_quadrupole_feels_no_torque() {
        let mut p = reference::particle();
        p.dipole_body = Vector3::zeros();
        let trap = reference::trap(1.0);
        let s = RigidBodyState::at_rest(Vector3::new(1e-7, -2e-7, 3e-7), UnitQuaternion::identity());
        let (_, tq) = exact_force_torque(&s, &p, &trap, 0.4e-9);
        assert!(tq.norm() < 1e-40);
    }

    #[test]
    fn effective_potential_of_point_charge() {
        let p = point();
        let trap = reference::trap(0.0);
        let r = Vector3::new(1e-7, 2e-7, -3e-7);
        let s = RigidBodyState::at_rest(r, UnitQuaternion::identity());
        let c = trap.u_ac * trap.u_ac * p.charge * p.charge
            / (16.0 * p.mass * trap.z0.powi(4) * trap.drive_frequency.powi(2));
        let expected = c * (r.x * r.x + r.y * r.y + 4.0 * r.z * r.z);
        assert_relative_eq!(effective_potential(&s, &p, &trap), expected, max_relative = 1e-14);
        let mirrored = RigidBodyState::at_rest(-r, UnitQuaternion::identity());
        assert_eq!(effective_potential(&mirrored, &p, &trap), effective_potential(&s, &p, &trap));
    }

    #[test]
    fn hessian_reproduces_secular_frequencies() {
        let p = point();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::zeros(), UnitQuaternion::identity());
        let (wx, wy, wz) = secular_frequencies(&p, &trap);
        // Force is exactly linear, so one displacement per axis gives the stiffness.
        let h = 1e-7;
        for (axis, w) in [(0, wx), (1, wy), (2, wz)] {
            let mut d = s;
            d.position[axis] = h;
            let (f, _) = effective_force_torque(&d, &p, &trap);
            let omega = (-f[axis] / (h * p.mass)).sqrt();
            assert_relative_eq!(omega, w, max_relative = 1e-10);
        }
        assert_eq!(effective_force_torque(&s, &p, &trap).0, Vector3::zeros());
    }

    #[test]
    fn rotational_term_in_isolation() {
        let mut p = reference::particle();
        p.dipole_body = Vector3::zeros();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(
            Vector3::zeros(),
            UnitQuaternion::from_euler_angles(0.4, -0.3, 1.1),
        );
        let q = s.quadrupole(&p);
        let w = Vector3::z().cross(&(q * Vector3::z()));
        let c = trap.u_ac.powi(2) / (16.0 * trap.z0.powi(4) * trap.drive_frequency.powi(2));
        let expected: f64 = (0..3).map(|i| (s.principal_axis(i).dot(&w)).powi(2) / p.inertia[i]).sum::<f64>() * c;
        assert_relative_eq!(effective_potential(&s, &p, &trap), expected, max_relative = 1e-12);
    }

    #[test]
    fn micromotion_amplitude_reference() {
        let mut p = reference::particle();
        p.dipole_body = Vector3::zeros();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 1e-6), UnitQuaternion::identity());
        let m = micromotion_amplitudes(&s, &p, &trap);
        let expected = trap.u_ac * p.charge / (2.0 * p.mass * trap.z0.powi(2) * trap.drive_frequency.powi(2)) * 2e-6;
        assert_relative_eq!(m.translation.norm(), expected, max_relative = 1e-14);
        assert_relative_eq!(m.translation.norm() / 1e-6, 1.25e-4, max_relative = 0.01);
        assert!(m.rotation.norm() < 1e-30);

        let mut neutral = point();
        neutral.charge = 0.0;
        assert_eq!(micromotion_amplitudes(&s, &neutral, &trap).translation, Vector3::zeros());
    }

    #[test]
    fn full_step_bound_enforced() {
        let p = point();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 1e-6), UnitQuaternion::identity());
        let control = StepControl { t_end: 1e-7, dt: trap.drive_period() / 20.0, sample_every: 1 };
        assert!(matches!(integrate_full(&s, &p, &trap, &control), Err(Error::StepSize { .. })));
        let control = StepControl { t_end: 1e-3, dt: 1e-5, sample_every: 1 };
        assert!(matches!(integrate_secular(&s, &p, &trap, &control), Err(Error::StepSize { .. })));
    }

    #[test]
    fn free_flight_without_fields() {
        let p = point();
        let mut trap = reference::trap(0.0);
        trap.u_ac = 0.0;
        let s = RigidBodyState {
            position: Vector3::new(1e-6, 0.0, -2e-6),
            velocity: Vector3::new(1e-3, 2e-3, -1e-3),
            orientation: UnitQuaternion::identity(),
            angular_momentum: Vector3::zeros(),
        };
        let control = StepControl { t_end: 1e-7, dt: trap.drive_period() / 40.0, sample_every: 10 };
        let traj = integrate_full(&s, &p, &trap, &control).unwrap();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let expected = s.position + s.velocity * *t;
            assert!((st.position - expected).norm() < 1e-18);
        }
    }

    #[test]
    fn equilibrium_stays_fixed() {
        let p = point();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::zeros(), UnitQuaternion::identity());
        let control = StepControl { t_end: 1e-4, dt: 1e-7, sample_every: 100 };
        let traj = integrate_secular(&s, &p, &trap, &control).unwrap();
        assert!(traj.states.iter().all(|st| st.position == Vector3::zeros()));
    }

    #[test]
    fn free_rotor_conserves_energy_and_momentum() {
        let p = reference::particle();
        let mut s = RigidBodyState::at_rest(Vector3::zeros(), UnitQuaternion::from_euler_angles(0.2, 0.5, -0.1));
        s.angular_momentum = Vector3::new(1e-31, -2e-31, 0.5e-31);
        let e0 = s.kinetic_energy(&p);
        let l0 = s.angular_momentum;
        for _ in 0..1000 {
            free_rotor_drift(&mut s, &p, 1e-8);
        }
        assert_eq!(s.angular_momentum, l0);
        assert_relative_eq!(s.kinetic_energy(&p), e0, max_relative = 1e-3);
        assert!((s.orientation.quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warnings_for_strong_drive_and_bias() {
        let p = point();
        let mut trap = reference::trap(0.0);
        assert!(stability_warnings(&p, &trap).is_empty());
        trap.drive_frequency /= 100.0;
        assert!(stability_warnings(&p, &trap)
            .iter()
            .any(|w| matches!(w, StabilityWarning::FastDriveViolated { .. })));
        let mut trap = reference::trap(0.0);
        trap.u_dc = 1e4;
        assert!(stability_warnings(&p, &trap)
            .iter()
            .any(|w| matches!(w, StabilityWarning::AntiConfining { axis: 2, .. })));
    }
}
