//! Endcap charge induced by the particle, the resulting current, and
//! resistive cooling in the adiabatic limit of the circuit.

use nalgebra::{SMatrix, SVector, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{ParticleSpec, TrapSpec};
use crate::real::Real;
use crate::trap::{
    check_secular_step, integrate, kdk_step, secular_energy, ForceLaw, RigidBodyState, SecularField, StepControl,
    Trajectory,
};

/// RC·ω above which the adiabatic elimination of the circuit is flagged.
pub const ADIABATIC_WARNING: f64 = 0.1;

/// Charge, voltage and current of the endcap capacitor at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedState<T: Real> {
    /// C
    pub charge: T,
    /// V
    pub voltage: T,
    /// A
    pub current: T,
}

/// `e_z·(q r + p)`, the only combination the endcaps see.
fn axial_moment<T: Real>(state: &RigidBodyState<T>, particle: &ParticleSpec<T>) -> T {
    particle.charge * state.position.z + state.dipole(particle).z
}

/// Capacitor charge `−k e_z·(q r + p)/z₀ + C V`.
pub fn induced_charge<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    capacitance: T,
    voltage: T,
) -> T {
    -trap.geometry_factor * axial_moment(state, particle) / trap.z0 + capacitance * voltage
}

/// Induced charge and current along a uniformly sampled trajectory at zero
/// endcap voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries<T: Real> {
    pub times: Vec<T>,
    pub charge: Vec<T>,
    pub current: Vec<T>,
}

impl<T: Real> CurrentSeries<T> {
    pub fn get(&self, i: usize) -> InducedState<T> {
        InducedState { charge: self.charge[i], voltage: T::zero(), current: self.current[i] }
    }
}

/// `I = dQ/dt` by central differences, one-sided at the ends.
pub fn induced_current<T: Real>(
    trajectory: &Trajectory<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
) -> Result<CurrentSeries<T>> {
    let n = trajectory.len();
    if n < 3 {
        return Err(Error::Rejected(format!("induced current needs at least 3 samples, got {n}")));
    }
    let times = trajectory.times.clone();
    let h = (times[n - 1] - times[0]) / T::lit((n - 1) as f64);
    let tol = h.abs() * T::lit(1e-9);
    if !(h > T::zero()) || times.windows(2).any(|w| (w[1] - w[0] - h).abs() > tol) {
        return Err(Error::Rejected("induced current needs uniformly spaced samples".into()));
    }
    let charge: Vec<T> = trajectory
        .states
        .iter()
        .map(|s| induced_charge(s, particle, trap, T::zero(), T::zero()))
        .collect();
    Ok(CurrentSeries { current: differentiate(&charge, h), times, charge })
}

/// Uniform-grid derivative: fourth-order central differences in the
/// interior with matching one-sided stencils at the ends, falling back to
/// second order for fewer than five samples.
fn differentiate<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    let c = |x: f64| T::lit(x);
    if n < 5 {
        let two_h = h * c(2.0);
        let mut d = Vec::with_capacity(n);
        d.push((-c(3.0) * f[0] + c(4.0) * f[1] - f[2]) / two_h);
        for i in 1..n - 1 {
            d.push((f[i + 1] - f[i - 1]) / two_h);
        }
        d.push((c(3.0) * f[n - 1] - c(4.0) * f[n - 2] + f[n - 3]) / two_h);
        return d;
    }
    let h12 = h * c(12.0);
    let edge0 = |g: &dyn Fn(usize) -> T| (-c(25.0) * g(0) + c(48.0) * g(1) - c(36.0) * g(2) + c(16.0) * g(3) - c(3.0) * g(4)) / h12;
    let edge1 = |g: &dyn Fn(usize) -> T| (-c(3.0) * g(0) - c(10.0) * g(1) + c(18.0) * g(2) - c(6.0) * g(3) + g(4)) / h12;
    let fwd = |i: usize| f[i];
    let bwd = |i: usize| f[n - 1 - i];
    let mut d = vec![T::zero(); n];
    d[0] = edge0(&fwd);
    d[1] = edge1(&fwd);
    d[n - 1] = -edge0(&bwd);
    d[n - 2] = -edge1(&bwd);
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - c(8.0) * f[i - 1] + c(8.0) * f[i + 1] - f[i + 2]) / h12;
    }
    d
}

/// Translational part `R k² q² / (z₀² M)` of the adiabatic cooling rate.
pub fn translational_cooling_rate<T: Real>(particle: &ParticleSpec<T>, trap: &TrapSpec<T>, resistance: T) -> T {
    let k = trap.geometry_factor;
    resistance * k * k * particle.charge * particle.charge / (trap.z0 * trap.z0 * particle.mass)
}

/// Rotational lever `p × e_z` of the dissipative torque.
fn rotational_lever<T: Real>(state: &RigidBodyState<T>, particle: &ParticleSpec<T>) -> Vector3<T> {
    state.dipole(particle).cross(&Vector3::z())
}

/// Adiabatic resistive cooling rate γ_ad at the given orientation.
pub fn cooling_rate<T: Real>(
    state: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    resistance: T,
) -> T {
    let k = trap.geometry_factor;
    let lever = rotational_lever(state, particle);
    let rotational: T = (0..3)
        .map(|i| {
            let c = state.principal_axis(i).dot(&lever);
            c * c / particle.inertia[i]
        })
        .fold(T::zero(), |a, b| a + b);
    translational_cooling_rate(particle, trap, resistance) + resistance * k * k * rotational / (trap.z0 * trap.z0)
}

/// Exact solution of the dissipative sub-flow over `h`: momenta relax
/// along the coupling direction while positions and orientation are held.
fn dissipate<T: Real>(state: &mut RigidBodyState<T>, particle: &ParticleSpec<T>, trap: &TrapSpec<T>, resistance: T, h: T) {
    let gamma = cooling_rate(state, particle, trap, resistance);
    if !(gamma > T::zero()) {
        return;
    }
    let k = trap.geometry_factor;
    let beta = resistance * k * k / (trap.z0 * trap.z0);
    let lever = rotational_lever(state, particle);
    // s = dD/dt with D = e_z·(q r + p).
    let s = particle.charge * state.velocity.z + lever.dot(&state.angular_velocity(particle));
    let impulse = s * beta / gamma * (T::one() - (-gamma * h).exp());
    state.velocity.z -= impulse * particle.charge / particle.mass;
    state.angular_momentum -= lever * impulse;
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoolingWarning {
    /// The circuit does not follow the particle adiabatically.
    NonAdiabatic { rc_omega: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingRun<T: Real> {
    pub trajectory: Trajectory<T>,
    pub warnings: Vec<CoolingWarning>,
}

/// Secular dynamics with the endcap voltage `V = (R k / z₀) dD/dt` acting
/// back on the particle. `capacitance` is used only for the adiabaticity
/// check `R C ω_max ≪ 1`. With `resistance = 0` the conservative secular
/// trajectory is returned unchanged.
pub fn simulate_resistive_cooling<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    resistance: T,
    capacitance: T,
    control: &StepControl<T>,
) -> Result<CoolingRun<T>> {
    particle.validate()?;
    trap.validate()?;
    if !(resistance >= T::zero()) {
        return Err(crate::error::invalid("resistance", "must be non-negative"));
    }
    check_secular_step(state0, particle, trap, control.dt)?;
    let mut warnings = Vec::new();
    let w = crate::trap::max_secular_frequency(state0, particle, trap);
    let rc_omega = (resistance * capacitance * w).as_f64();
    if rc_omega > ADIABATIC_WARNING {
        warnings.push(CoolingWarning::NonAdiabatic { rc_omega });
    }
    let law = SecularField { particle, trap };
    if resistance == T::zero() {
        let trajectory = integrate(&law, particle, state0, control)?;
        return Ok(CoolingRun { trajectory, warnings });
    }
    let trajectory = integrate_damped(&law, resistance, state0, control)?;
    Ok(CoolingRun { trajectory, warnings })
}

/// One member of a damped integration: state plus the cached force.
struct Damped<T: Real> {
    state: RigidBodyState<T>,
    forces: (Vector3<T>, Vector3<T>),
}

impl<T: Real> Damped<T> {
    fn new(law: &SecularField<'_, T>, state: RigidBodyState<T>) -> Self {
        let forces = law.force_torque(&state, T::zero());
        Self { state, forces }
    }

    /// Dissipate(h/2), kick-drift-kick, dissipate(h/2), `n` times from step `k0`.
    fn advance(&mut self, law: &SecularField<'_, T>, resistance: T, k0: usize, n: usize, dt: T) {
        let half = dt * T::lit(0.5);
        let (particle, trap) = (law.particle, law.trap);
        for k in k0..k0 + n {
            let t = T::lit(k as f64) * dt;
            dissipate(&mut self.state, particle, trap, resistance, half);
            self.forces = kdk_step(law, particle, &mut self.state, self.forces, t, dt);
            dissipate(&mut self.state, particle, trap, resistance, half);
        }
    }
}

fn integrate_damped<T: Real>(
    law: &SecularField<'_, T>,
    resistance: T,
    state0: &RigidBodyState<T>,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    if control.sample_every == 0 {
        return Err(Error::Rejected("sample_every must be at least 1".into()));
    }
    let steps = (control.t_end / control.dt).round().to_usize().unwrap_or(0);
    let mut times = vec![T::zero()];
    let mut states = vec![*state0];
    let mut member = Damped::new(law, *state0);
    let mut k = 0;
    while k < steps {
        let n = control.sample_every.min(steps - k);
        member.advance(law, resistance, k, n, control.dt);
        k += n;
        if n == control.sample_every {
            times.push(T::lit(k as f64) * control.dt);
            states.push(member.state);
        }
    }
    Ok(Trajectory { times, states })
}

/// Least-squares line through `(x, ln y)`; returns `(slope, intercept)`.
pub fn fit_log_slope<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Rejected("log fit needs at least two paired samples".into()));
    }
    if y.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::Rejected("log fit needs positive values".into()));
    }
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    linear_fit(x, &ly)
}

/// Ordinary least-squares line; returns `(slope, intercept)`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    let n = T::lit(x.len() as f64);
    let mx = x.iter().fold(T::zero(), |a, b| a + *b) / n;
    let my = y.iter().fold(T::zero(), |a, b| a + *b) / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        sxx += (*a - mx) * (*a - mx);
        sxy += (*a - mx) * (*b - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::Degenerate("abscissa has no spread".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Energy decay rate of a cooled trajectory: minus the slope of
/// `ln(E − E_min)`, with `E` the secular energy. The amplitude decays at
/// half this rate.
pub fn fit_energy_decay<T: Real>(
    trajectory: &Trajectory<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    minimum_energy: T,
) -> Result<T> {
    let e: Vec<T> = trajectory
        .states
        .iter()
        .map(|s| secular_energy(s, particle, trap) - minimum_energy)
        .collect();
    let (slope, _) = fit_log_slope(&trajectory.times, &e)?;
    Ok(-slope)
}

/// Initial spread of the ensemble used for the phase-space volume fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleSpread<T: Real> {
    /// m
    pub position: T,
    /// rad
    pub angle: T,
    /// kg·m/s
    pub momentum: T,
    /// kg·m²/s
    pub angular_momentum: T,
}

impl<T: Real> BundleSpread<T> {
    /// Spread sized from the secular frequency so every direction is deep in
    /// the linear regime.
    pub fn linear(particle: &ParticleSpec<T>, trap: &TrapSpec<T>, amplitude: T) -> Self {
        let (_, _, wz) = crate::params::secular_frequencies(particle, trap);
        let rel = T::lit(1e-7);
        // The smallest inertia sets the fastest free spin.
        let i_min = particle.inertia.min();
        Self {
            position: amplitude * rel,
            angle: rel,
            momentum: particle.mass * wz * amplitude * rel,
            angular_momentum: i_min * wz * rel,
        }
    }
}

/// Result of the ensemble contraction fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionFit<T: Real> {
    /// Fitted phase-space volume contraction rate, 1/s.
    pub rate: T,
    /// Sample times, s.
    pub times: Vec<T>,
    /// Accumulated `ln` of the bundle volume relative to the start.
    pub log_volume: Vec<T>,
    /// Reference trajectory at the sample times.
    pub reference: Vec<RigidBodyState<T>>,
}

/// Offset of `s` from `centre` in spread-normalised canonical coordinates
/// `(r, θ, p, J)`.
fn deviation<T: Real>(
    s: &RigidBodyState<T>,
    centre: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    scales: &[T; 4],
) -> SVector<T, 12> {
    let parts = [
        s.position - centre.position,
        (s.orientation * centre.orientation.inverse()).scaled_axis(),
        (s.velocity - centre.velocity) * particle.mass,
        s.angular_momentum - centre.angular_momentum,
    ];
    SVector::from_fn(|i, _| parts[i / 3][i % 3] / scales[i / 3])
}

fn displaced<T: Real>(
    centre: &RigidBodyState<T>,
    x: &SVector<T, 12>,
    particle: &ParticleSpec<T>,
    scales: &[T; 4],
) -> RigidBodyState<T> {
    let part = |b: usize| Vector3::new(x[3 * b], x[3 * b + 1], x[3 * b + 2]) * scales[b];
    let mut s = centre.rotated(part(1));
    s.position += part(0);
    s.velocity += part(2) / particle.mass;
    s.angular_momentum += part(3);
    s
}

/// Phase-space volume contraction of resistive cooling, from a bundle of
/// 24 trajectories displaced by ± the spread along 12 orthonormal
/// directions around the reference. At every sample the central-difference
/// tangent vectors are re-orthonormalised by QR and `ln |det R|`
/// accumulated, so the volume stays exact for the linearised flow even
/// where the rotational motion is chaotic. The fitted slope equals the time
/// average of γ_ad along the reference.
pub fn fit_contraction_rate<T: Real>(
    state0: &RigidBodyState<T>,
    particle: &ParticleSpec<T>,
    trap: &TrapSpec<T>,
    resistance: T,
    control: &StepControl<T>,
    spread: &BundleSpread<T>,
) -> Result<ContractionFit<T>> {
    particle.validate()?;
    trap.validate()?;
    check_secular_step(state0, particle, trap, control.dt)?;
    if control.sample_every == 0 {
        return Err(Error::Rejected("sample_every must be at least 1".into()));
    }
    let scales = [spread.position, spread.angle, spread.momentum, spread.angular_momentum];
    let law = SecularField { particle, trap };
    let steps = (control.t_end / control.dt).round().to_usize().unwrap_or(0);
    let build = |centre: &RigidBodyState<T>, basis: &SMatrix<T, 12, 12>| -> Vec<RigidBodyState<T>> {
        let mut out = vec![*centre];
        for j in 0..12 {
            let col: SVector<T, 12> = basis.column(j).into_owned();
            out.push(displaced(centre, &col, particle, &scales));
            out.push(displaced(centre, &(-col), particle, &scales));
        }
        out
    };
    let mut members: Vec<Damped<T>> =
        build(state0, &SMatrix::identity()).into_iter().map(|s| Damped::new(&law, s)).collect();

    let mut times = vec![T::zero()];
    let mut log_volume = vec![T::zero()];
    let mut reference = vec![*state0];
    let mut acc = T::zero();
    let mut k = 0;
    while k + control.sample_every <= steps {
        let n = control.sample_every;
        members.par_iter_mut().for_each(|m| m.advance(&law, resistance, k, n, control.dt));
        k += n;
        let centre = members[0].state;
        let tangent = SMatrix::<T, 12, 12>::from_fn(|i, j| {
            let plus = deviation(&members[1 + 2 * j].state, &centre, particle, &scales);
            let minus = deviation(&members[2 + 2 * j].state, &centre, particle, &scales);
            (plus[i] - minus[i]) * T::lit(0.5)
        });
        let qr = tangent.qr();
        let r = qr.r();
        for i in 0..12 {
            let d = r[(i, i)].abs();
            if !(d > T::zero()) {
                return Err(Error::Degenerate("bundle lost rank".into()));
            }
            acc += d.ln();
        }
        let q = qr.q();
        for (j, s) in build(&centre, &q).into_iter().enumerate().skip(1) {
            members[j] = Damped::new(&law, s);
        }
        times.push(T::lit(k as f64) * control.dt);
        log_volume.push(acc);
        reference.push(centre);
    }
    let (slope, _) = linear_fit(&times, &log_volume)?;
    Ok(ContractionFit { rate: -slope, times, log_volume, reference })
}
