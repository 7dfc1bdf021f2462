//! Analytic engine of the pulsed qubit interferometer.
//!
//! The qubit is prepared by a π/2 pulse, flipped by π pulses at `t₁` and
//! `t₂`, and read out by a final π/2 pulse at `t₃`. A θ pulse is
//! `exp(iθσ_x/2)`, so the first pulse maps `|g⟩` to `(|g⟩ + i|e⟩)/√2`.
//! Between pulses each qubit branch drives the oscillator with a displaced
//! harmonic propagator, and the excited-state population reads out the
//! overlap `⟨U₊†U₋⟩` of the two branches.

mod entangle;
mod word;

pub use entangle::{
    entanglement_entropy_t0, two_particle_conditioned_state, ConditionedTwoParticleState, Outcome,
};
pub use word::{reduce_word, PhaseSpaceWord, Primitive, Reduced};

use nalgebra::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{ModelSetup, QubitOscillatorParams};
use crate::real::Real;

/// Propagators of the two qubit branches over one free-evolution segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPropagators<T: Real> {
    pub ground: PhaseSpaceWord<T>,
    /// Includes the branch phase as a leading [`Primitive::Phase`].
    pub excited: PhaseSpaceWord<T>,
    /// `−t (E_c/ħ − κ²/ω − 2κV_ext/ħω)`
    pub excited_phase: T,
}

/// Phase `V_ext² t/(ħ²ω)` shared by both branches and omitted from
/// [`branch_propagators`].
pub fn common_phase<T: Real>(params: &QubitOscillatorParams<T>, t: T) -> T {
    let v = params.drive_rate();
    v * v * t / params.omega
}

fn displaced_rotation<T: Real>(centre: T, angle: T) -> Vec<Primitive<T>> {
    let z = Complex::new(centre, T::zero());
    vec![Primitive::Displace(z), Primitive::Rotate(angle), Primitive::Displace(-z)]
}

/// `U_g(t)` and `U_e(t)` as phase-space words, each up to [`common_phase`].
pub fn branch_propagators<T: Real>(params: &QubitOscillatorParams<T>, t: T) -> BranchPropagators<T> {
    branch_propagators_with_rate(params, t, params.charge_rate())
}

fn branch_propagators_with_rate<T: Real>(params: &QubitOscillatorParams<T>, t: T, charge_rate: T) -> BranchPropagators<T> {
    let w = params.omega;
    let g = params.drive_ratio();
    let e = params.coupling_ratio() + g;
    let kappa = params.kappa;
    let excited_phase =
        -t * (charge_rate - kappa * kappa / w - T::lit(2.0) * kappa * params.drive_rate() / w);
    let ground = PhaseSpaceWord::new(displaced_rotation(g, w * t));
    let mut excited = vec![Primitive::Phase(excited_phase)];
    excited.extend(displaced_rotation(e, w * t));
    BranchPropagators { ground, excited: PhaseSpaceWord::new(excited), excited_phase }
}

/// Pulse times of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule<T: Real> {
    pub t1: T,
    pub t2: T,
    pub t3: T,
    /// `(τ, Δτ)` when built by [`PulseSchedule::symmetric`].
    pub symmetric: Option<(T, T)>,
}

impl<T: Real> PulseSchedule<T> {
    /// `t₁ = τ`, `t₂ = τ + Δτ`, `t₃ = 2τ + Δτ` with the closing Δτ.
    pub fn symmetric(tau: T, omega: T) -> Result<Self> {
        let dt = delta_tau(tau, omega)?;
        Ok(Self { t1: tau, t2: tau + dt, t3: tau + tau + dt, symmetric: Some((tau, dt)) })
    }

    pub fn explicit(t1: T, t2: T, t3: T) -> Result<Self> {
        if !(t1 >= T::zero() && t1 <= t2 && t2 <= t3) {
            return Err(Error::InvalidParameter {
                name: "schedule",
                reason: "pulse times must satisfy 0 <= t1 <= t2 <= t3".into(),
            });
        }
        Ok(Self { t1, t2, t3, symmetric: None })
    }

    /// Same π pulses, read out at `t3`.
    pub fn with_readout(&self, t3: T) -> Result<Self> {
        let mut s = Self::explicit(self.t1, self.t2, t3)?;
        s.symmetric = self.symmetric;
        Ok(s)
    }

    /// Symmetric schedule read out where the branches recombine.
    pub fn is_closed(&self) -> bool {
        matches!(self.symmetric, Some((tau, dt)) if self.t3 == tau + tau + dt)
    }

    /// Free-evolution segment lengths `(t₁, t₂ − t₁, t₃ − t₂)`.
    pub fn segments(&self) -> [T; 3] {
        [self.t1, self.t2 - self.t1, self.t3 - self.t2]
    }

    /// `2t₁ − 2t₂ + t₃`, the phase lever of the fringe.
    pub fn lever(&self) -> T {
        self.t1 + self.t1 - self.t2 - self.t2 + self.t3
    }
}

/// `(U₊, U₋)` with `U₊ = U_g(t₃−t₂) U_e(t₂−t₁) U_g(t₁)` and g/e swapped
/// for `U₋`.
pub fn scheme_words<T: Real>(
    params: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
) -> (PhaseSpaceWord<T>, PhaseSpaceWord<T>) {
    scheme_words_with_rates(params, schedule, [params.charge_rate(); 3])
}

fn scheme_words_with_rates<T: Real>(
    params: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
    rates: [T; 3],
) -> (PhaseSpaceWord<T>, PhaseSpaceWord<T>) {
    let [s1, s2, s3] = schedule.segments();
    let b1 = branch_propagators_with_rate(params, s1, rates[0]);
    let b2 = branch_propagators_with_rate(params, s2, rates[1]);
    let b3 = branch_propagators_with_rate(params, s3, rates[2]);
    let plus = b3.ground.then(&b2.excited).then(&b1.ground);
    let minus = b3.excited.then(&b2.ground).then(&b1.excited);
    (plus, minus)
}

/// Reduced form of `U₊† U₋`.
pub fn branch_overlap_operator<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> Reduced<T> {
    let (plus, minus) = scheme_words(params, schedule);
    plus.reduce().inverse().compose(&minus.reduce())
}

/// `d(t₁,t₂,t₃) = 2e^{iωt₁} − 2e^{iωt₂} + e^{iωt₃} − 1`.
///
/// Evaluated as `2E(ωt₁) − 2E(ωt₂) + E(ωt₃)` with `E(x) = e^{ix} − 1`, which
/// avoids cancelling O(1) terms when `ωt ≪ 1`.
pub fn d_closure<T: Real>(t1: T, t2: T, t3: T, omega: T) -> Complex<T> {
    let two = T::lit(2.0);
    let e = |x: T| {
        let h = (x / two).sin();
        Complex::new(-two * h * h, x.sin())
    };
    e(omega * t1) * two - e(omega * t2) * two + e(omega * t3)
}

/// Separation of the two π pulses that closes the phase-space loop of a
/// symmetric schedule.
///
/// Equivalent to the double-angle arctan form but written with the half
/// angle, `Δτ = (2/ω) arctan[sin ωτ / (2 − cos ωτ)]`, which has no branch
/// ambiguity on `0 < ωτ < π` and gives `Δτ → 2τ` for `τ → 0`.
pub fn delta_tau<T: Real>(tau: T, omega: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::Domain { op: "delta_tau", reason: "omega must be positive".into() });
    }
    let x = omega * tau;
    if !(x > T::zero() && x < T::pi()) {
        return Err(Error::Domain { op: "delta_tau", reason: format!("need 0 < ωτ < π, got {}", x.as_f64()) });
    }
    Ok(T::lit(2.0) * x.sin().atan2(T::lit(2.0) - x.cos()) / omega)
}

/// Interference-term envelope: thermal washout of the branch displacement
/// times the dephasing factor `exp(−γ_d t₃)`.
pub fn envelope<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> T {
    thermal_envelope(params, schedule) * (-params.dephasing_rate * schedule.t3).exp()
}

fn thermal_envelope<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> T {
    let d = d_closure(schedule.t1, schedule.t2, schedule.t3, params.omega);
    let r = params.coupling_ratio();
    (-r * r / T::lit(2.0) * params.thermal_coth() * d.norm_sqr()).exp()
}

/// Argument of the fringe cosine,
/// `(κ/ω)(κ/ω + 2V_ext/ħω) Im d − (κ²/ω + 2κV_ext/ħω − E_c/ħ)(2t₁ − 2t₂ + t₃)`.
pub fn fringe_phase<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> T {
    let d = d_closure(schedule.t1, schedule.t2, schedule.t3, params.omega);
    let r = params.coupling_ratio();
    r * (r + T::lit(2.0) * params.drive_ratio()) * d.im - params.fringe_rate() * schedule.lever()
}

/// Excited-state population after the sequence, dephasing included.
pub fn qubit_population<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> T {
    let half = T::lit(0.5);
    half + half * envelope(params, schedule) * fringe_phase(params, schedule).cos()
}

/// Closed form for symmetric schedules,
/// `½ + ½ e^{−γ_d t₃} cos[2χ(τ − Δτ/2)]` with χ the fringe rate. At zero
/// dephasing this is `cos²[χ(τ − Δτ/2)]`.
pub fn symmetric_population<T: Real>(params: &QubitOscillatorParams<T>, tau: T) -> Result<T> {
    let dt = delta_tau(tau, params.omega)?;
    let half = T::lit(0.5);
    let arg = params.fringe_rate() * (tau - dt * half);
    let t3 = tau + tau + dt;
    Ok(half + half * (-params.dephasing_rate * t3).exp() * (arg + arg).cos())
}

/// Population evaluated through the reduced word of `U₊†U₋`, without
/// dephasing. An independent route to [`qubit_population`].
pub fn population_from_words<T: Real>(params: &QubitOscillatorParams<T>, schedule: &PulseSchedule<T>) -> T {
    population_with_segment_rates(params, schedule, [params.charge_rate(); 3])
}

/// Undephased population with a separate `E_c/ħ` in each free-evolution
/// segment; used to average over charge noise.
pub fn population_with_segment_rates<T: Real>(
    params: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
    rates: [T; 3],
) -> T {
    let (plus, minus) = scheme_words_with_rates(params, schedule, rates);
    let overlap = plus.reduce().inverse().compose(&minus.reduce());
    let half = T::lit(0.5);
    let washout = (-params.thermal_coth() * overlap.displacement.norm_sqr() * half).exp();
    half + half * washout * overlap.phase.cos()
}

/// Remote-qubit population conditioned on the directly coupled qubit in
/// its ground state: `½ + ½ e^{−γ_d t₃} cos[2χ(τ − Δτ/2)]` with
/// `χ = κ²/ω + 2κV_ext/ħω − (E_c1 − E_c2)/ħ`.
pub fn remote_qubit_population<T: Real>(
    params: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
    charge_energy_1: T,
    charge_energy_2: T,
) -> Result<T> {
    let (tau, dt) = match schedule.symmetric {
        Some(s) if schedule.is_closed() => s,
        _ => {
            return Err(Error::Rejected(
                "remote population is defined only for a closed symmetric schedule".into(),
            ))
        }
    };
    let mut p = *params;
    p.charge_energy = charge_energy_1 - charge_energy_2;
    let half = T::lit(0.5);
    let arg = p.fringe_rate() * (tau - dt * half);
    Ok(half + half * (-p.dephasing_rate * schedule.t3).exp() * (arg + arg).cos())
}

/// Mean oscillator amplitude of both branches from the vacuum, sampled
/// on `n` evenly spaced times in `[0, t₃]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPaths<T: Real> {
    pub times: Vec<T>,
    /// Qubit starting in |g⟩.
    pub plus: Vec<Complex<T>>,
    pub minus: Vec<Complex<T>>,
}

pub fn branch_paths<T: Real>(
    params: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
    n: usize,
) -> Result<BranchPaths<T>> {
    params.validate()?;
    let times = linspace(T::zero(), schedule.t3, n);
    let edges = [T::zero(), schedule.t1, schedule.t2];
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for &t in &times {
        let mut p = Reduced::identity();
        let mut m = Reduced::identity();
        for (k, &start) in edges.iter().enumerate() {
            if t <= start && k > 0 {
                break;
            }
            let end = if k < 2 { edges[k + 1] } else { schedule.t3 };
            let b = branch_propagators(params, t.min(end) - start);
            let (g, e) = (b.ground.reduce(), b.excited.reduce());
            if k % 2 == 0 {
                p = g.compose(&p);
                m = e.compose(&m);
            } else {
                p = e.compose(&p);
                m = g.compose(&m);
            }
        }
        plus.push(p.act_on_coherent(Complex::new(T::zero(), T::zero())).1);
        minus.push(m.act_on_coherent(Complex::new(T::zero(), T::zero())).1);
    }
    Ok(BranchPaths { times, plus, minus })
}

/// Abscissa of a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Ring bias U_dc, V; z_s and V_ext are recomputed per point.
    BiasVoltage,
    /// Pulse time τ = t₁, s.
    Tau,
    /// Charge energy E_c, J.
    ChargeEnergy,
    /// Read-out time t₃, s.
    Readout,
}

/// How the schedule follows a τ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleFamily {
    /// Δτ recomputed for every τ (closed loop, d = 0).
    #[default]
    Symmetric,
    /// Pulse separation t₂ − t₁ held fixed, t₃ = 2τ + (t₂ − t₁).
    FixedSeparation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan<T: Real> {
    pub sweep: Sweep,
    pub values: Vec<T>,
    pub populations: Vec<T>,
    pub phases: Vec<T>,
    pub envelopes: Vec<T>,
}

/// `n` evenly spaced points from `start` to `end` inclusive.
pub fn linspace<T: Real>(start: T, end: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (end - start) * T::lit(i as f64) / T::lit((n - 1) as f64)).collect(),
    }
}

/// Reduced parameters and schedule at one sweep point.
pub fn sweep_point<T: Real + Send + Sync>(
    setup: &ModelSetup<T>,
    base: &PulseSchedule<T>,
    family: ScheduleFamily,
    sweep: Sweep,
    value: T,
) -> Result<(QubitOscillatorParams<T>, PulseSchedule<T>)> {
    let mut params = setup.reduce()?;
    let mut schedule = *base;
    match sweep {
        Sweep::BiasVoltage => params = setup.with_bias(value).reduce()?,
        Sweep::ChargeEnergy => params.charge_energy = value,
        Sweep::Readout => schedule = base.with_readout(value)?,
        Sweep::Tau => {
            schedule = match family {
                ScheduleFamily::Symmetric => PulseSchedule::symmetric(value, params.omega)?,
                ScheduleFamily::FixedSeparation => {
                    let sep = base.t2 - base.t1;
                    PulseSchedule::explicit(value, value + sep, value + value + sep)?
                }
            }
        }
    }
    Ok((params, schedule))
}

/// Population, fringe phase and envelope along a sweep; points are
/// evaluated in parallel and returned in sweep order.
pub fn fringe_scan<T: Real + Send + Sync>(
    setup: &ModelSetup<T>,
    base: &PulseSchedule<T>,
    family: ScheduleFamily,
    sweep: Sweep,
    range: (T, T),
    n_points: usize,
) -> Result<FringeScan<T>> {
    if n_points == 0 {
        return Err(Error::Rejected("fringe scan needs at least one point".into()));
    }
    let values = linspace(range.0, range.1, n_points);
    let points: Vec<(T, T, T)> = values
        .par_iter()
        .map(|v| {
            let (p, s) = sweep_point(setup, base, family, sweep, *v)?;
            Ok((qubit_population(&p, &s), fringe_phase(&p, &s), envelope(&p, &s)))
        })
        .collect::<Result<_>>()?;
    Ok(FringeScan {
        sweep,
        values,
        populations: points.iter().map(|p| p.0).collect(),
        phases: points.iter().map(|p| p.1).collect(),
        envelopes: points.iter().map(|p| p.2).collect(),
    })
}

/// Least-squares fit of `P(x) = a + b cos(kx) + c sin(kx)` for a known
/// fringe wavenumber `k`; returns the phase at `x = 0`, `atan2(−c, b)`,
/// together with the amplitude `√(b² + c²)`.
pub fn fit_fringe_phase<T: Real>(x: &[T], population: &[T], wavenumber: T) -> Result<(T, T)> {
    if x.len() != population.len() || x.len() < 3 {
        return Err(Error::Rejected("phase fit needs at least three paired samples".into()));
    }
    let mut ata = nalgebra::Matrix3::<T>::zeros();
    let mut atb = nalgebra::Vector3::<T>::zeros();
    for (xi, yi) in x.iter().zip(population) {
        let row = nalgebra::Vector3::new(T::one(), (wavenumber * *xi).cos(), (wavenumber * *xi).sin());
        ata += row * row.transpose();
        atb += row * *yi;
    }
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::Degenerate("fringe samples do not resolve the phase".into()))?;
    Ok(((-sol[2]).atan2(sol[1]), sol[1].hypot(sol[2])))
}
