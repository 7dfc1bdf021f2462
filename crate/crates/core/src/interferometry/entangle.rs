//! Two interferometers started from a Bell pair and measured before the
//! branches recombine leave their oscillators in a two-term superposition
//! of product coherent states.

use nalgebra::{Complex, Matrix2};

use super::{scheme_words, PulseSchedule};
use crate::error::{Error, Result};
use crate::params::QubitOscillatorParams;
use crate::real::{cis, Real};

/// Qubit read-out result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ground,
    Excited,
}

/// `[D₁(α₁)D₂(β₂) ± e^{iφ} D₁(β₁)D₂(α₂)] |0⟩|0⟩` plus the mean
/// occupations of the two oscillators before the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedTwoParticleState<T: Real> {
    /// Displacements of `U₊` for particles 1 and 2.
    pub alpha: [Complex<T>; 2],
    /// Displacements of `U₋` for particles 1 and 2.
    pub beta: [Complex<T>; 2],
    /// φ = φ₋⁽¹⁾ + φ₊⁽²⁾ − φ₊⁽¹⁾ − φ₋⁽²⁾
    pub phase: T,
    /// +1 for equal outcomes, −1 otherwise.
    pub sign: i8,
    pub mean_occupation: [T; 2],
}

impl<T: Real> ConditionedTwoParticleState<T> {
    /// Relative amplitude `± e^{iφ}` of the second term.
    pub fn relative_amplitude(&self) -> Complex<T> {
        cis(self.phase) * T::lit(f64::from(self.sign))
    }
}

/// Conditioned oscillator state for the outcomes of both qubits. The read-out
/// time must lie in `t₂ < t₃ ≤ t₂ + t₁`, i.e. `τ + Δτ < t₃ ≤ 2τ + Δτ` for a
/// symmetric schedule; at the upper end the branches have recombined.
pub fn two_particle_conditioned_state<T: Real>(
    first: &QubitOscillatorParams<T>,
    second: &QubitOscillatorParams<T>,
    schedule: &PulseSchedule<T>,
    outcomes: (Outcome, Outcome),
) -> Result<ConditionedTwoParticleState<T>> {
    first.validate()?;
    second.validate()?;
    if (first.omega - second.omega).abs() > T::lit(1e-12) * first.omega {
        return Err(Error::Rejected("both oscillators must share the same frequency".into()));
    }
    if !(schedule.t3 > schedule.t2 && schedule.t3 <= schedule.t2 + schedule.t1) {
        return Err(Error::Rejected("read-out time must satisfy t2 < t3 <= t1 + t2".into()));
    }
    let (p1, m1) = scheme_words(first, schedule);
    let (p2, m2) = scheme_words(second, schedule);
    let (p1, m1, p2, m2) = (p1.reduce(), m1.reduce(), p2.reduce(), m2.reduce());
    Ok(ConditionedTwoParticleState {
        alpha: [p1.displacement, p2.displacement],
        beta: [m1.displacement, m2.displacement],
        phase: m1.phase + p2.phase - p1.phase - m2.phase,
        sign: if outcomes.0 == outcomes.1 { 1 } else { -1 },
        mean_occupation: [first.mean_phonon_number(), second.mean_phonon_number()],
    })
}

/// `⟨a|b⟩` for coherent states.
pub fn coherent_overlap<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let z = a.conj() * b;
    cis(z.im) * (z.re - (a.norm_sqr() + b.norm_sqr()) * half).exp()
}

/// Von Neumann entropy (nats) of either oscillator for the zero-temperature
/// conditioned state, from the 2×2 overlap matrices of the branch states.
pub fn entanglement_entropy_t0<T: Real>(state: &ConditionedTwoParticleState<T>) -> Result<T> {
    let a = [state.alpha[0], state.beta[0]];
    let b = [state.beta[1], state.alpha[1]];
    let one = Complex::new(T::one(), T::zero());
    let c = [one, state.relative_amplitude()];
    let x = Matrix2::from_fn(|i, j| c[i] * c[j].conj() * coherent_overlap(b[j], b[i]));
    let g = Matrix2::from_fn(|i, j| coherent_overlap(a[i], a[j]));
    let m = x * g;
    let trace = m.trace().re;
    if !(trace > T::lit(1e-14)) {
        return Err(Error::Degenerate("conditioned state has vanishing norm".into()));
    }
    let det = (m.determinant().re / (trace * trace)).max(T::zero());
    let disc = (T::one() - T::lit(4.0) * det).max(T::zero()).sqrt();
    let small = T::lit(2.0) * det / (T::one() + disc);
    let large = T::one() - small;
    let h = |p: T| if p > T::zero() { -p * p.ln() } else { T::zero() };
    Ok(h(small) + h(large))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::HBAR;

    fn params(kappa: f64) -> QubitOscillatorParams<f64> {
        QubitOscillatorParams {
            omega: 1.0,
            kappa,
            charge_energy: 0.5 * HBAR,
            drive: 0.0,
            occupation: 0,
            dephasing_rate: 0.0,
            temperature: 0.0,
        }
    }

    #[test]
    fn uncoupled_is_product() {
        let s = PulseSchedule::symmetric(0.6, 1.0).unwrap();
        let s = s.with_readout(s.t2 + 0.3).unwrap();
        let st = two_particle_conditioned_state(&params(0.0), &params(0.0), &s, (Outcome::Ground, Outcome::Ground))
            .unwrap();
        assert_eq!(st.alpha, st.beta);
        assert!(entanglement_entropy_t0(&st).unwrap().abs() < 1e-14);
    }

    #[test]
    fn recombined_branches_factorise() {
        let s = PulseSchedule::symmetric(0.6, 1.0).unwrap();
        let st = two_particle_conditioned_state(&params(1.2), &params(0.7), &s, (Outcome::Ground, Outcome::Excited))
            .unwrap();
        for i in 0..2 {
            assert!((st.alpha[i] - st.beta[i]).norm() < 1e-12);
        }
        assert!(entanglement_entropy_t0(&st).unwrap() < 1e-12);
    }

    #[test]
    fn open_branches_entangle() {
        let s = PulseSchedule::symmetric(0.6, 1.0).unwrap();
        let s = s.with_readout(s.t2 + 0.2).unwrap();
        let st = two_particle_conditioned_state(&params(1.2), &params(0.7), &s, (Outcome::Ground, Outcome::Ground))
            .unwrap();
        assert!((st.alpha[0] - st.beta[0]).norm() > 0.0);
        let e = entanglement_entropy_t0(&st).unwrap();
        assert!(e > 0.0 && e <= std::f64::consts::LN_2 + 1e-15);
    }

    #[test]
    fn far_branches_reach_ln2() {
        let z = Complex::new(0.0, 0.0);
        let st = ConditionedTwoParticleState {
            alpha: [Complex::new(12.0, 0.0), Complex::new(0.0, -9.0)],
            beta: [z, z],
            phase: 0.4,
            sign: -1,
            mean_occupation: [0.0, 0.0],
        };
        assert!((entanglement_entropy_t0(&st).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn destructive_identical_branches_rejected() {
        let a = Complex::new(0.3, 0.2);
        let st = ConditionedTwoParticleState {
            alpha: [a, a],
            beta: [a, a],
            phase: 0.0,
            sign: -1,
            mean_occupation: [0.0, 0.0],
        };
        assert!(entanglement_entropy_t0(&st).is_err());
    }

    #[test]
    fn mismatched_frequency_and_window_rejected() {
        let s = PulseSchedule::symmetric(0.6, 1.0).unwrap();
        let mut other = params(1.0);
        other.omega = 1.01;
        let oo = (Outcome::Ground, Outcome::Ground);
        assert!(two_particle_conditioned_state(&params(1.0), &other, &s, oo).is_err());
        let early = s.with_readout(s.t2).unwrap();
        assert!(two_particle_conditioned_state(&params(1.0), &params(1.0), &early, oo).is_err());
    }
}
