//! Products of displacements, rotations and phases of a single bosonic mode.
//!
//! Every such product reduces to `e^{iφ} D(α) R(θ)` with
//! `D(α) = exp(α a† − α* a)` and `R(θ) = exp(−iθ a†a)`.

use nalgebra::Complex;

use crate::real::{cis, modulus, wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive<T: Real> {
    /// `D(α)`
    Displace(Complex<T>),
    /// `R(θ) = exp(−iθ a†a)`
    Rotate(T),
    /// Global phase `e^{iφ}`.
    Phase(T),
}

impl<T: Real> Primitive<T> {
    pub fn inverse(self) -> Self {
        match self {
            Primitive::Displace(a) => Primitive::Displace(-a),
            Primitive::Rotate(t) => Primitive::Rotate(-t),
            Primitive::Phase(p) => Primitive::Phase(-p),
        }
    }

    pub fn reduced(self) -> Reduced<T> {
        match self {
            Primitive::Displace(a) => Reduced { phase: T::zero(), displacement: a, rotation: T::zero() },
            Primitive::Rotate(t) => Reduced { phase: T::zero(), displacement: Complex::new(T::zero(), T::zero()), rotation: t },
            Primitive::Phase(p) => Reduced { phase: p, displacement: Complex::new(T::zero(), T::zero()), rotation: T::zero() },
        }
    }
}

/// Operator product `P₁ P₂ ⋯ Pₙ`, leftmost factor first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSpaceWord<T: Real> {
    pub primitives: Vec<Primitive<T>>,
}

impl<T: Real> PhaseSpaceWord<T> {
    pub fn new(primitives: Vec<Primitive<T>>) -> Self {
        Self { primitives }
    }

    /// Word of `U₁ U₂`.
    pub fn then(mut self, other: &PhaseSpaceWord<T>) -> Self {
        self.primitives.extend_from_slice(&other.primitives);
        self
    }

    /// Word of `U†`.
    pub fn inverse(&self) -> Self {
        Self { primitives: self.primitives.iter().rev().map(|p| p.inverse()).collect() }
    }

    pub fn reduce(&self) -> Reduced<T> {
        reduce_word(self)
    }
}

/// `e^{iφ} D(α) R(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced<T: Real> {
    pub phase: T,
    pub displacement: Complex<T>,
    pub rotation: T,
}

impl<T: Real> Reduced<T> {
    pub fn identity() -> Self {
        Self { phase: T::zero(), displacement: Complex::new(T::zero(), T::zero()), rotation: T::zero() }
    }

    /// Reduced form of `self · other`.
    pub fn compose(&self, other: &Reduced<T>) -> Reduced<T> {
        let moved = other.displacement * cis(-self.rotation);
        let cross = (self.displacement * moved.conj()).im;
        Reduced {
            phase: self.phase + other.phase + cross,
            displacement: self.displacement + moved,
            rotation: self.rotation + other.rotation,
        }
    }

    pub fn inverse(&self) -> Reduced<T> {
        Reduced {
            phase: -self.phase,
            displacement: -self.displacement * cis(self.rotation),
            rotation: -self.rotation,
        }
    }

    /// Phase and rotation wrapped into `(−π, π]`.
    pub fn wrapped(&self) -> Reduced<T> {
        Reduced { phase: wrap_angle(self.phase), displacement: self.displacement, rotation: wrap_angle(self.rotation) }
    }

    /// Equality with phases compared modulo 2π.
    pub fn approx_eq(&self, other: &Reduced<T>, tol: T) -> bool {
        wrap_angle(self.phase - other.phase).abs() <= tol
            && modulus(self.displacement - other.displacement) <= tol
            && wrap_angle(self.rotation - other.rotation).abs() <= tol
    }

    /// `e^{iφ} D(α) R(θ) |β⟩ = e^{iφ + i Im(α β'*)} |α + β'⟩`, with
    /// `β' = β e^{−iθ}`; returns the phase and the new coherent amplitude.
    pub fn act_on_coherent(&self, beta: Complex<T>) -> (T, Complex<T>) {
        let moved = beta * cis(-self.rotation);
        (self.phase + (self.displacement * moved.conj()).im, self.displacement + moved)
    }
}

impl<T: Real> std::ops::Mul for Reduced<T> {
    type Output = Reduced<T>;
    fn mul(self, rhs: Reduced<T>) -> Reduced<T> {
        self.compose(&rhs)
    }
}

/// Left-to-right reduction of a word.
pub fn reduce_word<T: Real>(word: &PhaseSpaceWord<T>) -> Reduced<T> {
    word.primitives.iter().fold(Reduced::identity(), |acc, p| acc.compose(&p.reduced()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn inverse_pair_cancels() {
        let a = c(0.7, -1.3);
        let r = reduce_word(&PhaseSpaceWord::new(vec![Primitive::Displace(a), Primitive::Displace(-a)]));
        assert_eq!(r, Reduced::identity());
    }

    #[test]
    fn conjugation_rule() {
        let (a, t) = (c(0.4, 0.9), 0.8);
        let r = reduce_word(&PhaseSpaceWord::new(vec![
            Primitive::Rotate(t),
            Primitive::Displace(a),
            Primitive::Rotate(-t),
        ]));
        assert!(r.approx_eq(&Reduced { phase: 0.0, displacement: a * cis(-t), rotation: 0.0 }, 1e-15));
    }

    #[test]
    fn displacement_composition_phase() {
        let (a, b) = (c(1.0, 0.0), c(0.0, 1.0));
        let r = Primitive::Displace(a).reduced() * Primitive::Displace(b).reduced();
        assert_eq!(r.phase, (a * b.conj()).im);
        assert_eq!(r.displacement, a + b);
    }

    #[test]
    fn works_in_single_precision() {
        let w = PhaseSpaceWord::new(vec![
            Primitive::Displace(Complex::new(0.3f32, 0.1)),
            Primitive::Rotate(1.1f32),
            Primitive::Phase(0.2f32),
        ]);
        let r = w.clone().then(&w.inverse()).reduce();
        assert!(r.approx_eq(&Reduced::identity(), 1e-6));
    }
}
