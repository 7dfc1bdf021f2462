//! Levitated charged nanoparticle in a Paul trap coupled to a Cooper-pair
//! box: classical ro-translational dynamics, induced-charge coupling and
//! resistive cooling, the pulsed qubit interferometer, and a brute-force
//! Fock-space oracle for the interferometer.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what SI-unit work needs.

pub mod circuit;
pub mod constants;
pub mod error;
pub mod interferometry;
pub mod oracle;
pub mod params;
pub mod real;
pub mod trap;

pub use error::{Error, Result};
pub use real::Real;

pub type Particle = params::ParticleSpec<f64>;
pub type Trap = params::TrapSpec<f64>;
pub type Circuit = params::CircuitSpec<f64>;
pub type Setup = params::ModelSetup<f64>;
pub type QubitParams = params::QubitOscillatorParams<f64>;
pub type Derived = params::DerivedParameters<f64>;
pub type State = trap::RigidBodyState<f64>;
pub type Trajectory = trap::Trajectory<f64>;
pub type Schedule = interferometry::PulseSchedule<f64>;
pub type Word = interferometry::PhaseSpaceWord<f64>;
pub type TwoParticleState = interferometry::ConditionedTwoParticleState<f64>;
