//! Physical constants (CODATA 2018 exact / recommended values) and the
//! material constants used by the convenience constructors.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Ångström, m.
pub const ANGSTROM: f64 = 1e-10;
/// Mass density of crystalline silicon, kg/m³.
pub const SILICON_DENSITY: f64 = 2329.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_values() {
        assert_eq!(ELEMENTARY_CHARGE, 1.602176634e-19);
        assert_eq!(HBAR, 1.054571817e-34);
        assert_eq!(BOLTZMANN, 1.380649e-23);
        assert_eq!(AMU, 1.6605390666e-27);
        assert_eq!(SILICON_DENSITY, 2329.0);
    }
}
