use std::f64::consts::PI;

use levem::circuit::{cooling_rate, induced_charge, translational_cooling_rate};
use levem::constants::{BOLTZMANN, HBAR};
use levem::interferometry::*;
use levem::oracle::{displacement_matrix, mc_dephasing};
use levem::params::*;
use levem::trap::*;
use nalgebra::{Complex, DMatrix, UnitQuaternion, Vector3};
use proptest::prelude::*;

type C64 = Complex<f64>;

fn primitive() -> impl Strategy<Value = Primitive<f64>> {
    prop_oneof![
        (-0.3..0.3, -0.3..0.3).prop_map(|(a, b)| Primitive::Displace(Complex::new(a, b))),
        (-PI..PI).prop_map(Primitive::Rotate),
        (-PI..PI).prop_map(Primitive::Phase),
    ]
}

fn reduced() -> impl Strategy<Value = Reduced<f64>> {
    (-PI..PI, -2.0..2.0, -2.0..2.0, -PI..PI)
        .prop_map(|(p, a, b, r)| Reduced { phase: p, displacement: Complex::new(a, b), rotation: r })
}

fn params() -> impl Strategy<Value = QubitOscillatorParams<f64>> {
    (0.3..3.0, 0.0..4.0, 0.0..8.0, -2.0..2.0, 0.0..0.5, 0.0..8.0_f64).prop_map(|(omega, k, ec, v, gd, nbar)| {
        let temperature = if nbar < 1e-3 { 0.0 } else { HBAR * omega / (BOLTZMANN * (1.0 / nbar + 1.0).ln()) };
        QubitOscillatorParams {
            omega,
            kappa: k * omega,
            charge_energy: ec * HBAR * omega,
            drive: v * HBAR * omega,
            occupation: 0,
            dephasing_rate: gd * omega,
            temperature,
        }
    })
}

fn primitive_matrix(p: &Primitive<f64>, n_max: usize) -> DMatrix<C64> {
    match p {
        Primitive::Displace(a) => displacement_matrix(*a, n_max),
        Primitive::Rotate(t) => DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n_max + 1, |n, _| {
            C64::from_polar(1.0, -t * n as f64)
        })),
        Primitive::Phase(ph) => DMatrix::identity(n_max + 1, n_max + 1) * C64::from_polar(1.0, *ph),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_times_inverse_is_identity(prims in prop::collection::vec(primitive(), 1..30)) {
        let w = PhaseSpaceWord::new(prims);
        let id = w.clone().then(&w.inverse()).reduce();
        prop_assert!(id.approx_eq(&Reduced::identity(), 1e-12), "{id:?}");
    }

    #[test]
    fn reduction_is_associative(a in reduced(), b in reduced(), c in reduced()) {
        let left = (a * b) * c;
        let right = a * (b * c);
        prop_assert!(left.approx_eq(&right, 1e-12));
    }

    #[test]
    fn bracketing_of_a_word_does_not_matter(prims in prop::collection::vec(primitive(), 2..25), cut in 1usize..24) {
        let cut = cut.min(prims.len() - 1);
        let whole = PhaseSpaceWord::new(prims.clone()).reduce();
        let head = PhaseSpaceWord::new(prims[..cut].to_vec()).reduce();
        let tail = PhaseSpaceWord::new(prims[cut..].to_vec()).reduce();
        prop_assert!(whole.approx_eq(&(head * tail), 1e-12));
    }

    #[test]
    fn reduced_form_reproduces_coherent_action(prims in prop::collection::vec(primitive(), 1..20), re in -1.0..1.0, im in -1.0..1.0) {
        let beta = Complex::new(re, im);
        let r = PhaseSpaceWord::new(prims.clone()).reduce();
        let (mut phase, mut amp) = (0.0, beta);
        for p in prims.iter().rev() {
            let (dp, a) = p.reduced().act_on_coherent(amp);
            phase += dp;
            amp = a;
        }
        let (rp, ra) = r.act_on_coherent(beta);
        prop_assert!((ra - amp).norm() < 1e-12);
        prop_assert!(levem::real::wrap_angle(rp - phase).abs() < 1e-11);
    }

    #[test]
    fn population_is_a_probability(p in params(), t1 in 0.0..4.0, g1 in 0.0..4.0, g2 in 0.0..4.0) {
        let s = PulseSchedule::explicit(t1, t1 + g1, t1 + g1 + g2).unwrap();
        let pe = qubit_population(&p, &s);
        prop_assert!((0.0..=1.0).contains(&pe), "{pe}");
    }

    #[test]
    fn symmetric_schedules_close(omega in 1e-2..1e9_f64, x in 1e-3..(PI - 1e-3)) {
        let tau = x / omega;
        let s = PulseSchedule::symmetric(tau, omega).unwrap();
        prop_assert!(d_closure(s.t1, s.t2, s.t3, omega).norm() < 1e-12);
    }

    #[test]
    fn symmetric_envelope_is_pure_dephasing(p in params(), x in 1e-3..(PI - 1e-3)) {
        let tau = x / p.omega;
        let s = PulseSchedule::symmetric(tau, p.omega).unwrap();
        let e = envelope(&p, &s);
        let want = (-p.dephasing_rate * s.t3).exp();
        prop_assert!((e - want).abs() < 1e-12 * want.max(1e-300), "{e} vs {want}");
    }

    #[test]
    fn symmetric_population_matches_closed_form(p in params(), x in 1e-3..(PI - 1e-3)) {
        let tau = x / p.omega;
        let s = PulseSchedule::symmetric(tau, p.omega).unwrap();
        let a = qubit_population(&p, &s);
        let b = symmetric_population(&p, tau).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn fringe_phase_is_linear_in_drive(p in params(), t1 in 0.1..3.0, g1 in 0.1..3.0, g2 in 0.1..3.0) {
        let s = PulseSchedule::explicit(t1, t1 + g1, t1 + g1 + g2).unwrap();
        let at = |v: f64| {
            let mut q = p;
            q.drive = v * HBAR * p.omega;
            fringe_phase(&q, &s)
        };
        let slope = at(1.0) - at(0.0);
        for v in [-1.5, 0.5, 2.5] {
            let predicted = at(0.0) + slope * v;
            prop_assert!((at(v) - predicted).abs() < 1e-9 * (1.0 + predicted.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_words_match_truncated_fock_product(prims in prop::collection::vec(primitive(), 20)) {
        let n_max = 150;
        let product = prims
            .iter()
            .fold(DMatrix::<C64>::identity(n_max + 1, n_max + 1), |acc, p| acc * primitive_matrix(p, n_max));
        let r = PhaseSpaceWord::new(prims).reduce();
        let reduced = displacement_matrix(r.displacement, n_max)
            * primitive_matrix(&Primitive::Rotate(r.rotation), n_max)
            * C64::from_polar(1.0, r.phase);
        for m in 0..12 {
            for n in 0..12 {
                prop_assert!((product[(m, n)] - reduced[(m, n)]).norm() < 1e-8, "({m},{n})");
            }
        }
    }
}

fn setup_strategy() -> impl Strategy<Value = ModelSetup<f64>> {
    (0.2..5.0, 0.2..5.0, 0i64..40, 0.0..20.0).prop_map(|(q_scale, m_scale, n, u)| {
        let mut s = reference::setup(u);
        s.particle.charge *= q_scale;
        s.particle.mass *= m_scale;
        s.occupation = n;
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transverse_frequencies_are_half_axial(s in setup_strategy()) {
        let (x, y, z) = secular_frequencies(&s.particle, &s.trap);
        prop_assert_eq!(x, z / 2.0);
        prop_assert_eq!(y, z / 2.0);
    }

    #[test]
    fn coupling_scales_as_charge_over_root_mass(s in setup_strategy(), omega in 1e4..1e7_f64) {
        let d = derived_circuit(&s.circuit);
        let k1 = coupling_strength(&s.particle, &s.trap, &d, omega).unwrap();
        let mut p = s.particle.clone();
        p.charge *= 2.0;
        p.mass *= 4.0;
        let k2 = coupling_strength(&p, &s.trap, &d, omega).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-15 * k1.abs());
    }

    #[test]
    fn shift_is_linear_in_occupation(s in setup_strategy()) {
        let d = derived_circuit(&s.circuit);
        let omega = s.omega(&d);
        let one = shift_and_charge_energy(&s.particle, &s.trap, &d, 1, omega).0;
        let n = shift_and_charge_energy(&s.particle, &s.trap, &d, s.occupation, omega).0;
        prop_assert_eq!(shift_and_charge_energy(&s.particle, &s.trap, &d, 0, omega).0, 0.0);
        prop_assert!((n - one * s.occupation as f64).abs() <= 1e-14 * n.abs());
    }

    #[test]
    fn effective_capacitance_bound(c in 1e-17..1e-12_f64, cc in 1e-17..1e-12_f64) {
        let mut circuit = reference::circuit();
        circuit.endcap_capacitance = c;
        circuit.coupling_capacitance = cc;
        let d = derived_circuit(&circuit);
        prop_assert!(d.effective_capacitance > 0.0);
        prop_assert!(d.effective_capacitance < c.min(cc / 2.0));
    }

    #[test]
    fn derivation_is_deterministic(s in setup_strategy()) {
        prop_assert_eq!(s.derive().unwrap(), s.derive().unwrap());
    }
}

fn orientation() -> impl Strategy<Value = UnitQuaternion<f64>> {
    (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| UnitQuaternion::from_euler_angles(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cooling_rate_bounded_below_by_translation(o in orientation(), px in -1.0..1.0, py in -1.0..1.0) {
        let mut p = reference::particle();
        p.dipole_body = Vector3::new(px, py, 1.0) * 3e-27;
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::zeros(), o);
        prop_assert!(cooling_rate(&s, &p, &trap, 1e8) >= translational_cooling_rate(&p, &trap, 1e8));
    }

    #[test]
    fn axial_rotation_leaves_induced_charge(o in orientation(), angle in -PI..PI, z in -1e-6..1e-6) {
        let mut p = reference::particle();
        p.dipole_body = Vector3::zeros();
        let trap = reference::trap(0.0);
        let s = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, z), o);
        let q0 = induced_charge(&s, &p, &trap, 1e-15, 0.2);
        let q1 = induced_charge(&s.rotated(Vector3::z() * angle), &p, &trap, 1e-15, 0.2);
        prop_assert_eq!(q0, q1);
    }

    #[test]
    fn orientation_stays_normalised(o in orientation(), j in prop::array::uniform3(-1e-32..1e-32_f64)) {
        let p = reference::particle();
        let trap = reference::trap(0.0);
        let mut s = RigidBodyState::at_rest(Vector3::new(3e-7, -2e-7, 4e-7), o);
        s.angular_momentum = Vector3::from(j);
        let control = StepControl { t_end: 2e-9 * 400.0, dt: 1e-10, sample_every: 1 };
        let traj = integrate_full(&s, &p, &trap, &control).unwrap();
        for st in &traj.states {
            prop_assert!((st.orientation.quaternion().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_charge_translation_ignores_orientation(o in orientation()) {
        let r = reference::particle();
        let mut p = r.clone();
        p.dipole_body = Vector3::zeros();
        let trap = reference::trap(0.0);
        let start = Vector3::new(2e-7, 1e-7, -3e-7);
        let control = StepControl { t_end: 2e-5, dt: 2e-8, sample_every: 100 };
        let a = integrate_secular(&RigidBodyState::at_rest(start, o), &p, &trap, &control).unwrap();
        let b = integrate_secular(&RigidBodyState::at_rest(start, UnitQuaternion::identity()), &p, &trap, &control).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert_eq!(x.position, y.position);
        }
    }
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let p = QubitOscillatorParams {
        omega: 1.0,
        kappa: 0.7,
        charge_energy: 2.0 * HBAR,
        drive: 0.0,
        occupation: 0,
        dephasing_rate: 0.0,
        temperature: 0.0,
    };
    let s = PulseSchedule::symmetric(0.8, 1.0).unwrap();
    let a = mc_dephasing(&p, &s, 4.4e-15, 1e-3, 42, 500).unwrap();
    let b = mc_dephasing(&p, &s, 4.4e-15, 1e-3, 42, 500).unwrap();
    assert_eq!(a, b);
    let c = mc_dephasing(&p, &s, 4.4e-15, 1e-3, 43, 500).unwrap();
    assert_ne!(a.mean, c.mean);
}
