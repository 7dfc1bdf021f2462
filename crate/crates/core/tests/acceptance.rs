//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_PI_3, LN_2, PI, TAU};
use std::time::{Duration, Instant};

use levem::circuit::*;
use levem::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR};
use levem::interferometry::*;
use levem::oracle::*;
use levem::params::{reference, secular_frequencies, ParticleSpec, QubitOscillatorParams};
use levem::trap::*;
use nalgebra::{Complex, Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Check = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> (bool, String) {
    let r = rel(value, target);
    (r <= tol, format!("{name}={value:.5e} ({:+.2}%)", 100.0 * (value - target) / target))
}

fn collect(parts: Vec<(bool, String)>) -> Check {
    let ok = parts.iter().all(|p| p.0);
    let text = parts
        .into_iter()
        .map(|(good, s)| if good { s } else { format!("{s} !") })
        .collect::<Vec<_>>()
        .join(", ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn derived_parameters() -> Check {
    let setup = reference::setup(0.0);
    let d = setup.derive().map_err(|e| e.to_string())?;
    let mut empty = setup.clone();
    empty.occupation = 0;
    let d0 = empty.derive().map_err(|e| e.to_string())?;
    let two_e2_c = 2.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / d.circuit.total_capacitance;
    let ec0_uev = d0.charge_energy / ELEMENTARY_CHARGE * 1e6;
    let rest = RigidBodyState::at_rest(Vector3::zeros(), UnitQuaternion::identity());
    let gamma = cooling_rate(&rest, &setup.particle, &setup.trap, setup.circuit.resistance);
    let mut parts = vec![
        within("kappa", d.kappa, 1.68e7, 0.01),
        (
            (1.38e5..=1.40e5).contains(&d.omega),
            format!("omega={:.5e}", d.omega),
        ),
        within("z_s", d.shift, 1.17e-6, 0.01),
    ];
    let (ok, _) = within("", d0.charge_energy, two_e2_c, 0.01);
    parts.push((ok && d0.shift == 0.0, format!("E_c(N=0)={ec0_uev:.2} ueV = 2e^2/C_S")));
    parts.push(within("nbar", d.mean_phonon_number, 945.0, 0.02));
    parts.push(((150.0..=175.0).contains(&gamma), format!("gamma_ad={gamma:.1} Hz")));
    collect(parts)
}

fn secular_fidelity() -> Check {
    let p = reference::particle();
    let trap = reference::trap(0.0);
    let offset = Vector3::new(0.5, 0.3, 0.8).normalize() * 1e-6;
    let s0 = RigidBodyState::at_rest(offset, UnitQuaternion::from_euler_angles(0.4, -0.3, 0.2));
    let (_, _, wz) = secular_frequencies(&p, &trap);
    let t_end = 10.0 * TAU / wz;
    let every = 10;
    let full = integrate_full_cycle_averaged(&s0, &p, &trap, t_end, 200, every).map_err(|e| e.to_string())?;
    let control = StepControl { t_end, dt: trap.drive_period(), sample_every: every };
    let sec = integrate_secular(&s0, &p, &trap, &control).map_err(|e| e.to_string())?;
    let scale = sec.states.iter().map(|s| s.position.norm()).fold(0.0, f64::max);
    let mut worst = 0.0_f64;
    for (t, r) in full.times.iter().zip(&full.positions) {
        let k = (t / trap.drive_period() / every as f64).round() as usize;
        let dev = (r - sec.states[k].position).norm() / scale;
        worst = worst.max(dev);
    }
    let text = format!("max deviation {:.3}% over {} samples", 100.0 * worst, full.times.len());
    if worst < 0.01 && full.times.len() > 100 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn random_particle(rng: &mut ChaCha20Rng) -> ParticleSpec<f64> {
    let mut p = reference::particle();
    let mut v = || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    p.dipole_body = v() * 3e-27;
    let a = v();
    let b = v();
    let q = Matrix3::from_columns(&[a, b, a.cross(&b)]);
    let q = (q + q.transpose()) * 0.5;
    p.quadrupole_body = (q - Matrix3::identity() * (q.trace() / 3.0)) * 1e-32;
    p
}

fn random_state(rng: &mut ChaCha20Rng) -> RigidBodyState<f64> {
    let mut v = |s: f64| Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s));
    let position = v(1e-6);
    let velocity = v(1e-2);
    let angular_momentum = v(1e-32);
    let axis = v(PI);
    RigidBodyState { position, velocity, orientation: UnitQuaternion::from_scaled_axis(axis), angular_momentum }
}

/// Richardson-extrapolated central differences of −∇V in position and in
/// space-frame rotation angle.
fn gradient(v: &dyn Fn(&RigidBodyState<f64>) -> f64, s: &RigidBodyState<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let central = |h: f64, i: usize, rot: bool| {
        let (a, b) = if rot {
            let e = Vector3::ith(i, h);
            (s.rotated(e), s.rotated(-e))
        } else {
            let (mut a, mut b) = (*s, *s);
            a.position[i] += h;
            b.position[i] -= h;
            (a, b)
        };
        -(v(&a) - v(&b)) / (2.0 * h)
    };
    let rich = |h: f64, i: usize, rot: bool| (4.0 * central(h / 2.0, i, rot) - central(h, i, rot)) / 3.0;
    let f = Vector3::from_fn(|i, _| rich(2e-9, i, false));
    let t = Vector3::from_fn(|i, _| rich(2e-3, i, true));
    (f, t)
}

fn gradient_checks() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p = random_particle(&mut rng);
        let trap = reference::trap(rng.random_range(0.0..25.0));
        let s = random_state(&mut rng);
        let t = rng.random_range(0.0..trap.drive_period());
        let exact = exact_force_torque(&s, &p, &trap, t);
        let fd = gradient(&|x| time_dependent_potential(x, &p, &trap, t), &s);
        let eff = effective_force_torque(&s, &p, &trap);
        let fd_eff = gradient(&|x| effective_potential(x, &p, &trap), &s);
        for (a, b) in [(exact, fd), (eff, fd_eff)] {
            worst = worst.max((a.0 - b.0).norm() / a.0.norm());
            worst = worst.max((a.1 - b.1).norm() / a.1.norm());
        }
    }
    let text = format!("worst relative error {worst:.2e} over 100 states x 2 potentials");
    if worst < 1e-6 {
        Ok(text)
    } else {
        Err(text)
    }
}

/// Fitted contraction rate and the closed-form γ_ad averaged along the
/// reference trajectory.
fn contraction(p: &ParticleSpec<f64>, s0: &RigidBodyState<f64>, periods: f64) -> Result<(f64, f64), String> {
    let trap = reference::trap(0.0);
    let r = reference::circuit().resistance;
    let w = max_secular_frequency(s0, p, &trap);
    let gamma0 = cooling_rate(s0, p, &trap, r);
    let control = StepControl { t_end: periods / gamma0, dt: TAU / w / 100.0, sample_every: 10 };
    let spread = BundleSpread::linear(p, &trap, 5e-7);
    let fit = fit_contraction_rate(s0, p, &trap, r, &control, &spread).map_err(|e| e.to_string())?;
    let g: Vec<f64> = fit.reference.iter().map(|s| cooling_rate(s, p, &trap, r)).collect();
    let t = &fit.times;
    let integral: f64 = (1..t.len()).map(|i| 0.5 * (g[i] + g[i - 1]) * (t[i] - t[i - 1])).sum();
    Ok((fit.rate, integral / t[t.len() - 1]))
}

fn cooling_equivalence() -> Check {
    let p = reference::particle();
    let trap = reference::trap(0.0);
    let r = reference::circuit().resistance;
    let tilted = RigidBodyState::at_rest(Vector3::new(2e-7, -1e-7, 5e-7), UnitQuaternion::from_euler_angles(0.9, 0.4, 0.0));
    let (fit_ref, closed_ref) = contraction(&p, &tilted, 1.5)?;
    // A large axial dipole makes the rotational term of γ_ad visible.
    let mut polar = p.clone();
    polar.dipole_body = Vector3::new(0.0, 0.0, 2e-25);
    let near_axis = RigidBodyState::at_rest(tilted.position, UnitQuaternion::from_euler_angles(0.05, 0.02, 0.0));
    let (fit_polar, closed_polar) = contraction(&polar, &near_axis, 0.5)?;

    let point = ParticleSpec::point_charge(p.mass, p.charge).map_err(|e| e.to_string())?;
    let gamma_t = translational_cooling_rate(&point, &trap, r);
    let (_, _, wz) = secular_frequencies(&point, &trap);
    let s1 = RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 1e-6), UnitQuaternion::identity());
    let c1 = StepControl { t_end: 2.0 / gamma_t, dt: TAU / wz / 200.0, sample_every: 50 };
    let decay = simulate_resistive_cooling(&s1, &point, &trap, r, 0.0, &c1).map_err(|e| e.to_string())?;
    let amplitude_rate = fit_energy_decay(&decay.trajectory, &point, &trap, 0.0).map_err(|e| e.to_string())? / 2.0;
    collect(vec![
        within("contraction", fit_ref, closed_ref, 0.05),
        within("contraction (polar)", fit_polar, closed_polar, 0.05),
        within("1-D amplitude rate", amplitude_rate, gamma_t / 2.0, 0.02),
    ])
}

fn schedule_identity() -> Check {
    let omega = reference::setup(0.0).reduce().map_err(|e| e.to_string())?.omega;
    let mut worst = 0.0_f64;
    for k in 1..=100 {
        let tau = k as f64 / 101.0 * PI / omega;
        let dt = delta_tau(tau, omega).map_err(|e| e.to_string())?;
        worst = worst.max(d_closure(tau, tau + dt, 2.0 * tau + dt, omega).norm());
    }
    let tau = FRAC_PI_3 / omega;
    let r = rel(delta_tau(tau, omega).map_err(|e| e.to_string())?, tau);
    let text = format!("max |d| {worst:.2e}, pi/3 relative error {r:.2e}");
    if worst < 1e-12 && r < 1e-12 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn temperature_for(nbar: f64, omega: f64) -> f64 {
    if nbar == 0.0 {
        0.0
    } else {
        HBAR * omega / (BOLTZMANN * (1.0 / nbar + 1.0).ln())
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    let mut max_cutoff = 0;
    let pairs = 60;
    for i in 0..pairs {
        let nbar = if i % 6 == 0 { 0.0 } else { rng.random_range(0.0..5.0) };
        let params = QubitOscillatorParams {
            omega: 1.0,
            kappa: rng.random_range(0.0..3.0),
            charge_energy: rng.random_range(0.0..5.0) * HBAR,
            drive: rng.random_range(-0.5..0.5) * HBAR,
            occupation: 0,
            dephasing_rate: 0.0,
            temperature: temperature_for(nbar, 1.0),
        };
        let schedule = if i % 3 == 0 {
            PulseSchedule::symmetric(rng.random_range(0.2..3.0), 1.0)
        } else {
            let t1 = rng.random_range(0.1..3.0);
            let t2 = t1 + rng.random_range(0.1..3.0);
            PulseSchedule::explicit(t1, t2, t2 + rng.random_range(0.1..3.0))
        }
        .map_err(|e| e.to_string())?;
        let report = oracle_population(&params, &schedule, 1e-8, None).map_err(|e| format!("pair {i}: {e}"))?;
        max_cutoff = max_cutoff.max(report.cutoff);
        worst = worst.max((report.value - qubit_population(&params, &schedule)).abs());
    }
    let text = format!("worst |analytic - oracle| {worst:.2e} over {pairs} pairs, n_max <= {max_cutoff}");
    if worst < 1e-5 && max_cutoff <= MAX_CUTOFF {
        Ok(text)
    } else {
        Err(text)
    }
}

fn fringe_shifts() -> Check {
    let tau = 21.7e-9;
    let phase = |u: f64| -> Result<(f64, PulseSchedule<f64>), String> {
        let params = reference::setup(u).reduce().map_err(|e| e.to_string())?;
        let s = PulseSchedule::symmetric(tau, params.omega).map_err(|e| e.to_string())?;
        Ok((fringe_phase(&params, &s), s))
    };
    let (p0, s) = phase(0.0)?;
    let (p5, _) = phase(5.0)?;
    let (p25, _) = phase(25.0)?;
    let times = format!("t = {:.2}/{:.2}/{:.2} ns", s.t1 * 1e9, s.t2 * 1e9, s.t3 * 1e9);
    let mut parts = vec![(true, times)];
    let mut a = within("shift(5 V)", (p5 - p0).abs(), TAU / 5.0, 0.15);
    a.1 = format!("shift(5 V)={:.4}*2pi", (p5 - p0).abs() / TAU);
    let mut b = within("shift(25 V)", (p25 - p0).abs(), TAU, 0.15);
    b.1 = format!("shift(25 V)={:.4}*2pi", (p25 - p0).abs() / TAU);
    parts.push(a);
    parts.push(b);
    collect(parts)
}

fn dephasing() -> Check {
    let setup = reference::setup(0.0);
    let c_sigma = setup.derive().map_err(|e| e.to_string())?.circuit.total_capacitance;
    let mut params = setup.reduce().map_err(|e| e.to_string())?;
    params.temperature = 0.0;
    let schedule = PulseSchedule::symmetric(21.7e-9, params.omega).map_err(|e| e.to_string())?;
    // Put the fringe on its maximum so the mean population reads the contrast.
    params.charge_energy -= HBAR * fringe_phase(&params, &schedule) / schedule.lever();
    params.dephasing_rate = 1.0 / schedule.t3;
    let width = gate_charge_width(params.dephasing_rate, c_sigma);
    let est = mc_dephasing(&params, &schedule, c_sigma, width, 8, 10_000).map_err(|e| e.to_string())?;
    let contrast = 2.0 * est.mean - 1.0;
    let sigma = 2.0 * est.stderr;
    let target = (-params.dephasing_rate * schedule.t3).exp();
    let z = (contrast - target) / sigma;
    let text = format!("contrast {contrast:.4} vs {target:.4} ({z:+.2} stderr)");
    if z.abs() < 3.0 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn entanglement() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut worst = 0.0_f64;
    for i in 0..6 {
        let mut p = |k: f64| QubitOscillatorParams {
            omega: 1.0,
            kappa: k,
            charge_energy: rng.random_range(0.5..3.0) * HBAR,
            drive: rng.random_range(-0.3..0.3) * HBAR,
            occupation: 0,
            dephasing_rate: 0.0,
            temperature: 0.0,
        };
        let first = p(0.6 + 0.2 * i as f64);
        let second = p(1.1);
        let base = PulseSchedule::symmetric(0.5 + 0.3 * i as f64, 1.0).map_err(|e| e.to_string())?;
        let t3 = base.t2 + rng.random_range(0.05..0.95) * base.t1;
        let s = base.with_readout(t3).map_err(|e| e.to_string())?;
        let outcomes = if i % 2 == 0 { (Outcome::Ground, Outcome::Ground) } else { (Outcome::Ground, Outcome::Excited) };
        let state = two_particle_conditioned_state(&first, &second, &s, outcomes).map_err(|e| e.to_string())?;
        let gram = entanglement_entropy_t0(&state).map_err(|e| e.to_string())?;
        let oracle = oracle_entanglement(&state, 120).map_err(|e| e.to_string())?;
        worst = worst.max((gram - oracle.value).abs());
    }
    let zero = Complex::new(0.0, 0.0);
    let far = ConditionedTwoParticleState {
        alpha: [Complex::new(4.0, 3.0), Complex::new(-2.0, 5.5)],
        beta: [zero, zero],
        phase: 1.1,
        sign: 1,
        mean_occupation: [0.0, 0.0],
    };
    let far_gram = entanglement_entropy_t0(&far).map_err(|e| e.to_string())?;
    let far_oracle = oracle_entanglement(&far, 160).map_err(|e| e.to_string())?.value;
    let limit = (far_gram - LN_2).abs().max((far_oracle - LN_2).abs());
    let text = format!("gram vs Fock {worst:.2e}, far-branch |S - ln 2| {limit:.2e}");
    if worst < 1e-6 && limit < 1e-6 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn symmetric_specialisation() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut worst = 0.0_f64;
    let draws = 2000;
    for _ in 0..draws {
        let omega = rng.random_range(0.5..2.0);
        let params = QubitOscillatorParams {
            omega,
            kappa: rng.random_range(0.0..5.0) * omega,
            charge_energy: rng.random_range(0.0..10.0) * HBAR * omega,
            drive: rng.random_range(-2.0..2.0) * HBAR * omega,
            occupation: 0,
            dephasing_rate: rng.random_range(0.0..0.5) * omega,
            temperature: temperature_for(rng.random_range(0.0..10.0), omega),
        };
        let tau = rng.random_range(0.01..PI - 0.01) / omega;
        let s = PulseSchedule::symmetric(tau, omega).map_err(|e| e.to_string())?;
        let closed = symmetric_population(&params, tau).map_err(|e| e.to_string())?;
        worst = worst.max((qubit_population(&params, &s) - closed).abs());
    }
    let text = format!("max pointwise difference {worst:.2e} over {draws} draws");
    if worst < 1e-12 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("derived parameters", derived_parameters, Duration::from_secs(1)),
        ("secular-model fidelity", secular_fidelity, Duration::from_secs(60)),
        ("gradient checks", gradient_checks, Duration::from_secs(10)),
        ("cooling equivalence", cooling_equivalence, Duration::from_secs(60)),
        ("schedule identity", schedule_identity, Duration::from_secs(1)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(600)),
        ("fringe shifts", fringe_shifts, Duration::from_secs(10)),
        ("dephasing", dephasing, Duration::from_secs(60)),
        ("entanglement", entanglement, Duration::from_secs(60)),
        ("symmetric specialisation", symmetric_specialisation, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let (ok, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let timing = format!("{:.2} s of {} s", elapsed.as_secs_f64(), budget.as_secs());
        println!("{} {:2} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
