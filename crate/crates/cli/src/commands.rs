//! One function per CLI verb. Each returns the derived parameters, the
//! command outputs and the data tables; writing is left to the caller.

use std::f64::consts::{FRAC_PI_3, LN_2, PI, TAU};

use levem::circuit::{
    cooling_rate, fit_contraction_rate, fit_energy_decay, induced_current, simulate_resistive_cooling,
    translational_cooling_rate, BundleSpread, CoolingWarning,
};
use levem::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR};
use levem::interferometry::{
    branch_paths, d_closure, delta_tau, entanglement_entropy_t0, fringe_phase, fringe_scan, linspace,
    qubit_population, remote_qubit_population, symmetric_population, two_particle_conditioned_state,
    ConditionedTwoParticleState, Outcome, PulseSchedule, ScheduleFamily, Sweep,
};
use levem::oracle::{gate_charge_width, mc_dephasing, oracle_entanglement, oracle_population};
use levem::params::{derived_circuit, secular_frequencies};
use levem::trap::{
    integrate_full, integrate_full_cycle_averaged, integrate_secular, max_secular_frequency, secular_energy,
    stability_warnings, StabilityWarning, StepControl,
};
use levem::{QubitParams, Schedule, Trajectory};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Scenario};
use crate::output::Table;
use crate::scenario as sc;
use crate::units::Dimension;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Engine { context: String, source: levem::Error },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn engine(context: &str) -> impl FnOnce(levem::Error) -> CliError + '_ {
    move |source| CliError::Engine { context: context.into(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Oracle,
    Schedule,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Derive,
    Trajectory,
    Cool,
    Fringes,
    Remote,
    Entangle,
    Validate(Suite),
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::Trajectory => "trajectory",
            Command::Cool => "cool",
            Command::Fringes => "fringes",
            Command::Remote => "remote",
            Command::Entangle => "entangle",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub derived: Value,
    pub outputs: Value,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    pub breaches: Vec<String>,
}

pub fn run(command: Command, s: &Scenario, seed: u64) -> Result<Report, CliError> {
    match command {
        Command::Derive => derive(s),
        Command::Trajectory => trajectory(s),
        Command::Cool => cool(s),
        Command::Fringes => fringes(s),
        Command::Remote => remote(s),
        Command::Entangle => entangle(s),
        Command::Validate(suite) => validate(s, suite, seed),
    }
}

fn q(value: f64, unit: &str) -> Value {
    json!({ "value": value, "unit": unit })
}

fn stability_text(w: &StabilityWarning) -> String {
    match w {
        StabilityWarning::FastDriveViolated { mathieu_parameter } => {
            format!("Mathieu parameter {mathieu_parameter:.3} is too large for the secular approximation")
        }
        StabilityWarning::AntiConfining { axis, curvature } => {
            format!("effective potential is anti-confining along {} (curvature {curvature:.3e})", ["x", "y", "z"][*axis])
        }
    }
}

/// Derived scalars of the physical sections, or `Null` when the scenario
/// has none.
fn derived_block(s: &Scenario) -> Result<(Value, Vec<String>), CliError> {
    if !["particle", "trap", "circuit", "qubit"].iter().all(|sec| s.has_section(sec)) {
        return Ok((Value::Null, Vec::new()));
    }
    let setup = sc::setup(s)?;
    let state = sc::initial_state(s)?;
    let (p, trap) = (&setup.particle, &setup.trap);
    let r = setup.circuit.resistance;
    let circuit = derived_circuit(&setup.circuit);
    let (wx, wy, wz) = secular_frequencies(p, trap);
    let mut warnings: Vec<String> = stability_warnings(p, trap).iter().map(stability_text).collect();
    let e = ELEMENTARY_CHARGE;
    let c_sigma = circuit.total_capacitance;
    let n = setup.occupation as f64;

    // An uncharged particle is not trapped (ω = 0); the coupling and the
    // drive vanish with q and the shift is undefined.
    let (omega, stiffened, kappa, shift, charge_energy, drive, nbar) = if p.charge == 0.0 {
        warnings.push("particle is uncharged: it is not trapped and does not couple to the qubit".into());
        (0.0, 0.0, 0.0, f64::NAN, 2.0 * e * e * (1.0 + 2.0 * n) / c_sigma, 0.0, f64::NAN)
    } else {
        let d = setup.derive().map_err(engine("derive"))?;
        (d.omega, d.stiffened_omega, d.kappa, d.shift, d.charge_energy, d.drive, d.mean_phonon_number)
    };
    let gamma = cooling_rate(&state, p, trap, r);
    let rc = r * setup.circuit.endcap_capacitance * max_secular_frequency(&state, p, trap);
    if rc > levem::circuit::ADIABATIC_WARNING {
        warnings.push(format!("circuit is not adiabatic: R C omega = {rc:.3}"));
    }
    let derived = json!({
        "mass": q(p.mass, "kg"),
        "omega_x": q(wx, "rad/s"),
        "omega_y": q(wy, "rad/s"),
        "omega_z": q(wz, "rad/s"),
        "omega": q(omega, "rad/s"),
        "omega_stiffened": q(stiffened, "rad/s"),
        "kappa": q(kappa, "rad/s"),
        "kappa_over_omega": q(kappa / omega, "1"),
        "shift": q(shift, "m"),
        "charge_energy": q(charge_energy, "J"),
        "charge_energy_n0": q(2.0 * e * e / c_sigma, "J"),
        "drive": q(drive, "J"),
        "gamma_ad": q(gamma, "1/s"),
        "gamma_translational": q(translational_cooling_rate(p, trap, r), "1/s"),
        "mean_phonon_number": q(nbar, "1"),
        "mathieu_q": q(trap.mathieu_parameter(p), "1"),
        "rc_omega": q(rc, "1"),
        "effective_capacitance": q(circuit.effective_capacitance, "F"),
        "total_capacitance": q(c_sigma, "F"),
        "gate_charge": q(circuit.gate_charge, "1"),
        "josephson_energy": q(circuit.josephson_energy, "J"),
    });
    Ok((derived, warnings))
}

fn base_report(s: &Scenario) -> Result<Report, CliError> {
    let (derived, warnings) = derived_block(s)?;
    Ok(Report { derived, warnings, ..Default::default() })
}

fn schedule_json(schedule: &Schedule, params: &QubitParams) -> Value {
    json!({
        "t1": q(schedule.t1, "s"),
        "t2": q(schedule.t2, "s"),
        "t3": q(schedule.t3, "s"),
        "delta_tau": q(schedule.symmetric.map_or(f64::NAN, |(_, dt)| dt), "s"),
        "closed": schedule.is_closed(),
        "closure": q(d_closure(schedule.t1, schedule.t2, schedule.t3, params.omega).norm(), "1"),
        "fringe_phase": q(fringe_phase(params, schedule), "rad"),
        "population": q(qubit_population(params, schedule), "1"),
    })
}

fn derive(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    if report.derived.is_null() {
        return Err(ConfigError::new(None, None, "derive needs [particle], [trap], [circuit] and [qubit]").into());
    }
    let mut outputs = json!({});
    if s.has_section("schedule") && report.derived["kappa"]["value"].as_f64() != Some(0.0) {
        let setup = sc::setup(s)?;
        let params = sc::reduced(&setup)?;
        outputs["schedule"] = schedule_json(&sc::schedule(s, params.omega)?, &params);
    }
    report.outputs = outputs;
    Ok(report)
}

fn state_table(name: &str, traj: &Trajectory) -> Table {
    let mut t = Table::new(
        name,
        &["t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "Jx", "Jy", "Jz"],
    );
    for (time, st) in traj.times.iter().zip(&traj.states) {
        let c = st.orientation.coords;
        let (r, v, j) = (st.position, st.velocity, st.angular_momentum);
        t.push(vec![*time, r.x, r.y, r.z, v.x, v.y, v.z, c.w, c.x, c.y, c.z, j.x, j.y, j.z]);
    }
    t.plotted("position", 0, &[1, 2, 3])
}

fn current_table(traj: &Trajectory, p: &levem::Particle, trap: &levem::Trap) -> Result<Table, CliError> {
    let series = induced_current(traj, p, trap).map_err(engine("induced current"))?;
    let mut t = Table::new("current", &["t", "Q", "I"]);
    for i in 0..series.times.len() {
        t.push(vec![series.times[i], series.charge[i], series.current[i]]);
    }
    Ok(t.plotted("induced current", 0, &[2]))
}

fn trajectory(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let p = sc::particle(s)?;
    let trap = sc::trap(s)?;
    let s0 = sc::initial_state(s)?;
    if report.derived.is_null() {
        report.warnings.extend(stability_warnings(&p, &trap).iter().map(stability_text));
    }
    let model = s.choice("trajectory", "model")?;
    let (_, _, wz) = secular_frequencies(&p, &trap);
    let duration = match s.opt_quantity("trajectory", "duration")? {
        Some(d) => d,
        None if wz > 0.0 => s.number("trajectory", "periods")? * TAU / wz,
        None => return Err(s.error("trajectory", "duration", "secular frequency is zero; give an explicit duration").into()),
    };
    let samples = s.count("trajectory", "samples")?.max(1);
    let explicit_dt = s.opt_quantity("trajectory", "dt")?;
    let mut outputs = json!({ "model": model, "duration": q(duration, "s") });

    if model == "averaged" {
        if explicit_dt.is_some() {
            return Err(s.error("trajectory", "dt", "the averaged model sets its step from steps_per_drive").into());
        }
        let steps = s.count("trajectory", "steps_per_drive")?;
        let drives = (duration / trap.drive_period()).round() as usize;
        let avg = integrate_full_cycle_averaged(&s0, &p, &trap, duration, steps, (drives / samples).max(1))
            .map_err(engine("cycle-averaged trajectory"))?;
        let mut t = Table::new("trajectory", &["t", "x", "y", "z"]);
        for (time, r) in avg.times.iter().zip(&avg.positions) {
            t.push(vec![*time, r.x, r.y, r.z]);
        }
        outputs["samples"] = json!(avg.times.len());
        outputs["dt"] = q(trap.drive_period() / steps as f64, "s");
        report.tables.push(t.plotted("cycle-averaged position", 0, &[1, 2, 3]));
        report.outputs = outputs;
        return Ok(report);
    }

    let dt = match (explicit_dt, model.as_str()) {
        (Some(dt), _) => dt,
        (None, "full") => trap.drive_period() / s.count("trajectory", "steps_per_drive")? as f64,
        (None, _) => {
            let w = max_secular_frequency(&s0, &p, &trap);
            if !(w > 0.0) {
                return Err(s.error("trajectory", "dt", "secular frequency is zero; give an explicit step").into());
            }
            TAU / w / s.count("trajectory", "steps_per_period")? as f64
        }
    };
    let steps = (duration / dt).round() as usize;
    let control = StepControl { t_end: duration, dt, sample_every: (steps / samples).max(1) };
    let traj = if model == "full" {
        integrate_full(&s0, &p, &trap, &control).map_err(engine("full trajectory"))?
    } else {
        integrate_secular(&s0, &p, &trap, &control).map_err(engine("secular trajectory"))?
    };
    let last = traj.last().expect("trajectory holds the initial state");
    outputs["dt"] = q(dt, "s");
    outputs["samples"] = json!(traj.len());
    outputs["final_position"] = q(last.position.norm(), "m");
    outputs["max_displacement"] =
        q(traj.states.iter().map(|st| (st.position - s0.position).norm()).fold(0.0, f64::max), "m");
    outputs["quaternion_norm_error"] =
        q(traj.states.iter().map(|st| (st.orientation.coords.norm() - 1.0).abs()).fold(0.0, f64::max), "1");
    if model == "secular" {
        let e0 = secular_energy(&s0, &p, &trap);
        let drift = traj.states.iter().map(|st| (secular_energy(st, &p, &trap) - e0).abs()).fold(0.0, f64::max);
        outputs["energy_drift"] = q(if e0 != 0.0 { drift / e0.abs() } else { drift }, "1");
    }
    report.tables.push(state_table("trajectory", &traj));
    if traj.len() >= 3 {
        report.tables.push(current_table(&traj, &p, &trap)?);
    }
    report.outputs = outputs;
    Ok(report)
}

fn cool(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let p = sc::particle(s)?;
    let trap = sc::trap(s)?;
    let circuit = sc::circuit(s)?;
    let s0 = sc::initial_state(s)?;
    let r = circuit.resistance;
    let gamma0 = cooling_rate(&s0, &p, &trap, r);
    let duration = match s.opt_quantity("cool", "duration")? {
        Some(d) => d,
        None if gamma0 > 0.0 => 2.0 / gamma0,
        None => return Err(s.error("cool", "duration", "cooling rate is zero; give an explicit duration").into()),
    };
    let w = max_secular_frequency(&s0, &p, &trap);
    if !(w > 0.0) {
        return Err(ConfigError::new(None, Some("[trap]".into()), "secular frequency is zero; nothing to cool").into());
    }
    let dt = TAU / w / s.count("cool", "steps_per_period")? as f64;
    let control = StepControl { t_end: duration, dt, sample_every: s.count("cool", "sample_every")? };
    let run = simulate_resistive_cooling(&s0, &p, &trap, r, circuit.endcap_capacitance, &control)
        .map_err(engine("resistive cooling"))?;
    for w in &run.warnings {
        let CoolingWarning::NonAdiabatic { rc_omega } = w;
        report.warnings.push(format!("circuit is not adiabatic: R C omega = {rc_omega:.3}"));
    }
    let traj = &run.trajectory;
    let mut table = Table::new("cooling", &["t", "energy", "x", "y", "z", "vz", "gamma_ad"]);
    let mut gammas = Vec::with_capacity(traj.len());
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let g = cooling_rate(st, &p, &trap, r);
        gammas.push(g);
        table.push(vec![*t, secular_energy(st, &p, &trap), st.position.x, st.position.y, st.position.z, st.velocity.z, g]);
    }
    let mean_gamma = time_average(&traj.times, &gammas);
    let energy_rate = fit_energy_decay(traj, &p, &trap, 0.0).map_err(engine("energy decay fit"))?;
    let mut outputs = json!({
        "duration": q(duration, "s"),
        "dt": q(dt, "s"),
        "samples": traj.len(),
        "gamma_ad_initial": q(gamma0, "1/s"),
        "gamma_ad_mean": q(mean_gamma, "1/s"),
        "gamma_translational": q(translational_cooling_rate(&p, &trap, r), "1/s"),
        "energy_decay_rate": q(energy_rate, "1/s"),
        "amplitude_decay_rate": q(energy_rate / 2.0, "1/s"),
    });
    report.tables.push(table.plotted("secular energy", 0, &[1]));

    if s.flag("cool", "contraction")? {
        let amplitude = s0.position.norm().max(1e-7);
        let spread = BundleSpread::linear(&p, &trap, amplitude);
        // Renormalise often enough that the bundle stays linear.
        let c = StepControl { sample_every: 10, ..control };
        let fit = fit_contraction_rate(&s0, &p, &trap, r, &c, &spread).map_err(engine("contraction fit"))?;
        let g: Vec<f64> = fit.reference.iter().map(|st| cooling_rate(st, &p, &trap, r)).collect();
        let closed = time_average(&fit.times, &g);
        let mut t = Table::new("contraction", &["t", "log_volume", "gamma_ad"]);
        for i in 0..fit.times.len() {
            t.push(vec![fit.times[i], fit.log_volume[i], g[i]]);
        }
        report.tables.push(t.plotted("phase-space volume", 0, &[1]));
        outputs["contraction_rate"] = q(fit.rate, "1/s");
        outputs["contraction_closed_form"] = q(closed, "1/s");
        outputs["contraction_relative_error"] = q((fit.rate - closed) / closed, "1");
    }
    report.outputs = outputs;
    Ok(report)
}

/// Trapezoid time average.
fn time_average(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return y.first().copied().unwrap_or(f64::NAN);
    }
    let integral: f64 = (1..n).map(|i| 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1])).sum();
    integral / (t[n - 1] - t[0])
}

fn physical(s: &Scenario) -> Result<(levem::Setup, QubitParams, Schedule), CliError> {
    let setup = sc::setup(s)?;
    let params = sc::reduced(&setup)?;
    let schedule = sc::schedule(s, params.omega)?;
    Ok((setup, params, schedule))
}

fn fringes(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let (setup, params, base) = physical(s)?;
    let (sweep, dim, column) = match s.choice("fringes", "sweep")?.as_str() {
        "bias" => (Sweep::BiasVoltage, Dimension::Voltage, "U_dc"),
        "tau" => (Sweep::Tau, Dimension::Time, "tau"),
        "charge_energy" => (Sweep::ChargeEnergy, Dimension::Energy, "E_c"),
        _ => (Sweep::Readout, Dimension::Time, "t3"),
    };
    let mut range = [0.0; 2];
    for (slot, key) in range.iter_mut().zip(["from", "to"]) {
        let (v, d) = s.any_quantity("fringes", key)?;
        if d != dim {
            return Err(s.error("fringes", key, format!("this sweep needs a {}, got a {}", dim.name(), d.name())).into());
        }
        *slot = v;
    }
    let family = match s.choice("fringes", "family")?.as_str() {
        "fixed" => ScheduleFamily::FixedSeparation,
        _ => ScheduleFamily::Symmetric,
    };
    let points = s.count("fringes", "points")?;
    let scan = fringe_scan(&setup, &base, family, sweep, (range[0], range[1]), points).map_err(engine("fringe scan"))?;
    let mut t = Table::new("fringes", &[column, "population", "phase", "envelope"]);
    for i in 0..scan.values.len() {
        t.push(vec![scan.values[i], scan.populations[i], scan.phases[i], scan.envelopes[i]]);
    }
    let n = scan.phases.len();
    let shift = scan.phases[n - 1] - scan.phases[0];
    report.tables.push(t.meta("sweep", column).plotted("excited-state population", 0, &[1]));
    report.outputs = json!({
        "schedule": schedule_json(&base, &params),
        "points": n,
        "phase_shift": q(shift, "rad"),
        "phase_shift_turns": q(shift / TAU, "1"),
    });

    let path_points = s.count("fringes", "path_points")?;
    if path_points > 0 {
        let paths = branch_paths(&params, &base, path_points).map_err(engine("branch paths"))?;
        let mut b = Table::new("branches", &["t", "X_plus", "P_plus", "X_minus", "P_minus"]);
        let r2 = 2f64.sqrt();
        for i in 0..paths.times.len() {
            let (a, m) = (paths.plus[i], paths.minus[i]);
            b.push(vec![paths.times[i], r2 * a.re, r2 * a.im, r2 * m.re, r2 * m.im]);
        }
        let gap = branch_gap(&paths.plus, &paths.minus);
        report.outputs["branch_separation_max"] = q(gap.0, "1");
        report.outputs["branch_separation_final"] = q(gap.1, "1");
        report.tables.push(b.meta("quadratures", "X = (a + a^+)/sqrt2, P = (a - a^+)/(i sqrt2)").plotted("branch quadratures", 0, &[1, 3]));
    }
    Ok(report)
}

/// Largest and final `|α₊ − α₋|`.
fn branch_gap(plus: &[Complex<f64>], minus: &[Complex<f64>]) -> (f64, f64) {
    let d: Vec<f64> = plus.iter().zip(minus).map(|(a, b)| (a - b).norm()).collect();
    (d.iter().copied().fold(0.0, f64::max), d.last().copied().unwrap_or(0.0))
}

fn remote(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let setup = sc::setup(s)?;
    let params = sc::reduced(&setup)?;
    let e1 = s.quantity("remote", "charge_energy_1")?;
    let e2 = s.quantity("remote", "charge_energy_2")?;
    let taus = linspace(s.quantity("remote", "from")?, s.quantity("remote", "to")?, s.count("remote", "points")?);
    let mut t = Table::new("remote", &["tau", "t3", "population"]);
    for tau in taus {
        let sch = PulseSchedule::symmetric(tau, params.omega).map_err(engine("remote schedule"))?;
        let p = remote_qubit_population(&params, &sch, e1, e2).map_err(engine("remote population"))?;
        t.push(vec![tau, sch.t3, p]);
    }
    let mut shifted = params;
    shifted.charge_energy = e1 - e2;
    report.tables.push(t.plotted("remote qubit population", 0, &[2]));
    report.outputs = json!({ "fringe_rate": q(shifted.fringe_rate(), "rad/s") });
    Ok(report)
}

fn outcome_pair(code: &str) -> (Outcome, Outcome) {
    let o = |c: u8| if c == b'g' { Outcome::Ground } else { Outcome::Excited };
    let b = code.as_bytes();
    (o(b[0]), o(b[1]))
}

fn entangle(s: &Scenario) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let (_, first, base) = physical(s)?;
    let mut second = first;
    if let Some(k) = s.opt_quantity("entangle", "kappa_2")? {
        second.kappa = k;
    }
    if let Some(v) = s.opt_quantity("entangle", "drive_2")? {
        second.drive = v;
    }
    if let Some(e) = s.opt_quantity("entangle", "charge_energy_2")? {
        second.charge_energy = e;
    }
    if first.temperature > 0.0 {
        report.warnings.push("entropy is evaluated for the zero-temperature oscillator states".into());
    }
    let code = s.choice("entangle", "outcomes")?;
    let outcomes = outcome_pair(&code);
    let points = s.count("entangle", "points")?;
    let readouts = linspace(base.t2, base.t1 + base.t2, points + 1);
    let mut t = Table::new("entanglement", &["t3", "entropy", "separation_1", "separation_2"]);
    let mut peak: f64 = 0.0;
    for &t3 in &readouts[1..] {
        let sch = base.with_readout(t3).map_err(engine("entangle schedule"))?;
        let state = two_particle_conditioned_state(&first, &second, &sch, outcomes).map_err(engine("conditioned state"))?;
        let entropy = entanglement_entropy_t0(&state).map_err(engine("entropy"))?;
        peak = peak.max(entropy);
        let gap = |i: usize| (state.alpha[i] - state.beta[i]).norm();
        t.push(vec![t3, entropy, gap(0), gap(1)]);
    }
    let last = t.rows.last().map_or(f64::NAN, |r| r[1]);
    report.tables.push(t.meta("outcomes", &code).plotted("entanglement entropy (nats)", 0, &[1]));
    report.outputs = json!({
        "outcomes": code,
        "entropy_max": q(peak, "nat"),
        "entropy_at_closure": q(last, "nat"),
    });
    Ok(report)
}

fn temperature_for(nbar: f64, omega: f64) -> f64 {
    if nbar == 0.0 {
        0.0
    } else {
        HBAR * omega / (BOLTZMANN * (1.0 / nbar + 1.0).ln())
    }
}

fn scaled(kappa: f64, charge: f64, drive: f64, nbar: f64) -> QubitParams {
    QubitParams {
        omega: 1.0,
        kappa,
        charge_energy: charge * HBAR,
        drive: drive * HBAR,
        occupation: 0,
        dephasing_rate: 0.0,
        temperature: temperature_for(nbar, 1.0),
    }
}

fn validate(s: &Scenario, suite: Suite, seed: u64) -> Result<Report, CliError> {
    let mut report = base_report(s)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut outputs = json!({ "suite": format!("{suite:?}").to_lowercase() });
    if matches!(suite, Suite::Oracle | Suite::All) {
        validate_populations(s, &mut rng, &mut report, &mut outputs)?;
        validate_entropy(s, &mut rng, &mut report, &mut outputs)?;
        validate_dephasing(s, seed, &mut report, &mut outputs)?;
    }
    if matches!(suite, Suite::Schedule | Suite::All) {
        validate_schedule(&mut rng, &mut report, &mut outputs)?;
    }
    outputs["breaches"] = json!(report.breaches.len());
    report.outputs = outputs;
    Ok(report)
}

fn validate_populations(s: &Scenario, rng: &mut ChaCha20Rng, report: &mut Report, outputs: &mut Value) -> Result<(), CliError> {
    let pairs = s.count("validate", "pairs")?;
    let kappa_max = s.number("validate", "kappa_max")?;
    let nbar_max = s.number("validate", "nbar_max")?;
    let tol = s.number("validate", "population_tolerance")?;
    let cut = s.number("validate", "boltzmann_cut")?;
    let max_cutoff = s.count("validate", "max_cutoff")?;
    let mut t = Table::new(
        "validate_population",
        &["case", "kappa_over_omega", "nbar", "t1", "t2", "t3", "analytic", "oracle", "error", "cutoff", "leakage"],
    );
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let nbar = if i % 6 == 0 { 0.0 } else { rng.random_range(0.0..nbar_max) };
        let params = scaled(rng.random_range(0.0..kappa_max), rng.random_range(0.0..5.0), rng.random_range(-0.5..0.5), nbar);
        let schedule = if i % 3 == 0 {
            PulseSchedule::symmetric(rng.random_range(0.2..3.0), 1.0)
        } else {
            let t1 = rng.random_range(0.1..3.0);
            let t2 = t1 + rng.random_range(0.1..3.0);
            PulseSchedule::explicit(t1, t2, t2 + rng.random_range(0.1..3.0))
        }
        .map_err(engine("validation schedule"))?;
        let analytic = qubit_population(&params, &schedule);
        let mut row = vec![i as f64, params.kappa, nbar, schedule.t1, schedule.t2, schedule.t3, analytic];
        match oracle_population(&params, &schedule, cut, None) {
            Ok(rep) => {
                let err = (rep.value - analytic).abs();
                worst = worst.max(err);
                if err > tol {
                    report.breaches.push(format!("population case {i}: |analytic - oracle| = {err:.3e} > {tol:e} (n_max {})", rep.cutoff));
                }
                if rep.cutoff > max_cutoff {
                    report.breaches.push(format!("population case {i}: cutoff {} exceeds {max_cutoff}", rep.cutoff));
                }
                row.extend([rep.value, err, rep.cutoff as f64, rep.leakage]);
            }
            Err(e) => {
                report.breaches.push(format!("population case {i}: {e}"));
                row.extend([f64::NAN; 4]);
            }
        }
        t.push(row);
    }
    outputs["population"] = json!({ "pairs": pairs, "worst_error": worst, "tolerance": tol });
    report.tables.push(t.meta("boltzmann_cut", cut));
    Ok(())
}

fn validate_entropy(s: &Scenario, rng: &mut ChaCha20Rng, report: &mut Report, outputs: &mut Value) -> Result<(), CliError> {
    let cases = s.count("validate", "entropy_cases")?;
    let tol = s.number("validate", "entropy_tolerance")?;
    let mut t = Table::new("validate_entropy", &["case", "gram", "oracle", "error", "cutoff", "leakage"]);
    let mut worst: f64 = 0.0;
    let mut check = |i: usize, state: &ConditionedTwoParticleState<f64>, cutoff: usize, expect: Option<f64>, report: &mut Report| {
        let gram = entanglement_entropy_t0(state);
        let oracle = oracle_entanglement(state, cutoff);
        match (gram, oracle) {
            (Ok(g), Ok(o)) => {
                let mut err = (g - o.value).abs();
                if let Some(x) = expect {
                    err = err.max((g - x).abs()).max((o.value - x).abs());
                }
                worst = worst.max(err);
                if err > tol {
                    report.breaches.push(format!("entropy case {i}: error {err:.3e} > {tol:e}"));
                }
                t.push(vec![i as f64, g, o.value, err, cutoff as f64, o.leakage]);
            }
            (g, o) => {
                let msg = g.err().or(o.err()).map(|e| e.to_string()).unwrap_or_default();
                report.breaches.push(format!("entropy case {i}: {msg}"));
                t.push(vec![i as f64, f64::NAN, f64::NAN, f64::NAN, cutoff as f64, f64::NAN]);
            }
        }
    };
    for i in 0..cases {
        let mut p = |k: f64| scaled(k, rng.random_range(0.5..3.0), rng.random_range(-0.3..0.3), 0.0);
        let first = p(0.6 + 0.2 * (i % 6) as f64);
        let second = p(1.1);
        let base = PulseSchedule::symmetric(0.5 + 0.3 * (i % 6) as f64, 1.0).map_err(engine("entropy schedule"))?;
        let sch = base.with_readout(base.t2 + rng.random_range(0.05..0.95) * base.t1).map_err(engine("entropy schedule"))?;
        let outcomes = if i % 2 == 0 { (Outcome::Ground, Outcome::Ground) } else { (Outcome::Ground, Outcome::Excited) };
        let state = two_particle_conditioned_state(&first, &second, &sch, outcomes).map_err(engine("conditioned state"))?;
        check(i, &state, 120, None, report);
    }
    // Far-separated branches: one ebit.
    let zero = Complex::new(0.0, 0.0);
    let far = ConditionedTwoParticleState {
        alpha: [Complex::new(4.0, 3.0), Complex::new(-2.0, 5.5)],
        beta: [zero, zero],
        phase: 1.1,
        sign: 1,
        mean_occupation: [0.0, 0.0],
    };
    check(cases, &far, 160, Some(LN_2), report);
    outputs["entropy"] = json!({ "cases": cases + 1, "worst_error": worst, "tolerance": tol });
    report.tables.push(t);
    Ok(())
}

fn validate_dephasing(s: &Scenario, seed: u64, report: &mut Report, outputs: &mut Value) -> Result<(), CliError> {
    let samples = s.count("validate", "mc_samples")?;
    let c_sigma = 4.4e-15;
    let mut params = scaled(1.0, 2.0, 0.2, 0.0);
    let schedule = PulseSchedule::symmetric(1.0, 1.0).map_err(engine("dephasing schedule"))?;
    // Fringe maximum: the mean population then reads the contrast.
    params.charge_energy -= HBAR * fringe_phase(&params, &schedule) / schedule.lever();
    params.dephasing_rate = 1.0 / schedule.t3;
    let width = gate_charge_width(params.dephasing_rate, c_sigma);
    let est = mc_dephasing(&params, &schedule, c_sigma, width, seed, samples).map_err(engine("Monte-Carlo dephasing"))?;
    let contrast = 2.0 * est.mean - 1.0;
    let target = (-params.dephasing_rate * schedule.t3).exp();
    let z = (contrast - target) / (2.0 * est.stderr);
    if !(z.abs() < 3.0) {
        report.breaches.push(format!("dephasing: contrast {contrast:.4} vs {target:.4} ({z:+.2} standard errors)"));
    }
    outputs["dephasing"] = json!({ "samples": samples, "contrast": contrast, "expected": target, "z": z });
    Ok(())
}

fn validate_schedule(rng: &mut ChaCha20Rng, report: &mut Report, outputs: &mut Value) -> Result<(), CliError> {
    let mut closure = Table::new("validate_closure", &["omega_tau", "delta_tau", "abs_d"]);
    let mut worst_d: f64 = 0.0;
    for k in 1..=100 {
        let tau = k as f64 / 101.0 * PI;
        let dt = delta_tau(tau, 1.0).map_err(engine("delta tau"))?;
        let d = d_closure(tau, tau + dt, 2.0 * tau + dt, 1.0).norm();
        worst_d = worst_d.max(d);
        closure.push(vec![tau, dt, d]);
    }
    let sixth = (delta_tau(FRAC_PI_3, 1.0).map_err(engine("delta tau"))? - FRAC_PI_3).abs() / FRAC_PI_3;
    if worst_d >= 1e-12 {
        report.breaches.push(format!("closure: max |d| = {worst_d:.3e}"));
    }
    if sixth >= 1e-12 {
        report.breaches.push(format!("one-sixth period: relative error {sixth:.3e}"));
    }
    let mut sym = Table::new("validate_symmetric", &["case", "closed_form", "general", "error"]);
    let mut worst_p: f64 = 0.0;
    for i in 0..200 {
        let omega = rng.random_range(0.5..2.0);
        let params = QubitParams {
            omega,
            kappa: rng.random_range(0.0..5.0) * omega,
            charge_energy: rng.random_range(0.0..10.0) * HBAR * omega,
            drive: rng.random_range(-2.0..2.0) * HBAR * omega,
            occupation: 0,
            dephasing_rate: rng.random_range(0.0..0.5) * omega,
            temperature: temperature_for(rng.random_range(0.0..10.0), omega),
        };
        let tau = rng.random_range(0.01..PI - 0.01) / omega;
        let sch = PulseSchedule::symmetric(tau, omega).map_err(engine("symmetric schedule"))?;
        let closed = symmetric_population(&params, tau).map_err(engine("symmetric population"))?;
        let general = qubit_population(&params, &sch);
        worst_p = worst_p.max((closed - general).abs());
        sym.push(vec![i as f64, closed, general, (closed - general).abs()]);
    }
    if worst_p >= 1e-12 {
        report.breaches.push(format!("symmetric specialisation: max difference {worst_p:.3e}"));
    }
    outputs["schedule"] = json!({ "max_closure": worst_d, "one_sixth_error": sixth, "symmetric_max_difference": worst_p });
    report.tables.push(closure.plotted("closure |d|", 0, &[2]));
    report.tables.push(sym);
    Ok(())
}
