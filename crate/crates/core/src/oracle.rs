//! Brute-force check of the analytic interferometer: the qubit-oscillator
//! Hamiltonian in a truncated Fock basis, propagated exactly through the
//! pulse sequence.
//!
//! Works in `f64` only. Both qubit blocks of `H/ħ` are real symmetric
//! tridiagonal matrices, so each is diagonalised once and every segment is
//! a pair of dense real products around a diagonal phase.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Cauchy, Distribution};
use rayon::prelude::*;

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::interferometry::{population_with_segment_rates, ConditionedTwoParticleState, PulseSchedule};
use crate::params::QubitOscillatorParams;

type C64 = Complex<f64>;

/// Largest Fock cutoff the oracle will use.
pub const MAX_CUTOFF: usize = 600;
/// Allowed population in the top 10 % of Fock levels.
pub const LEAKAGE_LIMIT: f64 = 1e-8;
/// Allowed norm drift after a unitary step.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Amplitudes over `|g⟩⊗|n⟩` and `|e⟩⊗|n⟩`, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    pub ground: DVector<C64>,
    pub excited: DVector<C64>,
}

impl TruncatedState {
    pub fn fock(n_max: usize, excited: bool, n: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Rejected(format!("Fock level {n} above cutoff {n_max}")));
        }
        let mut s = Self { ground: DVector::zeros(n_max + 1), excited: DVector::zeros(n_max + 1) };
        let target = if excited { &mut s.excited } else { &mut s.ground };
        target[n] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_max(&self) -> usize {
        self.ground.len() - 1
    }

    pub fn norm_squared(&self) -> f64 {
        self.ground.norm_squared() + self.excited.norm_squared()
    }

    pub fn excited_population(&self) -> f64 {
        self.excited.norm_squared()
    }

    /// Population in the top 10 % of Fock levels.
    pub fn leakage(&self) -> f64 {
        let len = self.ground.len();
        let start = len - (len / 10).max(1);
        (start..len).map(|n| self.ground[n].norm_sqr() + self.excited[n].norm_sqr()).sum()
    }

    /// `exp(iθσ_x/2)`.
    pub fn pulse(&mut self, theta: f64) {
        let c = C64::new((theta / 2.0).cos(), 0.0);
        let s = C64::new(0.0, (theta / 2.0).sin());
        let g = self.ground.clone();
        self.ground = &g * c + &self.excited * s;
        self.excited = &g * s + &self.excited * c;
    }
}

/// `a + a†` on `0..=n_max`.
fn quadrature(n_max: usize) -> DMatrix<f64> {
    let dim = n_max + 1;
    let mut x = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        let v = (n as f64).sqrt();
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    x
}

/// `H/ħ` restricted to one qubit branch: `offset + ω n − g (a + a†)`.
fn branch_block(omega: f64, offset: f64, force: f64, n_max: usize) -> DMatrix<f64> {
    let mut h = quadrature(n_max) * (-force);
    for n in 0..=n_max {
        h[(n, n)] = offset + omega * n as f64;
    }
    h
}

/// Ground and excited blocks of `H/ħ` for
/// `H = E_c σ₊σ₋ + ħω a†a − ħκ σ₊σ₋ (a + a†) − V_ext (a + a†)`.
pub fn hamiltonian_blocks(params: &QubitOscillatorParams<f64>, n_max: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let v = params.drive_rate();
    let g = branch_block(params.omega, 0.0, v, n_max);
    let e = branch_block(params.omega, params.charge_rate(), params.kappa + v, n_max);
    (g, e)
}

/// Full `H` in joules on the basis `(g, 0..=n_max) ⊕ (e, 0..=n_max)`.
pub fn build_hamiltonian(params: &QubitOscillatorParams<f64>, n_max: usize) -> Result<DMatrix<f64>> {
    if n_max < 1 {
        return Err(Error::Rejected("Fock cutoff must be at least 1".into()));
    }
    let (g, e) = hamiltonian_blocks(params, n_max);
    let dim = n_max + 1;
    let mut h = DMatrix::zeros(2 * dim, 2 * dim);
    h.view_mut((0, 0), (dim, dim)).copy_from(&(g * HBAR));
    h.view_mut((dim, dim), (dim, dim)).copy_from(&(e * HBAR));
    Ok(h)
}

/// Diagonalised block, `H = V Λ Vᵀ`.
#[derive(Debug, Clone)]
pub struct Propagator {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl Propagator {
    pub fn new(h: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h);
        Self { vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `‖V Λ Vᵀ − H‖ / ‖H‖`.
    pub fn reconstruction_error(&self, h: &DMatrix<f64>) -> f64 {
        let r = &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose();
        (r - h).norm() / h.norm()
    }

    /// `exp(−iHt) ψ`.
    pub fn apply(&self, t: f64, psi: &DVector<C64>) -> DVector<C64> {
        let re = self.vectors.tr_mul(&psi.map(|z| z.re));
        let im = self.vectors.tr_mul(&psi.map(|z| z.im));
        let mut rot_re = DVector::zeros(re.len());
        let mut rot_im = DVector::zeros(re.len());
        for k in 0..re.len() {
            let (s, c) = (-self.values[k] * t).sin_cos();
            rot_re[k] = c * re[k] - s * im[k];
            rot_im[k] = s * re[k] + c * im[k];
        }
        let out_re = &self.vectors * rot_re;
        let out_im = &self.vectors * rot_im;
        DVector::from_fn(re.len(), |i, _| C64::new(out_re[i], out_im[i]))
    }
}

/// Eigen-decomposed ground and excited blocks for one parameter set.
#[derive(Debug, Clone)]
pub struct BlockPropagators {
    pub ground: Propagator,
    pub excited: Propagator,
    pub n_max: usize,
}

impl BlockPropagators {
    pub fn new(params: &QubitOscillatorParams<f64>, n_max: usize) -> Self {
        let (g, e) = hamiltonian_blocks(params, n_max);
        Self { ground: Propagator::new(g), excited: Propagator::new(e), n_max }
    }

    /// Free evolution of both blocks over `t`.
    pub fn evolve(&self, state: &mut TruncatedState, t: f64) {
        if t == 0.0 {
            return;
        }
        state.ground = self.ground.apply(t, &state.ground);
        state.excited = self.excited.apply(t, &state.excited);
    }
}

fn check_norm(state: &TruncatedState, reference: f64) -> Result<()> {
    let drift = (state.norm_squared() - reference).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::Rejected(format!("norm drifted by {drift:e} during propagation")));
    }
    Ok(())
}

fn check_leakage(state: &TruncatedState) -> Result<f64> {
    let leak = state.leakage();
    if leak > LEAKAGE_LIMIT {
        return Err(Error::Unconverged { cutoff: state.n_max(), leakage: leak, limit: LEAKAGE_LIMIT });
    }
    Ok(leak)
}

/// π/2, evolve `t₁`, π, evolve `t₂ − t₁`, π, evolve `t₃ − t₂`, π/2.
/// Returns the final state and the largest leakage seen after any segment.
pub fn propagate_sequence(
    initial: &TruncatedState,
    propagators: &BlockPropagators,
    schedule: &PulseSchedule<f64>,
) -> Result<(TruncatedState, f64)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    if initial.n_max() != propagators.n_max {
        return Err(Error::Rejected("state and propagator cutoffs differ".into()));
    }
    let n0 = initial.norm_squared();
    let mut s = initial.clone();
    let mut leak: f64 = 0.0;
    s.pulse(FRAC_PI_2);
    let [a, b, c] = schedule.segments();
    for (i, dt) in [a, b, c].into_iter().enumerate() {
        propagators.evolve(&mut s, dt);
        check_norm(&s, n0)?;
        leak = leak.max(check_leakage(&s)?);
        s.pulse(if i < 2 { PI } else { FRAC_PI_2 });
    }
    check_norm(&s, n0)?;
    Ok((s, leak))
}

/// Oracle answer together with its convergence record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub value: f64,
    pub cutoff: usize,
    pub leakage: f64,
    /// Number of Boltzmann terms summed.
    pub terms: usize,
    /// Boltzmann weight left out.
    pub neglected_weight: f64,
}

/// Cutoff large enough for initial levels up to `n_top` and the branch
/// excursions of this parameter set; capped at [`MAX_CUTOFF`].
pub fn suggest_cutoff(params: &QubitOscillatorParams<f64>, n_top: usize) -> usize {
    let excursion = 2.0 * (params.coupling_ratio().abs() + params.drive_ratio().abs()) + 1.0;
    let reach = (n_top as f64).sqrt() + 2.0 * excursion;
    let n = reach * reach + 10.0 * reach + 40.0;
    ((n / 0.9).ceil() as usize).min(MAX_CUTOFF)
}

/// Initial Fock levels and normalised Boltzmann weights covering at least
/// `1 − ε` of the thermal state.
pub fn boltzmann_terms(params: &QubitOscillatorParams<f64>, epsilon: f64) -> Result<(Vec<(usize, f64)>, f64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Rejected("Boltzmann cut must lie in (0, 1)".into()));
    }
    let nbar = params.mean_phonon_number();
    if nbar == 0.0 {
        return Ok((vec![(0, 1.0)], 0.0));
    }
    let x = nbar / (1.0 + nbar);
    let mut terms = Vec::new();
    let mut w = 1.0 - x;
    let mut total = 0.0;
    let mut n = 0;
    while total < 1.0 - epsilon {
        terms.push((n, w));
        total += w;
        w *= x;
        n += 1;
        if n > MAX_CUTOFF {
            return Err(Error::Unconverged { cutoff: MAX_CUTOFF, leakage: 1.0 - total, limit: epsilon });
        }
    }
    let neglected = 1.0 - total;
    Ok((terms.into_iter().map(|(n, w)| (n, w / total)).collect(), neglected))
}

/// Thermal excited-state population by brute force. Initial Fock states
/// are propagated independently (in parallel) and summed in level order.
/// Dephasing is not included; compare with `γ_d = 0` analytics.
pub fn oracle_population(
    params: &QubitOscillatorParams<f64>,
    schedule: &PulseSchedule<f64>,
    epsilon: f64,
    cutoff: Option<usize>,
) -> Result<OracleReport> {
    params.validate()?;
    let (terms, neglected) = boltzmann_terms(params, epsilon)?;
    let n_top = terms.last().map(|t| t.0).unwrap_or(0);
    let n_max = cutoff.unwrap_or_else(|| suggest_cutoff(params, n_top));
    if n_top >= n_max {
        return Err(Error::Unconverged { cutoff: n_max, leakage: 1.0, limit: LEAKAGE_LIMIT });
    }
    let props = BlockPropagators::new(params, n_max);
    let results: Vec<(f64, f64)> = terms
        .par_iter()
        .map(|(n, w)| {
            let init = TruncatedState::fock(n_max, false, *n)?;
            let (fin, leak) = propagate_sequence(&init, &props, schedule)?;
            Ok((w * fin.excited_population(), leak))
        })
        .collect::<Result<_>>()?;
    let value = results.iter().map(|r| r.0).sum();
    let leakage = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(OracleReport { value, cutoff: n_max, leakage, terms: terms.len(), neglected_weight: neglected })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `δE_c/ħ` per unit gate-charge offset, `4e²/(ħ C_Σ)`.
pub fn charge_sensitivity(total_capacitance: f64) -> f64 {
    4.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (HBAR * total_capacitance)
}

/// Gate-charge half width `γ_d C_Σ ħ/(2e)²` that produces dephasing rate γ_d.
pub fn gate_charge_width(dephasing_rate: f64, total_capacitance: f64) -> f64 {
    dephasing_rate / charge_sensitivity(total_capacitance)
}

/// Population averaged over Lorentzian gate-charge noise of half width
/// `width`, redrawn for each free-evolution segment. The charge energy in
/// segment `j` is shifted by `−(4e²/C_Σ) n_g⁽ʲ⁾`; the analytic `γ_d` of
/// `params` is ignored.
pub fn mc_dephasing(
    params: &QubitOscillatorParams<f64>,
    schedule: &PulseSchedule<f64>,
    total_capacitance: f64,
    width: f64,
    seed: u64,
    n_samples: usize,
) -> Result<Estimate> {
    if n_samples < 100 {
        return Err(Error::Rejected("Monte-Carlo dephasing needs at least 100 samples".into()));
    }
    if !(width >= 0.0) {
        return Err(Error::Rejected("noise width must be non-negative".into()));
    }
    let base = params.charge_rate();
    if width == 0.0 {
        let p = population_with_segment_rates(params, schedule, [base; 3]);
        return Ok(Estimate { mean: p, stderr: 0.0, samples: n_samples });
    }
    let k = charge_sensitivity(total_capacitance);
    let noise = Cauchy::new(0.0, width).map_err(|e| Error::Rejected(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let mut rates = [base; 3];
        for r in &mut rates {
            *r -= k * noise.sample(&mut rng);
        }
        let p = population_with_segment_rates(params, schedule, rates);
        sum += p;
        sum_sq += p * p;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(Estimate { mean, stderr: (var / n).sqrt(), samples: n_samples })
}

/// Rotation `R(θ) = exp(−iθ a†a)` as a diagonal.
fn rotation_diagonal(theta: f64, n_max: usize) -> DVector<C64> {
    DVector::from_fn(n_max + 1, |n, _| C64::from_polar(1.0, -theta * n as f64))
}

/// Truncated `D(α)` built as `R(−φ) S† exp(i|α|(a + a†)) S R(φ)` with
/// `S = diag(iⁿ)` and `φ = arg α`.
pub fn displacement_matrix(alpha: C64, n_max: usize) -> DMatrix<C64> {
    let dim = n_max + 1;
    let r = alpha.norm();
    if r == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let eig = SymmetricEigen::new(quadrature(n_max));
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, r * l)));
    let real_disp = &v * phases * v.transpose();
    let i_pow = |n: usize| [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][n % 4];
    let phi = alpha.arg();
    let rot = rotation_diagonal(phi, n_max);
    DMatrix::from_fn(dim, dim, |m, n| {
        let s = i_pow(m).conj() * i_pow(n);
        rot[m].conj() * s * real_disp[(m, n)] * rot[n]
    })
}

/// Reduced-density-matrix entropy of the T = 0 conditioned state from an
/// explicit two-mode Fock representation.
pub fn oracle_entanglement(state: &ConditionedTwoParticleState<f64>, n_max: usize) -> Result<OracleReport> {
    let dim = n_max + 1;
    let vac = |alpha: C64| displacement_matrix(alpha, n_max).column(0).into_owned();
    let a1 = vac(state.alpha[0]);
    let b1 = vac(state.beta[0]);
    let a2 = vac(state.alpha[1]);
    let b2 = vac(state.beta[1]);
    let rel = state.relative_amplitude();
    // Ψ[m, n] with m the mode-1 and n the mode-2 level.
    let psi = &a1 * b2.transpose() + (&b1 * a2.transpose()) * rel;
    let norm = psi.norm_squared();
    if norm < 1e-14 {
        return Err(Error::Degenerate("conditioned state has vanishing norm".into()));
    }
    let edge = (dim - (dim / 10).max(1)..dim)
        .map(|k| a1[k].norm_sqr() + b1[k].norm_sqr() + a2[k].norm_sqr() + b2[k].norm_sqr())
        .sum::<f64>();
    if edge > LEAKAGE_LIMIT {
        return Err(Error::Unconverged { cutoff: n_max, leakage: edge, limit: LEAKAGE_LIMIT });
    }
    let sv = (psi * C64::new(1.0 / norm.sqrt(), 0.0)).singular_values();
    let entropy = sv
        .iter()
        .map(|s| s * s)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(OracleReport { value: entropy, cutoff: n_max, leakage: edge, terms: 1, neglected_weight: 0.0 })
}
