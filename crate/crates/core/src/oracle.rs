//! Brute-force propagation on the truncated Fock space, independent of the
//! closed form in [`crate::propagator`].
//!
//! Two Hamiltonians are available: the resonant effective one (built from the
//! normal-ordered operator series, not from the Laguerre formula), and the full
//! interaction-picture one with `exp[iη(a e^{-iνt} + a† e^{iνt})]` formed by
//! matrix exponentiation and optional spectator modes.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{displacement_operator, hermitian_exp, CMatrix, CVector, HilbertGeometry, OperatorMatrix, StateVector};
use crate::error::{Error, Result};
use crate::propagator::{block_spectrum, Ion, PulsePair};
use crate::rabi::assoc_laguerre;

/// A vibrational mode other than the CM mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorMode {
    /// In units of the CM frequency ν; must exceed 1.
    pub frequency: f64,
    pub ld1: f64,
    pub ld2: f64,
    pub truncation: usize,
}

impl SpectatorMode {
    pub fn new(frequency: f64, ld1: f64, ld2: f64, truncation: usize) -> Result<Self> {
        let mode = SpectatorMode { frequency, ld1, ld2, truncation };
        mode.validate()?;
        Ok(mode)
    }

    /// LD parameters defaulted to the CM values scaled by `sqrt(ν/ν_l)`.
    pub fn placeholder(frequency: f64, pulses: &PulsePair, truncation: usize) -> Result<Self> {
        let scale = frequency.recip().sqrt();
        Self::new(frequency, pulses.eta1 * scale, pulses.eta2 * scale, truncation)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 1.0) || !self.frequency.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spectator frequency {} must exceed the CM frequency",
                self.frequency
            )));
        }
        if !(self.ld1.is_finite() && self.ld2.is_finite()) {
            return Err(Error::InvalidParameter("non-finite spectator LD parameter".into()));
        }
        if self.truncation < 1 {
            return Err(Error::InvalidGeometry("spectator truncation must be at least 1".into()));
        }
        Ok(())
    }

    fn ld(&self, ion: usize) -> f64 {
        if ion == 0 { self.ld1 } else { self.ld2 }
    }
}

/// Treatment of the spectator-mode operator function in the effective Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FOperator {
    #[default]
    Identity,
    /// `Π_l e^{-η²/2} L_{n_l}(η²)` on the spectator Fock states.
    Diagonal,
}

fn check_spectators(geometry: &HilbertGeometry, spectators: &[SpectatorMode]) -> Result<()> {
    if spectators.len() != geometry.n_spectator_modes {
        return Err(Error::InvalidGeometry(format!(
            "{} spectator modes given for a geometry with {}",
            spectators.len(),
            geometry.n_spectator_modes
        )));
    }
    for mode in spectators {
        mode.validate()?;
        if mode.truncation != geometry.spectator_m_max {
            return Err(Error::InvalidGeometry(format!(
                "spectator truncation {} differs from the geometry's {}",
                mode.truncation, geometry.spectator_m_max
            )));
        }
    }
    Ok(())
}

fn real_annihilation(dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// `e^{-η²/2} Σ_n (iη)^{2n+k} a†ⁿ a^{n+k} / (n!(n+k)!)` on `dim` Fock levels;
/// for `k < 0` the raising form `a†^{n+|k|} aⁿ`.
pub fn sideband_series(eta: f64, k: i32, dim: usize) -> CMatrix {
    let kk = k.unsigned_abs() as usize;
    let a = real_annihilation(dim);
    let mut powers = vec![DMatrix::<f64>::identity(dim, dim)];
    for p in 1..dim {
        let next = &powers[p - 1] * &a;
        powers.push(next);
    }
    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    let x = -eta * eta;
    // coefficient (-η²)ⁿ / (n! (n+k)!), updated incrementally
    let mut coeff = (1..=kk).fold(1.0, |acc, j| acc / j as f64);
    for n in 0..dim.saturating_sub(kk) {
        if n > 0 {
            coeff *= x / (n as f64 * (n + kk) as f64);
        }
        sum += (powers[n].transpose() * &powers[n + kk]) * coeff;
    }
    if k < 0 {
        sum.transpose_mut();
    }
    let i_k = match kk % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    let scale = i_k * (-0.5 * eta * eta).exp() * eta.powi(kk as i32);
    sum.map(|v| scale * v)
}

fn sigma_plus() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(1, 0)] = C64::new(1.0, 0.0);
    s
}

/// `cm ⊗ spec_0 ⊗ … ⊗ spin1 ⊗ spin2`, matching the basis layout of [`HilbertGeometry`].
fn compose(cm: &CMatrix, spectators: &[CMatrix], spin1: &CMatrix, spin2: &CMatrix) -> CMatrix {
    let mut out = cm.clone();
    for s in spectators {
        out = out.kronecker(s);
    }
    out.kronecker(spin1).kronecker(spin2)
}

fn spin_operators(ion: usize) -> (CMatrix, CMatrix) {
    let id = CMatrix::identity(2, 2);
    if ion == 0 { (sigma_plus(), id) } else { (id, sigma_plus()) }
}

/// The resonant effective Hamiltonian with the spectator operator function set to identity.
pub fn effective_hamiltonian(pulses: &PulsePair, geometry: &HilbertGeometry) -> Result<OperatorMatrix> {
    effective_hamiltonian_with(pulses, geometry, &[], FOperator::Identity)
}

pub fn effective_hamiltonian_with(
    pulses: &PulsePair,
    geometry: &HilbertGeometry,
    spectators: &[SpectatorMode],
    f_operator: FOperator,
) -> Result<OperatorMatrix> {
    pulses.validate()?;
    check_spectators(geometry, spectators)?;
    let fock = geometry.fock_dim();
    let spec_dim = geometry.spectator_m_max + 1;
    let drives = [
        (pulses.omega1, pulses.eta1, pulses.phi1, pulses.k1),
        (pulses.omega2, pulses.eta2, pulses.phi2, 0),
    ];
    let mut h = CMatrix::zeros(geometry.dim(), geometry.dim());
    for (ion, &(omega, eta, phi, k)) in drives.iter().enumerate() {
        if omega == 0.0 {
            continue;
        }
        let cm = sideband_series(eta, k, fock);
        let f: Vec<CMatrix> = spectators
            .iter()
            .map(|mode| match f_operator {
                FOperator::Identity => CMatrix::identity(spec_dim, spec_dim),
                FOperator::Diagonal => {
                    let x = mode.ld(ion).powi(2);
                    CMatrix::from_diagonal(&CVector::from_iterator(
                        spec_dim,
                        (0..spec_dim).map(|n| C64::new((-0.5 * x).exp() * assoc_laguerre(n, 0.0, x), 0.0)),
                    ))
                }
            })
            .collect();
        let (s1, s2) = spin_operators(ion);
        let term = compose(&cm, &f, &s1, &s2) * C64::from_polar(0.5 * omega, -phi);
        h += &term + term.adjoint();
    }
    OperatorMatrix::new(h, true)
}

/// Resonant carrier drive of a single ion, `(Ω/2) e^{-iφ} F(η) σ⁺ + h.c.`,
/// with `F` the `k = 0` operator series.
pub fn carrier_hamiltonian(ion: Ion, omega: f64, eta: f64, phi: f64, geometry: &HilbertGeometry) -> Result<OperatorMatrix> {
    if geometry.n_spectator_modes != 0 {
        return Err(Error::InvalidGeometry("carrier_hamiltonian covers the CM mode only".into()));
    }
    let (s1, s2) = spin_operators(if ion == Ion::One { 0 } else { 1 });
    let term = compose(&sideband_series(eta, 0, geometry.fock_dim()), &[], &s1, &s2) * C64::from_polar(0.5 * omega, -phi);
    OperatorMatrix::new(&term + term.adjoint(), true)
}

/// Full interaction-picture Hamiltonian, stored as its Schrödinger-frame part
/// plus the diagonal frame generator `ν n + Σ ν_l n_l + k₁ν σ₁ᶻ/2`.
///
/// `H_I(t) = W(t) H_s W(t)†` with `W(t) = exp(i G t)`, so `H_s + G` is a
/// time-independent generator of the same dynamics.
#[derive(Clone, Debug)]
pub struct FullHamiltonian {
    geometry: HilbertGeometry,
    static_part: CMatrix,
    generator: Vec<f64>,
}

impl FullHamiltonian {
    /// `trap_frequency` is ν in the same units as the Rabi strengths.
    pub fn new(
        pulses: &PulsePair,
        trap_frequency: f64,
        geometry: HilbertGeometry,
        spectators: &[SpectatorMode],
    ) -> Result<Self> {
        pulses.validate()?;
        check_spectators(&geometry, spectators)?;
        if !(trap_frequency > 0.0) || !trap_frequency.is_finite() {
            return Err(Error::InvalidParameter(format!("trap frequency {trap_frequency} must be positive")));
        }
        let spec_dim = geometry.spectator_m_max + 1;
        let drives = [(pulses.omega1, pulses.eta1, pulses.phi1), (pulses.omega2, pulses.eta2, pulses.phi2)];
        let mut h = CMatrix::zeros(geometry.dim(), geometry.dim());
        for (ion, &(omega, eta, phi)) in drives.iter().enumerate() {
            if omega == 0.0 {
                continue;
            }
            let cm = displacement_operator(eta, geometry.fock_dim());
            let specs: Vec<CMatrix> =
                spectators.iter().map(|mode| displacement_operator(mode.ld(ion), spec_dim)).collect();
            let (s1, s2) = spin_operators(ion);
            let term = compose(&cm, &specs, &s1, &s2) * C64::from_polar(0.5 * omega, -phi);
            h += &term + term.adjoint();
        }
        let generator = (0..geometry.dim())
            .map(|idx| {
                let label = geometry.label(idx);
                let spectator_energy: f64 = spectators
                    .iter()
                    .zip(label.spectators.iter())
                    .map(|(mode, &n)| mode.frequency * n as f64)
                    .sum();
                trap_frequency
                    * (label.m as f64 + spectator_energy + 0.5 * pulses.k1 as f64 * label.s1.sigma_z())
            })
            .collect();
        Ok(FullHamiltonian { geometry, static_part: h, generator })
    }

    pub fn geometry(&self) -> HilbertGeometry {
        self.geometry
    }

    /// `H_I(t)`.
    pub fn at(&self, t: f64) -> CMatrix {
        let w: Vec<C64> = self.generator.iter().map(|g| C64::from_polar(1.0, g * t)).collect();
        let mut h = self.static_part.clone();
        for j in 0..h.ncols() {
            for i in 0..h.nrows() {
                h[(i, j)] *= w[i] * w[j].conj();
            }
        }
        h
    }

    /// `H_s + G`.
    pub fn rotating_generator(&self) -> CMatrix {
        let mut h = self.static_part.clone();
        for (i, g) in self.generator.iter().enumerate() {
            h[(i, i)] += C64::new(*g, 0.0);
        }
        h
    }

    /// Maps a Schrödinger-frame state at time `t` into the interaction picture.
    fn to_interaction(&self, mut psi: CVector, t: f64) -> CVector {
        for (a, g) in psi.iter_mut().zip(&self.generator) {
            *a *= C64::from_polar(1.0, g * t);
        }
        psi
    }
}

pub fn full_hamiltonian_at(
    pulses: &PulsePair,
    trap_frequency: f64,
    geometry: HilbertGeometry,
    spectators: &[SpectatorMode],
    t: f64,
) -> Result<OperatorMatrix> {
    let h = FullHamiltonian::new(pulses, trap_frequency, geometry, spectators)?;
    OperatorMatrix::new(h.at(t), true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HamiltonianSource {
    Effective {
        pulses: PulsePair,
        #[serde(default)]
        spectators: Vec<SpectatorMode>,
        #[serde(default)]
        f_operator: FOperator,
    },
    Full {
        pulses: PulsePair,
        trap_frequency: f64,
        #[serde(default)]
        spectators: Vec<SpectatorMode>,
    },
}

impl HamiltonianSource {
    pub fn effective(pulses: PulsePair) -> Self {
        HamiltonianSource::Effective { pulses, spectators: Vec::new(), f_operator: FOperator::Identity }
    }

    pub fn full(pulses: PulsePair, trap_frequency: f64) -> Self {
        HamiltonianSource::Full { pulses, trap_frequency, spectators: Vec::new() }
    }

    pub fn pulses(&self) -> &PulsePair {
        match self {
            HamiltonianSource::Effective { pulses, .. } | HamiltonianSource::Full { pulses, .. } => pulses,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    /// One exponential of the time-independent (rotating-frame) generator.
    #[default]
    Exponential,
    /// Fixed-step fourth-order Magnus stepping of `H_I(t)`.
    Magnus4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step for [`IntegrationMethod::Magnus4`]; defaults to
    /// `min(2π/ν, 2π/λ̃₊)/400`.
    pub dt: Option<f64>,
    pub method: IntegrationMethod,
    /// Largest population allowed in the two highest CM Fock levels.
    pub leak_tolerance: f64,
    /// Re-run stepping at `dt/2` and require agreement.
    pub convergence_check: bool,
    pub convergence_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: None,
            method: IntegrationMethod::Exponential,
            leak_tolerance: 1e-8,
            convergence_check: false,
            convergence_tolerance: 1e-9,
        }
    }
}

/// Allowed norm change of a stepped trajectory.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;

/// `min(2π/ν, 2π/λ̃₊)/400`, with λ̃₊ taken at `m = 0`.
pub fn default_step(pulses: &PulsePair, trap_frequency: f64) -> f64 {
    let (a1, a2, g2) = pulses.couplings(0);
    let lp = block_spectrum(a1, a2, g2).lambda_plus;
    let mut period = TAU / trap_frequency;
    if lp > 0.0 {
        period = period.min(TAU / lp);
    }
    period / 400.0
}

/// `max(Ω₁, Ω₂)/ν`; the effective Hamiltonian assumes this is small.
pub fn weak_excitation_ratio(pulses: &PulsePair, trap_frequency: f64) -> f64 {
    pulses.omega1.max(pulses.omega2) / trap_frequency
}

fn check_leak(state: &StateVector, tolerance: f64) -> Result<()> {
    let leak = state.top_fock_population(2);
    if leak > tolerance {
        return Err(Error::TruncationLeak { leak, tolerance });
    }
    Ok(())
}

/// Propagates `state` for `t_final` under `source`.
pub fn integrate(
    source: &HamiltonianSource,
    state: &StateVector,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    if !t_final.is_finite() {
        return Err(Error::InvalidParameter("non-finite evolution time".into()));
    }
    if !(cfg.leak_tolerance > 0.0) {
        return Err(Error::InvalidParameter("leak tolerance must be positive".into()));
    }
    let geometry = state.geometry();
    let out = match source {
        HamiltonianSource::Effective { pulses, spectators, f_operator } => {
            let h = effective_hamiltonian_with(pulses, &geometry, spectators, *f_operator)?;
            hermitian_exp(h.entries(), t_final) * state.amplitudes()
        }
        HamiltonianSource::Full { pulses, trap_frequency, spectators } => {
            let full = FullHamiltonian::new(pulses, *trap_frequency, geometry, spectators)?;
            match cfg.method {
                IntegrationMethod::Exponential => {
                    let psi = hermitian_exp(&full.rotating_generator(), t_final) * state.amplitudes();
                    full.to_interaction(psi, t_final)
                }
                IntegrationMethod::Magnus4 => {
                    let dt = cfg.dt.unwrap_or_else(|| default_step(pulses, *trap_frequency));
                    precheck_step(&full, dt)?;
                    let psi = magnus4(&full, state.amplitudes().clone(), t_final, dt);
                    if cfg.convergence_check {
                        let fine = magnus4(&full, state.amplitudes().clone(), t_final, 0.5 * dt);
                        let infidelity = 1.0 - psi.dotc(&fine).norm_sqr();
                        if infidelity > 10.0 * cfg.convergence_tolerance {
                            return Err(Error::NonConvergence(format!(
                                "halving dt={dt:.3e} changed the final state by infidelity {infidelity:.3e}"
                            )));
                        }
                    }
                    psi
                }
            }
        }
    };
    let drift = (out.norm_squared() - state.norm_sqr()).abs();
    if drift > NORM_DRIFT_TOLERANCE {
        return Err(Error::SolverFailed(format!("norm drifted by {drift:.3e}")));
    }
    let out = StateVector::from_unitary_image(geometry, out);
    check_leak(&out, cfg.leak_tolerance)?;
    Ok(out)
}

/// Rejects steps that cannot resolve the fastest phase in `H_I`.
fn precheck_step(full: &FullHamiltonian, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("step {dt} must be positive")));
    }
    let spread = full.generator.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - full.generator.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread * dt > PI {
        return Err(Error::NonConvergence(format!(
            "step {dt:.3e} aliases the frame frequencies (spread {spread:.3e})"
        )));
    }
    Ok(())
}

/// Fourth-order Magnus stepping with two Gauss-Legendre nodes per step.
fn magnus4(full: &FullHamiltonian, mut psi: CVector, t_final: f64, dt: f64) -> CVector {
    let steps = (t_final.abs() / dt).ceil().max(1.0) as usize;
    let h = t_final / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    for n in 0..steps {
        let t = n as f64 * h;
        let step = MagnusGenerator {
            h1: full.at(t + h * (0.5 - c)),
            h2: full.at(t + h * (0.5 + c)),
            h,
        };
        psi = step.exp_apply(psi);
    }
    psi
}

/// `K = h(H₁+H₂)/2 - i(√3/12)h²[H₂,H₁]`, applied to vectors without forming
/// the commutator.
struct MagnusGenerator {
    h1: CMatrix,
    h2: CMatrix,
    h: f64,
}

impl MagnusGenerator {
    fn apply(&self, v: &CVector) -> CVector {
        let a = &self.h1 * v;
        let b = &self.h2 * v;
        let comm = &self.h2 * &a - &self.h1 * &b;
        (a + b) * C64::new(0.5 * self.h, 0.0) + comm * C64::new(0.0, -3f64.sqrt() / 12.0 * self.h * self.h)
    }

    fn norm_bound(&self) -> f64 {
        let row_sum = |m: &CMatrix| m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let (n1, n2) = (row_sum(&self.h1), row_sum(&self.h2));
        0.5 * self.h.abs() * (n1 + n2) + 3f64.sqrt() / 6.0 * self.h * self.h * n1 * n2
    }

    /// `exp(-iK) ψ` by a Taylor series on the vector, sub-stepped so each
    /// piece has norm below one; terms run until they fall under rounding.
    fn exp_apply(&self, mut psi: CVector) -> CVector {
        let pieces = self.norm_bound().ceil().max(1.0) as usize;
        let scale = C64::new(0.0, -1.0 / pieces as f64);
        for _ in 0..pieces {
            let mut term = psi.clone();
            for j in 1..60 {
                term = self.apply(&term) * (scale / j as f64);
                psi += &term;
                if term.norm() < 1e-17 {
                    break;
                }
            }
        }
        psi
    }
}
