//! Closed-form conditional dynamics of the two-pulse system: ion 1 driven on
//! its `k1`-th motional sideband, ion 2 on its carrier.
//!
//! For bus index `m < |k1|` the effective Hamiltonian splits into 2x2 carrier
//! blocks (ion 1 in the state that cannot exchange phonons) and 4x4 blocks
//! spanned by
//!
//! ```text
//! upper: |m+|k1|> ⊗ (ion 1 flipped) ⊗ {g2, e2}
//! lower: |m>      ⊗ (ion 1 coupled) ⊗ {g2, e2}
//! ```
//!
//! Inside a 4x4 block the ion-2 carrier commutes with everything else, so the
//! block splits again into two 2x2 problems with eigenvalues `±s ± r`,
//! `s = (γ̃₂ + α̃₂)/2`, `r = sqrt(((γ̃₂ - α̃₂)/2)² + α₁²)`. The coefficients
//! below are written in `s` and `r`; `λ̃± = |r ± |s||` are the same branch
//! frequencies as `sqrt((Λ̃ ± Δ̃)/2)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CVector, HilbertGeometry, Spin, StateVector};
use crate::error::{Error, Result};
use crate::rabi::{generalized_rabi, CouplingSpec};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Δ̃/Λ̃ below which the two branches count as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-10;

/// The two simultaneous pulses. Frequencies are dimensionless (units of Ω₂ by
/// convention) and so is the evolution time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulsePair {
    pub omega1: f64,
    pub omega2: f64,
    pub eta1: f64,
    pub eta2: f64,
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    /// Sideband order on ion 1: positive = red (`ω₁ = ω₀ - k₁ν`), negative = blue.
    pub k1: i32,
}

impl PulsePair {
    pub fn new(omega1: f64, omega2: f64, eta1: f64, eta2: f64, k1: i32) -> Result<Self> {
        let p = PulsePair { omega1, omega2, eta1, eta2, phi1: 0.0, phi2: 0.0, k1 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_phases(mut self, phi1: f64, phi2: f64) -> Self {
        self.phi1 = phi1;
        self.phi2 = phi2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega1, self.omega2, self.eta1, self.eta2, self.phi1, self.phi2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!("non-finite pulse parameter in {self:?}")));
        }
        if self.omega1 < 0.0 || self.omega2 < 0.0 {
            return Err(Error::InvalidParameter("Rabi strengths must be non-negative".into()));
        }
        if self.k1 == 0 {
            return Err(Error::InvalidParameter("ion 1 must be driven on a sideband (k1 != 0)".into()));
        }
        Ok(())
    }

    pub fn sideband_order(&self) -> usize {
        self.k1.unsigned_abs() as usize
    }

    pub fn is_blue(&self) -> bool {
        self.k1 < 0
    }

    /// The closed form only covers `|k1| > m`.
    pub fn require_solvable(&self, m: usize) -> Result<()> {
        self.validate()?;
        if self.sideband_order() <= m {
            return Err(Error::InvalidSidebandOrder { k1: self.k1, m });
        }
        Ok(())
    }

    /// `(α₁, α̃₂, γ̃₂)` for bus index `m`.
    pub fn couplings(&self, m: usize) -> (f64, f64, f64) {
        let k = self.sideband_order();
        let alpha1 = generalized_rabi(&CouplingSpec::new(self.omega1, self.eta1, m, k));
        let alpha2 = generalized_rabi(&CouplingSpec::new(self.omega2, self.eta2, m, 0));
        let gamma2 = generalized_rabi(&CouplingSpec::new(self.omega2, self.eta2, m + k, 0));
        (alpha1, alpha2, gamma2)
    }

    /// Spin of ion 1 that the sideband pulse lowers into the upper Fock level
    /// (`e` for red, `g` for blue).
    fn coupled_spin(&self) -> Spin {
        if self.is_blue() { Spin::G } else { Spin::E }
    }
}

/// Branch frequencies of the 4x4 block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub big_lambda: f64,
    pub delta: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `sign(α̃₂γ̃₂ - α₁²)`; when negative the eigenvalue attached to λ̃₋
    /// carries the opposite sign to the one attached to λ̃₊.
    pub branch_sign: f64,
}

/// `Λ̃ = α̃₂² + γ̃₂² + 2α₁²`, `Δ̃² = Λ̃² - 4(α̃₂γ̃₂ - α₁²)²`, `λ̃± = sqrt((Λ̃ ± Δ̃)/2)`.
pub fn block_spectrum(alpha1: f64, alpha2: f64, gamma2: f64) -> BlockSpectrum {
    let big_lambda = alpha2 * alpha2 + gamma2 * gamma2 + 2.0 * alpha1 * alpha1;
    let det = alpha2 * gamma2 - alpha1 * alpha1;
    let delta = (big_lambda * big_lambda - 4.0 * det * det).max(0.0).sqrt();
    BlockSpectrum {
        big_lambda,
        delta,
        lambda_plus: (0.5 * (big_lambda + delta)).max(0.0).sqrt(),
        lambda_minus: (0.5 * (big_lambda - delta)).max(0.0).sqrt(),
        branch_sign: if det < 0.0 { -1.0 } else { 1.0 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientForm {
    /// Exact closed form from diagonalizing the 4x4 block.
    ClosedForm,
    /// The historical printed expressions, kept for comparison only.
    Printed,
}

/// All scalars of the conditional evolution at bus index `m` and time `t`.
///
/// `e` are the images of `|m>|c₁>|g₂>` and `f` of `|m>|c₁>|e₂>` (c₁ the
/// sideband-coupled spin of ion 1) on the ordered basis
/// `|m+k>|f₁>|g₂>, |m+k>|f₁>|e₂>, |m>|c₁>|g₂>, |m>|c₁>|e₂>` (f₁ the flipped spin).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticCoefficients {
    pub m: usize,
    pub t: f64,
    pub k1: i32,
    pub alpha1: f64,
    pub alpha2_tilde: f64,
    pub gamma2_tilde: f64,
    pub rho: f64,
    pub big_lambda: f64,
    pub delta: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    pub branch_sign: f64,
    pub e: [C64; 4],
    pub f: [C64; 4],
    pub form: CoefficientForm,
}

impl AnalyticCoefficients {
    pub fn e_norm_sqr(&self) -> f64 {
        self.e.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn f_norm_sqr(&self) -> f64 {
        self.f.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ Eᵢ conj(Fᵢ)`.
    pub fn row_overlap(&self) -> C64 {
        self.e.iter().zip(&self.f).map(|(e, f)| e * f.conj()).sum()
    }

    /// Worst deviation from orthonormality of the two evolved rows.
    pub fn unitarity_defect(&self) -> f64 {
        (self.e_norm_sqr() - 1.0)
            .abs()
            .max((self.f_norm_sqr() - 1.0).abs())
            .max(self.row_overlap().norm())
    }

    fn base(pulses: &PulsePair, m: usize, t: f64, form: CoefficientForm) -> Self {
        let (alpha1, alpha2, gamma2) = pulses.couplings(m);
        let sp = block_spectrum(alpha1, alpha2, gamma2);
        let a2 = alpha2 * alpha2 + alpha1 * alpha1;
        AnalyticCoefficients {
            m,
            t,
            k1: pulses.k1,
            alpha1,
            alpha2_tilde: alpha2,
            gamma2_tilde: gamma2,
            rho: alpha1 * (alpha2 + gamma2),
            big_lambda: sp.big_lambda,
            delta: sp.delta,
            lambda_plus: sp.lambda_plus,
            lambda_minus: sp.lambda_minus,
            zeta_plus: sp.lambda_plus * sp.lambda_plus - a2,
            zeta_minus: sp.lambda_minus * sp.lambda_minus - a2,
            branch_sign: sp.branch_sign,
            e: [C64::default(); 4],
            f: [C64::default(); 4],
            form,
        }
    }
}

/// `i^n` for a possibly negative integer `n`.
fn i_pow(n: i64) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => I,
        2 => C64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// Matrix element `<upper|H|lower>` of the sideband term, in units where the
/// Laguerre coupling is `α₁`.
fn sideband_element(pulses: &PulsePair, alpha1: f64) -> C64 {
    let k = pulses.sideband_order() as i64;
    if pulses.is_blue() {
        // sigma+ (a^dag)^k: <m+k,e|H|m,g> = i^k e^{-i phi1} alpha1
        i_pow(k) * C64::from_polar(alpha1, -pulses.phi1)
    } else {
        // sigma+ a^k: <m,e|H|m+k,g> = i^k e^{-i phi1} alpha1, and we need its conjugate
        i_pow(-k) * C64::from_polar(alpha1, pulses.phi1)
    }
}

/// Exact coefficients of the 4x4 block.
pub fn compute_coefficients(pulses: &PulsePair, m: usize, t: f64) -> Result<AnalyticCoefficients> {
    pulses.require_solvable(m)?;
    let mut c = AnalyticCoefficients::base(pulses, m, t, CoefficientForm::ClosedForm);
    let (alpha, gamma) = (c.alpha2_tilde, c.gamma2_tilde);
    let s = 0.5 * (gamma + alpha);
    let d = 0.5 * (gamma - alpha);
    let r = d.hypot(c.alpha1);
    let sinc = if r == 0.0 { t } else { (r * t).sin() / r };
    let (sin_s, cos_s) = (s * t).sin_cos();
    let cos_r = (r * t).cos();
    let coupling = sideband_element(pulses, c.alpha1);
    let ph2 = C64::from_polar(1.0, -pulses.phi2);

    let e1 = -I * sinc * cos_s * coupling;
    let diag = C64::new(cos_s * cos_r + sinc * d * sin_s, 0.0);
    let flip = -I * (sin_s * cos_r - sinc * d * cos_s);
    c.e = [e1, -ph2 * sinc * sin_s * coupling, diag, ph2 * flip];
    c.f = [-ph2.conj() * sinc * sin_s * coupling, e1, ph2.conj() * flip, diag];
    Ok(c)
}

/// The printed closed-form expressions, evaluated verbatim.
///
/// These are not unitary in general; see [`printed_discrepancy_report`].
pub fn printed_coefficients(pulses: &PulsePair, m: usize, t: f64) -> Result<AnalyticCoefficients> {
    pulses.require_solvable(m)?;
    let mut c = AnalyticCoefficients::base(pulses, m, t, CoefficientForm::Printed);
    if c.big_lambda == 0.0 || c.delta / c.big_lambda < DEGENERACY_RATIO {
        let ratio = if c.big_lambda == 0.0 { 0.0 } else { c.delta / c.big_lambda };
        return Err(Error::DegenerateBranches { ratio });
    }
    let k = pulses.sideband_order() as i64;
    let (lp, lm, dl) = (c.lambda_plus, c.lambda_minus, c.delta);
    let (zp, zm, rho) = (c.zeta_plus, c.zeta_minus, c.rho);
    let (sp, cp) = (lp * t).sin_cos();
    let (sm, cm) = (lm * t).sin_cos();
    let e1p = C64::from_polar(1.0, pulses.phi1);
    let e2m = C64::from_polar(1.0, -pulses.phi2);
    let pref = (c.alpha1 * rho * rho + c.gamma2_tilde * zp * rho) / (lp * zp * dl);
    let r2 = rho * rho / dl;
    c.e = [
        i_pow(-(k + 1)) * e1p / dl * (sp - sm),
        i_pow(-k) * e1p * e2m * pref * (cp - cm),
        C64::new(r2 * (cp / zp - cm / zm), 0.0),
        -I * e2m * r2 * (sp / zp - sm / zm),
    ];
    c.f = [
        i_pow(-k) * e1p * e2m.conj() * rho / dl * (cp - cm),
        i_pow(-(k + 1)) * e1p * pref * (sp - sm),
        -I * e2m.conj() * r2 * (sp / zp - sm / zm),
        C64::new(r2 * (cp / zp - cm / zm), 0.0),
    ];
    Ok(c)
}

pub fn coefficients(pulses: &PulsePair, m: usize, t: f64, form: CoefficientForm) -> Result<AnalyticCoefficients> {
    match form {
        CoefficientForm::ClosedForm => compute_coefficients(pulses, m, t),
        CoefficientForm::Printed => printed_coefficients(pulses, m, t),
    }
}

/// Image of one basis component `|m, spectators, s1, s2>` as (index, amplitude) pairs.
fn component_image(
    geometry: &HilbertGeometry,
    idx: usize,
    pulses: &PulsePair,
    t: f64,
    block: &AnalyticCoefficients,
) -> Result<Vec<(usize, C64)>> {
    let label = geometry.label(idx);
    let spec = &label.spectators[..geometry.n_spectator_modes];
    let coupled = pulses.coupled_spin();
    let at = |m: usize, s1: Spin, s2: Spin| geometry.index(m, spec, s1, s2);
    let m = label.m;

    if label.s1 != coupled {
        // ion 1 cannot exchange phonons: pure ion-2 carrier rotation
        let (sin, cos) = (block.alpha2_tilde * t).sin_cos();
        let phase = match label.s2 {
            Spin::G => C64::from_polar(1.0, -pulses.phi2),
            Spin::E => C64::from_polar(1.0, pulses.phi2),
        };
        return Ok(vec![
            (at(m, label.s1, label.s2)?, C64::new(cos, 0.0)),
            (at(m, label.s1, label.s2.flipped())?, -I * phase * sin),
        ]);
    }

    let up = m + pulses.sideband_order();
    let flipped = coupled.flipped();
    let coeffs = match label.s2 {
        Spin::G => &block.e,
        Spin::E => &block.f,
    };
    Ok(vec![
        (at(up, flipped, Spin::G)?, coeffs[0]),
        (at(up, flipped, Spin::E)?, coeffs[1]),
        (at(m, coupled, Spin::G)?, coeffs[2]),
        (at(m, coupled, Spin::E)?, coeffs[3]),
    ])
}

/// Evolves the basis ket `|m>|s1>|s2>` for time `t`.
pub fn evolve_basis(
    geometry: HilbertGeometry,
    m: usize,
    s1: Spin,
    s2: Spin,
    pulses: &PulsePair,
    t: f64,
) -> Result<StateVector> {
    let input = StateVector::basis(geometry, m, s1, s2)?;
    evolve(&input, pulses, t)
}

/// Amplitude below which a component is treated as absent.
const COMPONENT_CUTOFF: f64 = 1e-12;

/// Linear extension of the closed form to an arbitrary state. Every populated
/// component must satisfy `|k1| > m`.
pub fn evolve(state: &StateVector, pulses: &PulsePair, t: f64) -> Result<StateVector> {
    evolve_with(state, pulses, t, CoefficientForm::ClosedForm)
}

pub fn evolve_with(
    state: &StateVector,
    pulses: &PulsePair,
    t: f64,
    form: CoefficientForm,
) -> Result<StateVector> {
    pulses.validate()?;
    let geometry = state.geometry();
    let mut cache: Vec<Option<AnalyticCoefficients>> = vec![None; geometry.fock_dim()];
    let mut out = CVector::zeros(geometry.dim());
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm() <= COMPONENT_CUTOFF {
            continue;
        }
        let m = geometry.label(idx).m;
        pulses.require_solvable(m)?;
        let block = match cache[m] {
            Some(b) => b,
            None => {
                let b = coefficients(pulses, m, t, form)?;
                cache[m] = Some(b);
                b
            }
        };
        for (j, c) in component_image(&geometry, idx, pulses, t, &block)? {
            out[j] += amp * c;
        }
    }
    Ok(StateVector::from_unitary_image(geometry, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ion {
    One,
    Two,
}

/// A resonant carrier pulse on one ion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierPulse {
    pub ion: Ion,
    pub omega: f64,
    pub eta: f64,
    pub phi: f64,
}

/// Carrier rotation: `|g> -> cos(α̃t)|g> - i e^{-iφ} sin(α̃t)|e>` and
/// `|e> -> cos(α̃t)|e> - i e^{iφ} sin(α̃t)|g>` with `α̃ = Ω_{m,0}` per Fock
/// component. The bus is not excited.
pub fn carrier_rotation(state: &StateVector, pulse: &CarrierPulse, t: f64) -> StateVector {
    let geometry = state.geometry();
    let mut out = CVector::zeros(geometry.dim());
    let rabi: Vec<f64> = (0..geometry.fock_dim())
        .map(|m| generalized_rabi(&CouplingSpec::new(pulse.omega, pulse.eta, m, 0)))
        .collect();
    // flipping the driven spin toggles one bit of the index
    let bit = match pulse.ion {
        Ion::One => 2,
        Ion::Two => 1,
    };
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if *amp == C64::default() {
            continue;
        }
        let label = geometry.label(idx);
        let spin = match pulse.ion {
            Ion::One => label.s1,
            Ion::Two => label.s2,
        };
        let (sin, cos) = (rabi[label.m] * t).sin_cos();
        let phase = match spin {
            Spin::G => C64::from_polar(1.0, -pulse.phi),
            Spin::E => C64::from_polar(1.0, pulse.phi),
        };
        out[idx] += amp * cos;
        out[idx ^ bit] += amp * (-I * phase * sin);
    }
    StateVector::from_unitary_image(geometry, out)
}

/// Deviation of one printed coefficient from the closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientDeviation {
    pub name: &'static str,
    pub max_abs_deviation: f64,
    /// Worst case restricted to `α̃₂γ̃₂ > α₁²`.
    pub positive_branch: f64,
    /// Worst case restricted to `α̃₂γ̃₂ < α₁²`.
    pub negative_branch: f64,
}

/// Comparison of the printed coefficient formulas with the closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub samples: usize,
    pub skipped_degenerate: usize,
    pub deviations: Vec<CoefficientDeviation>,
    pub printed_worst_unitarity: f64,
    pub closed_form_worst_unitarity: f64,
}

impl DiscrepancyReport {
    /// Names of the printed coefficients that deviate by more than `tol`.
    pub fn failing(&self, tol: f64) -> Vec<&'static str> {
        self.deviations.iter().filter(|d| d.max_abs_deviation > tol).map(|d| d.name).collect()
    }
}

impl fmt::Display for DiscrepancyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "printed vs closed-form coefficients over {} samples ({} degenerate skipped)",
            self.samples, self.skipped_degenerate)?;
        writeln!(f, "{:<6} {:>14} {:>14} {:>14}", "coeff", "max |dev|", "sign(+) dev", "sign(-) dev")?;
        for d in &self.deviations {
            writeln!(f, "{:<6} {:>14.3e} {:>14.3e} {:>14.3e}",
                d.name, d.max_abs_deviation, d.positive_branch, d.negative_branch)?;
        }
        writeln!(f, "worst unitarity defect: printed {:.3e}, closed form {:.3e}",
            self.printed_worst_unitarity, self.closed_form_worst_unitarity)
    }
}

/// Evaluates both coefficient forms on every `(pulses, m, t)` sample.
pub fn printed_discrepancy_report(samples: &[(PulsePair, usize, f64)]) -> Result<DiscrepancyReport> {
    const NAMES: [&str; 8] = ["E1", "E2", "E3", "E4", "F1", "F2", "F3", "F4"];
    let mut deviations: Vec<CoefficientDeviation> = NAMES
        .iter()
        .map(|&name| CoefficientDeviation { name, max_abs_deviation: 0.0, positive_branch: 0.0, negative_branch: 0.0 })
        .collect();
    let mut report = DiscrepancyReport {
        samples: 0,
        skipped_degenerate: 0,
        deviations: Vec::new(),
        printed_worst_unitarity: 0.0,
        closed_form_worst_unitarity: 0.0,
    };
    for (pulses, m, t) in samples {
        let exact = compute_coefficients(pulses, *m, *t)?;
        let printed = match printed_coefficients(pulses, *m, *t) {
            Ok(p) => p,
            Err(Error::DegenerateBranches { .. }) => {
                report.skipped_degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        report.samples += 1;
        report.printed_worst_unitarity = report.printed_worst_unitarity.max(printed.unitarity_defect());
        report.closed_form_worst_unitarity = report.closed_form_worst_unitarity.max(exact.unitarity_defect());
        let pairs = exact.e.iter().chain(&exact.f).zip(printed.e.iter().chain(&printed.f));
        for (dev, (x, p)) in deviations.iter_mut().zip(pairs) {
            let d = (x - p).norm();
            dev.max_abs_deviation = dev.max_abs_deviation.max(d);
            if exact.branch_sign > 0.0 {
                dev.positive_branch = dev.positive_branch.max(d);
            } else {
                dev.negative_branch = dev.negative_branch.max(d);
            }
        }
    }
    report.deviations = deviations;
    Ok(report)
}

/// Phase of the carrier rows at which they return to themselves, `cos(α̃₂t) = 1`.
pub fn carrier_period(alpha2_tilde: f64) -> f64 {
    4.0 * FRAC_PI_2 / alpha2_tilde.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{hermitian_exp, CMatrix};
    use std::f64::consts::PI;

    const REGRESSION_ETA1: f64 = 2.18403;
    const REGRESSION_ETA2: f64 = 1.73205;
    const REGRESSION_OMEGA_TAU: f64 = 56.3186;

    fn regression_pulses() -> PulsePair {
        PulsePair::new(1.0, 1.0, REGRESSION_ETA1, REGRESSION_ETA2, 1).unwrap()
    }

    /// Independent route: exponentiate the 4x4 block Hamiltonian numerically.
    fn block_oracle(p: &PulsePair, m: usize, t: f64) -> ([C64; 4], [C64; 4]) {
        let (a1, a2, g2) = p.couplings(m);
        let k = p.sideband_order() as i32;
        // <lower|H|upper> with lower = coupled spin at m, upper = flipped spin at m+k
        let c = if p.is_blue() {
            (I.powi(k) * C64::from_polar(a1, -p.phi1)).conj()
        } else {
            I.powi(k) * C64::from_polar(a1, -p.phi1)
        };
        let mut h = CMatrix::zeros(4, 4);
        h[(2, 0)] = c;
        h[(3, 1)] = c;
        h[(1, 0)] = C64::from_polar(g2, -p.phi2);
        h[(3, 2)] = C64::from_polar(a2, -p.phi2);
        let h = &h + h.adjoint();
        let u = hermitian_exp(&h, t);
        (
            [u[(0, 2)], u[(1, 2)], u[(2, 2)], u[(3, 2)]],
            [u[(0, 3)], u[(1, 3)], u[(2, 3)], u[(3, 3)]],
        )
    }

    #[test]
    fn gate_point_branch_phases() {
        let c = compute_coefficients(&regression_pulses(), 0, REGRESSION_OMEGA_TAU).unwrap();
        assert!((c.alpha2_tilde * REGRESSION_OMEGA_TAU - 2.0 * PI).abs() < 1e-3);
        assert!((c.lambda_plus * REGRESSION_OMEGA_TAU - 4.5 * PI).abs() < 1e-3);
        assert!((c.lambda_minus * REGRESSION_OMEGA_TAU - 2.5 * PI).abs() < 1e-3);
        // invariants on the scalars
        let lam = c.alpha2_tilde.powi(2) + c.gamma2_tilde.powi(2) + 2.0 * c.alpha1.powi(2);
        assert!((c.big_lambda - lam).abs() < 1e-15);
        assert!(c.branch_sign < 0.0);
    }

    #[test]
    fn zero_time_is_identity() {
        for form in [CoefficientForm::ClosedForm, CoefficientForm::Printed] {
            let c = coefficients(&regression_pulses(), 0, 0.0, form).unwrap();
            let one = C64::new(1.0, 0.0);
            assert!((c.e[2] - one).norm() < 1e-12, "{form:?}");
            assert!((c.f[3] - one).norm() < 1e-12, "{form:?}");
            for z in [c.e[0], c.e[1], c.e[3], c.f[0], c.f[1], c.f[2]] {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_pulse_limit_decouples() {
        let p = PulsePair::new(0.0, 1.0, 1.1, 0.8, 1).unwrap().with_phases(0.2, 0.4);
        let c = compute_coefficients(&p, 0, 2.3).unwrap();
        assert_eq!(c.alpha1, 0.0);
        assert_eq!(c.rho, 0.0);
        assert!(c.e[0].norm() < 1e-15 && c.e[1].norm() < 1e-15);
        let (s, co) = (c.alpha2_tilde * 2.3).sin_cos();
        assert!((c.e[2] - C64::new(co, 0.0)).norm() < 1e-14);
        assert!((c.e[3] - (-I * C64::from_polar(s, -0.4))).norm() < 1e-14);
    }

    #[test]
    fn closed_form_matches_block_exponential() {
        let cases = [
            (1.0, 1.0, REGRESSION_ETA1, REGRESSION_ETA2, 1, 0, REGRESSION_OMEGA_TAU, 0.0, 0.0),
            (1.0, 1.0, 0.7, 1.1, 1, 0, 3.3, 0.3, 0.7),
            (0.6, 1.0, 1.3, 0.4, 2, 1, 10.0, 1.1, -0.4),
            (1.7, 1.0, 0.2, 2.5, 3, 2, 41.0, 2.0, 5.0),
            (1.0, 1.0, 0.9, 0.5, -2, 1, 7.5, 0.8, 0.1),
        ];
        for (o1, o2, e1, e2, k1, m, t, p1, p2) in cases {
            let p = PulsePair::new(o1, o2, e1, e2, k1).unwrap().with_phases(p1, p2);
            let c = compute_coefficients(&p, m, t).unwrap();
            let (e, f) = block_oracle(&p, m, t);
            for i in 0..4 {
                assert!((c.e[i] - e[i]).norm() < 1e-12, "E{} {:?}", i + 1, (o1, e1, e2, k1, m, t));
                assert!((c.f[i] - f[i]).norm() < 1e-12, "F{} {:?}", i + 1, (o1, e1, e2, k1, m, t));
            }
            assert!(c.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn degenerate_branches_are_handled() {
        // alpha1 = 0 and alpha2 = gamma2 makes Delta vanish
        let p = PulsePair::new(0.0, 1.0, 0.0, 0.0, 1).unwrap();
        let c = compute_coefficients(&p, 0, 1.3).unwrap();
        assert!(c.delta.abs() < 1e-15);
        assert!(c.unitarity_defect() < 1e-14);
        assert!(matches!(printed_coefficients(&p, 0, 1.3), Err(Error::DegenerateBranches { .. })));
    }

    #[test]
    fn sideband_order_must_exceed_fock_index() {
        let p = PulsePair::new(1.0, 1.0, 0.5, 0.5, 1).unwrap();
        assert_eq!(compute_coefficients(&p, 1, 1.0).unwrap_err(), Error::InvalidSidebandOrder { k1: 1, m: 1 });
        let blue = PulsePair::new(1.0, 1.0, 0.5, 0.5, -2).unwrap();
        assert!(compute_coefficients(&blue, 1, 1.0).is_ok());
        assert!(compute_coefficients(&blue, 2, 1.0).is_err());
        assert!(PulsePair::new(1.0, 1.0, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn carrier_rows_at_gate_and_quarter_period() {
        let g = HilbertGeometry::new(4).unwrap();
        let p = regression_pulses();
        let out = evolve_basis(g, 0, Spin::G, Spin::G, &p, REGRESSION_OMEGA_TAU).unwrap();
        assert!((out.amplitude(0, Spin::G, Spin::G) - C64::new(1.0, 0.0)).norm() < 1e-4);

        let (_, a2, _) = p.couplings(0);
        let quarter = FRAC_PI_2 / a2;
        let out = evolve_basis(g, 0, Spin::G, Spin::E, &p, quarter).unwrap();
        assert!((out.amplitude(0, Spin::G, Spin::G) - (-I)).norm() < 1e-12);

        let out = evolve_basis(g, 0, Spin::E, Spin::G, &p, 0.0).unwrap();
        assert!((out.amplitude(0, Spin::E, Spin::G) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mixed_fock_components_are_rejected() {
        let g = HilbertGeometry::new(5).unwrap();
        let psi = StateVector::superposition(
            g,
            &[(C64::new(1.0, 0.0), 0, Spin::E, Spin::G), (C64::new(1.0, 0.0), 1, Spin::G, Spin::G)],
        )
        .unwrap();
        let err = evolve(&psi, &regression_pulses(), 1.0).unwrap_err();
        assert_eq!(err, Error::InvalidSidebandOrder { k1: 1, m: 1 });
    }

    #[test]
    fn carrier_rotation_examples() {
        let g = HilbertGeometry::new(3).unwrap();
        let psi = StateVector::basis(g, 0, Spin::G, Spin::G).unwrap();
        let pulse = CarrierPulse { ion: Ion::One, omega: 1.0, eta: 0.4, phi: 0.0 };
        let a = generalized_rabi(&CouplingSpec::new(1.0, 0.4, 0, 0));
        let out = carrier_rotation(&psi, &pulse, PI / 4.0 / a);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(0, Spin::G, Spin::G) - C64::new(h, 0.0)).norm() < 1e-14);
        assert!((out.amplitude(0, Spin::E, Spin::G) - C64::new(0.0, -h)).norm() < 1e-14);

        assert_eq!(carrier_rotation(&psi, &pulse, 0.0), psi);

        let pulse = CarrierPulse { phi: 0.7, ..pulse };
        let flip = carrier_rotation(&psi, &pulse, FRAC_PI_2 / a);
        let expected = -I * C64::from_polar(1.0, -0.7);
        assert!((flip.amplitude(0, Spin::E, Spin::G) - expected).norm() < 1e-14);
        assert!(flip.amplitude(0, Spin::G, Spin::G).norm() < 1e-14);
    }

    #[test]
    fn printed_report_flags_the_broken_coefficients() {
        let samples: Vec<_> = [(0.7, 1.1, 3.3), (REGRESSION_ETA1, REGRESSION_ETA2, 20.0), (1.3, 0.4, 10.0)]
            .iter()
            .map(|&(e1, e2, t)| (PulsePair::new(1.0, 1.0, e1, e2, 1).unwrap().with_phases(0.3, 0.7), 0, t))
            .collect();
        let report = printed_discrepancy_report(&samples).unwrap();
        assert_eq!(report.samples, 3);
        let failing = report.failing(1e-6);
        assert!(failing.contains(&"E1"));
        assert!(!failing.contains(&"E3") && !failing.contains(&"F1") && !failing.contains(&"F4"));
        assert!(report.closed_form_worst_unitarity < 1e-12);
        assert!(report.printed_worst_unitarity > 1e-3);
        assert!(report.to_string().contains("E1"));
    }
}
