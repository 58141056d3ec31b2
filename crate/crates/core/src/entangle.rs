//! Entangling recipe: a carrier rotation of ion 1 followed by the controlled
//! gate, starting from `|m>|g₁>|g₂>`.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{HilbertGeometry, Spin, StateVector};
use crate::error::{Error, Result};
use crate::gate::GateSolution;
use crate::propagator::{carrier_rotation, evolve, CarrierPulse, Ion};
use crate::rabi::{generalized_rabi, CouplingSpec};

/// Smallest acceptable largest Schmidt weight of the bus/spin split.
pub const BUS_FACTORIZATION_TOLERANCE: f64 = 1e-6;

/// Largest gate residual accepted by [`prepare_entangled`].
pub const GATE_RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementRecipe {
    /// Duration of the carrier rotation, units of `1/Ω₂`.
    pub t1: f64,
    /// Laser phase on ion 1, shared by the rotation and the gate pulse.
    pub phi1: f64,
    pub phi2: f64,
    pub gate: GateSolution,
    pub initial_m: usize,
}

impl EntanglementRecipe {
    /// Carrier Rabi frequency `α̃₁` of the rotation pulse.
    pub fn rotation_rabi(&self) -> f64 {
        generalized_rabi(&CouplingSpec::new(self.gate.omega_ratio, self.gate.eta1, self.initial_m, 0))
    }

    /// `t₁` giving `α̃₁t₁ = angle`.
    pub fn with_rotation_angle(mut self, angle: f64) -> Self {
        self.t1 = angle / self.rotation_rabi();
        self
    }

    /// `(U, V)` of `U|g₁g₂> + V|e₁e₂>`:
    /// `U = cos(α̃₁t₁)`, `V = -sign(s) e^{-i(φ₁+φ₂)} sin(α̃₁t₁)`.
    pub fn predicted_amplitudes(&self) -> Result<(C64, C64)> {
        let pulses = self.gate.pulses(self.phi1, self.phi2)?;
        let (_, a2, g2) = pulses.couplings(self.initial_m);
        let sign = if a2 + g2 < 0.0 { -1.0 } else { 1.0 };
        let theta = self.rotation_rabi() * self.t1;
        Ok((
            C64::new(theta.cos(), 0.0),
            C64::from_polar(-sign * theta.sin(), -(self.phi1 + self.phi2)),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntangledState {
    pub state: StateVector,
    /// Normalized spin amplitudes (gg, ge, eg, ee) with the bus in `|m>`.
    pub spins: [C64; 4],
    /// Largest eigenvalue of the reduced spin density matrix.
    pub schmidt_weight: f64,
}

impl EntangledState {
    pub fn u(&self) -> C64 {
        self.spins[0]
    }

    pub fn v(&self) -> C64 {
        self.spins[3]
    }
}

pub fn prepare_entangled(recipe: &EntanglementRecipe) -> Result<EntangledState> {
    let gate = &recipe.gate;
    if gate.k1 < 0 {
        return Err(Error::InvalidParameter("the recipe needs a red-sideband gate (k1 > 0)".into()));
    }
    if gate.max_residual() > GATE_RESIDUAL_TOLERANCE {
        return Err(Error::GateResidual { residual: gate.max_residual(), tolerance: GATE_RESIDUAL_TOLERANCE });
    }
    if recipe.initial_m != gate.m {
        return Err(Error::InvalidParameter(format!(
            "recipe starts at m={} but the gate was solved for m={}",
            recipe.initial_m, gate.m
        )));
    }
    let geometry = HilbertGeometry::new(recipe.initial_m + gate.k1.unsigned_abs() as usize)?;
    let start = StateVector::basis(geometry, recipe.initial_m, Spin::G, Spin::G)?;
    let rotation = CarrierPulse { ion: Ion::One, omega: gate.omega_ratio, eta: gate.eta1, phi: recipe.phi1 };
    let rotated = carrier_rotation(&start, &rotation, recipe.t1);
    let state = evolve(&rotated, &gate.pulses(recipe.phi1, recipe.phi2)?, gate.omega_tau)?;

    let schmidt_weight = largest_eigenvalue(&state.reduced_spin_density());
    if schmidt_weight < 1.0 - BUS_FACTORIZATION_TOLERANCE {
        return Err(Error::BusEntangled { weight: schmidt_weight });
    }
    let raw = state.spin_amplitudes(recipe.initial_m);
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(EntangledState { state, spins: raw.map(|a| a / norm), schmidt_weight })
}

fn largest_eigenvalue(rho: &Matrix4<C64>) -> f64 {
    let sym = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `2|ad - bc|` of a pure two-qubit state; normalizes first.
pub fn concurrence(spins: &[C64; 4]) -> f64 {
    let norm: f64 = spins.iter().map(|a| a.norm_sqr()).sum();
    if norm == 0.0 {
        return 0.0;
    }
    (2.0 * (spins[0] * spins[3] - spins[1] * spins[2]).norm() / norm).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EprState {
    /// `(|gg> + |ee>)/√2`
    PsiPlus,
    /// `(|gg> - |ee>)/√2`
    PsiMinus,
}

impl EprState {
    pub fn amplitudes(self) -> [C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = match self {
            EprState::PsiPlus => h,
            EprState::PsiMinus => -h,
        };
        [C64::new(h, 0.0), C64::default(), C64::default(), C64::new(s, 0.0)]
    }
}

pub fn epr_fidelity(spins: &[C64; 4], which: EprState) -> f64 {
    let target = which.amplitudes();
    let norm: f64 = spins.iter().map(|a| a.norm_sqr()).sum();
    let overlap: C64 = target.iter().zip(spins).map(|(t, s)| t.conj() * s).sum();
    overlap.norm_sqr() / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{solve_gate, GateCondition, ResonanceIntegers, SolverOptions};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn exact_gate() -> GateSolution {
        let ints = ResonanceIntegers::new(1, 1, 0).unwrap();
        solve_gate(1, 0, 1.0, ints, (1.8, 0.7), GateCondition::Exact, &SolverOptions::default()).unwrap()
    }

    fn recipe(angle: f64, phi1: f64, phi2: f64) -> EntanglementRecipe {
        EntanglementRecipe { t1: 0.0, phi1, phi2, gate: exact_gate(), initial_m: 0 }.with_rotation_angle(angle)
    }

    #[test]
    fn concurrence_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [C64::new(h, 0.0), C64::default(), C64::default(), C64::new(h, 0.0)];
        assert!((concurrence(&bell) - 1.0).abs() < 1e-15);
        let product = [C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()];
        assert_eq!(concurrence(&product), 0.0);
        assert!((epr_fidelity(&bell, EprState::PsiPlus) - 1.0).abs() < 1e-15);
        assert!(epr_fidelity(&bell, EprState::PsiMinus) < 1e-15);
    }

    #[test]
    fn quarter_rotation_gives_psi_minus_with_matched_phases() {
        let out = prepare_entangled(&recipe(FRAC_PI_4, 0.0, 0.0)).unwrap();
        assert!((epr_fidelity(&out.spins, EprState::PsiMinus) - 1.0).abs() < 1e-8);
        assert!((concurrence(&out.spins) - 1.0).abs() < 1e-8);
        let plus = prepare_entangled(&recipe(FRAC_PI_4, 0.0, PI)).unwrap();
        assert!((epr_fidelity(&plus.spins, EprState::PsiPlus) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn matches_predicted_amplitudes() {
        for (angle, p1, p2) in [(FRAC_PI_6, 0.3, 1.1), (1.0, -0.4, 2.0), (FRAC_PI_2, 0.0, 0.0)] {
            let r = recipe(angle, p1, p2);
            let out = prepare_entangled(&r).unwrap();
            let (u, v) = r.predicted_amplitudes().unwrap();
            assert!((out.u() - u).norm() < 1e-8 && (out.v() - v).norm() < 1e-8, "{angle}");
            assert!((u.norm_sqr() + v.norm_sqr() - 1.0).abs() < 1e-12);
        }
        let sixth = prepare_entangled(&recipe(FRAC_PI_6, 0.0, 0.0)).unwrap();
        assert!((concurrence(&sixth.spins) - (PI / 3.0).sin()).abs() < 1e-8);
    }

    #[test]
    fn trivial_rotations_stay_separable() {
        let none = prepare_entangled(&recipe(0.0, 0.0, 0.0)).unwrap();
        assert!((none.spins[0].norm() - 1.0).abs() < 1e-8);
        assert!(concurrence(&none.spins) < 1e-8);
        let full = prepare_entangled(&recipe(FRAC_PI_2, 0.0, 0.0)).unwrap();
        assert!((full.spins[3].norm() - 1.0).abs() < 1e-8);
        assert!(concurrence(&full.spins) < 1e-8);
    }

    #[test]
    fn printed_gate_at_branch_sign_flip_leaves_bus_entangled() {
        let ints = ResonanceIntegers::new(1, 2, 1).unwrap();
        let gate = solve_gate(1, 0, 1.0, ints, (2.2, 1.7), GateCondition::Printed, &SolverOptions::default()).unwrap();
        let r = EntanglementRecipe { t1: 0.0, phi1: 0.0, phi2: 0.0, gate, initial_m: 0 }.with_rotation_angle(FRAC_PI_4);
        assert!(matches!(prepare_entangled(&r), Err(Error::BusEntangled { .. })));
    }
}
