use ldgate_core::algebra::{HilbertGeometry, Spin, StateVector};
use ldgate_core::gate::{solve_gate, GateCondition, ResonanceIntegers, SolverOptions};
use ldgate_core::oracle::{
    effective_hamiltonian, integrate, FOperator, HamiltonianSource, IntegrationMethod, IntegratorConfig, SpectatorMode,
};
use ldgate_core::algebra::hermitian_defect;
use ldgate_core::propagator::PulsePair;
use proptest::prelude::*;

fn rwa_infidelity(p: &PulsePair, ratio: f64, t: f64) -> f64 {
    let g = HilbertGeometry::new(24).unwrap();
    let psi = StateVector::basis(g, 0, Spin::E, Spin::G).unwrap();
    let cfg = IntegratorConfig { leak_tolerance: 1e-5, ..Default::default() };
    let eff = integrate(&HamiltonianSource::effective(*p), &psi, t, &cfg).unwrap();
    let full = integrate(&HamiltonianSource::full(*p, 1.0 / ratio), &psi, t, &cfg).unwrap();
    1.0 - eff.fidelity(&full).unwrap()
}

#[test]
fn rwa_error_grows_with_drive_strength() {
    let p = PulsePair::new(1.0, 1.0, 0.7, 1.1, 1).unwrap().with_phases(0.3, 0.7);
    let ratios = [0.005, 0.01, 0.05, 0.1, 0.2];
    let curve: Vec<f64> = ratios.iter().map(|&r| rwa_infidelity(&p, r, 10.0)).collect();
    assert!(curve.windows(2).all(|w| w[0] < w[1]), "{curve:?}");
    assert!(curve[4] > 1e-3);
    assert!(curve[1] < 1e-3);
}

#[test]
fn spectator_stays_in_vacuum_but_rescales_couplings() {
    let ints = ResonanceIntegers::new(1, 1, 1).unwrap();
    let gate = solve_gate(1, 0, 1.0, ints, (1.8, 1.2), GateCondition::Exact, &SolverOptions::default()).unwrap();
    let p = gate.pulses(0.2, 0.5).unwrap();
    let mode = SpectatorMode::placeholder(3f64.sqrt(), &p, 5).unwrap();
    let g = HilbertGeometry::with_spectators(20, 1, 5).unwrap();
    let psi = StateVector::basis(g, 0, Spin::E, Spin::G).unwrap();
    let cfg = IntegratorConfig { leak_tolerance: 1e-5, ..Default::default() };

    let full = HamiltonianSource::Full { pulses: p, trap_frequency: 100.0, spectators: vec![mode] };
    let with_mode = integrate(&full, &psi, gate.omega_tau, &cfg).unwrap();
    let excited: f64 = (0..g.dim())
        .filter(|&i| g.label(i).spectators[0] > 0)
        .map(|i| with_mode.amplitudes()[i].norm_sqr())
        .sum();
    assert!(excited < 1e-3, "spectator population {excited}");

    let dressed = HamiltonianSource::Effective { pulses: p, spectators: vec![mode], f_operator: FOperator::Diagonal };
    let bare = HamiltonianSource::Effective { pulses: p, spectators: vec![mode], f_operator: FOperator::Identity };
    let dressed = integrate(&dressed, &psi, gate.omega_tau, &cfg).unwrap();
    let bare = integrate(&bare, &psi, gate.omega_tau, &cfg).unwrap();
    assert!(1.0 - with_mode.fidelity(&dressed).unwrap() < 1e-3);
    // dropping the Debye-Waller factor is not a small correction at these LD parameters
    assert!(1.0 - with_mode.fidelity(&bare).unwrap() > 1e-2);
}

#[test]
fn magnus_norm_drift_over_many_steps() {
    let p = PulsePair::new(1.0, 1.0, 0.4, 0.6, 1).unwrap();
    let g = HilbertGeometry::new(2).unwrap();
    let psi = StateVector::basis(g, 0, Spin::E, Spin::G).unwrap();
    let dt = 1e-3;
    let cfg = IntegratorConfig { dt: Some(dt), method: IntegrationMethod::Magnus4, leak_tolerance: 1.0, ..Default::default() };
    let out = integrate(&HamiltonianSource::full(p, 20.0), &psi, 1e5 * dt, &cfg).unwrap();
    assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn effective_hamiltonian_is_hermitian(e1 in 0.0..3.0f64, e2 in 0.0..3.0f64, ratio in 0.1..2.0f64,
                                          k1 in prop::sample::select(vec![1, 2, 3, -1, -2]), p1 in 0.0..6.3f64, p2 in 0.0..6.3f64) {
        let p = PulsePair::new(ratio, 1.0, e1, e2, k1).unwrap().with_phases(p1, p2);
        let h = effective_hamiltonian(&p, &HilbertGeometry::new(12).unwrap()).unwrap();
        prop_assert!(hermitian_defect(h.entries()) < 1e-12);
    }
}
