//! Shared inputs for the kernel benchmarks.

use ldgate_core::algebra::{HilbertGeometry, Spin, StateVector};
use ldgate_core::gate::{solve_gate, SolverOptions};
use ldgate_core::{GateCondition, GateSolution, PulsePair, ResonanceIntegers, C64};

pub fn regression_gate() -> GateSolution {
    let ints = ResonanceIntegers::new(1, 2, 1).expect("valid integers");
    solve_gate(1, 0, 1.0, ints, (2.2, 1.7), GateCondition::Printed, &SolverOptions::default()).expect("gate converges")
}

pub fn regression_pulses() -> PulsePair {
    regression_gate().pulses(0.0, 0.0).expect("valid pulses")
}

/// Equal superposition of the four spin states with the bus in `|0>`.
pub fn spin_superposition(k1: i32) -> StateVector {
    let geometry = HilbertGeometry::default_for(0, k1);
    let terms: Vec<_> = [(Spin::G, Spin::G), (Spin::G, Spin::E), (Spin::E, Spin::G), (Spin::E, Spin::E)]
        .iter()
        .map(|&(a, b)| (C64::new(0.5, 0.0), 0, a, b))
        .collect();
    StateVector::superposition(geometry, &terms).expect("valid state")
}
