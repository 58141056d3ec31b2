//! Two-ion conditional gates driven beyond the Lamb-Dicke limit.

pub mod algebra;
pub mod entangle;
pub mod error;
pub mod gate;
pub mod oracle;
pub mod physical;
pub mod propagator;
pub mod rabi;
pub mod sweep;

pub use num_complex::Complex64 as C64;

pub use algebra::{CMatrix, CVector, HilbertGeometry, OperatorMatrix, Spin, StateVector};
pub use error::{Error, Result};
pub use gate::{GateCondition, GateParameters, GateSolution, ProbabilityMetric, ResonanceIntegers, SolverOptions};
pub use propagator::{AnalyticCoefficients, CarrierPulse, CoefficientForm, Ion, PulsePair};
pub use rabi::{generalized_rabi, CouplingSpec};
pub use sweep::SweepResult;
pub use entangle::{EntanglementRecipe, EprState};
pub use oracle::{HamiltonianSource, IntegratorConfig, SpectatorMode};
