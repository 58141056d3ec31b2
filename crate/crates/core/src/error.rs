use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock index {index} outside truncation 0..={m_max}")]
    FockOutOfRange { index: usize, m_max: usize },

    #[error("invalid Hilbert-space geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroState,

    #[error("operator is not Hermitian (max |A - A^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),

    #[error("population {leak:.3e} in the top Fock levels exceeds tolerance {tolerance:.3e}")]
    TruncationLeak { leak: f64, tolerance: f64 },

    #[error("sideband order k1 = {k1} is not solvable for Fock index m = {m} (need |k1| > m)")]
    InvalidSidebandOrder { k1: i32, m: usize },

    #[error("degenerate branches (Delta/Lambda = {ratio:.3e}); the printed coefficients divide by Delta")]
    DegenerateBranches { ratio: f64 },

    #[error("integrator did not converge: {0}")]
    NonConvergence(String),

    #[error("gate solver did not converge: {0}")]
    SolverFailed(String),

    #[error("singular Jacobian at (eta1, eta2) = ({eta1:.6}, {eta2:.6})")]
    SingularJacobian { eta1: f64, eta2: f64 },

    #[error("gate condition residual {residual:.3e} above tolerance {tolerance:.3e}")]
    GateResidual { residual: f64, tolerance: f64 },

    #[error("motional bus stays entangled with the spins (largest Schmidt weight {weight:.9})")]
    BusEntangled { weight: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
