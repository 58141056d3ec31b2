use std::path::PathBuf;

use ldgate_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("oracle disagreement: infidelity {infidelity:.3e} exceeds {tolerance:.1e} ({what})")]
    OracleMismatch { what: String, infidelity: f64, tolerance: f64 },
    #[error("no gate solution found: {0}")]
    NoSolution(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Broad outcome classes, each with its own exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    InvalidConfig,
    NonConvergence,
    Oracle,
    Io,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::InvalidConfig => 2,
            Failure::NonConvergence => 3,
            Failure::Oracle => 4,
            Failure::Io => 1,
        }
    }

    pub fn status(self) -> &'static str {
        match self {
            Failure::InvalidConfig => "invalid-config",
            Failure::NonConvergence => "non-convergence",
            Failure::Oracle => "oracle-failure",
            Failure::Io => "io-error",
        }
    }
}

impl CliError {
    pub fn failure(&self) -> Failure {
        match self {
            CliError::Config(_) => Failure::InvalidConfig,
            CliError::NoSolution(_) => Failure::NonConvergence,
            CliError::OracleMismatch { .. } => Failure::Oracle,
            CliError::Io { .. } => Failure::Io,
            CliError::Core(e) => match e {
                CoreError::NonConvergence(_)
                | CoreError::SolverFailed(_)
                | CoreError::SingularJacobian { .. }
                | CoreError::GateResidual { .. } => Failure::NonConvergence,
                CoreError::TruncationInsufficient(_)
                | CoreError::TruncationLeak { .. }
                | CoreError::NotHermitian(_)
                | CoreError::BusEntangled { .. } => Failure::Oracle,
                _ => Failure::InvalidConfig,
            },
        }
    }
}
