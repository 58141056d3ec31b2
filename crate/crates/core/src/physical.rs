//! Conversion between laboratory frequencies and the dimensionless units used
//! everywhere else (frequencies in units of Ω, times as `Ωτ`).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Ω/ν` above which the effective Hamiltonian is not trusted.
pub const WEAK_EXCITATION_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConversion {
    pub omega_over_nu: f64,
    pub omega_tau: f64,
    /// Seconds.
    pub duration: f64,
    pub weak_excitation: bool,
}

/// `rabi_hz = Ω/2π` and `trap_hz = ν/2π` in Hz; `omega_tau` dimensionless.
pub fn convert_physical(rabi_hz: f64, trap_hz: f64, omega_tau: f64) -> Result<PhysicalConversion> {
    if !(rabi_hz > 0.0 && trap_hz > 0.0) || !rabi_hz.is_finite() || !trap_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "frequencies must be positive, got Omega/2pi={rabi_hz} Hz, nu/2pi={trap_hz} Hz"
        )));
    }
    if !(omega_tau >= 0.0) || !omega_tau.is_finite() {
        return Err(Error::InvalidParameter(format!("Omega*tau must be non-negative, got {omega_tau}")));
    }
    let omega_over_nu = rabi_hz / trap_hz;
    Ok(PhysicalConversion {
        omega_over_nu,
        omega_tau,
        duration: omega_tau / (TAU * rabi_hz),
        weak_excitation: omega_over_nu < WEAK_EXCITATION_LIMIT,
    })
}

/// `Ωt` for a duration in seconds.
pub fn dimensionless_time(rabi_hz: f64, seconds: f64) -> Result<f64> {
    if !(rabi_hz > 0.0) || !seconds.is_finite() || seconds < 0.0 {
        return Err(Error::InvalidParameter(format!("bad conversion inputs {rabi_hz} Hz, {seconds} s")));
    }
    Ok(TAU * rabi_hz * seconds)
}
