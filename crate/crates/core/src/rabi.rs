//! Sideband Rabi couplings beyond the Lamb-Dicke limit and the geometric
//! Lamb-Dicke parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Default threshold for `(m + 1/2) eta^2 << 1`.
pub const LD_REGIME_THRESHOLD: f64 = 0.1;

/// One laser-ion coupling: strength `Ω`, LD parameter `η`, bus Fock index
/// `m` and sideband order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub rabi_strength: f64,
    pub ld_parameter: f64,
    pub fock_index: usize,
    pub sideband_order: usize,
}

impl CouplingSpec {
    pub fn new(rabi_strength: f64, ld_parameter: f64, fock_index: usize, sideband_order: usize) -> Self {
        CouplingSpec { rabi_strength, ld_parameter, fock_index, sideband_order }
    }
}

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` by the three-term recurrence.
pub fn assoc_laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(m! / (m+k)!)`, summed term by term so large `m + k` never overflows.
fn ln_factorial_ratio(m: usize, k: usize) -> f64 {
    -((m + 1)..=(m + k)).map(|j| (j as f64).ln()).sum::<f64>()
}

/// `Ω_{m,k} = (Ω/2) e^{-η²/2} η^k sqrt(m!/(m+k)!) L_m^(k)(η²)`.
///
/// Real, and negative where the Laguerre polynomial is; the `i^k` and laser
/// phases are carried by the propagator.
pub fn generalized_rabi(spec: &CouplingSpec) -> f64 {
    let CouplingSpec { rabi_strength, ld_parameter: eta, fock_index: m, sideband_order: k } = *spec;
    let x = eta * eta;
    let lag = assoc_laguerre(m, k as f64, x);
    if k == 0 {
        return 0.5 * rabi_strength * (-0.5 * x).exp() * lag;
    }
    if eta == 0.0 {
        return 0.0;
    }
    // combine the exponentials in log space; matters once m + k passes ~170
    let log_mag = -0.5 * x + k as f64 * eta.abs().ln() + 0.5 * ln_factorial_ratio(m, k);
    let sign = if eta < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    0.5 * rabi_strength * sign * log_mag.exp() * lag
}

/// Laser/trap geometry entering the Lamb-Dicke parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserGeometry {
    /// rad/m
    pub wavenumber: f64,
    /// angle between wave vector and trap axis, rad
    pub angle: f64,
    /// kg
    pub ion_mass: f64,
    pub ion_count: usize,
    /// rad/s
    pub trap_frequency: f64,
}

/// `η = sqrt(ħ κ² / (2 M N ν)) cos θ`.
pub fn ld_parameter(geom: &LaserGeometry) -> Result<f64> {
    let LaserGeometry { wavenumber, angle, ion_mass, ion_count, trap_frequency } = *geom;
    if !(wavenumber > 0.0 && ion_mass > 0.0 && trap_frequency > 0.0) || ion_count < 2 {
        return Err(Error::InvalidParameter(format!("laser geometry must be positive with N >= 2: {geom:?}")));
    }
    if !(0.0..=std::f64::consts::PI).contains(&angle) {
        return Err(Error::InvalidParameter(format!("angle {angle} outside [0, pi]")));
    }
    let scale = (HBAR * wavenumber * wavenumber / (2.0 * ion_mass * ion_count as f64 * trap_frequency)).sqrt();
    // cos(pi/2) is 6e-17 in floating point; the orthogonal beam must give exactly zero
    let c = if angle == std::f64::consts::FRAC_PI_2 { 0.0 } else { angle.cos() };
    Ok(scale * c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdRegime {
    pub within: bool,
    /// `(m + 1/2) η²`
    pub margin: f64,
}

pub fn ld_regime_check(eta: f64, m: usize) -> LdRegime {
    ld_regime_check_with(eta, m, LD_REGIME_THRESHOLD)
}

pub fn ld_regime_check_with(eta: f64, m: usize, threshold: f64) -> LdRegime {
    let margin = (m as f64 + 0.5) * eta * eta;
    LdRegime { within: margin < threshold, margin }
}
