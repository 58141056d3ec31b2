//! Experiment configuration: TOML with one section per concern, or the
//! `config` object of a previous `summary.json`.

use std::path::{Path, PathBuf};

use ldgate_core::gate::{ScanConfig, SweepParameter};
use ldgate_core::oracle::IntegrationMethod;
use ldgate_core::{GateCondition, PulsePair, SolverOptions, Spin};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveGate,
    Evolve,
    Sweep,
    Entangle,
    ValidateRwa,
    ScanIntegers,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveGate => "solve-gate",
            Mode::Evolve => "evolve",
            Mode::Sweep => "sweep",
            Mode::Entangle => "entangle",
            Mode::ValidateRwa => "validate-rwa",
            Mode::ScanIntegers => "scan-integers",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub output: OutputSection,
    pub run: RunSection,
    pub gate: GateSection,
    pub solver: SolverOptions,
    pub scan: ScanSection,
    pub sweep: SweepSection,
    pub evolve: EvolveSection,
    pub entangle: EntangleSection,
    pub rwa: RwaSection,
    pub tolerances: ToleranceSection,
    /// Explicit pulse pair for `evolve` and `validate-rwa`; the solved gate is
    /// used when absent.
    pub pulses: Option<PulsePair>,
    pub dimensionless: Option<DimensionlessSection>,
    pub physical: Option<PhysicalSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("ldgate-out"), plots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub jobs: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { jobs: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub k1: i32,
    pub m: usize,
    pub omega_ratio: f64,
    pub p: u32,
    pub q_plus: u32,
    pub q_minus: u32,
    pub seed_eta1: f64,
    pub seed_eta2: f64,
    pub condition: GateCondition,
    pub phi1: f64,
    pub phi2: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            k1: 1,
            m: 0,
            omega_ratio: 1.0,
            p: 1,
            q_plus: 2,
            q_minus: 1,
            seed_eta1: 2.2,
            seed_eta2: 1.7,
            condition: GateCondition::Printed,
            phi1: 0.0,
            phi2: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub k1_values: Vec<i32>,
    pub p_max: u32,
    pub q_max: u32,
    pub seeds_per_axis: usize,
    pub seed_min: f64,
    pub seed_max: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let d = ScanConfig::default();
        ScanSection {
            k1_values: d.k1_values,
            p_max: d.p_max,
            q_max: d.q_max,
            seeds_per_axis: d.seeds_per_axis,
            seed_min: d.seed_range.0,
            seed_max: d.seed_range.1,
        }
    }
}

/// Either `values`, or `start`/`stop`/`steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { parameter: SweepParameter::OmegaTau, values: Vec::new(), start: None, stop: None, steps: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub m: usize,
    pub s1: Spin,
    pub s2: Spin,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn one() -> f64 {
    1.0
}

fn excited_control() -> Vec<Amplitude> {
    vec![Amplitude { m: 0, s1: Spin::E, s2: Spin::G, re: 1.0, im: 0.0 }]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    #[default]
    None,
    Effective,
    Full,
}

/// Time grid: `times`, or `t_final` with `steps` points from 0, or
/// `durations_s` (needs `[physical]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub times: Vec<f64>,
    pub t_final: Option<f64>,
    pub steps: usize,
    pub durations_s: Vec<f64>,
    pub initial: Vec<Amplitude>,
    pub oracle: OracleChoice,
    pub method: IntegrationMethod,
    pub m_max: Option<usize>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            times: Vec::new(),
            t_final: None,
            steps: 0,
            durations_s: Vec::new(),
            initial: excited_control(),
            oracle: OracleChoice::None,
            method: IntegrationMethod::Exponential,
            m_max: None,
        }
    }
}

/// Rotation angles `α̃₁t₁`; `steps` evenly spaced points on `[0, π/2]` when
/// `angles` is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntangleSection {
    pub angles: Vec<f64>,
    pub steps: usize,
}

impl Default for EntangleSection {
    fn default() -> Self {
        EntangleSection { angles: Vec::new(), steps: 51 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwaSection {
    /// `Ω₂/ν` values.
    pub omega_over_nu: Vec<f64>,
    /// Defaults to the gate duration.
    pub t_final: Option<f64>,
    pub initial: Vec<Amplitude>,
}

impl Default for RwaSection {
    fn default() -> Self {
        RwaSection { omega_over_nu: vec![0.005, 0.01, 0.05, 0.1, 0.2], t_final: None, initial: excited_control() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    /// Population allowed in the top two Fock levels of an oracle run.
    pub leak: f64,
    /// Analytic vs effective-Hamiltonian infidelity treated as an oracle failure.
    pub analytic_oracle: f64,
    /// Analytic vs full-Hamiltonian infidelity treated as an oracle failure in `evolve`.
    pub full_oracle: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection { leak: 1e-8, analytic_oracle: 1e-6, full_oracle: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessSection {
    /// `Ω₂/ν`.
    pub omega_over_nu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    /// `Ω₂/2π` in Hz.
    pub rabi_hz: f64,
    /// `ν/2π` in Hz.
    pub trap_hz: f64,
}

#[derive(Deserialize)]
struct SummaryEnvelope {
    config: ExperimentConfig,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let env: SummaryEnvelope = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(env.config)
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CliError::Config(format!("{name} contains {v}"))),
        None => Ok(()),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ExperimentConfig {
    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::SolveGate)
    }

    /// `Ω₂/ν` from whichever parameter block is present; 0.01 by default.
    pub fn omega_over_nu(&self) -> f64 {
        match (self.dimensionless, self.physical) {
            (Some(d), _) => d.omega_over_nu,
            (None, Some(p)) => p.rabi_hz / p.trap_hz,
            (None, None) => 0.01,
        }
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            k1_values: self.scan.k1_values.clone(),
            m: self.gate.m,
            omega_ratio: self.gate.omega_ratio,
            p_max: self.scan.p_max,
            q_max: self.scan.q_max,
            seeds_per_axis: self.scan.seeds_per_axis,
            seed_range: (self.scan.seed_min, self.scan.seed_max),
            condition: self.gate.condition,
            solver: self.solver,
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        let s = &self.sweep;
        if !s.values.is_empty() {
            return s.values.clone();
        }
        match (s.start, s.stop) {
            (Some(a), Some(b)) => linspace(a, b, s.steps),
            _ => Vec::new(),
        }
    }

    /// Dimensionless evolution times.
    pub fn evolve_times(&self) -> Vec<f64> {
        let e = &self.evolve;
        if !e.times.is_empty() {
            e.times.clone()
        } else if let Some(t) = e.t_final {
            linspace(0.0, t, e.steps)
        } else if let Some(p) = self.physical {
            e.durations_s.iter().map(|s| std::f64::consts::TAU * p.rabi_hz * s).collect()
        } else {
            Vec::new()
        }
    }

    pub fn entangle_angles(&self) -> Vec<f64> {
        if self.entangle.angles.is_empty() {
            linspace(0.0, std::f64::consts::FRAC_PI_2, self.entangle.steps)
        } else {
            self.entangle.angles.clone()
        }
    }

    /// Checks everything that can be checked without running the experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dimensionless.is_some() && self.physical.is_some() {
            return Err(CliError::Config("[dimensionless] and [physical] are mutually exclusive".into()));
        }
        if let Some(d) = self.dimensionless {
            positive("dimensionless.omega_over_nu", d.omega_over_nu)?;
        }
        if let Some(p) = self.physical {
            positive("physical.rabi_hz", p.rabi_hz)?;
            positive("physical.trap_hz", p.trap_hz)?;
        }
        if self.run.jobs == 0 {
            return Err(CliError::Config("run.jobs must be at least 1".into()));
        }
        let t = &self.tolerances;
        positive("tolerances.leak", t.leak)?;
        positive("tolerances.analytic_oracle", t.analytic_oracle)?;
        positive("tolerances.full_oracle", t.full_oracle)?;
        let s = &self.solver;
        positive("solver.tolerance", s.tolerance)?;
        positive("solver.fd_step", s.fd_step)?;
        positive("solver.residual_tolerance", s.residual_tolerance)?;
        if s.max_iterations == 0 {
            return Err(CliError::Config("solver.max_iterations must be at least 1".into()));
        }
        let g = &self.gate;
        positive("gate.omega_ratio", g.omega_ratio)?;
        finite("gate seeds and phases", &[g.seed_eta1, g.seed_eta2, g.phi1, g.phi2])?;
        if g.k1 == 0 {
            return Err(CliError::Config("gate.k1 must be nonzero".into()));
        }
        if g.p == 0 {
            return Err(CliError::Config("gate.p must be at least 1".into()));
        }
        if let Some(p) = &self.pulses {
            p.validate().map_err(|e| CliError::Config(format!("[pulses]: {e}")))?;
        }
        match self.mode() {
            Mode::SolveGate => {}
            Mode::ScanIntegers => {
                let s = &self.scan;
                if s.k1_values.is_empty() || s.seeds_per_axis == 0 || s.p_max == 0 {
                    return Err(CliError::Config("integer scan grid is empty".into()));
                }
                if s.k1_values.contains(&0) {
                    return Err(CliError::Config("scan.k1_values must be nonzero".into()));
                }
                if !(s.seed_min < s.seed_max) {
                    return Err(CliError::Config("scan.seed_min must be below scan.seed_max".into()));
                }
            }
            Mode::Sweep => {
                let s = &self.sweep;
                if !s.values.is_empty() && (s.start.is_some() || s.stop.is_some()) {
                    return Err(CliError::Config("give either sweep.values or sweep.start/stop, not both".into()));
                }
                let v = self.sweep_values();
                if v.is_empty() {
                    return Err(CliError::Config("sweep grid is empty".into()));
                }
                finite("sweep values", &v)?;
            }
            Mode::Evolve => {
                let e = &self.evolve;
                let sources =
                    [!e.times.is_empty(), e.t_final.is_some(), !e.durations_s.is_empty()].iter().filter(|&&b| b).count();
                if sources > 1 {
                    return Err(CliError::Config("give exactly one of evolve.times, evolve.t_final, evolve.durations_s".into()));
                }
                if !e.durations_s.is_empty() && self.physical.is_none() {
                    return Err(CliError::Config("evolve.durations_s needs a [physical] block".into()));
                }
                let times = self.evolve_times();
                if times.is_empty() {
                    return Err(CliError::Config("evolution time grid is empty".into()));
                }
                finite("evolution times", &times)?;
                if times.iter().any(|&t| t < 0.0) {
                    return Err(CliError::Config("evolution times must be non-negative".into()));
                }
                if e.initial.is_empty() {
                    return Err(CliError::Config("evolve.initial is empty".into()));
                }
            }
            Mode::Entangle => {
                let a = self.entangle_angles();
                if a.is_empty() {
                    return Err(CliError::Config("entangle angle grid is empty".into()));
                }
                finite("entangle angles", &a)?;
            }
            Mode::ValidateRwa => {
                let r = &self.rwa;
                if r.omega_over_nu.is_empty() {
                    return Err(CliError::Config("rwa.omega_over_nu is empty".into()));
                }
                for &x in &r.omega_over_nu {
                    positive("rwa.omega_over_nu", x)?;
                }
                if let Some(t) = r.t_final {
                    positive("rwa.t_final", t)?;
                }
                if r.initial.is_empty() {
                    return Err(CliError::Config("rwa.initial is empty".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 (first 16 hex digits) of everything that affects results;
    /// output location and worker count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.run = RunSection::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let c: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.mode(), Mode::SolveGate);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[gate]\nk2 = 1\n").is_err());
    }

    #[test]
    fn parameter_blocks_are_exclusive() {
        let c: ExperimentConfig = toml::from_str(
            "[dimensionless]\nomega_over_nu = 0.01\n[physical]\nrabi_hz = 1e5\ntrap_hz = 1e7\n",
        )
        .unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_and_jobs() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.run.jobs = 4;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.gate.seed_eta1 = 2.3;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn sweep_grid_from_range() {
        let c: ExperimentConfig =
            toml::from_str("mode = \"sweep\"\n[sweep]\nstart = 56.0\nstop = 56.3\nsteps = 4\n").unwrap();
        let v = c.sweep_values();
        assert_eq!(v.len(), 4);
        assert!((v[3] - 56.3).abs() < 1e-12);
        c.validate().unwrap();
    }
}
