//! Gate design: resonance conditions on the branch frequencies, their Newton
//! solution for `(η₁, η₂)`, the realized two-qubit map and its local
//! equivalence to CNOT.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{HilbertGeometry, Spin, StateVector, SPIN_PAIRS};
use crate::error::{Error, Result};
use crate::propagator::{block_spectrum, evolve, BlockSpectrum, PulsePair};
use crate::sweep::{Axis, SweepResult};

/// Integer freedom in the resonance conditions:
/// `|α̃₂|τ = 2πp`, `λ̃₊τ = 2πq₊ + π/2`, `λ̃₋τ = 2πq₋ ± π/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResonanceIntegers {
    pub p: u32,
    pub q_plus: u32,
    pub q_minus: u32,
}

impl ResonanceIntegers {
    pub fn new(p: u32, q_plus: u32, q_minus: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        Ok(ResonanceIntegers { p, q_plus, q_minus })
    }
}

/// Which form of the third condition to impose.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateCondition {
    /// `sin(λ̃₋τ) = 1` regardless of branch sign.
    #[default]
    Printed,
    /// `sin(σλ̃₋τ) = 1` with `σ = sign(α̃₂γ̃₂ - α₁²)`; this is what makes the
    /// bus return for every input.
    Exact,
}

/// Physical knobs of a gate: LD parameters, `Ω₁/Ω₂`, sideband order and bus index.
/// Rabi strengths are measured in units of `Ω₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParameters {
    pub eta1: f64,
    pub eta2: f64,
    pub omega_ratio: f64,
    pub k1: i32,
    pub m: usize,
}

impl GateParameters {
    pub fn pulses(&self, phi1: f64, phi2: f64) -> Result<PulsePair> {
        Ok(PulsePair::new(self.omega_ratio, 1.0, self.eta1, self.eta2, self.k1)?.with_phases(phi1, phi2))
    }

    fn spectrum(&self) -> Result<(f64, BlockSpectrum)> {
        let p = self.pulses(0.0, 0.0)?;
        p.require_solvable(self.m)?;
        let (a1, a2, g2) = p.couplings(self.m);
        Ok((a2, block_spectrum(a1, a2, g2)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSolution {
    pub eta1: f64,
    pub eta2: f64,
    pub omega_ratio: f64,
    pub k1: i32,
    pub m: usize,
    /// Duration in units of `1/Ω₂`.
    pub omega_tau: f64,
    pub integers: ResonanceIntegers,
    pub condition: GateCondition,
    /// `|cos(α̃₂τ) - 1|, |sin(λ̃₊τ) - 1|, |sin(±λ̃₋τ) - 1|`.
    pub residuals: [f64; 3],
    pub branch_sign: f64,
    pub iterations: usize,
}

impl GateSolution {
    pub fn parameters(&self) -> GateParameters {
        GateParameters { eta1: self.eta1, eta2: self.eta2, omega_ratio: self.omega_ratio, k1: self.k1, m: self.m }
    }

    pub fn pulses(&self, phi1: f64, phi2: f64) -> Result<PulsePair> {
        self.parameters().pulses(phi1, phi2)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// The three condition residuals at duration `omega_tau`.
pub fn condition_residuals(params: &GateParameters, omega_tau: f64, condition: GateCondition) -> Result<[f64; 3]> {
    let (a2, sp) = params.spectrum()?;
    let minus = match condition {
        GateCondition::Printed => sp.lambda_minus,
        GateCondition::Exact => sp.branch_sign * sp.lambda_minus,
    };
    Ok([
        ((a2 * omega_tau).cos() - 1.0).abs(),
        ((sp.lambda_plus * omega_tau).sin() - 1.0).abs(),
        ((minus * omega_tau).sin() - 1.0).abs(),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// On the norm of the two phase mismatches.
    pub tolerance: f64,
    pub fd_step: f64,
    /// Largest acceptable condition residual of the returned solution.
    pub residual_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 200, tolerance: 1e-10, fd_step: 1e-6, residual_tolerance: 1e-8 }
    }
}

struct PhaseProblem {
    k1: i32,
    m: usize,
    omega_ratio: f64,
    integers: ResonanceIntegers,
    condition: GateCondition,
}

impl PhaseProblem {
    fn params(&self, x: [f64; 2]) -> GateParameters {
        GateParameters { eta1: x[0], eta2: x[1], omega_ratio: self.omega_ratio, k1: self.k1, m: self.m }
    }

    /// `λ̃±τ` minus their targets, with `τ = 2πp/|α̃₂|`.
    fn mismatch(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let (a2, sp) = self.params(x).spectrum().ok()?;
        if a2 == 0.0 || !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let tau = TAU * self.integers.p as f64 / a2.abs();
        let sign = match self.condition {
            GateCondition::Printed => 1.0,
            GateCondition::Exact => sp.branch_sign,
        };
        let ResonanceIntegers { q_plus, q_minus, .. } = self.integers;
        Some([
            sp.lambda_plus * tau - (TAU * q_plus as f64 + FRAC_PI_2),
            sp.lambda_minus * tau - (TAU * q_minus as f64 + sign * FRAC_PI_2),
        ])
    }

    fn norm(&self, x: [f64; 2]) -> f64 {
        self.mismatch(x).map_or(f64::INFINITY, |f| f[0].hypot(f[1]))
    }

    fn jacobian(&self, x: [f64; 2], h: f64) -> Option<Matrix2<f64>> {
        let mut j = Matrix2::zeros();
        for axis in 0..2 {
            let (mut up, mut down) = (x, x);
            up[axis] += h;
            down[axis] -= h;
            let (fu, fd) = (self.mismatch(up)?, self.mismatch(down)?);
            for row in 0..2 {
                j[(row, axis)] = (fu[row] - fd[row]) / (2.0 * h);
            }
        }
        Some(j)
    }

    /// Golden-section minimization of the mismatch norm along one axis.
    fn axis_search(&self, x: [f64; 2], axis: usize, half_width: f64) -> [f64; 2] {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let at = |v: f64| {
            let mut y = x;
            y[axis] = v;
            y
        };
        let (mut lo, mut hi) = (x[axis] - half_width, x[axis] + half_width);
        for _ in 0..60 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if self.norm(at(a)) < self.norm(at(b)) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let best = at(0.5 * (lo + hi));
        if self.norm(best) < self.norm(x) { best } else { x }
    }
}

/// Iterates beyond this LD parameter are treated as divergent.
pub const MAX_LD_PARAMETER: f64 = 6.0;

/// Damped Newton solution of the resonance conditions for `(η₁, η₂)`.
pub fn solve_gate(
    k1: i32,
    m: usize,
    omega_ratio: f64,
    integers: ResonanceIntegers,
    seed: (f64, f64),
    condition: GateCondition,
    opts: &SolverOptions,
) -> Result<GateSolution> {
    ResonanceIntegers::new(integers.p, integers.q_plus, integers.q_minus)?;
    if !(omega_ratio > 0.0) || !omega_ratio.is_finite() {
        return Err(Error::InvalidParameter(format!("Rabi ratio {omega_ratio} must be positive")));
    }
    let problem = PhaseProblem { k1, m, omega_ratio, integers, condition };
    // validates k1 and m once up front
    problem.params([seed.0, seed.1]).spectrum()?;

    let mut x = [seed.0, seed.1];
    let mut f = problem.mismatch(x).ok_or_else(|| {
        Error::NonConvergence(format!("mismatch undefined at seed ({}, {})", seed.0, seed.1))
    })?;
    let mut iterations = 0;
    while f[0].hypot(f[1]) > opts.tolerance {
        if iterations == opts.max_iterations {
            return Err(Error::NonConvergence(format!(
                "{} Newton iterations left mismatch {:.3e} at eta = ({}, {})",
                opts.max_iterations,
                f[0].hypot(f[1]),
                x[0],
                x[1]
            )));
        }
        iterations += 1;
        let current = f[0].hypot(f[1]);
        let step = problem
            .jacobian(x, opts.fd_step)
            .filter(|j| j.determinant().abs() > 1e-12 * j.norm_squared().max(1e-300))
            .and_then(|j| j.try_inverse())
            .map(|inv| inv * nalgebra::Vector2::new(-f[0], -f[1]));

        let mut next = None;
        if let Some(step) = step {
            let mut damping = 1.0;
            while damping > 1e-4 {
                let trial = [x[0] + damping * step[0], x[1] + damping * step[1]];
                if problem.norm(trial) < current {
                    next = Some(trial);
                    break;
                }
                damping *= 0.5;
            }
        }
        let next = match (next, step) {
            (Some(n), _) => n,
            (None, Some(_)) => {
                return Err(Error::NonConvergence(format!(
                    "no descent from eta = ({}, {}), mismatch {current:.3e}",
                    x[0], x[1]
                )))
            }
            (None, None) => {
                let trial = problem.axis_search(problem.axis_search(x, 0, 0.05), 1, 0.05);
                if problem.norm(trial) >= current {
                    return Err(Error::SingularJacobian { eta1: x[0], eta2: x[1] });
                }
                trial
            }
        };
        if next.iter().any(|v| v.abs() > MAX_LD_PARAMETER) {
            return Err(Error::NonConvergence(format!(
                "iterate ({}, {}) left |eta| <= {MAX_LD_PARAMETER}",
                next[0], next[1]
            )));
        }
        x = next;
        f = problem.mismatch(x).expect("finite mismatch after a descent step");
    }

    let params = problem.params(x);
    let (a2, sp) = params.spectrum()?;
    let omega_tau = TAU * integers.p as f64 / a2.abs();
    let residuals = condition_residuals(&params, omega_tau, condition)?;
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > opts.residual_tolerance {
        return Err(Error::GateResidual { residual: worst, tolerance: opts.residual_tolerance });
    }
    Ok(GateSolution {
        eta1: x[0],
        eta2: x[1],
        omega_ratio,
        k1,
        m,
        omega_tau,
        integers,
        condition,
        residuals,
        branch_sign: sp.branch_sign,
        iterations,
    })
}

/// Bounds of the exhaustive integer scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub k1_values: Vec<i32>,
    pub m: usize,
    pub omega_ratio: f64,
    pub p_max: u32,
    pub q_max: u32,
    /// Seeds per axis, spread evenly over `seed_range`.
    pub seeds_per_axis: usize,
    pub seed_range: (f64, f64),
    pub condition: GateCondition,
    pub solver: SolverOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            k1_values: vec![1, 2, 3],
            m: 0,
            omega_ratio: 1.0,
            p_max: 6,
            q_max: 6,
            seeds_per_axis: 10,
            seed_range: (0.2, 3.8),
            condition: GateCondition::Printed,
            solver: SolverOptions::default(),
        }
    }
}

/// Every distinct solution reachable from the seed grid, reported with
/// non-negative LD parameters and sorted by duration.
pub fn scan_integers(cfg: &ScanConfig) -> Result<Vec<GateSolution>> {
    if cfg.seeds_per_axis == 0 || cfg.p_max == 0 || cfg.k1_values.is_empty() {
        return Err(Error::InvalidParameter("integer scan grid is empty".into()));
    }
    let (lo, hi) = cfg.seed_range;
    let n = cfg.seeds_per_axis;
    let seeds: Vec<f64> = (0..n)
        .map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    let mut tasks = Vec::new();
    for &k1 in &cfg.k1_values {
        for p in 1..=cfg.p_max {
            for q_plus in 0..=cfg.q_max {
                // λ̃₋ <= λ̃₊ rules out q₋ > q₊
                for q_minus in 0..=q_plus {
                    tasks.push((k1, ResonanceIntegers { p, q_plus, q_minus }));
                }
            }
        }
    }
    let found: Vec<Vec<GateSolution>> = tasks
        .par_iter()
        .map(|&(k1, ints)| {
            let mut local: Vec<GateSolution> = Vec::new();
            for &s1 in &seeds {
                for &s2 in &seeds {
                    let Ok(mut sol) = solve_gate(k1, cfg.m, cfg.omega_ratio, ints, (s1, s2), cfg.condition, &cfg.solver)
                    else {
                        continue;
                    };
                    sol.eta1 = sol.eta1.abs();
                    sol.eta2 = sol.eta2.abs();
                    let dup = local
                        .iter()
                        .any(|o| (o.eta1 - sol.eta1).abs() < 1e-6 && (o.eta2 - sol.eta2).abs() < 1e-6);
                    if !dup {
                        local.push(sol);
                    }
                }
            }
            local
        })
        .collect();
    let mut all: Vec<GateSolution> = found.into_iter().flatten().collect();
    all.sort_by(|a, b| {
        a.omega_tau
            .total_cmp(&b.omega_tau)
            .then(a.k1.cmp(&b.k1))
            .then(a.integers.cmp(&b.integers))
            .then(a.eta1.total_cmp(&b.eta1))
    });
    Ok(all)
}

/// Truncation used when evaluating gates through the closed form.
fn gate_geometry(m: usize, k1: i32) -> Result<HilbertGeometry> {
    HilbertGeometry::new(m + k1.unsigned_abs() as usize)
}

/// The gate as seen on the spin space with the bus in `|m>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealizedGate {
    /// `matrix[(out, in)]` in the order gg, ge, eg, ee.
    pub matrix: Matrix4<C64>,
    /// Probability that the bus is back in `|m>` for each input.
    pub bus_return: [f64; 4],
}

impl RealizedGate {
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.matrix.adjoint() * self.matrix - Matrix4::identity();
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Evolves the four inputs `|m, s₁, s₂>` for `omega_tau`.
pub fn realized_gate_at(params: &GateParameters, omega_tau: f64, phi1: f64, phi2: f64) -> Result<RealizedGate> {
    let pulses = params.pulses(phi1, phi2)?;
    let geometry = gate_geometry(params.m, params.k1)?;
    let mut matrix = Matrix4::zeros();
    let mut bus_return = [0.0; 4];
    for (col, &(s1, s2)) in SPIN_PAIRS.iter().enumerate() {
        let out = evolve(&StateVector::basis(geometry, params.m, s1, s2)?, &pulses, omega_tau)?;
        let amps = out.spin_amplitudes(params.m);
        for (row, a) in amps.iter().enumerate() {
            matrix[(row, col)] = *a;
        }
        bus_return[col] = amps.iter().map(|a| a.norm_sqr()).sum();
    }
    Ok(RealizedGate { matrix, bus_return })
}

pub fn realized_gate(solution: &GateSolution, phi1: f64, phi2: f64) -> Result<RealizedGate> {
    realized_gate_at(&solution.parameters(), solution.omega_tau, phi1, phi2)
}

/// The controlled gate an exact solution produces: identity when ion 1 sits
/// in the uncoupled state, `-i·sign(s)` times a phased flip otherwise, with
/// `s = (γ̃₂ + α̃₂)/2`.
pub fn ideal_gate(params: &GateParameters, phi2: f64) -> Result<Matrix4<C64>> {
    let pulses = params.pulses(0.0, phi2)?;
    let (_, a2, g2) = pulses.couplings(params.m);
    let sign = if a2 + g2 < 0.0 { -1.0 } else { 1.0 };
    let flip = C64::new(0.0, -sign);
    let mut g = Matrix4::zeros();
    // controlled block sits on e₁ for a red sideband, g₁ for a blue one
    let (idle, active) = if pulses.is_blue() { (2, 0) } else { (0, 2) };
    g[(idle, idle)] = C64::new(1.0, 0.0);
    g[(idle + 1, idle + 1)] = C64::new(1.0, 0.0);
    g[(active + 1, active)] = flip * C64::from_polar(1.0, -phi2);
    g[(active, active + 1)] = flip * C64::from_polar(1.0, phi2);
    Ok(g)
}

/// Local equivalence of a gate to CNOT:
/// `(diag(1, e^{iθ}) ⊗ post) · gate · (I ⊗ pre) ≈ CNOT`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CnotEquivalence {
    /// Phase on the control qubit.
    pub control_phase: f64,
    pub pre: Matrix2<C64>,
    pub post: Matrix2<C64>,
    pub residual: f64,
    /// Makhlin invariants `(G₁, G₂)`; CNOT has `(0, 1)`.
    pub makhlin: (C64, C64),
}

pub fn cnot() -> Matrix4<C64> {
    let one = C64::new(1.0, 0.0);
    let mut c = Matrix4::zeros();
    c[(0, 0)] = one;
    c[(1, 1)] = one;
    c[(2, 3)] = one;
    c[(3, 2)] = one;
    c
}

fn block(m: &Matrix4<C64>, r: usize) -> Matrix2<C64> {
    m.fixed_view::<2, 2>(r, r).into_owned()
}

/// Unitary polar factor of a 2x2 matrix.
fn polar_unitary(a: &Matrix2<C64>) -> Matrix2<C64> {
    let svd = a.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => Matrix2::identity(),
    }
}

fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Makhlin local invariants of a two-qubit unitary.
pub fn makhlin_invariants(u: &Matrix4<C64>) -> (C64, C64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, i) = (C64::new(h, 0.0), C64::new(0.0, h));
    let z = C64::default();
    #[rustfmt::skip]
    let q = Matrix4::new(
        o, i, z, z,
        z, z, i, o,
        z, z, i, -o,
        o, -i, z, z,
    );
    let ub = q.adjoint() * u * q;
    let m = ub.transpose() * ub;
    let det = u.determinant();
    let tr = m.trace();
    let tr2 = (m * m).trace();
    (tr * tr / (16.0 * det), (tr * tr - tr2) / (4.0 * det))
}

/// Builds the local corrections in closed form from the block structure and
/// reports how close the corrected gate is to CNOT. Never fails; a gate that
/// is not locally CNOT shows up as a large residual.
pub fn cnot_equivalence(gate: &Matrix4<C64>, phi2: f64) -> CnotEquivalence {
    let pre = Matrix2::from_diagonal(&nalgebra::Vector2::new(C64::new(1.0, 0.0), C64::from_polar(1.0, -phi2)));
    let w_idle = block(gate, 0);
    let w_active = block(gate, 2);
    let post = pre.adjoint() * polar_unitary(&w_idle).adjoint();
    let b = post * w_active * pre;
    let control_phase = -(b[(0, 1)] + b[(1, 0)]).arg();
    let control = Matrix2::from_diagonal(&nalgebra::Vector2::new(C64::new(1.0, 0.0), C64::from_polar(1.0, control_phase)));
    let corrected = kron2(&control, &post) * gate * kron2(&Matrix2::identity(), &pre);
    let residual = (corrected - cnot()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    CnotEquivalence { control_phase, pre, post, residual, makhlin: makhlin_invariants(gate) }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMetric {
    /// `min(cos²(α̃₂τ), sin²(λ̃₊τ), sin²(λ̃₋τ))`, the three condition factors.
    #[default]
    ConditionFactors,
    /// Minimum over the four spin inputs (bus in `|m>`) of the squared
    /// overlap with the ideal image.
    BasisOverlap,
}

pub fn success_probability_at(
    params: &GateParameters,
    omega_tau: f64,
    metric: ProbabilityMetric,
) -> Result<f64> {
    match metric {
        ProbabilityMetric::ConditionFactors => {
            let (a2, sp) = params.spectrum()?;
            Ok([
                (a2 * omega_tau).cos().powi(2),
                (sp.lambda_plus * omega_tau).sin().powi(2),
                (sp.lambda_minus * omega_tau).sin().powi(2),
            ]
            .into_iter()
            .fold(1.0, f64::min))
        }
        ProbabilityMetric::BasisOverlap => {
            let gate = realized_gate_at(params, omega_tau, 0.0, 0.0)?;
            let ideal = ideal_gate(params, 0.0)?;
            let mut worst: f64 = 1.0;
            for col in 0..4 {
                let overlap: C64 = (0..4).map(|r| ideal[(r, col)].conj() * gate.matrix[(r, col)]).sum();
                worst = worst.min(overlap.norm_sqr());
            }
            Ok(worst)
        }
    }
}

pub fn success_probability(solution: &GateSolution, omega_tau: f64, metric: ProbabilityMetric) -> Result<f64> {
    success_probability_at(&solution.parameters(), omega_tau, metric)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    OmegaTau,
    Eta1,
    Eta2,
    OmegaRatio,
}

impl SweepParameter {
    pub fn axis_name(self) -> &'static str {
        match self {
            SweepParameter::OmegaTau => "omega_tau",
            SweepParameter::Eta1 => "eta1",
            SweepParameter::Eta2 => "eta2",
            SweepParameter::OmegaRatio => "omega_ratio",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParameter::OmegaTau => "1/Omega2",
            _ => "1",
        }
    }
}

/// Success probability (both metrics) and condition residuals over a 1-D grid
/// around a solution. A zero-width range yields one row.
pub fn robustness_sweep(
    solution: &GateSolution,
    parameter: SweepParameter,
    range: (f64, f64),
    steps: usize,
) -> Result<SweepResult> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidParameter(format!("bad sweep range ({lo}, {hi})")));
    }
    let values: Vec<f64> = if lo == hi {
        vec![lo]
    } else if steps < 2 {
        return Err(Error::InvalidParameter("a sweep needs at least 2 steps".into()));
    } else {
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
    };
    robustness_sweep_values(solution, parameter, &values)
}

/// [`robustness_sweep`] over an explicit list of values, kept in the given order.
pub fn robustness_sweep_values(solution: &GateSolution, parameter: SweepParameter, values: &[f64]) -> Result<SweepResult> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite sweep value {v}")));
    }
    let rows: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| {
            let mut params = solution.parameters();
            let mut omega_tau = solution.omega_tau;
            match parameter {
                SweepParameter::OmegaTau => omega_tau = v,
                SweepParameter::Eta1 => params.eta1 = v,
                SweepParameter::Eta2 => params.eta2 = v,
                SweepParameter::OmegaRatio => params.omega_ratio = v,
            }
            let factors = success_probability_at(&params, omega_tau, ProbabilityMetric::ConditionFactors)?;
            let overlap = success_probability_at(&params, omega_tau, ProbabilityMetric::BasisOverlap)?;
            let r = condition_residuals(&params, omega_tau, solution.condition)?;
            Ok(vec![v, factors, overlap, r[0], r[1], r[2]])
        })
        .collect::<Result<_>>()?;
    SweepResult::new(
        vec![Axis::new(parameter.axis_name(), parameter.unit(), values.len())],
        vec![
            ("probability_conditions".into(), "1".into()),
            ("probability_overlap".into(), "1".into()),
            ("residual_carrier".into(), "1".into()),
            ("residual_plus".into(), "1".into()),
            ("residual_minus".into(), "1".into()),
        ],
        rows,
    )
}

/// Spin of ion 1 that leaves the bus alone under the sideband pulse.
pub fn idle_control_spin(k1: i32) -> Spin {
    if k1 < 0 { Spin::E } else { Spin::G }
}
