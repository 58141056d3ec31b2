//! One runner per mode. Each fills a [`Report`] as it goes so that a late
//! failure still leaves the earlier results on disk.

use std::f64::consts::FRAC_PI_4;

use ldgate_core::algebra::{HilbertGeometry, StateVector};
use ldgate_core::entangle::{concurrence, epr_fidelity, prepare_entangled, EntanglementRecipe, EprState};
use ldgate_core::gate::{
    cnot_equivalence, realized_gate, robustness_sweep, robustness_sweep_values, scan_integers, solve_gate,
    success_probability, SweepParameter,
};
use ldgate_core::oracle::{integrate, HamiltonianSource, IntegratorConfig};
use ldgate_core::physical::convert_physical;
use ldgate_core::propagator::evolve;
use ldgate_core::sweep::format_float;
use ldgate_core::{GateSolution, ProbabilityMetric, PulsePair, ResonanceIntegers, SweepResult, C64};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Amplitude, ExperimentConfig, Mode, OracleChoice};
use crate::error::CliError;
use crate::plot::{line_plot, Series};

#[derive(Debug, Default)]
pub struct Report {
    pub csv: Option<String>,
    pub results: Map<String, Value>,
    /// `(file stem, svg)`.
    pub plots: Vec<(String, String)>,
}

impl Report {
    fn set(&mut self, key: &str, value: Value) {
        self.results.insert(key.into(), value);
    }
}

/// CSV with a provenance line and `name [unit]` headers.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[(&str, &str)]) -> Self {
        Table { header: columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self, hash: &str) -> String {
        let mut s = format!("# config_hash={hash} toolkit_version={}\n", env!("CARGO_PKG_VERSION"));
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn f(v: f64) -> String {
    format_float(v)
}

fn i(v: impl ToString) -> String {
    v.to_string()
}

fn complex(c: C64) -> Value {
    json!([c.re, c.im])
}

pub fn run(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    match cfg.mode() {
        Mode::SolveGate => run_solve(cfg, hash, report),
        Mode::ScanIntegers => run_scan(cfg, hash, report),
        Mode::Sweep => run_sweep(cfg, hash, report),
        Mode::Evolve => run_evolve(cfg, hash, report),
        Mode::Entangle => run_entangle(cfg, hash, report),
        Mode::ValidateRwa => run_rwa(cfg, hash, report),
    }
}

fn solve(cfg: &ExperimentConfig) -> Result<GateSolution, CliError> {
    let g = &cfg.gate;
    let ints = ResonanceIntegers::new(g.p, g.q_plus, g.q_minus)?;
    Ok(solve_gate(g.k1, g.m, g.omega_ratio, ints, (g.seed_eta1, g.seed_eta2), g.condition, &cfg.solver)?)
}

fn solution_json(cfg: &ExperimentConfig, sol: &GateSolution) -> Value {
    let mut v = serde_json::to_value(sol).expect("solution serializes");
    if let Some(p) = cfg.physical {
        if let Ok(conv) = convert_physical(p.rabi_hz, p.trap_hz, sol.omega_tau) {
            v["physical"] = serde_json::to_value(conv).expect("conversion serializes");
        }
    }
    v
}

fn sweep_plot(sweep: &SweepResult, title: &str) -> String {
    let axis = &sweep.axes[0];
    let series: Vec<Series> = ["probability_conditions", "probability_overlap"]
        .iter()
        .filter_map(|name| {
            let c = sweep.column_index(name)?;
            Some(Series { label: name, points: sweep.rows.iter().map(|r| (r[0], r[c])).collect() })
        })
        .collect();
    line_plot(title, &format!("{} [{}]", axis.name, axis.unit), "success probability", &series)
}

fn run_solve(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let sol = solve(cfg)?;
    report.set("solution", solution_json(cfg, &sol));
    let (phi1, phi2) = (cfg.gate.phi1, cfg.gate.phi2);
    let gate = realized_gate(&sol, phi1, phi2)?;
    let eq = cnot_equivalence(&gate.matrix, phi2);
    let p_cond = success_probability(&sol, sol.omega_tau, ProbabilityMetric::ConditionFactors)?;
    let p_overlap = success_probability(&sol, sol.omega_tau, ProbabilityMetric::BasisOverlap)?;
    report.set("probability_conditions", json!(p_cond));
    report.set("probability_overlap", json!(p_overlap));
    report.set("bus_return", json!(gate.bus_return));
    report.set("unitarity_defect", json!(gate.unitarity_defect()));
    report.set(
        "cnot",
        json!({
            "residual": eq.residual,
            "control_phase": eq.control_phase,
            "makhlin_g1": complex(eq.makhlin.0),
            "makhlin_g2": complex(eq.makhlin.1),
        }),
    );

    let mut t = Table::new(&[
        ("k1", "1"),
        ("m", "1"),
        ("p", "1"),
        ("q_plus", "1"),
        ("q_minus", "1"),
        ("eta1", "1"),
        ("eta2", "1"),
        ("omega_ratio", "1"),
        ("omega_tau", "1/Omega2"),
        ("residual_carrier", "1"),
        ("residual_plus", "1"),
        ("residual_minus", "1"),
        ("branch_sign", "1"),
        ("probability_conditions", "1"),
        ("probability_overlap", "1"),
        ("cnot_residual", "1"),
    ]);
    t.push(vec![
        i(sol.k1),
        i(sol.m),
        i(sol.integers.p),
        i(sol.integers.q_plus),
        i(sol.integers.q_minus),
        f(sol.eta1),
        f(sol.eta2),
        f(sol.omega_ratio),
        f(sol.omega_tau),
        f(sol.residuals[0]),
        f(sol.residuals[1]),
        f(sol.residuals[2]),
        f(sol.branch_sign),
        f(p_cond),
        f(p_overlap),
        f(eq.residual),
    ]);
    report.csv = Some(t.to_csv(hash));

    if cfg.output.plots {
        let window = (sol.omega_tau - 1.0, sol.omega_tau + 1.0);
        let sweep = robustness_sweep(&sol, SweepParameter::OmegaTau, window, 81)?;
        report.plots.push(("robustness".into(), sweep_plot(&sweep, "success probability around the gate time")));
    }
    Ok(())
}

fn run_scan(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let sols = scan_integers(&cfg.scan_config())?;
    let mut t = Table::new(&[
        ("k1", "1"),
        ("p", "1"),
        ("q_plus", "1"),
        ("q_minus", "1"),
        ("eta1", "1"),
        ("eta2", "1"),
        ("omega_tau", "1/Omega2"),
        ("branch_sign", "1"),
        ("max_residual", "1"),
        ("iterations", "1"),
    ]);
    for s in &sols {
        t.push(vec![
            i(s.k1),
            i(s.integers.p),
            i(s.integers.q_plus),
            i(s.integers.q_minus),
            f(s.eta1),
            f(s.eta2),
            f(s.omega_tau),
            f(s.branch_sign),
            f(s.max_residual()),
            i(s.iterations),
        ]);
    }
    report.csv = Some(t.to_csv(hash));
    report.set("count", json!(sols.len()));
    let shortest: Vec<Value> = cfg
        .scan
        .k1_values
        .iter()
        .filter_map(|&k| sols.iter().find(|s| s.k1 == k))
        .map(|s| solution_json(cfg, s))
        .collect();
    report.set("shortest_per_k1", Value::Array(shortest));
    if sols.is_empty() {
        return Err(CliError::NoSolution("the integer scan found no converged solution".into()));
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let sol = solve(cfg)?;
    report.set("solution", solution_json(cfg, &sol));
    let sweep = robustness_sweep_values(&sol, cfg.sweep.parameter, &cfg.sweep_values())?.with_provenance(hash);
    report.csv = Some(sweep.to_csv());
    let (pc, po) = (
        sweep.column_index("probability_conditions").expect("column"),
        sweep.column_index("probability_overlap").expect("column"),
    );
    let points: Vec<Value> = sweep
        .rows
        .iter()
        .map(|r| json!({ sweep.axes[0].name.clone(): r[0], "probability_conditions": r[pc], "probability_overlap": r[po] }))
        .collect();
    report.set("points", Value::Array(points));
    if cfg.output.plots {
        report.plots.push(("sweep".into(), sweep_plot(&sweep, "robustness sweep")));
    }
    Ok(())
}

/// The configured pulse pair, or the solved gate's when none is given.
fn pulses_for(cfg: &ExperimentConfig, report: &mut Report) -> Result<(PulsePair, Option<GateSolution>), CliError> {
    match cfg.pulses {
        Some(p) => Ok((p, None)),
        None => {
            let sol = solve(cfg)?;
            report.set("solution", solution_json(cfg, &sol));
            Ok((sol.pulses(cfg.gate.phi1, cfg.gate.phi2)?, Some(sol)))
        }
    }
}

fn initial_state(pulses: &PulsePair, amps: &[Amplitude], m_max: Option<usize>) -> Result<StateVector, CliError> {
    let m_work = amps.iter().map(|a| a.m).max().unwrap_or(0);
    let geometry = match m_max {
        Some(m) => HilbertGeometry::new(m)?,
        None => HilbertGeometry::default_for(m_work, pulses.k1),
    };
    let terms: Vec<_> = amps.iter().map(|a| (C64::new(a.re, a.im), a.m, a.s1, a.s2)).collect();
    Ok(StateVector::superposition(geometry, &terms)?)
}

/// Time, spin populations and optional oracle infidelity.
type EvolvedPoint = (f64, [f64; 4], Option<f64>);

/// Spin populations summed over the bus: gg, ge, eg, ee.
fn spin_populations(state: &StateVector) -> [f64; 4] {
    let g = state.geometry();
    let mut p = [0.0; 4];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        let l = g.label(idx);
        p[l.s1.index() * 2 + l.s2.index()] += a.norm_sqr();
    }
    p
}

fn run_evolve(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let (pulses, _) = pulses_for(cfg, report)?;
    let start = initial_state(&pulses, &cfg.evolve.initial, cfg.evolve.m_max)?;
    let times = cfg.evolve_times();
    let nu = 1.0 / cfg.omega_over_nu();
    let icfg = IntegratorConfig { leak_tolerance: cfg.tolerances.leak, method: cfg.evolve.method, ..Default::default() };
    let source = match cfg.evolve.oracle {
        OracleChoice::None => None,
        OracleChoice::Effective => Some(HamiltonianSource::effective(pulses)),
        OracleChoice::Full => Some(HamiltonianSource::full(pulses, nu)),
    };

    let rows: Vec<Result<EvolvedPoint, CliError>> = times
        .par_iter()
        .map(|&t| {
            let psi = evolve(&start, &pulses, t)?;
            let infidelity = match &source {
                Some(src) => Some(1.0 - psi.fidelity(&integrate(src, &start, t, &icfg)?)?),
                None => None,
            };
            Ok((t, spin_populations(&psi), infidelity))
        })
        .collect();

    let mut cols = vec![("time", "1/Omega2"), ("p_gg", "1"), ("p_ge", "1"), ("p_eg", "1"), ("p_ee", "1")];
    if cfg.physical.is_some() {
        cols.insert(1, ("time_s", "s"));
    }
    if source.is_some() {
        cols.push(("oracle_infidelity", "1"));
    }
    let mut table = Table::new(&cols);
    let mut worst: f64 = 0.0;
    let mut first_error = None;
    let mut curves: [Vec<(f64, f64)>; 4] = Default::default();
    for row in rows {
        let (t, p, inf) = match row {
            Ok(r) => r,
            Err(e) => {
                first_error.get_or_insert(e);
                continue;
            }
        };
        let mut cells = vec![f(t)];
        if let Some(ph) = cfg.physical {
            cells.push(f(t / (std::f64::consts::TAU * ph.rabi_hz)));
        }
        cells.extend(p.iter().map(|&v| f(v)));
        if let Some(x) = inf {
            worst = worst.max(x);
            cells.push(f(x));
        }
        for (c, &v) in curves.iter_mut().zip(&p) {
            c.push((t, v));
        }
        table.push(cells);
    }
    report.csv = Some(table.to_csv(hash));
    report.set("pulses", serde_json::to_value(pulses).expect("pulses serialize"));
    report.set("points", json!(table.rows.len()));
    if source.is_some() {
        report.set("worst_oracle_infidelity", json!(worst));
    }
    if cfg.output.plots {
        let labels = ["gg", "ge", "eg", "ee"];
        let series: Vec<Series> =
            curves.into_iter().zip(labels).map(|(points, label)| Series { label, points }).collect();
        report.plots.push(("populations".into(), line_plot("spin populations", "time [1/Omega2]", "population", &series)));
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    let tolerance = match cfg.evolve.oracle {
        OracleChoice::None => return Ok(()),
        OracleChoice::Effective => cfg.tolerances.analytic_oracle,
        OracleChoice::Full => cfg.tolerances.full_oracle,
    };
    if worst > tolerance {
        return Err(CliError::OracleMismatch { what: "analytic vs numeric evolution".into(), infidelity: worst, tolerance });
    }
    Ok(())
}

fn run_entangle(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let sol = solve(cfg)?;
    report.set("solution", solution_json(cfg, &sol));
    let base = EntanglementRecipe { t1: 0.0, phi1: cfg.gate.phi1, phi2: cfg.gate.phi2, gate: sol, initial_m: sol.m };
    let epr = prepare_entangled(&base.with_rotation_angle(FRAC_PI_4))?;
    let (which, name) = if epr_fidelity(&epr.spins, EprState::PsiMinus) >= epr_fidelity(&epr.spins, EprState::PsiPlus) {
        (EprState::PsiMinus, "psi-minus")
    } else {
        (EprState::PsiPlus, "psi-plus")
    };
    report.set(
        "epr",
        json!({
            "state": name,
            "fidelity": epr_fidelity(&epr.spins, which),
            "concurrence": concurrence(&epr.spins),
            "schmidt_weight": epr.schmidt_weight,
        }),
    );

    let angles = cfg.entangle_angles();
    let rows = angles
        .par_iter()
        .map(|&a| {
            let r = base.with_rotation_angle(a);
            prepare_entangled(&r).map(|out| (a, r.t1, out))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&[
        ("angle", "rad"),
        ("t1", "1/Omega2"),
        ("u_re", "1"),
        ("u_im", "1"),
        ("v_re", "1"),
        ("v_im", "1"),
        ("concurrence", "1"),
        ("fidelity_psi_minus", "1"),
        ("fidelity_psi_plus", "1"),
        ("schmidt_weight", "1"),
    ]);
    let mut conc = Vec::new();
    for (a, t1, out) in &rows {
        let c = concurrence(&out.spins);
        conc.push((*a, c));
        t.push(vec![
            f(*a),
            f(*t1),
            f(out.u().re),
            f(out.u().im),
            f(out.v().re),
            f(out.v().im),
            f(c),
            f(epr_fidelity(&out.spins, EprState::PsiMinus)),
            f(epr_fidelity(&out.spins, EprState::PsiPlus)),
            f(out.schmidt_weight),
        ]);
    }
    report.csv = Some(t.to_csv(hash));
    if cfg.output.plots {
        let ideal = angles.iter().map(|&a| (a, (2.0 * a).sin().abs())).collect();
        let series = [Series { label: "concurrence", points: conc }, Series { label: "|sin 2a|", points: ideal }];
        report.plots.push(("concurrence".into(), line_plot("entanglement vs rotation angle", "angle [rad]", "concurrence", &series)));
    }
    Ok(())
}

fn run_rwa(cfg: &ExperimentConfig, hash: &str, report: &mut Report) -> Result<(), CliError> {
    let (pulses, sol) = pulses_for(cfg, report)?;
    let t_final = match (cfg.rwa.t_final, sol) {
        (Some(t), _) => t,
        (None, Some(s)) => s.omega_tau,
        (None, None) => return Err(CliError::Config("rwa.t_final is required with explicit [pulses]".into())),
    };
    let start = initial_state(&pulses, &cfg.rwa.initial, None)?;
    let icfg = IntegratorConfig { leak_tolerance: cfg.tolerances.leak, ..Default::default() };
    let analytic = evolve(&start, &pulses, t_final)?;
    let effective = integrate(&HamiltonianSource::effective(pulses), &start, t_final, &icfg)?;
    let analytic_vs_effective = 1.0 - analytic.fidelity(&effective)?;
    report.set("t_final", json!(t_final));
    report.set("infidelity_analytic_vs_effective", json!(analytic_vs_effective));

    let rows = cfg
        .rwa
        .omega_over_nu
        .par_iter()
        .map(|&x| {
            let full = integrate(&HamiltonianSource::full(pulses, 1.0 / x), &start, t_final, &icfg)?;
            Ok((x, 1.0 - full.fidelity(&effective)?, 1.0 - full.fidelity(&analytic)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(&[("omega_over_nu", "1"), ("infidelity_full_vs_effective", "1"), ("infidelity_full_vs_analytic", "1")]);
    for &(x, a, b) in &rows {
        t.push(vec![f(x), f(a), f(b)]);
    }
    report.csv = Some(t.to_csv(hash));
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotonic = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
    report.set("monotonic", json!(monotonic));
    if cfg.output.plots {
        let series = [Series {
            label: "log10 infidelity (full vs effective)",
            points: sorted.iter().map(|r| (r.0, r.1.max(1e-300).log10())).collect(),
        }];
        report.plots.push(("rwa".into(), line_plot("rotating-wave validity", "Omega2/nu", "log10 infidelity", &series)));
    }
    if analytic_vs_effective > cfg.tolerances.analytic_oracle {
        return Err(CliError::OracleMismatch {
            what: "analytic vs effective Hamiltonian".into(),
            infidelity: analytic_vs_effective,
            tolerance: cfg.tolerances.analytic_oracle,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv_has_provenance_and_units() {
        let mut t = Table::new(&[("a", "1"), ("b", "s")]);
        t.push(vec![i(1), f(0.5)]);
        let csv = t.to_csv("abc");
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config_hash=abc"));
        assert_eq!(lines[1], "a [1],b [s]");
        assert_eq!(lines[2], "1,5.00000000000e-1");
    }

    #[test]
    fn populations_sum_to_one() {
        let p = PulsePair::new(1.0, 1.0, 0.5, 0.5, 1).unwrap();
        let amps = [Amplitude { m: 0, s1: ldgate_core::Spin::E, s2: ldgate_core::Spin::G, re: 1.0, im: 0.0 }];
        let s = initial_state(&p, &amps, None).unwrap();
        let pops = spin_populations(&evolve(&s, &p, 3.0).unwrap());
        assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
