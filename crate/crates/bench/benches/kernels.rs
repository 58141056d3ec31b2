use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ldgate_bench::{regression_gate, regression_pulses, spin_superposition};
use ldgate_core::gate::{scan_integers, solve_gate, success_probability, ScanConfig, SolverOptions};
use ldgate_core::oracle::{integrate, HamiltonianSource, IntegrationMethod, IntegratorConfig};
use ldgate_core::propagator::{compute_coefficients, evolve};
use ldgate_core::{generalized_rabi, CouplingSpec, GateCondition, ProbabilityMetric, ResonanceIntegers};

fn couplings(c: &mut Criterion) {
    c.bench_function("generalized_rabi m=5 k=3", |b| {
        b.iter(|| generalized_rabi(black_box(&CouplingSpec::new(1.0, 2.18403, 5, 3))))
    });
    let pulses = regression_pulses();
    c.bench_function("compute_coefficients", |b| {
        b.iter(|| compute_coefficients(black_box(&pulses), 0, black_box(56.3)))
    });
}

fn propagation(c: &mut Criterion) {
    let pulses = regression_pulses();
    let psi = spin_superposition(1);
    c.bench_function("analytic evolve", |b| b.iter(|| evolve(black_box(&psi), &pulses, 56.3)));
    let cfg = IntegratorConfig::default();
    c.bench_function("effective oracle", |b| {
        b.iter(|| integrate(&HamiltonianSource::effective(pulses), black_box(&psi), 56.3, &cfg))
    });
    c.bench_function("full oracle, rotating frame", |b| {
        b.iter(|| integrate(&HamiltonianSource::full(pulses, 100.0), black_box(&psi), 56.3, &cfg))
    });
    let magnus = IntegratorConfig { method: IntegrationMethod::Magnus4, ..Default::default() };
    let mut group = c.benchmark_group("stepped");
    group.sample_size(10);
    group.bench_function("full oracle, Magnus t=0.5", |b| {
        b.iter(|| integrate(&HamiltonianSource::full(pulses, 100.0), black_box(&psi), 0.5, &magnus))
    });
    group.finish();
}

fn design(c: &mut Criterion) {
    let ints = ResonanceIntegers::new(1, 2, 1).unwrap();
    c.bench_function("solve_gate", |b| {
        b.iter(|| solve_gate(1, 0, 1.0, ints, black_box((2.2, 1.7)), GateCondition::Printed, &SolverOptions::default()))
    });
    let sol = regression_gate();
    c.bench_function("success_probability", |b| {
        b.iter(|| success_probability(&sol, black_box(56.0), ProbabilityMetric::ConditionFactors))
    });
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("default integer scan", |b| b.iter(|| scan_integers(&ScanConfig::default())));
    group.finish();
}

criterion_group!(benches, couplings, propagation, design);
criterion_main!(benches);
