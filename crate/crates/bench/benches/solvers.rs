use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use markov_risk::dp::dp_recursion;
use markov_risk::solver::solve_ode;
use markov_risk::{transition_matrix, RiskMapping, Scheme, SolverConfig};
use markov_risk_bench::{avar, expectation, fixture, semideviation};

type Family = fn(usize) -> RiskMapping;

const FAMILIES: [(&str, Family); 3] = [
    ("expectation", expectation),
    ("avar", avar),
    ("semideviation", semideviation),
];

fn ode(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_ode");
    for (name, risk) in FAMILIES {
        for n in [2, 6] {
            let model = fixture(n, risk);
            let config = SolverConfig::new(Scheme::Rk4, 1000);
            group.bench_with_input(BenchmarkId::new(name, n), &model, |b, m| {
                b.iter(|| solve_ode(m, &m.risk, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn dp(c: &mut Criterion) {
    let mut group = c.benchmark_group("dp_recursion");
    for (name, risk) in FAMILIES {
        let model = fixture(6, risk);
        for steps in [160, 2000] {
            group.bench_with_input(BenchmarkId::new(name, steps), &steps, |b, &s| {
                b.iter(|| dp_recursion(&model, &model.risk, s).unwrap())
            });
        }
    }
    group.finish();
}

fn transitions(c: &mut Criterion) {
    let mut group = c.benchmark_group("transition_matrix");
    for n in [2, 6, 20] {
        let model = fixture(n, expectation);
        group.bench_with_input(BenchmarkId::from_parameter(n), &model, |b, m| {
            b.iter(|| transition_matrix(&m.generator, black_box(0.1), black_box(0.9)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ode, dp, transitions);
criterion_main!(benches);
