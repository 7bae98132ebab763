use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ktsel_core::alignment::reduced_objective_with;
use ktsel_core::solver::{brute_force_with, solve_bnb_with, DEFAULT_ENUMERATION_CAP};
use ktsel_core::synth::{generate, GenConfig};
use ktsel_core::{sigest_gamma, Limits, PairStructure, Parallelism};

fn instance(n: usize, p: usize) -> PairStructure {
    let g = generate(&GenConfig {
        n_train: n,
        n_test: 0,
        p,
        theta_star: 3,
        expansion: 50.0,
        seed: 7,
    })
    .unwrap();
    PairStructure::build(&g.train).unwrap()
}

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective");
    for n in [100, 400] {
        let ps = instance(n, 20);
        let gamma = sigest_gamma(&ps, 5).unwrap();
        let z: Vec<bool> = (0..20).map(|j| j % 4 == 0).collect();
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| reduced_objective_with(black_box(&ps), &z, gamma, mode))
            });
        }
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    let ps = instance(60, 12);
    let gamma = sigest_gamma(&ps, 3).unwrap();
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new("brute", name), |b| {
            b.iter(|| brute_force_with(&ps, 3, gamma, DEFAULT_ENUMERATION_CAP, mode).unwrap())
        });
        group.bench_function(BenchmarkId::new("bnb", name), |b| {
            b.iter(|| solve_bnb_with(&ps, 3, gamma, Limits::default(), mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, objective, exact);
criterion_main!(benches);
