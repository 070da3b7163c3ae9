use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pnr_bench::random_problem;
use pnr_core::solver::{lad_oracle, solve_lad_irls, solve_lse};
use pnr_core::PnrConfig;

fn lse(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_lse");
    for &(n, d, big_d) in &[(16, 3, 16), (512, 20, 64)] {
        let prob = random_problem(1, n, d, big_d);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{d}x{big_d}")), &prob, |b, p| {
            b.iter(|| solve_lse(black_box(p), &PnrConfig::lse()).unwrap())
        });
    }
    g.finish();
}

fn lad(c: &mut Criterion) {
    let prob = random_problem(2, 32, 4, 3);
    let mut g = c.benchmark_group("lad_32x4x3");
    for iters in [5usize, 10] {
        let cfg = PnrConfig::lad().with_iters(iters);
        g.bench_function(format!("irls_{iters}"), |b| b.iter(|| solve_lad_irls(black_box(&prob), &cfg).unwrap()));
    }
    g.bench_function("simplex_oracle", |b| b.iter(|| lad_oracle(black_box(&prob)).unwrap()));
    g.finish();
}

criterion_group!(benches, lse, lad);
criterion_main!(benches);
