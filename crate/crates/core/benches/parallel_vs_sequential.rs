//! Data-parallel column construction against the sequential fallback.
//!
//! The same binary measures both paths by flipping `par::set_sequential`; building
//! with `--no-default-features` removes rayon entirely and both groups then run
//! sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qmacv::fock::commute_check_hr;
use qmacv::operators::{build_d, build_i_spectral};
use qmacv::par;
use qmacv::params::{sampled, symbolic};
use std::hint::black_box;

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn bench_d(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_d symbolic n=3 cap=3");
    g.sample_size(10);
    let p = symbolic(3);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(build_d(&p, 3).unwrap()));
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_i(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_i_spectral sampled n=3 cap=4");
    g.sample_size(10);
    let (p, _) = sampled(3, 7);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(build_i_spectral(&p, &p.alpha, 4).unwrap()));
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_hr(c: &mut Criterion) {
    let mut g = c.benchmark_group("commute H_1 H_2 cap=4");
    g.sample_size(10);
    let (p, _) = sampled(2, 3);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| black_box(commute_check_hr(&p, 1, 2, 4).unwrap()));
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, bench_d, bench_i, bench_hr);
criterion_main!(benches);
