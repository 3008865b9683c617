//! Compares the fanned-out per-prime sweep against a plain sequential loop
//! over the same primes. Build with and without the `parallel` feature to
//! see the rayon speedup (and confirm the fallback costs nothing):
//!
//!   cargo bench -p polyseries-core
//!   cargo bench -p polyseries-core --no-default-features

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use polyseries_core::enumerate::{enumerate_imperfect, enumerate_imperfect_exact};
use polyseries_core::exactarith::generate_prime_batch_bits;
use polyseries_core::par::par_map;

fn per_prime_sweeps(crit: &mut Criterion) {
    let primes = generate_prime_batch_bits(4, 30).unwrap();
    let mut group = crit.benchmark_group("imperfect_sweep_4_primes");
    group.sample_size(10);
    for n in [40usize, 60] {
        group.bench_with_input(BenchmarkId::new("par_map", n), &n, |b, &n| {
            b.iter(|| par_map(primes.clone(), move |q| enumerate_imperfect(n, q).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| {
                primes
                    .iter()
                    .map(|&q| enumerate_imperfect(n, q).unwrap())
                    .collect::<Vec<_>>()
            })
        });
    }
    group.finish();
}

fn arithmetic_modes(crit: &mut Criterion) {
    let mut group = crit.benchmark_group("single_sweep_n40");
    group.sample_size(10);
    let prime = generate_prime_batch_bits(1, 30).unwrap()[0];
    group.bench_function("modular", |b| {
        b.iter(|| enumerate_imperfect(40, prime).unwrap())
    });
    group.bench_function("exact", |b| {
        b.iter(|| enumerate_imperfect_exact(40).unwrap())
    });
    group.finish();
}

criterion_group!(benches, per_prime_sweeps, arithmetic_modes);
criterion_main!(benches);
