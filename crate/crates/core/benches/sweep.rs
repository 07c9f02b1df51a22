//! Parallel-vs-sequential timing for the two fan-out hot spots: the
//! word-by-word oracle sweep and the reachable-type closure.
//!
//! With default features the "default" rows use the rayon pool and the
//! "one thread" rows pin the same code to a single worker. Compiled with
//! `--no-default-features` the library falls back to its sequential path and
//! only the "default" rows remain.

use criterion::{criterion_group, criterion_main, Criterion};
use curvepair::cellsurf::oracle_word_sweep;
use curvepair::enumerate::reachable_types;

fn bench_oracle_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_word_sweep");
    group.sample_size(10);
    group.bench_function("complexity 7 / default", |b| {
        b.iter(|| oracle_word_sweep(7))
    });
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        group.bench_function("complexity 7 / one thread", |b| {
            b.iter(|| pool.install(|| oracle_word_sweep(7)))
        });
    }
    group.finish();
}

fn bench_reachable_closure(c: &mut Criterion) {
    let mut group = c.benchmark_group("reachable_types");
    group.bench_function("e = -2, bound 12 / default", |b| {
        b.iter(|| reachable_types(-2, 12).unwrap())
    });
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        group.bench_function("e = -2, bound 12 / one thread", |b| {
            b.iter(|| pool.install(|| reachable_types(-2, 12).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_oracle_sweep, bench_reachable_closure);
criterion_main!(benches);
