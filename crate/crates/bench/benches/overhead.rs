//! Submission-overhead benchmarks: sequential no-op jobs through the
//! local executor versus a bare spawn/wait baseline, and the cost of each
//! launcher-script wrapping level.

use criterion::{criterion_group, criterion_main, Criterion};

use portajob::harness::{bench_launcher, bench_local};
use portajob_bench::Scratch;

fn local_overhead(c: &mut Criterion) {
    let scratch = Scratch::new();
    let mut group = c.benchmark_group("local_overhead");
    group.sample_size(10);
    for mode in ["library", "baseline"] {
        group.bench_function(format!("{mode}_10_jobs"), |b| {
            b.iter(|| bench_local(&scratch.path(), 10, mode).unwrap())
        });
    }
    group.finish();
}

fn launcher_overhead(c: &mut Criterion) {
    let scratch = Scratch::new();
    let mut group = c.benchmark_group("launcher_overhead");
    group.sample_size(10);
    for mode in ["default", "minimal-wrapper", "none"] {
        group.bench_function(format!("{mode}_10_jobs"), |b| {
            b.iter(|| bench_launcher(&scratch.path(), 10, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, local_overhead, launcher_overhead);
criterion_main!(benches);
