//! Sequential against parallel branch-and-bound and suite runs.

use std::time::Duration;

use bandopt::harness::SuiteOptions;
use bandopt::{branch_and_bound, generate, run_suite, GenParams, SolveConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn thread_counts() -> Vec<usize> {
    let mut counts = vec![1];
    if cfg!(feature = "parallel") {
        let k = std::thread::available_parallelism().map_or(4, |p| p.get()).max(2);
        counts.push(k);
    }
    counts
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_and_bound");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for n in [10, 12] {
        let u = generate(n, 7, GenParams::for_n(n)).unwrap().interaction_matrix().unwrap();
        for threads in thread_counts() {
            let cfg = SolveConfig {
                threads,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(format!("threads{threads}"), n), &cfg, |b, cfg| {
                b.iter(|| branch_and_bound(&u, cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for jobs in thread_counts() {
        let opts = SuiteOptions {
            sizes: vec![7, 8],
            per_size: 4,
            oracle_check: false,
            jobs,
            ..SuiteOptions::desk_scale(1)
        };
        group.bench_with_input(BenchmarkId::new("jobs", jobs), &opts, |b, opts| {
            b.iter(|| run_suite(opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, search, suite);
criterion_main!(benches);
